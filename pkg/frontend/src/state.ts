/** View-state machine: overview-to-detail transitions with enforced parents.
 *
 * Detail modes are reachable only from an Overview or Intermediate selection,
 * and back() always restores the exact parent mode. Illegal transitions throw
 * so a UI bug cannot corrupt the navigation hierarchy.
 */

import type { Scope } from "./types.js";

export type Mode =
  | "Overview"
  | "ConvIntermediate"
  | "FlattenIntermediate"
  | "DetailConv"
  | "DetailReLU"
  | "DetailPool";

export interface Selection {
  layerName?: string;
  channel?: number;
  inChannel?: number;
  classIndex?: number;
  pixel?: [number, number];
}

const PARENTS: Record<Mode, Mode[]> = {
  Overview: [],
  ConvIntermediate: ["Overview"],
  FlattenIntermediate: ["Overview"],
  DetailConv: ["ConvIntermediate"],
  DetailReLU: ["Overview"],
  DetailPool: ["Overview"],
};

export class ViewStateMachine {
  mode: Mode = "Overview";
  selection: Selection = {};
  colormapScope: Scope = "layer";
  inputChoice = "";
  private trail: { mode: Mode; selection: Selection }[] = [];

  private push(next: Mode, selection: Selection): void {
    if (!PARENTS[next].includes(this.mode)) {
      throw new Error(`illegal transition ${this.mode} -> ${next}`);
    }
    this.trail.push({ mode: this.mode, selection: this.selection });
    this.mode = next;
    this.selection = selection;
  }

  selectConvNeuron(layerName: string, channel: number): void {
    this.push("ConvIntermediate", { layerName, channel });
  }

  selectOutputClass(classIndex: number): void {
    this.push("FlattenIntermediate", { classIndex });
  }

  selectReluNeuron(layerName: string, channel: number): void {
    this.push("DetailReLU", { layerName, channel });
  }

  selectPoolNeuron(layerName: string, channel: number): void {
    this.push("DetailPool", { layerName, channel });
  }

  selectIntermediateChannel(inChannel: number): void {
    const { layerName, channel } = this.selection;
    this.push("DetailConv", { layerName, channel, inChannel });
  }

  hoverPixel(row: number, col: number): void {
    if (this.mode === "Overview") throw new Error("pixel hover requires a detail mode");
    this.selection = { ...this.selection, pixel: [row, col] };
  }

  back(): Mode {
    const previous = this.trail.pop();
    if (!previous) throw new Error("already at the root view");
    if (!PARENTS[this.mode].includes(previous.mode)) {
      throw new Error(`corrupt trail: ${previous.mode} is not a parent of ${this.mode}`);
    }
    this.mode = previous.mode;
    this.selection = previous.selection;
    return this.mode;
  }

  get depth(): number {
    return this.trail.length;
  }

  setScope(scope: Scope): void {
    this.colormapScope = scope;
  }

  reset(): void {
    this.mode = "Overview";
    this.selection = {};
    this.trail = [];
  }
}

export function parentModes(mode: Mode): Mode[] {
  return PARENTS[mode].slice();
}
