/** Convolutional intermediate view: the selected neuron's decomposition.
 * Shows each input channel, its kernel sliding across as a mini heatmap, the
 * per-channel intermediate result, and the bias + sum composition into the
 * neuron's output. */

import { formatValue } from "./format.js";
import { heatmapTile, numberGrid } from "./heatmap.js";
import type { DecompositionPayload, LayerEntry } from "./types.js";
import { channelPlane } from "./overview.js";

export interface ConvIntermediateHandlers {
  onInputChannelClick(inChannel: number): void;
  onBack(): void;
}

/** Steps a sliding kernel position through every output location in row-major
 * order; the same ordering the engine's window traces use. */
export class SlideAnimator {
  position = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    readonly rows: number,
    readonly cols: number,
    private readonly onStep: (row: number, col: number) => void,
    public intervalMs = 120,
  ) {}

  step(): [number, number] {
    const row = Math.floor(this.position / this.cols);
    const col = this.position % this.cols;
    this.onStep(row, col);
    this.position = (this.position + 1) % (this.rows * this.cols);
    return [row, col];
  }

  start(): void {
    if (this.timer === null) this.timer = setInterval(() => this.step(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}

export function renderConvIntermediate(
  doc: Document,
  container: HTMLElement,
  decomposition: DecompositionPayload,
  inputEntry: LayerEntry | { values: number[][][]; colorScaleMaxAbs: number } | null,
  outputEntry: LayerEntry,
  handlers: ConvIntermediateHandlers,
): SlideAnimator {
  container.textContent = "";
  container.className = "conv-intermediate";

  const heading = doc.createElement("h2");
  heading.textContent = `${decomposition.layerName} / neuron ${decomposition.outChannel}`;
  container.appendChild(heading);

  const back = doc.createElement("button");
  back.className = "back-button";
  back.textContent = "back to overview";
  back.addEventListener("click", () => handlers.onBack());
  container.appendChild(back);

  const lanes = doc.createElement("div");
  lanes.className = "decomposition-lanes";
  const intermediateMax = Math.max(
    ...decomposition.intermediates.map((plane) => Math.max(...plane.map((row) => Math.max(...row.map(Math.abs))))),
    0,
  );
  const kernelMax = Math.max(
    ...decomposition.kernels.map((k) => Math.max(...k.map((row) => Math.max(...row.map(Math.abs))))),
    0,
  );

  decomposition.intermediates.forEach((plane, inChannel) => {
    const lane = doc.createElement("div");
    lane.className = "decomposition-lane";
    lane.setAttribute("data-in-channel", String(inChannel));

    if (inputEntry && "values" in inputEntry && inputEntry.values) {
      const entry = inputEntry as LayerEntry;
      const inputValues = entry.values!.map((row) => row.map((cell) => cell[inChannel] ?? cell[0]));
      lane.appendChild(heatmapTile(doc, inputValues, {
        maxAbs: entry.colorScaleMaxAbs,
        className: "heatmap-tile input-tile",
      }));
    }

    const kernel = numberGrid(doc, decomposition.kernels[inChannel], "kernel-grid", formatValue);
    kernel.setAttribute("data-kernel-maxabs", String(kernelMax));
    lane.appendChild(kernel);

    const intermediate = heatmapTile(doc, plane, {
      maxAbs: intermediateMax,
      className: "heatmap-tile intermediate-tile",
    });
    intermediate.setAttribute("data-role", "intermediate");
    lane.appendChild(intermediate);

    const flow = doc.createElement("div");
    flow.className = "edge flowing-dashes";
    lane.appendChild(flow);

    lane.addEventListener("click", () => handlers.onInputChannelClick(inChannel));
    lanes.appendChild(lane);
  });
  container.appendChild(lanes);

  const composition = doc.createElement("div");
  composition.className = "composition";
  const biasSpan = doc.createElement("span");
  biasSpan.className = "bias-value";
  biasSpan.setAttribute("data-value", String(decomposition.bias));
  biasSpan.textContent = `bias ${formatValue(decomposition.bias)}`;
  composition.appendChild(biasSpan);

  const outputPlane = channelPlane(outputEntry, decomposition.outChannel);
  const output = heatmapTile(doc, outputPlane, {
    maxAbs: outputEntry.colorScaleMaxAbs,
    className: "heatmap-tile output-tile",
  });
  output.setAttribute("data-role", "output");
  composition.appendChild(output);
  container.appendChild(composition);

  const marker = doc.createElement("div");
  marker.className = "slide-marker";
  container.appendChild(marker);
  const rows = decomposition.intermediates[0]?.length ?? 0;
  const cols = decomposition.intermediates[0]?.[0]?.length ?? 0;
  return new SlideAnimator(rows, cols, (row, col) => {
    marker.setAttribute("data-row", String(row));
    marker.setAttribute("data-col", String(col));
  });
}
