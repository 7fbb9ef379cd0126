/** Application wiring: one bridge session, one view-state machine, and the
 * overview / intermediate / detail renderers. All values displayed anywhere
 * come from bridge payloads; the app only routes and formats them. */

import { renderConvIntermediate, SlideAnimator } from "./conv_intermediate.js";
import { renderDetail } from "./detail.js";
import { renderFlattenIntermediate } from "./flatten_intermediate.js";
import { InputPicker, SampleImage } from "./input_picker.js";
import { renderOverview } from "./overview.js";
import { ViewStateMachine } from "./state.js";
import { BridgeClient, BridgeTransport } from "./transport.js";
import type {
  DecompositionPayload,
  LoadModelPayload,
  OverviewPayload,
  Scope,
  TopologyEntry,
  TracePayload,
} from "./types.js";

export class ExplainerApp {
  readonly state = new ViewStateMachine();
  readonly client: BridgeClient;
  readonly root: HTMLElement;
  picker: InputPicker | null = null;

  model: LoadModelPayload | null = null;
  topology: TopologyEntry[] = [];
  overview: OverviewPayload | null = null;
  inputPixels: number[][][] | null = null;
  decomposition: DecompositionPayload | null = null;
  lastTrace: TracePayload | null = null;
  animator: SlideAnimator | null = null;
  hoverDebounceMs = 30;
  private hoverTimer: ReturnType<typeof setTimeout> | null = null;
  private _viewRoot: HTMLElement | null = null;

  constructor(
    private readonly doc: Document,
    root: HTMLElement,
    transport: BridgeTransport,
  ) {
    this.root = root;
    this.client = new BridgeClient(transport);
  }

  async start(manifest: unknown, weightsB64: string, samples: SampleImage[] = []): Promise<void> {
    this.model = await this.client.loadModel(manifest, weightsB64);
    this.topology = await this.client.getTopology();
    this.picker = new InputPicker(this.doc, samples, this.model.inputShape, {
      onInputChosen: (id, pixels) => this.setInput(id, pixels),
    });
    this.root.textContent = "";
    this.root.appendChild(this.picker.element);
    this._viewRoot = this.doc.createElement("div");
    this.root.appendChild(this._viewRoot);
  }

  private get viewRoot(): HTMLElement {
    if (!this._viewRoot) throw new Error("app not started");
    return this._viewRoot;
  }

  async setInput(id: string, pixels: number[][][]): Promise<void> {
    if (!this.model) throw new Error("load a model first");
    const shape = [pixels.length, pixels[0]?.length ?? 0, pixels[0]?.[0]?.length ?? 0];
    await this.client.setInput(shape, pixels);
    this.inputPixels = pixels;
    this.state.reset();
    this.state.inputChoice = id;
    await this.refreshOverview();
  }

  async setScope(scope: Scope): Promise<void> {
    this.state.setScope(scope);
    if (this.state.mode === "Overview" && this.overview) {
      await this.refreshOverview();
    }
  }

  async refreshOverview(): Promise<void> {
    this.overview = await this.client.getOverview(this.state.colormapScope);
    this.renderCurrent();
  }

  renderCurrent(): void {
    const container = this.viewRoot;
    if (!this.overview || !this.model) return;
    this.animator?.stop();
    switch (this.state.mode) {
      case "Overview":
        renderOverview(this.doc, container, this.overview, this.topology, this.model.classLabels, this.inputPixels, {
          onConvNeuronClick: (layer, channel) => void this.enterConvIntermediate(layer, channel),
          onReluNeuronClick: (layer, channel) => void this.enterDetail("DetailReLU", layer, channel),
          onPoolNeuronClick: (layer, channel) => void this.enterDetail("DetailPool", layer, channel),
          onOutputClassClick: (classIndex) => void this.enterFlattenIntermediate(classIndex),
        });
        break;
      default:
        break; // intermediate and detail views render in their entry methods
    }
  }

  layerEntry(layerName: string) {
    const entry = this.overview?.perLayer.find((e) => e.layerName === layerName);
    if (!entry) throw new Error(`no overview entry for layer ${layerName}`);
    return entry;
  }

  /** The overview entry feeding `layerName` (the input image for the first layer). */
  previousEntry(layerName: string) {
    if (!this.overview) return null;
    const index = this.overview.perLayer.findIndex((e) => e.layerName === layerName);
    if (index > 0) return this.overview.perLayer[index - 1];
    if (index === 0 && this.inputPixels) {
      const pixels = this.inputPixels;
      return {
        layerName: "input",
        kind: "Conv" as const,
        shape: [pixels.length, pixels[0].length, pixels[0][0].length] as [number, number, number],
        colorScaleMaxAbs: 1,
        values: pixels,
      };
    }
    return null;
  }

  async enterConvIntermediate(layerName: string, channel: number): Promise<void> {
    this.state.selectConvNeuron(layerName, channel);
    this.decomposition = await this.client.getConvDecomposition(layerName, channel);
    this.animator = renderConvIntermediate(
      this.doc,
      this.viewRoot,
      this.decomposition,
      this.previousEntry(layerName),
      this.layerEntry(layerName),
      {
        onInputChannelClick: (inChannel) => void this.enterDetailConv(inChannel),
        onBack: () => this.goBack(),
      },
    );
  }

  async enterFlattenIntermediate(classIndex: number): Promise<void> {
    this.state.selectOutputClass(classIndex);
    const wiring = await this.client.getFlattenWiring(classIndex);
    const perLayer = this.overview!.perLayer;
    const flattenIndex = perLayer.findIndex((e) => e.kind === "Flatten");
    const sourceEntry = perLayer[flattenIndex - 1];
    renderFlattenIntermediate(this.doc, this.viewRoot, wiring, sourceEntry, this.model!.classLabels[classIndex], {
      onBack: () => this.goBack(),
    });
  }

  async enterDetail(mode: "DetailReLU" | "DetailPool", layerName: string, channel: number): Promise<void> {
    if (mode === "DetailReLU") this.state.selectReluNeuron(layerName, channel);
    else this.state.selectPoolNeuron(layerName, channel);
    await this.tracePixel(0, 0);
  }

  async enterDetailConv(inChannel: number): Promise<void> {
    this.state.selectIntermediateChannel(inChannel);
    await this.tracePixel(0, 0);
  }

  /** Fetch and display the window trace for one output pixel of the selection. */
  async tracePixel(row: number, col: number): Promise<TracePayload> {
    const { layerName, channel, inChannel } = this.state.selection;
    if (!layerName || channel === undefined) throw new Error("no neuron selected");
    this.state.hoverPixel(row, col);
    const trace = await this.client.getWindowTrace(layerName, channel, row, col, inChannel);
    this.lastTrace = trace;
    renderDetail(this.doc, this.viewRoot, trace, { onBack: () => this.goBack() });
    return trace;
  }

  /** Hover entry point: debounced so hover-rate traffic stays bounded. */
  hoverOutputPixel(row: number, col: number): void {
    if (this.hoverTimer !== null) clearTimeout(this.hoverTimer);
    this.hoverTimer = setTimeout(() => {
      this.hoverTimer = null;
      void this.tracePixel(row, col);
    }, this.hoverDebounceMs);
  }

  goBack(): void {
    const mode = this.state.back();
    if (mode === "Overview") {
      this.renderCurrent();
    } else if (mode === "ConvIntermediate" && this.decomposition) {
      const { layerName } = this.state.selection;
      this.animator = renderConvIntermediate(
        this.doc,
        this.viewRoot,
        this.decomposition,
        this.previousEntry(layerName!),
        this.layerEntry(layerName!),
        {
          onInputChannelClick: (inChannel) => void this.enterDetailConv(inChannel),
          onBack: () => this.goBack(),
        },
      );
    }
  }
}
