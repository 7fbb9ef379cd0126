/** Overview: one heatmap per neuron per layer, edges to the previous layer,
 * class probabilities on the output column. Hovering a neuron highlights its
 * incoming edges; clicking routes to the intermediate or detail views. */

import { formatProbability } from "./format.js";
import { heatmapTile, rgbTile } from "./heatmap.js";
import type { LayerEntry, OverviewPayload, TopologyEntry } from "./types.js";

export interface OverviewHandlers {
  onConvNeuronClick(layerName: string, channel: number): void;
  onReluNeuronClick(layerName: string, channel: number): void;
  onPoolNeuronClick(layerName: string, channel: number): void;
  onOutputClassClick(classIndex: number): void;
}

function neuronId(layerName: string, channel: number): string {
  return `${layerName}:${channel}`;
}

export function renderOverview(
  doc: Document,
  container: HTMLElement,
  overview: OverviewPayload,
  topology: TopologyEntry[],
  classLabels: string[],
  inputPixels: number[][][] | null,
  handlers: OverviewHandlers,
): void {
  container.textContent = "";
  container.className = "overview";
  const topo = new Map(topology.map((entry) => [entry.layerName, entry]));

  if (inputPixels) {
    const column = doc.createElement("div");
    column.className = "layer-column";
    column.setAttribute("data-layer", "input");
    const label = doc.createElement("div");
    label.className = "layer-label";
    label.textContent = "input";
    column.appendChild(label);
    column.appendChild(rgbTile(doc, inputPixels));
    container.appendChild(column);
  }

  let previousLayer: LayerEntry | null = null;
  for (const entry of overview.perLayer) {
    if (entry.kind === "Flatten") {
      previousLayer = entry;
      continue; // the hidden unroll layer: explained in the flatten intermediate view
    }
    const column = doc.createElement("div");
    column.className = "layer-column";
    column.setAttribute("data-layer", entry.layerName);
    const label = doc.createElement("div");
    label.className = "layer-label";
    label.textContent = entry.layerName;
    column.appendChild(label);

    const edgesBefore = edgeGroup(doc, entry, previousLayer, topo.get(entry.layerName), classLabels);
    if (edgesBefore) container.appendChild(edgesBefore);

    const channels = entry.shape[2];
    for (let channel = 0; channel < channels; channel++) {
      const neuron = doc.createElement("div");
      neuron.className = "neuron";
      neuron.setAttribute("data-neuron", neuronId(entry.layerName, channel));
      if (entry.kind === "Dense") {
        const label = classLabels[channel] ?? `class ${channel}`;
        const probability = overview.classProbabilities[label];
        const text = doc.createElement("span");
        text.className = "class-probability";
        text.setAttribute("data-class", label);
        text.setAttribute("data-probability", String(probability));
        text.textContent = `${label}  ${formatProbability(probability)}`;
        neuron.appendChild(text);
        neuron.addEventListener("click", () => handlers.onOutputClassClick(channel));
      } else {
        const plane = channelPlane(entry, channel);
        neuron.appendChild(heatmapTile(doc, plane, { maxAbs: entry.colorScaleMaxAbs }));
        const click =
          entry.kind === "Conv"
            ? () => handlers.onConvNeuronClick(entry.layerName, channel)
            : entry.kind === "ReLU"
              ? () => handlers.onReluNeuronClick(entry.layerName, channel)
              : () => handlers.onPoolNeuronClick(entry.layerName, channel);
        neuron.addEventListener("click", click);
      }
      neuron.addEventListener("mouseenter", () => highlightIncoming(container, entry.layerName, channel, topo));
      neuron.addEventListener("mouseleave", () => clearHighlights(container));
      column.appendChild(neuron);
    }
    container.appendChild(column);
    previousLayer = entry;
  }
}

/** Values of one channel as a 2-D grid (payload values are [h][w][c]). */
export function channelPlane(entry: LayerEntry, channel: number): number[][] {
  const values = entry.values;
  if (!values) throw new Error(`layer ${entry.layerName} payload carries no values`);
  return values.map((row) => row.map((cell) => cell[channel]));
}

function edgeGroup(
  doc: Document,
  entry: LayerEntry,
  previous: LayerEntry | null,
  topology: TopologyEntry | undefined,
  classLabels: string[],
): HTMLElement | null {
  if (!topology) return null;
  const group = doc.createElement("div");
  group.className = "edge-group";
  group.setAttribute("data-into", entry.layerName);
  const targets = entry.shape[2];
  for (let target = 0; target < targets; target++) {
    const sources = topology.connectivity === "full" ? topology.inNeurons : 1;
    for (let s = 0; s < sources; s++) {
      const source = topology.connectivity === "full" ? s : target;
      const edge = doc.createElement("div");
      edge.className = "edge";
      edge.setAttribute("data-target", neuronId(entry.layerName, target));
      edge.setAttribute("data-source-index", String(source));
      group.appendChild(edge);
    }
  }
  return group;
}

function highlightIncoming(
  container: HTMLElement,
  layerName: string,
  channel: number,
  topo: Map<string, TopologyEntry>,
): void {
  clearHighlights(container);
  const id = neuronId(layerName, channel);
  for (const edge of Array.from(container.querySelectorAll(`.edge[data-target="${id}"]`))) {
    edge.classList.add("highlight");
  }
}

function clearHighlights(container: HTMLElement): void {
  for (const edge of Array.from(container.querySelectorAll(".edge.highlight"))) {
    edge.classList.remove("highlight");
  }
}
