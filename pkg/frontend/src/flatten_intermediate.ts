/** Flatten intermediate view: the hidden unroll between the last pooling layer
 * and one output class. Every flatten element is a short line colored like its
 * source element, connected to the source heatmap and the class by edges whose
 * color encodes the dense weight. */

import { cssColor, weightColor } from "./colormap.js";
import { formatValue } from "./format.js";
import type { LayerEntry, WiringPayload } from "./types.js";

export interface FlattenHandlers {
  onBack(): void;
}

export function renderFlattenIntermediate(
  doc: Document,
  container: HTMLElement,
  wiring: WiringPayload,
  sourceEntry: LayerEntry,
  className: string,
  handlers: FlattenHandlers,
): void {
  container.textContent = "";
  container.className = "flatten-intermediate";

  const heading = doc.createElement("h2");
  heading.textContent = `flatten wiring into "${className}"`;
  container.appendChild(heading);

  const back = doc.createElement("button");
  back.className = "back-button";
  back.textContent = "back to overview";
  back.addEventListener("click", () => handlers.onBack());
  container.appendChild(back);

  const biasSpan = doc.createElement("span");
  biasSpan.className = "bias-value";
  biasSpan.setAttribute("data-value", String(wiring.bias));
  biasSpan.textContent = `bias ${formatValue(wiring.bias)}`;
  container.appendChild(biasSpan);

  const sourceMax = sourceEntry.colorScaleMaxAbs;
  const weightMax = Math.max(...wiring.edges.map((e) => Math.abs(e.weight)), 0);

  // short lines grouped by source neuron (channel of the pre-flatten layer)
  const channels = sourceEntry.shape[2];
  const groups: HTMLElement[] = [];
  for (let c = 0; c < channels; c++) {
    const group = doc.createElement("div");
    group.className = "flatten-group";
    group.setAttribute("data-source-neuron", String(c));
    groups.push(group);
  }
  for (const edge of wiring.edges) {
    const [, , channel] = edge.source;
    const line = doc.createElement("span");
    line.className = "flatten-line";
    line.setAttribute("data-flat-index", String(edge.flatIndex));
    line.setAttribute("data-source", edge.source.join(","));
    line.setAttribute("data-source-value", String(edge.sourceValue));
    line.setAttribute("data-weight", String(edge.weight));
    line.setAttribute("data-contribution", String(edge.contribution));
    line.style.backgroundColor = cssColor(edge.sourceValue, sourceMax);
    line.style.borderColor = weightColor(edge.weight, weightMax);
    groups[channel].appendChild(line);
  }
  for (const group of groups) container.appendChild(group);

  // hovering a source element highlights exactly its line and edges
  container.addEventListener("flatten-hover" as never, ((event: CustomEvent<number>) => {
    highlightFlatIndex(container, event.detail);
  }) as never);
}

export function highlightFlatIndex(container: HTMLElement, flatIndex: number): void {
  for (const line of Array.from(container.querySelectorAll(".flatten-line.highlight"))) {
    line.classList.remove("highlight");
  }
  const line = container.querySelector(`.flatten-line[data-flat-index="${flatIndex}"]`);
  line?.classList.add("highlight");
}
