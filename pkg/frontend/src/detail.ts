/** Detail views: the single-window math behind one output element.
 * Conv shows window, kernel, element-wise products, and their sum; ReLU shows
 * the max(0, x) mapping; MaxPool highlights the window maximum. Every number
 * displayed is a field of the window-trace payload. */

import { formatValue } from "./format.js";
import { numberGrid } from "./heatmap.js";
import type { TracePayload } from "./types.js";

export interface DetailHandlers {
  onBack(): void;
}

export function renderDetail(
  doc: Document,
  container: HTMLElement,
  trace: TracePayload,
  handlers: DetailHandlers,
): void {
  container.textContent = "";
  container.className = `detail detail-${trace.kind.toLowerCase()}`;

  const back = doc.createElement("button");
  back.className = "back-button";
  back.textContent = "back";
  back.addEventListener("click", () => handlers.onBack());
  container.appendChild(back);

  const windowGrid = numberGrid(doc, trace.window.values, "window-grid", formatValue);
  windowGrid.setAttribute("data-origin", `${trace.window.originRow},${trace.window.originCol}`);
  container.appendChild(windowGrid);

  if (trace.kind === "Conv") {
    container.appendChild(numberGrid(doc, trace.kernel ?? [], "kernel-grid", formatValue));
    const products = numberGrid(doc, trace.products ?? [], "products-grid", formatValue);
    container.appendChild(products);
    const equation = doc.createElement("div");
    equation.className = "equation";
    const terms = (trace.products ?? []).flat();
    equation.textContent = `${terms.map(formatValue).join(" + ")} = ${formatValue(trace.result)}`;
    container.appendChild(equation);
  } else if (trace.kind === "ReLU") {
    const formula = doc.createElement("div");
    formula.className = "formula";
    formula.textContent = "max(0, x)";
    container.appendChild(formula);
    const mapping = doc.createElement("div");
    mapping.className = "mapping";
    const x = trace.window.values[0][0];
    mapping.setAttribute("data-input", String(x));
    mapping.textContent = `max(0, ${formatValue(x)}) = ${formatValue(trace.result)}`;
    container.appendChild(mapping);
  } else {
    const formula = doc.createElement("div");
    formula.className = "formula";
    formula.textContent = `max over ${trace.window.size}x${trace.window.size} window`;
    container.appendChild(formula);
    // highlight the cell holding the maximum (the traced result)
    const cells = Array.from(windowGrid.querySelectorAll("td"));
    for (const cell of cells) {
      if (Number(cell.getAttribute("data-value")) === trace.result) {
        cell.classList.add("max-cell");
        break;
      }
    }
  }

  const result = doc.createElement("div");
  result.className = "result-value";
  result.setAttribute("data-value", String(trace.result));
  result.textContent = `result ${formatValue(trace.result)}`;
  container.appendChild(result);
}
