/** Heatmap tiles: crisp nearest-neighbor pixel rasters on canvas, with data-*
 * attributes carrying the exact payload values for tests and tooltips. */

import { colorAt, position } from "./colormap.js";

export interface TileOptions {
  maxAbs: number;
  cellSize?: number;
  className?: string;
  onHoverCell?: (row: number, col: number) => void;
  onClick?: () => void;
}

export function heatmapTile(doc: Document, values: number[][], options: TileOptions): HTMLElement {
  const rows = values.length;
  const cols = values[0]?.length ?? 0;
  const cell = options.cellSize ?? Math.max(1, Math.floor(64 / Math.max(rows, cols)));
  const wrapper = doc.createElement("div");
  wrapper.className = options.className ?? "heatmap-tile";
  wrapper.setAttribute("data-rows", String(rows));
  wrapper.setAttribute("data-cols", String(cols));
  wrapper.setAttribute("data-maxabs", String(options.maxAbs));

  const canvas = doc.createElement("canvas");
  canvas.width = cols * cell;
  canvas.height = rows * cell;
  paint(canvas, values, options.maxAbs, cell);
  wrapper.appendChild(canvas);

  if (options.onHoverCell) {
    canvas.addEventListener("mousemove", (event: MouseEvent) => {
      const rect = canvas.getBoundingClientRect();
      const col = Math.min(cols - 1, Math.max(0, Math.floor((event.clientX - rect.left) / cell)));
      const row = Math.min(rows - 1, Math.max(0, Math.floor((event.clientY - rect.top) / cell)));
      options.onHoverCell?.(row, col);
    });
  }
  if (options.onClick) {
    wrapper.addEventListener("click", () => options.onClick?.());
  }
  return wrapper;
}

function paint(canvas: HTMLCanvasElement, values: number[][], maxAbs: number, cell: number): void {
  const ctx = canvas.getContext?.("2d");
  if (!ctx) return; // headless test DOM: geometry and data attributes still hold
  for (let r = 0; r < values.length; r++) {
    for (let q = 0; q < values[r].length; q++) {
      const [red, green, blue] = colorAt(position(values[r][q], maxAbs));
      ctx.fillStyle = `rgb(${red},${green},${blue})`;
      ctx.fillRect(q * cell, r * cell, cell, cell);
    }
  }
}

/** RGB raster of the input image itself (displayed as a photo, not a heatmap). */
export function rgbTile(doc: Document, pixels: number[][][], cellSize = 1): HTMLElement {
  const rows = pixels.length;
  const cols = pixels[0]?.length ?? 0;
  const wrapper = doc.createElement("div");
  wrapper.className = "rgb-tile";
  const canvas = doc.createElement("canvas");
  canvas.width = cols * cellSize;
  canvas.height = rows * cellSize;
  const ctx = canvas.getContext?.("2d");
  if (ctx) {
    for (let r = 0; r < rows; r++) {
      for (let q = 0; q < cols; q++) {
        const [red, green, blue] = pixels[r][q];
        ctx.fillStyle = `rgb(${Math.round(red * 255)},${Math.round(green * 255)},${Math.round(blue * 255)})`;
        ctx.fillRect(q * cellSize, r * cellSize, cellSize, cellSize);
      }
    }
  }
  wrapper.appendChild(canvas);
  return wrapper;
}

/** Small numeric grid (kernels, windows, products) with exact values attached. */
export function numberGrid(doc: Document, values: number[][], className: string, format: (v: number) => string): HTMLElement {
  const table = doc.createElement("table");
  table.className = className;
  for (const row of values) {
    const tr = doc.createElement("tr");
    for (const v of row) {
      const td = doc.createElement("td");
      td.textContent = format(v);
      td.setAttribute("data-value", String(v));
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  return table;
}
