/** Diverging red-white-blue mapping, mirroring the engine's rendering contract:
 * zero is exactly white, -1 saturated red, +1 saturated blue, odd-symmetric. */

export function position(value: number, maxAbs: number): number {
  if (maxAbs === 0) return 0;
  return Math.min(1, Math.max(-1, value / maxAbs));
}

export function colorAt(p: number): [number, number, number] {
  const clamped = Math.min(1, Math.max(-1, p));
  const fade = Math.round(255 * (1 - Math.abs(clamped)));
  return clamped < 0 ? [255, fade, fade] : [fade, fade, 255];
}

export function cssColor(value: number, maxAbs: number): string {
  const [r, g, b] = colorAt(position(value, maxAbs));
  return `rgb(${r},${g},${b})`;
}

/** Weight edges use the same diverging scale; zero weight renders neutral white. */
export function weightColor(weight: number, maxAbs: number): string {
  return cssColor(weight, maxAbs);
}
