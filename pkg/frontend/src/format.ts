/** Display formatting. Every number shown in the UI is a bridge payload field;
 * these helpers only format, never compute. */

export function formatProbability(p: number): string {
  return p.toFixed(4);
}

export function formatValue(v: number): string {
  if (v === 0) return "0";
  const fixed = v.toFixed(3);
  return Number(fixed) === 0 ? v.toExponential(2) : fixed;
}

/** Full-precision text for data-* attributes so tests can read exact payload values. */
export function exactValue(v: number): string {
  return String(v);
}
