// Display formatting for vectors and numbers coming back from the server.
// This is rendering only: amplitudes are printed, never compared or
// combined — all verdicts on the page are server verdicts.

import type { MatrixJson } from "./types";

const DROP = 5e-5; // amplitudes that round to 0.0000 are noise, skip them

export function formatAmplitude(re: number, im: number): string {
  const r = Math.abs(re) < DROP ? 0 : re;
  const i = Math.abs(im) < DROP ? 0 : im;
  const fmt = (x: number) => {
    const s = x.toFixed(4).replace(/0+$/, "").replace(/\.$/, "");
    return s === "-0" ? "0" : s;
  };
  if (i === 0) return fmt(r);
  if (r === 0) return `${fmt(i)}i`;
  return `${fmt(r)}${i < 0 ? "-" : "+"}${fmt(Math.abs(i))}i`;
}

/**
 * Basis label for a flat index, mixed-radix over the per-variable
 * cardinalities in registry order (first variable most significant —
 * the same convention the server uses to build product states).
 */
export function basisLabel(index: number, cards: number[]): string {
  if (cards.length === 0) return "";
  const digits: number[] = [];
  let rest = index;
  for (let k = cards.length - 1; k >= 0; k--) {
    const c = cards[k]!;
    digits.unshift(rest % c);
    rest = Math.floor(rest / c);
  }
  // plain digit string for qubit-ish registries, commas once labels get wide
  return cards.some((c) => c > 9) ? digits.join(",") : digits.join("");
}

/** Render a wire column vector as a Dirac-form sum, for witness display. */
export function witnessToDirac(column: MatrixJson, cards: number[]): string {
  const terms: string[] = [];
  column.forEach((row, idx) => {
    const [re, im] = row[0] ?? [0, 0];
    if (Math.abs(re) < DROP && Math.abs(im) < DROP) return;
    const amp = formatAmplitude(re, im);
    // parenthesize genuine sums like 0.5+0.5i; bare reals/imaginaries read fine
    const mixed = amp.endsWith("i") && /[+-]/.test(amp.slice(1, -1));
    let coef = mixed ? `(${amp})` : amp;
    if (coef === "1") coef = "";
    if (coef === "-1") coef = "-";
    terms.push(`${coef}|${basisLabel(idx, cards)}⟩`);
  });
  if (terms.length === 0) return "0";
  return terms.join(" + ").replace(/\+ -/g, "− ");
}

export function formatMargin(margin: number | null): string {
  if (margin === null) return "";
  if (margin === 0) return "margin 0";
  return `margin ${margin.toExponential(3)}`;
}
