/**
 * Language model backends for the scorer server.
 *
 * A model is a pure incremental scorer: advancing a state with a word
 * always returns the same next state and the same natural-log
 * probability. States are opaque to callers; the server maps them to
 * integer ids.
 */

export interface Advance {
  state: ModelState;
  logProb: number;
}

export type ModelState = unknown;

export interface LanguageModel {
  readonly name: string;
  initState(): ModelState;
  advance(state: ModelState, word: string): Advance;
}

export const UNK = "<unk>";

/** Deterministic 32-bit PRNG so model builds are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** FNV-1a over a string, returning an unsigned 32-bit hash. */
export function fnv1a(text: string, seed = 0x811c9dc5): number {
  let h = seed >>> 0;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

/** printf %.9g: nine significant digits, trailing zeros stripped. */
export function formatG9(x: number): string {
  if (Number.isInteger(x) && Math.abs(x) < 1e9) return String(x);
  let s = x.toPrecision(9);
  if (s.includes("e")) {
    const [mantissa, exponent] = s.split("e");
    const trimmed = mantissa.includes(".")
      ? mantissa.replace(/0+$/, "").replace(/\.$/, "")
      : mantissa;
    return `${trimmed}e${exponent}`;
  }
  if (s.includes(".")) {
    s = s.replace(/0+$/, "").replace(/\.$/, "");
  }
  return s;
}
