import { describe, expect, it } from "vitest";

import { mulberry32 } from "../src/model.js";
import { RnnModel } from "../src/rnn.js";

const VOCAB = ["x", "y", "z", "w"];

function toyStream(length: number, seed = 7): string[] {
  // strongly patterned text so a tiny model can learn something
  const rand = mulberry32(seed);
  const words: string[] = [];
  let prev = 0;
  for (let i = 0; i < length; i++) {
    const next = rand() < 0.8 ? (prev + 1) % VOCAB.length
      : Math.floor(rand() * VOCAB.length);
    words.push(VOCAB[next]);
    prev = next;
  }
  return words;
}

describe("RnnModel", () => {
  it("produces a normalized distribution", () => {
    const m = new RnnModel({ type: "rnn", vocab: VOCAB, dim: 8, seed: 1 });
    const state = m.initState();
    let total = 0;
    for (const w of [...VOCAB, "<unk>"]) {
      total += Math.exp(m.advance(state, w).logProb);
    }
    expect(Math.abs(total - 1)).toBeLessThan(1e-9);
  });

  it("training lowers perplexity on patterned text", () => {
    const words = toyStream(600);
    const m = new RnnModel({ type: "rnn", vocab: VOCAB, dim: 12, seed: 2 });
    const before = m.perplexity(words);
    for (let epoch = 0; epoch < 4; epoch++) m.trainEpoch(words, 0.1);
    const after = m.perplexity(words);
    expect(after).toBeLessThan(before * 0.8);
  });

  it("is deterministic for a fixed seed", () => {
    const build = () => {
      const m = new RnnModel({ type: "rnn", vocab: VOCAB, dim: 6, seed: 5 });
      m.trainEpoch(toyStream(100), 0.1);
      return m.perplexity(toyStream(50, 9));
    };
    expect(build()).toBe(build());
  });

  it("round-trips through serialization", () => {
    const m = new RnnModel({ type: "rnn", vocab: VOCAB, dim: 6, seed: 3 });
    m.trainEpoch(toyStream(100), 0.1);
    const clone = new RnnModel(m.serialize());
    let sm = m.initState();
    let sc = clone.initState();
    for (const w of ["x", "z", "y"]) {
      const a = m.advance(sm, w);
      const b = clone.advance(sc, w);
      expect(b.logProb).toBe(a.logProb);
      sm = a.state;
      sc = b.state;
    }
  });

  it("advance does not mutate the input state", () => {
    const m = new RnnModel({ type: "rnn", vocab: VOCAB, dim: 6, seed: 3 });
    const state = m.initState() as { hidden: Float64Array };
    const snapshot = [...state.hidden];
    m.advance(state, "x");
    expect([...state.hidden]).toEqual(snapshot);
  });
});
