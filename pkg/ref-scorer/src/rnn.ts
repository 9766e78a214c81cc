/**
 * Small Elman recurrent language model, trainable on a text stream.
 *
 * h' = tanh(Wx e(w) + Wh h + bh); p(next) = softmax(Wo h' + bo)
 *
 * Training is plain SGD with one-step truncated backpropagation, which
 * is enough for the demo purpose: perplexity drops clearly on a toy
 * corpus within a few epochs, the build stays dependency-free, and
 * inference is an exact pure function of (hidden state, word).
 */

import { Advance, LanguageModel, UNK, mulberry32 } from "./model.js";

export interface RnnConfig {
  type: "rnn";
  vocab: string[];
  dim: number;
  seed: number;
  weights?: {
    embed: number[];
    wx: number[];
    wh: number[];
    bh: number[];
    wo: number[];
    bo: number[];
  };
}

interface RnnState {
  hidden: Float64Array;
}

export class RnnModel implements LanguageModel {
  readonly name: string;
  readonly vocab: string[];
  private readonly index = new Map<string, number>();
  private readonly dim: number;
  private readonly v: number;
  // row-major parameter matrices
  private embed: Float64Array; // v x dim
  private wx: Float64Array; // dim x dim
  private wh: Float64Array; // dim x dim
  private bh: Float64Array; // dim
  private wo: Float64Array; // v x dim
  private bo: Float64Array; // v

  constructor(config: RnnConfig) {
    this.vocab = [...new Set([...config.vocab, UNK])].sort();
    this.vocab.forEach((w, i) => this.index.set(w, i));
    this.dim = config.dim;
    this.v = this.vocab.length;
    this.name = `rnn-d${this.dim}-s${config.seed}`;
    const rand = mulberry32(config.seed);
    const init = (n: number, scale: number) =>
      Float64Array.from({ length: n }, () => (rand() * 2 - 1) * scale);
    this.embed = init(this.v * this.dim, 0.1);
    this.wx = init(this.dim * this.dim, 0.25);
    this.wh = init(this.dim * this.dim, 0.25);
    this.bh = new Float64Array(this.dim);
    this.wo = init(this.v * this.dim, 0.25);
    this.bo = new Float64Array(this.v);
    if (config.weights) {
      this.embed = Float64Array.from(config.weights.embed);
      this.wx = Float64Array.from(config.weights.wx);
      this.wh = Float64Array.from(config.weights.wh);
      this.bh = Float64Array.from(config.weights.bh);
      this.wo = Float64Array.from(config.weights.wo);
      this.bo = Float64Array.from(config.weights.bo);
    }
  }

  initState(): RnnState {
    return { hidden: new Float64Array(this.dim) };
  }

  private wordId(word: string): number {
    return this.index.get(word) ?? this.index.get(UNK)!;
  }

  private step(hidden: Float64Array, wordId: number): Float64Array {
    const next = new Float64Array(this.dim);
    for (let i = 0; i < this.dim; i++) {
      let acc = this.bh[i];
      for (let j = 0; j < this.dim; j++) {
        acc += this.wx[i * this.dim + j] * this.embed[wordId * this.dim + j];
        acc += this.wh[i * this.dim + j] * hidden[j];
      }
      next[i] = Math.tanh(acc);
    }
    return next;
  }

  private logits(hidden: Float64Array): Float64Array {
    const out = new Float64Array(this.v);
    for (let k = 0; k < this.v; k++) {
      let acc = this.bo[k];
      for (let j = 0; j < this.dim; j++) {
        acc += this.wo[k * this.dim + j] * hidden[j];
      }
      out[k] = acc;
    }
    return out;
  }

  private logSoftmax(logits: Float64Array): Float64Array {
    let peak = -Infinity;
    for (const x of logits) peak = Math.max(peak, x);
    let sum = 0;
    for (const x of logits) sum += Math.exp(x - peak);
    const logZ = peak + Math.log(sum);
    return Float64Array.from(logits, (x) => x - logZ);
  }

  /** log P(word | state): the state's hidden vector already encodes the
   * history; the word is predicted first, then consumed. */
  advance(state: RnnState, word: string): { state: RnnState; logProb: number } {
    const id = this.wordId(word);
    const logProbs = this.logSoftmax(this.logits(state.hidden));
    return {
      state: { hidden: this.step(state.hidden, id) },
      logProb: logProbs[id],
    };
  }

  /** Stream perplexity without touching parameters. */
  perplexity(words: string[]): number {
    let state: RnnState = this.initState();
    let total = 0;
    for (const w of words) {
      const { state: next, logProb } = this.advance(state, w);
      total += logProb;
      state = next;
    }
    return Math.exp(-total / words.length);
  }

  /**
   * One SGD epoch over a word stream (concatenated text, no boundary
   * tokens).  Backprop is truncated to one step into the recurrence.
   */
  trainEpoch(words: string[], learningRate = 0.1): number {
    let hidden = this.initState().hidden;
    let prev: { hidden: Float64Array; word: number } | null = null;
    let loss = 0;
    for (const word of words) {
      const target = this.wordId(word);
      const logProbs = this.logSoftmax(this.logits(hidden));
      loss -= logProbs[target];

      // output layer gradient: softmax - onehot, collected into dh
      const dh = new Float64Array(this.dim);
      for (let k = 0; k < this.v; k++) {
        const g = Math.exp(logProbs[k]) - (k === target ? 1 : 0);
        for (let j = 0; j < this.dim; j++) {
          dh[j] += g * this.wo[k * this.dim + j];
          this.wo[k * this.dim + j] -= learningRate * g * hidden[j];
        }
        this.bo[k] -= learningRate * g;
      }

      // one step into the tanh that produced `hidden` (the zero initial
      // state has no producer, so the first position trains only Wo)
      if (prev) {
        const da = new Float64Array(this.dim);
        for (let i = 0; i < this.dim; i++) {
          da[i] = dh[i] * (1 - hidden[i] * hidden[i]);
        }
        const dEmbed = new Float64Array(this.dim);
        for (let i = 0; i < this.dim; i++) {
          for (let j = 0; j < this.dim; j++) {
            dEmbed[j] += da[i] * this.wx[i * this.dim + j];
          }
        }
        const e = prev.word * this.dim;
        for (let i = 0; i < this.dim; i++) {
          for (let j = 0; j < this.dim; j++) {
            this.wx[i * this.dim + j] -=
              learningRate * da[i] * this.embed[e + j];
            this.wh[i * this.dim + j] -=
              learningRate * da[i] * prev.hidden[j];
          }
          this.bh[i] -= learningRate * da[i];
        }
        for (let j = 0; j < this.dim; j++) {
          this.embed[e + j] -= learningRate * dEmbed[j];
        }
      }

      prev = { hidden, word: target };
      hidden = this.step(hidden, target);
    }
    return loss / words.length;
  }

  serialize(): RnnConfig {
    return {
      type: "rnn",
      vocab: this.vocab,
      dim: this.dim,
      seed: 0,
      weights: {
        embed: [...this.embed],
        wx: [...this.wx],
        wh: [...this.wh],
        bh: [...this.bh],
        wo: [...this.wo],
        bo: [...this.bo],
      },
    };
  }
}
