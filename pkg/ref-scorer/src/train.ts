/**
 * Train the small RNN backend on a text file and write a model JSON
 * that the server can load:
 *
 *   node dist/train.js --text corpus.txt --dim 16 --epochs 5 \
 *     --seed 3 --out model.json
 */

import * as fs from "node:fs";

import { RnnModel } from "./rnn.js";

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    if (argv[i].startsWith("--")) {
      args.set(argv[i].slice(2), argv[i + 1] ?? "");
      i++;
    }
  }
  return args;
}

export function main(argv: string[]): void {
  const args = parseArgs(argv);
  const textPath = args.get("text");
  const outPath = args.get("out");
  if (!textPath || !outPath) {
    process.stderr.write(
      "usage: train --text corpus.txt --out model.json " +
      "[--dim 16] [--epochs 5] [--seed 3] [--lr 0.1] [--reverse true]\n");
    process.exit(2);
  }
  let words = fs.readFileSync(textPath, "utf-8").split(/\s+/)
    .filter((w) => w.length > 0);
  if (args.get("reverse") === "true") words = words.reverse();
  const vocab = [...new Set(words)].sort();
  const model = new RnnModel({
    type: "rnn",
    vocab,
    dim: Number(args.get("dim") ?? 16),
    seed: Number(args.get("seed") ?? 3),
  });
  const epochs = Number(args.get("epochs") ?? 5);
  const lr = Number(args.get("lr") ?? 0.1);
  for (let epoch = 1; epoch <= epochs; epoch++) {
    const loss = model.trainEpoch(words, lr);
    process.stderr.write(
      `epoch ${epoch}: loss ${loss.toFixed(4)} ` +
      `ppl ${model.perplexity(words).toFixed(2)}\n`);
  }
  fs.writeFileSync(outPath, JSON.stringify(model.serialize()));
  process.stderr.write(`wrote ${outPath}\n`);
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("train.js") || entry.endsWith("train.ts")) {
  main(process.argv.slice(2));
}
