/**
 * Line-protocol scorer server over stdio or TCP.
 *
 *   -> HELLO v1                     <- OK <scorer-name> <forward|backward>
 *   -> RESET                        <- OK <state-id>
 *   -> SCORE <state-id> <word>      <- OK <new-state-id> <logprob>
 *   -> RELEASE <state-id>           <- OK
 *   any failure                     <- ERR <message>
 *
 * State ids are opaque decimal integers, never reused within a
 * connection.  SCORE is memoized per (state, word) so repeating a
 * request returns the identical reply, id included.  A malformed line
 * yields an ERR reply and the connection stays up.
 */

import * as fs from "node:fs";
import * as net from "node:net";
import * as readline from "node:readline";

import { LanguageModel, ModelState, formatG9 } from "./model.js";
import { DEFAULT_CONFIG, HashNgramConfig, HashNgramModel } from "./ngram.js";
import { RnnConfig, RnnModel } from "./rnn.js";

export type Direction = "forward" | "backward";

export class Session {
  private readonly states = new Map<number, ModelState>();
  private readonly transitions = new Map<string, string>();
  private nextId = 0;

  constructor(
    private readonly model: LanguageModel,
    private readonly direction: Direction,
  ) {}

  /** Handle one request line; always returns a well-formed reply line. */
  handle(line: string): string {
    const parts = line.trim().split(/\s+/).filter((p) => p.length > 0);
    if (parts.length === 0) return "ERR empty request";
    switch (parts[0]) {
      case "HELLO":
        if (parts.length !== 2 || parts[1] !== "v1") {
          return "ERR unsupported protocol version";
        }
        return `OK ${this.model.name} ${this.direction}`;
      case "RESET": {
        if (parts.length !== 1) return "ERR RESET takes no arguments";
        const id = this.nextId++;
        this.states.set(id, this.model.initState());
        return `OK ${id}`;
      }
      case "SCORE": {
        if (parts.length !== 3) return "ERR SCORE needs <state-id> <word>";
        const id = this.parseId(parts[1]);
        if (id === null || !this.states.has(id)) {
          return `ERR unknown state ${parts[1]}`;
        }
        const key = `${id} ${parts[2]}`;
        const cached = this.transitions.get(key);
        if (cached !== undefined) return cached;
        const { state, logProb } = this.model.advance(
          this.states.get(id)!, parts[2]);
        const newId = this.nextId++;
        this.states.set(newId, state);
        const reply = `OK ${newId} ${formatG9(logProb)}`;
        this.transitions.set(key, reply);
        return reply;
      }
      case "RELEASE": {
        if (parts.length !== 2) return "ERR RELEASE needs <state-id>";
        const id = this.parseId(parts[1]);
        if (id === null || !this.states.has(id)) {
          return `ERR unknown state ${parts[1]}`;
        }
        this.states.delete(id);
        return "OK";
      }
      default:
        return `ERR unknown request ${parts[0]}`;
    }
  }

  get stateCount(): number {
    return this.states.size;
  }

  private parseId(token: string): number | null {
    return /^\d+$/.test(token) ? Number(token) : null;
  }
}

export function loadModel(path?: string): LanguageModel {
  if (!path) return new HashNgramModel(DEFAULT_CONFIG);
  const config = JSON.parse(fs.readFileSync(path, "utf-8")) as
    | HashNgramConfig
    | RnnConfig;
  if (config.type === "hash-ngram") return new HashNgramModel(config);
  if (config.type === "rnn") return new RnnModel(config);
  throw new Error(`unknown model type in ${path}`);
}

export function serveStdio(model: LanguageModel, direction: Direction): void {
  const session = new Session(model, direction);
  const rl = readline.createInterface({ input: process.stdin });
  rl.on("line", (line) => {
    process.stdout.write(session.handle(line) + "\n");
  });
}

export function serveTcp(
  model: LanguageModel,
  direction: Direction,
  port: number,
  onListen?: (port: number) => void,
): net.Server {
  // one connection served at a time; later ones wait their turn
  const waiting: net.Socket[] = [];
  let active: net.Socket | null = null;

  const attach = (socket: net.Socket) => {
    active = socket;
    const session = new Session(model, direction);
    const rl = readline.createInterface({ input: socket });
    rl.on("line", (line) => {
      socket.write(session.handle(line) + "\n");
    });
    socket.on("close", () => {
      active = null;
      const next = waiting.shift();
      if (next) attach(next);
    });
    socket.on("error", () => socket.destroy());
  };

  const server = net.createServer((socket) => {
    if (active) waiting.push(socket);
    else attach(socket);
  });
  server.listen(port, () => {
    const address = server.address();
    if (onListen && address && typeof address === "object") {
      onListen(address.port);
    }
  });
  return server;
}

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
  const direction = (args.get("direction") ?? "forward") as Direction;
  if (direction !== "forward" && direction !== "backward") {
    process.stderr.write("--direction must be forward or backward\n");
    process.exit(2);
  }
  const model = loadModel(args.get("model"));
  if (args.get("transport") === "tcp") {
    const port = Number(args.get("port") ?? 0);
    serveTcp(model, direction, port, (bound) => {
      process.stderr.write(`listening on ${bound}\n`);
    });
  } else {
    serveStdio(model, direction);
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("server.js") || entry.endsWith("server.ts")) {
  main(process.argv.slice(2));
}
