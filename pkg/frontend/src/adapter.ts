/**
 * Stdio entry point: replay a per-frame prediction script over the tracker
 * wire protocol (4-byte big-endian length prefix + canonical JSON).
 *
 * Usage: node dist/adapter.js --script path/to/trace.csv
 */

import { readFileSync } from "node:fs";
import process from "node:process";

import { encodeMessage, FrameDecoder } from "./framing.js";
import { parseScript } from "./script.js";
import { Session } from "./session.js";

function scriptPath(argv: string[]): string {
  const flag = argv.indexOf("--script");
  if (flag >= 0 && argv[flag + 1]) {
    return argv[flag + 1];
  }
  const positional = argv.filter((a) => !a.startsWith("-"));
  if (positional.length === 1) {
    return positional[0];
  }
  console.error("usage: adapter.js --script <trace.csv>");
  process.exit(2);
}

export function main(): void {
  const script = parseScript(readFileSync(scriptPath(process.argv.slice(2)), "utf-8"));
  const session = new Session(script);
  const decoder = new FrameDecoder();

  process.stdin.on("data", (chunk: Buffer) => {
    for (const msg of decoder.push(chunk)) {
      const { response, done } = session.handle(msg);
      process.stdout.write(encodeMessage(response));
      if (done) {
        process.exit(0);
      }
    }
  });
  process.stdin.on("end", () => {
    if (!decoder.atFrameBoundary()) {
      console.error("input ended mid-frame");
      process.exit(1);
    }
    process.exit(0);
  });
}

main();
