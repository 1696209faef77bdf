/**
 * Protocol state machine for one tracker session, independent of transport.
 *
 * Commands: init, update, reinit, set_ref, shutdown. `update` answers with
 * `{x, y, w, h, conf}` or `{absent: true, conf}`; everything else answers
 * `{ok: true}`. Errors produce `{error: ...}` and end the session, matching
 * the host-side contract that a peer closes after reporting an error.
 */

import type { WireMessage } from "./framing.js";
import type { ScriptEntry } from "./script.js";

export interface SessionResult {
  response: WireMessage;
  done: boolean;
}

export class Session {
  private initialized = false;

  constructor(private readonly script: ScriptEntry[]) {}

  handle(msg: WireMessage): SessionResult {
    try {
      return this.dispatch(msg);
    } catch (err) {
      return { response: { error: String((err as Error).message ?? err) }, done: true };
    }
  }

  private dispatch(msg: WireMessage): SessionResult {
    switch (msg.cmd) {
      case "shutdown":
        return { response: { ok: true }, done: true };
      case "init":
        this.requireBox(msg);
        this.initialized = true;
        return { response: { ok: true }, done: false };
      case "reinit":
        this.requireInit();
        this.requireBox(msg);
        return { response: { ok: true }, done: false };
      case "set_ref":
        this.requireBox(msg);
        return { response: { ok: true }, done: false };
      case "update":
        return { response: this.update(msg), done: false };
      default:
        return { response: { error: `unknown cmd: ${String(msg.cmd)}` }, done: true };
    }
  }

  private update(msg: WireMessage): WireMessage {
    this.requireInit();
    const t = msg.t;
    if (typeof t !== "number" || !Number.isInteger(t) || t < 0) {
      throw new Error(`bad frame index: ${String(t)}`);
    }
    if (t >= this.script.length) {
      throw new Error(`script has no frame ${t}`);
    }
    const entry = this.script[t];
    if (entry.box === null) {
      return { absent: true, conf: entry.conf };
    }
    return { ...entry.box, conf: entry.conf };
  }

  private requireInit(): void {
    if (!this.initialized) {
      throw new Error("not initialized");
    }
  }

  private requireBox(msg: WireMessage): void {
    for (const field of ["x", "y", "w", "h"]) {
      if (typeof msg[field] !== "number") {
        throw new Error(`missing box field: ${field}`);
      }
    }
  }
}
