import { describe, expect, it } from "vitest";

import { encodeMessage, type WireMessage } from "../src/framing.js";
import { parseScript } from "../src/script.js";
import { Session } from "../src/session.js";

const DOC = [
  "0,10.5,20.5,40.5,60.5,0.5,1",
  "1,12.5,21.5,40.5,60.5,0.75,0",
  "2,,,,,0.25,0",
  "",
].join("\n");

function session(): Session {
  return new Session(parseScript(DOC));
}

const INIT: WireMessage = {
  cmd: "init", t: 0, width: 1280, height: 720, timestamp: 0,
  x: 10.5, y: 20.5, w: 40.5, h: 60.5,
};

describe("Session", () => {
  it("replays the script through init/update", () => {
    const s = session();
    expect(s.handle(INIT)).toEqual({ response: { ok: true }, done: false });
    const r1 = s.handle({ cmd: "update", t: 1, width: 1280, height: 720, timestamp: 0 });
    expect(r1.response).toEqual({ x: 12.5, y: 21.5, w: 40.5, h: 60.5, conf: 0.75 });
    const r2 = s.handle({ cmd: "update", t: 2, width: 1280, height: 720, timestamp: 0 });
    expect(r2.response).toEqual({ absent: true, conf: 0.25 });
  });

  it("rejects update before init and ends the session", () => {
    const r = session().handle({ cmd: "update", t: 1, width: 1, height: 1 });
    expect(r).toEqual({ response: { error: "not initialized" }, done: true });
  });

  it("errors past the end of the script", () => {
    const s = session();
    s.handle(INIT);
    const r = s.handle({ cmd: "update", t: 9, width: 1, height: 1 });
    expect(r.done).toBe(true);
    expect(String(r.response.error)).toMatch(/no frame 9/);
  });

  it("acknowledges reinit and set_ref", () => {
    const s = session();
    s.handle(INIT);
    expect(s.handle({ ...INIT, cmd: "reinit", t: 1 }).response)
      .toEqual({ ok: true });
    expect(s.handle({ cmd: "set_ref", x: 0, y: 0, w: 5, h: 5 }).response)
      .toEqual({ ok: true });
  });

  it("rejects unknown commands and missing box fields", () => {
    expect(session().handle({ cmd: "mystery" }).done).toBe(true);
    const r = session().handle({ cmd: "init", t: 0, width: 1, height: 1, x: 1 });
    expect(String(r.response.error)).toMatch(/missing box field/);
  });

  it("shutdown acknowledges and ends", () => {
    expect(session().handle({ cmd: "shutdown" }))
      .toEqual({ response: { ok: true }, done: true });
  });
});

describe("golden transcript", () => {
  // expected response bytes captured from the evaluation host's reference
  // server for the same command sequence and script
  const GOLDEN =
    "0000000b7b226f6b223a747275657d" +
    "000000307b22636f6e66223a302e352c2268223a36302e352c2277223a34302e35" +
    "2c2278223a31302e352c2279223a32302e357d" +
    "000000317b22636f6e66223a302e37352c2268223a36302e352c2277223a34302e" +
    "352c2278223a31322e352c2279223a32312e357d" +
    "0000001b7b22616273656e74223a747275652c22636f6e66223a302e32357d" +
    "0000000b7b226f6b223a747275657d" +
    "0000000b7b226f6b223a747275657d";

  it("byte-identical replay of a full session", () => {
    const s = session();
    const requests: WireMessage[] = [
      INIT,
      { cmd: "update", t: 0, width: 1280, height: 720, timestamp: 0 },
      { cmd: "update", t: 1, width: 1280, height: 720, timestamp: 1 / 30 },
      { cmd: "update", t: 2, width: 1280, height: 720, timestamp: 2 / 30 },
      { cmd: "set_ref", x: 0.5, y: 0.5, w: 144.5, h: 144.5 },
      { cmd: "shutdown" },
    ];
    const out: Buffer[] = [];
    for (const req of requests) {
      out.push(encodeMessage(s.handle(req).response));
    }
    expect(Buffer.concat(out).toString("hex")).toBe(GOLDEN);
  });
});
