/**
 * Framing for the tracker wire protocol: a 4-byte big-endian payload length
 * followed by UTF-8 JSON. Outgoing JSON is canonical (keys sorted, no
 * whitespace) so conformant peers produce byte-identical transcripts.
 */

export type WireMessage = Record<string, unknown>;

/** JSON.stringify with object keys emitted in sorted order, recursively. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const entries = Object.entries(value as Record<string, unknown>)
    .filter(([, v]) => v !== undefined)
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([k, v]) => JSON.stringify(k) + ":" + canonicalJson(v));
  return "{" + entries.join(",") + "}";
}

export function encodeMessage(msg: WireMessage): Buffer {
  const payload = Buffer.from(canonicalJson(msg), "utf-8");
  const frame = Buffer.allocUnsafe(4 + payload.length);
  frame.writeUInt32BE(payload.length, 0);
  payload.copy(frame, 4);
  return frame;
}

/**
 * Incremental decoder: feed arbitrary chunks, get complete messages out.
 * A partial frame at end-of-input is reported by `atFrameBoundary()`.
 */
export class FrameDecoder {
  private buffer: Buffer = Buffer.alloc(0);

  push(chunk: Buffer): WireMessage[] {
    this.buffer = this.buffer.length === 0
      ? chunk
      : Buffer.concat([this.buffer, chunk]);
    const messages: WireMessage[] = [];
    for (;;) {
      if (this.buffer.length < 4) break;
      const length = this.buffer.readUInt32BE(0);
      if (this.buffer.length < 4 + length) break;
      const payload = this.buffer.subarray(4, 4 + length).toString("utf-8");
      this.buffer = this.buffer.subarray(4 + length);
      const parsed: unknown = JSON.parse(payload);
      if (parsed === null || typeof parsed !== "object" || Array.isArray(parsed)) {
        throw new Error(`non-object wire payload: ${payload}`);
      }
      messages.push(parsed as WireMessage);
    }
    return messages;
  }

  atFrameBoundary(): boolean {
    return this.buffer.length === 0;
  }
}
