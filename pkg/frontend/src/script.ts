/**
 * Per-frame prediction scripts, stored in the trace CSV format:
 * `t,x,y,w,h,conf,init` with empty box fields on frames where the target is
 * reported absent. The adapter replays one prediction per `update` request.
 */

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface ScriptEntry {
  box: Box | null;
  conf: number;
}

function num(field: string, line: number): number {
  const value = Number(field);
  if (!Number.isFinite(value)) {
    throw new Error(`line ${line}: bad number ${JSON.stringify(field)}`);
  }
  return value;
}

export function parseScript(text: string): ScriptEntry[] {
  const entries: ScriptEntry[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") continue;
    const parts = line.split(",");
    if (parts.length !== 7) {
      throw new Error(`line ${i + 1}: expected 7 fields, got ${parts.length}`);
    }
    const t = num(parts[0], i + 1);
    if (t !== entries.length) {
      throw new Error(`line ${i + 1}: expected frame ${entries.length}, got ${t}`);
    }
    const conf = num(parts[5], i + 1);
    if (conf < 0 || conf > 1) {
      throw new Error(`line ${i + 1}: confidence ${conf} outside [0,1]`);
    }
    const absent = parts.slice(1, 5).every((p) => p.trim() === "");
    if (absent) {
      entries.push({ box: null, conf });
    } else {
      const box = {
        x: num(parts[1], i + 1),
        y: num(parts[2], i + 1),
        w: num(parts[3], i + 1),
        h: num(parts[4], i + 1),
      };
      if (box.w < 0 || box.h < 0) {
        throw new Error(`line ${i + 1}: negative box size`);
      }
      entries.push({ box, conf });
    }
  }
  if (entries.length === 0) {
    throw new Error("empty script");
  }
  return entries;
}
