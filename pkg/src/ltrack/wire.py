"""Length-prefixed JSON wire protocol for foreign-process tracker backends.

Framing: 4-byte big-endian payload length, then UTF-8 JSON with sorted keys
and no whitespace (so conformant peers produce byte-identical transcripts).
Requests carry a ``cmd`` of init/update/reinit/set_ref/shutdown; update
responses carry ``{x, y, w, h, conf}`` or ``{absent: true}``.
"""
from __future__ import annotations

import json
import socket
import struct
import subprocess

from .geometry import BBox
from .metrics import Prediction
from .protocol import BackendError, FrameContext, TrackerBackend

_LEN = struct.Struct(">I")


def encode_message(obj: dict) -> bytes:
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _LEN.pack(len(payload)) + payload


def write_message(stream, obj: dict) -> None:
    stream.write(encode_message(obj))
    stream.flush()


def read_message(stream):
    """Read one framed message; None on clean EOF at a frame boundary."""
    header = _read_exact(stream, _LEN.size, allow_eof=True)
    if header is None:
        return None
    (length,) = _LEN.unpack(header)
    payload = _read_exact(stream, length)
    try:
        return json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BackendError(f"malformed wire payload: {exc}") from exc


def _read_exact(stream, n: int, allow_eof: bool = False):
    chunks = b""
    while len(chunks) < n:
        chunk = stream.read(n - len(chunks))
        if not chunk:
            if allow_eof and not chunks:
                return None
            raise BackendError("unexpected end of stream mid-frame")
        chunks += chunk
    return chunks


def _box_fields(box: BBox) -> dict:
    return {"x": box.x, "y": box.y, "w": box.w, "h": box.h}


def _ctx_fields(ctx: FrameContext) -> dict:
    fields = {"t": ctx.t, "width": ctx.dims.width, "height": ctx.dims.height,
              "timestamp": ctx.timestamp}
    if ctx.image_path is not None:
        fields["image"] = ctx.image_path
    return fields


class ExternBackend(TrackerBackend):
    """Tracker living in a foreign process (stdio) or behind a TCP socket.

    Any protocol violation marks the backend failed and aborts the sequence.
    """

    has_reference_box = True

    def __init__(self, cmd=None, address=None, search_area_factor: float = 5.0):
        if (cmd is None) == (address is None):
            raise ValueError("give exactly one of cmd or address")
        self.search_area_factor = search_area_factor
        self._failed = False
        self._proc = None
        self._sock = None
        if cmd is not None:
            self._proc = subprocess.Popen(
                cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
            self._out = self._proc.stdin
            self._in = self._proc.stdout
        else:
            host, port = address
            self._sock = socket.create_connection((host, port))
            self._out = self._sock.makefile("wb")
            self._in = self._sock.makefile("rb")

    def _request(self, msg: dict) -> dict:
        if self._failed:
            raise BackendError("backend already failed")
        try:
            write_message(self._out, msg)
            resp = read_message(self._in)
        except (BrokenPipeError, OSError, BackendError) as exc:
            self._fail()
            raise BackendError(f"wire protocol failure: {exc}") from exc
        if resp is None:
            self._fail()
            raise BackendError("peer closed connection mid-sequence")
        if not isinstance(resp, dict):
            self._fail()
            raise BackendError(f"non-object response: {resp!r}")
        if "error" in resp:
            self._fail()
            raise BackendError(f"peer error: {resp['error']}")
        return resp

    def _fail(self):
        self._failed = True
        self.close(graceful=False)

    def init(self, ctx: FrameContext, box: BBox) -> None:
        self._request({"cmd": "init", **_ctx_fields(ctx), **_box_fields(box)})

    def reinit(self, ctx: FrameContext, box: BBox) -> None:
        self._request({"cmd": "reinit", **_ctx_fields(ctx), **_box_fields(box)})

    def update(self, ctx: FrameContext) -> Prediction:
        resp = self._request({"cmd": "update", **_ctx_fields(ctx)})
        try:
            if resp.get("absent"):
                return Prediction(None, float(resp.get("conf", 0.0)))
            return Prediction(BBox(resp["x"], resp["y"], resp["w"], resp["h"]),
                              float(resp["conf"]))
        except (KeyError, TypeError, ValueError) as exc:
            self._fail()
            raise BackendError(f"invalid update response {resp!r}: {exc}") from exc

    def set_reference_box(self, box: BBox) -> None:
        self._request({"cmd": "set_ref", **_box_fields(box)})

    def close(self, graceful: bool = True) -> None:
        if graceful and not self._failed:
            try:
                write_message(self._out, {"cmd": "shutdown"})
                read_message(self._in)
            except Exception:
                pass
        for stream in (getattr(self, "_out", None), getattr(self, "_in", None)):
            try:
                if stream:
                    stream.close()
            except Exception:
                pass
        if self._proc is not None:
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        if self._sock is not None:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve_stream(reader, writer, backend: TrackerBackend) -> None:
    """Reference server loop: dispatch framed requests to a backend.

    Runs until a shutdown message or EOF. Used to expose in-process backends
    over the wire (tests, conformance); foreign adapters reimplement it.
    """
    from .geometry import FrameDims

    initialized = False
    while True:
        msg = read_message(reader)
        if msg is None:
            return
        cmd = msg.get("cmd")
        try:
            if cmd == "shutdown":
                write_message(writer, {"ok": True})
                return
            if cmd in ("init", "reinit"):
                ctx = FrameContext(int(msg["t"]),
                                   FrameDims(msg["width"], msg["height"]),
                                   float(msg.get("timestamp", 0.0)),
                                   msg.get("image"))
                box = BBox(msg["x"], msg["y"], msg["w"], msg["h"])
                if cmd == "init":
                    backend.init(ctx, box)
                    initialized = True
                else:
                    backend.reinit(ctx, box)
                write_message(writer, {"ok": True})
            elif cmd == "update":
                if not initialized:
                    write_message(writer, {"error": "not initialized"})
                    return
                ctx = FrameContext(int(msg["t"]),
                                   FrameDims(msg["width"], msg["height"]),
                                   float(msg.get("timestamp", 0.0)),
                                   msg.get("image"))
                pred = backend.update(ctx)
                if pred.box is None:
                    write_message(writer, {"absent": True, "conf": pred.confidence})
                else:
                    write_message(writer, {**_box_fields(pred.box),
                                           "conf": pred.confidence})
            elif cmd == "set_ref":
                backend.set_reference_box(BBox(msg["x"], msg["y"],
                                               msg["w"], msg["h"]))
                write_message(writer, {"ok": True})
            else:
                write_message(writer, {"error": f"unknown cmd: {cmd!r}"})
                return
        except Exception as exc:  # report and close, per protocol
            write_message(writer, {"error": str(exc)})
            return
