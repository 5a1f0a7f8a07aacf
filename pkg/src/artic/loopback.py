"""Reference protocol-v1 server wrapping the in-process backend.

Runs over stdio (default) or a local TCP socket. This is the loopback peer
used by the bridge differential tests; external backends implement the same
protocol as separate processes.

    python -m artic.loopback                 # serve on stdin/stdout
    python -m artic.loopback --socket 7341   # serve one connection at a time
"""

from __future__ import annotations

import argparse
import json
import socket
import sys

import numpy as np

from .backend import ReferenceBackend, SyllableEmbedding
from .bridge import PROTOCOL_VERSION, canonical_json
from .errors import ArticError, TargetError
from .frames import FRAME_DIM, Trajectory
from .targets import EXPERT_TARGET_NAMES, expert_trajectory

SERVER_NAME = "reference-loopback"


def _error(request_id, code: str, message: str) -> dict:
    return {"id": request_id, "ok": False, "error": {"code": code, "message": message}}


def _ok(request_id, payload: dict) -> dict:
    return {"id": request_id, "ok": True, "payload": payload}


def _parse_trajectory(payload: dict) -> tuple[Trajectory, float, int]:
    rows = payload.get("trajectory")
    if not isinstance(rows, list) or not rows:
        raise ValueError("payload.trajectory must be a non-empty list of rows")
    frames = np.asarray(rows, dtype=float)
    if frames.ndim != 2 or frames.shape[1] != FRAME_DIM:
        raise ValueError(f"trajectory rows must have {FRAME_DIM} columns")
    if not np.all(np.isfinite(frames)):
        raise ValueError("trajectory contains non-finite values")
    step_duration = float(payload.get("step_duration", 0.02))
    sample_rate = int(payload.get("sample_rate", 16000))
    if step_duration <= 0 or sample_rate <= 0:
        raise ValueError("step_duration and sample_rate must be positive")
    return Trajectory.from_frames(frames), step_duration, sample_rate


class LoopbackServer:
    """Per-session protocol state around one ReferenceBackend instance."""

    def __init__(self):
        self._backend: ReferenceBackend | None = None
        self._targets: dict[str, SyllableEmbedding] = {}
        self._last_id = 0

    def _backend_for(self, sample_rate: int) -> ReferenceBackend:
        if self._backend is None or self._backend.sample_rate != sample_rate:
            self._backend = ReferenceBackend(sample_rate=sample_rate)
        return self._backend

    def handle_line(self, line: bytes) -> dict:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            return _error(None, "BAD_REQUEST", f"malformed JSON at position {exc.pos}: {exc.msg}")
        if not isinstance(request, dict):
            return _error(None, "BAD_REQUEST", "request must be a JSON object")

        request_id = request.get("id")
        if not isinstance(request_id, int) or request_id <= self._last_id:
            return _error(request_id, "BAD_REQUEST",
                          f"id must be an integer greater than {self._last_id}")
        self._last_id = request_id

        op = request.get("op")
        payload = request.get("payload")
        if not isinstance(payload, dict):
            return _error(request_id, "BAD_REQUEST", "payload must be a JSON object")

        try:
            if op == "handshake":
                return _ok(request_id, {
                    "backend_name": SERVER_NAME,
                    "embedding_dim": ReferenceBackend().descriptor.embedding_dim,
                    "protocol_version": PROTOCOL_VERSION,
                })
            if op == "score":
                return _ok(request_id, self._score(payload))
            if op == "make_target":
                return _ok(request_id, self._make_target(payload))
            if op == "synthesize":
                return _ok(request_id, self._synthesize(payload))
            return _error(request_id, "UNSUPPORTED_OP", f"unknown op {op!r}")
        except (ValueError, KeyError) as exc:
            return _error(request_id, "BAD_REQUEST", str(exc))
        except TargetError as exc:
            return _error(request_id, "INVALID_TARGET", str(exc))
        except ArticError as exc:
            return _error(request_id, "INTERNAL", str(exc))

    def _score(self, payload: dict) -> dict:
        trajectory, step_duration, sample_rate = _parse_trajectory(payload)
        target_ref = payload.get("target")
        if not isinstance(target_ref, dict):
            raise ValueError("payload.target must be an object")
        backend = self._backend_for(sample_rate)
        target = self._resolve_target_ref(target_ref, backend)

        backend.reset_cache()
        signal = backend.score(trajectory, target, step_duration)
        waveform = backend.synthesize(trajectory, step_duration)
        segments = [
            {"start_s": s / sample_rate, "end_s": e / sample_rate}
            for s, e in self._segment_ranges(backend, waveform)
        ]
        result = {"detected": signal.detected, "segments": segments}
        result["similarity"] = signal.similarity if signal.detected else None
        return result

    @staticmethod
    def _segment_ranges(backend: ReferenceBackend, waveform):
        from .perception import segment_ranges

        return segment_ranges(
            waveform.samples, waveform.sample_rate, backend.rms_threshold, backend.min_syllable_s
        )

    def _resolve_target_ref(self, ref: dict, backend: ReferenceBackend) -> SyllableEmbedding:
        kind = ref.get("kind")
        if kind == "embedding":
            values = np.asarray(ref.get("values", []), dtype=float)
            if values.size != backend.descriptor.embedding_dim:
                raise ValueError(
                    f"target embedding must have dim {backend.descriptor.embedding_dim}"
                )
            if not np.all(np.isfinite(values)):
                raise ValueError("target embedding contains non-finite values")
            return SyllableEmbedding(values)
        if kind == "id":
            target_id = str(ref.get("id", ""))
            if target_id not in self._targets:
                raise TargetError(f"unknown target id {target_id!r}")
            return self._targets[target_id]
        raise ValueError(f"unsupported target kind {kind!r}")

    def _make_target(self, payload: dict) -> dict:
        source = payload.get("source")
        if not isinstance(source, dict):
            raise ValueError("payload.source must be an object")
        kind = source.get("kind")
        if kind == "trajectory":
            trajectory, step_duration, sample_rate = _parse_trajectory(payload)
            backend = self._backend_for(sample_rate)
            embedding = backend.make_target(trajectory, step_duration)
        elif kind == "wav":
            backend = self._backend_for(int(payload.get("sample_rate", 16000)))
            embedding = backend.make_target(str(source.get("path", "")))
        elif kind == "text":
            name = str(source.get("text", ""))
            if name not in EXPERT_TARGET_NAMES:
                raise TargetError(
                    f"unknown syllable {name!r}; this server ships {EXPERT_TARGET_NAMES}"
                )
            backend = self._backend_for(int(payload.get("sample_rate", 16000)))
            embedding = backend.make_target(expert_trajectory(name))
        else:
            raise ValueError(f"unsupported source kind {kind!r}")

        target_id = f"tgt_{len(self._targets) + 1}"
        self._targets[target_id] = embedding
        return {
            "target_id": target_id,
            "embedding": [float(v) for v in embedding.values],
            "dim": embedding.dim,
        }

    def _synthesize(self, payload: dict) -> dict:
        trajectory, step_duration, sample_rate = _parse_trajectory(payload)
        backend = self._backend_for(sample_rate)
        waveform = backend.synthesize(trajectory, step_duration)
        return {
            "samples": [float(v) for v in waveform.samples],
            "sample_rate": waveform.sample_rate,
        }


def serve_streams(reader, writer) -> None:
    """Answer requests line by line until EOF."""
    server = LoopbackServer()
    for line in reader:
        if not line.strip():
            continue
        response = server.handle_line(line)
        writer.write(canonical_json(response) + b"\n")
        writer.flush()


def serve_socket(host: str, port: int, max_connections: int | None = None) -> None:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as listener:
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((host, port))
        listener.listen(1)
        served = 0
        while max_connections is None or served < max_connections:
            conn, _ = listener.accept()
            with conn:
                reader = conn.makefile("rb")
                writer = conn.makefile("wb")
                serve_streams(reader, writer)
            served += 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Reference decode-and-perceive protocol server")
    parser.add_argument("--socket", type=int, metavar="PORT", help="serve on a local TCP port")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--max-connections", type=int, default=None)
    args = parser.parse_args(argv)

    if args.socket is not None:
        serve_socket(args.host, args.socket, args.max_connections)
    else:
        serve_streams(sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
