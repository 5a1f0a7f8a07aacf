"""Protocol-v1 server around a decoder/perceiver pair.

Single-threaded request loop; run one process per training worker. Models
load lazily at the first handshake and exactly once per process; a load
failure answers the handshake with code MODEL_MISSING while keeping the
session alive. Inference errors fail only the request that caused them.
"""

from __future__ import annotations

import logging
import socket
import sys
from dataclasses import dataclass, field

import numpy as np

from .adapters import ChannelMap, Decoder, Perceiver, Segment, fake_models
from .pretrained import ModelMissing, load_pretrained
from .protocol import (
    PROTOCOL_VERSION,
    RequestError,
    canonical_json,
    error_response,
    ok_response,
    parse_request,
    parse_trajectory,
)

log = logging.getLogger("artic_bridge_server")


@dataclass
class ServerConfig:
    models: str = "pretrained"  # or "fake"
    channel_map: ChannelMap = field(default_factory=ChannelMap)
    model_settings: dict = field(default_factory=dict)
    prompts: dict = field(default_factory=dict)  # syllable text -> wav path


class ModelSession:
    """One protocol session: model handles, target cache, id watermark."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self.decoder: Decoder | None = None
        self.perceiver: Perceiver | None = None
        self.load_error: str | None = None
        self.targets: dict[str, np.ndarray] = {}
        self.text_cache: dict[str, np.ndarray] = {}
        self.last_id = 0
        self._loaded = False

    def ensure_models(self) -> None:
        """Load models exactly once per process; remember a failure."""
        if self._loaded:
            if self.load_error is not None:
                raise ModelMissing(self.load_error)
            return
        self._loaded = True
        try:
            if self.config.models == "fake":
                self.decoder, self.perceiver = fake_models()
            else:
                self.decoder, self.perceiver = load_pretrained(self.config.model_settings)
        except ModelMissing as exc:
            self.load_error = str(exc)
            raise
        log.info(
            "loaded decoder=%s perceiver=%s (embedding_dim=%d)",
            self.decoder.name, self.perceiver.name, self.perceiver.embedding_dim,
        )

    # ----- pipeline ---------------------------------------------------------

    def decode(self, frames: np.ndarray, step_duration: float, sample_rate: int) -> np.ndarray:
        features = self.config.channel_map.apply(frames)
        return np.asarray(
            self.decoder.decode(features, step_duration, sample_rate), dtype=float
        )

    def perceive(self, samples: np.ndarray, sample_rate: int) -> list[Segment]:
        return self.perceiver.perceive(samples, sample_rate)

    def last_segment_embedding(self, samples: np.ndarray, sample_rate: int):
        segments = self.perceive(samples, sample_rate)
        if not segments:
            return None, segments
        return segments[-1].embedding, segments

    def store_target(self, embedding: np.ndarray) -> str:
        target_id = f"tgt_{len(self.targets) + 1}"
        self.targets[target_id] = embedding
        return target_id


class BridgeServer:
    def __init__(self, config: ServerConfig | None = None):
        self.session = ModelSession(config or ServerConfig())

    # ----- request handling -------------------------------------------------

    def handle_line(self, line: bytes) -> dict:
        try:
            request_id, op, payload = parse_request(line, self.session.last_id)
        except RequestError as exc:
            return error_response(None, "BAD_REQUEST", str(exc))
        self.session.last_id = request_id

        handler = getattr(self, f"_op_{op}", None)
        if handler is None:
            return error_response(request_id, "UNSUPPORTED_OP", f"unknown op {op!r}")
        try:
            return ok_response(request_id, handler(payload))
        except RequestError as exc:
            return error_response(request_id, "BAD_REQUEST", str(exc))
        except ModelMissing as exc:
            return error_response(request_id, "MODEL_MISSING", str(exc))
        except _InvalidTarget as exc:
            return error_response(request_id, "INVALID_TARGET", str(exc))
        except Exception as exc:  # noqa: BLE001 - the session must survive
            log.exception("request %d (%s) failed", request_id, op)
            return error_response(request_id, "INTERNAL", f"{type(exc).__name__}: {exc}")

    def _op_handshake(self, payload: dict) -> dict:
        self.session.ensure_models()
        return {
            "backend_name": f"{self.session.decoder.name}+{self.session.perceiver.name}",
            "embedding_dim": int(self.session.perceiver.embedding_dim),
            "protocol_version": PROTOCOL_VERSION,
        }

    def _op_score(self, payload: dict) -> dict:
        self.session.ensure_models()
        frames, step_duration, sample_rate = parse_trajectory(payload)
        target = self._resolve_target(payload.get("target"))
        samples = self.session.decode(frames, step_duration, sample_rate)
        embedding, segments = self.session.last_segment_embedding(samples, sample_rate)
        result = {
            "segments": [{"start_s": s.start_s, "end_s": s.end_s} for s in segments],
        }
        if embedding is None:
            result["detected"] = False
            result["similarity"] = None
        else:
            result["detected"] = True
            result["similarity"] = _cosine(embedding, target)
        return result

    def _op_make_target(self, payload: dict) -> dict:
        self.session.ensure_models()
        source = payload.get("source")
        if not isinstance(source, dict):
            raise RequestError("payload.source must be an object")
        kind = source.get("kind")
        if kind == "trajectory":
            frames, step_duration, sample_rate = parse_trajectory(payload)
            samples = self.session.decode(frames, step_duration, sample_rate)
            embedding, _ = self.session.last_segment_embedding(samples, sample_rate)
            if embedding is None:
                raise _InvalidTarget("no syllable detected in decoded trajectory")
        elif kind == "wav":
            samples, sample_rate = _read_wav(str(source.get("path", "")))
            embedding, _ = self.session.last_segment_embedding(samples, sample_rate)
            if embedding is None:
                raise _InvalidTarget("no syllable detected in audio file")
        elif kind == "text":
            embedding = self._target_from_text(str(source.get("text", "")))
        else:
            raise RequestError(f"unsupported source kind {kind!r}")

        target_id = self.session.store_target(embedding)
        return {
            "target_id": target_id,
            "embedding": [float(v) for v in embedding],
            "dim": int(embedding.shape[0]),
        }

    def _op_synthesize(self, payload: dict) -> dict:
        self.session.ensure_models()
        frames, step_duration, sample_rate = parse_trajectory(payload)
        samples = self.session.decode(frames, step_duration, sample_rate)
        return {
            "samples": [float(v) for v in np.clip(samples, -1.0, 1.0)],
            "sample_rate": sample_rate,
        }

    # ----- helpers -----------------------------------------------------------

    def _target_from_text(self, text: str) -> np.ndarray:
        if not text:
            raise RequestError("source.text must be non-empty")
        cached = self.session.text_cache.get(text)
        if cached is not None:
            return cached
        prompt = self.session.config.prompts.get(text)
        if prompt is None:
            raise _InvalidTarget(
                f"no prompt audio configured for syllable {text!r} (add it under [prompts])"
            )
        samples, sample_rate = _read_wav(prompt)
        embedding, _ = self.session.last_segment_embedding(samples, sample_rate)
        if embedding is None:
            raise _InvalidTarget(f"no syllable detected in prompt for {text!r}")
        self.session.text_cache[text] = embedding
        return embedding

    def _resolve_target(self, ref) -> np.ndarray:
        if not isinstance(ref, dict):
            raise RequestError("payload.target must be an object")
        kind = ref.get("kind")
        if kind == "embedding":
            values = np.asarray(ref.get("values", []), dtype=float)
            if values.size != self.session.perceiver.embedding_dim:
                raise RequestError(
                    f"target embedding must have dim {self.session.perceiver.embedding_dim}"
                )
            if not np.all(np.isfinite(values)):
                raise RequestError("target embedding contains non-finite values")
            return values
        if kind == "id":
            target_id = str(ref.get("id", ""))
            values = self.session.targets.get(target_id)
            if values is None:
                raise _InvalidTarget(f"unknown target id {target_id!r}")
            return values
        raise RequestError(f"unsupported target kind {kind!r}")


class _InvalidTarget(ValueError):
    pass


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    norm = float(np.linalg.norm(a) * np.linalg.norm(b))
    if norm == 0.0:
        raise RequestError("cosine similarity against a zero vector is undefined")
    return float(np.clip(float(np.dot(a, b)) / norm, -1.0, 1.0))


def _read_wav(path: str) -> tuple[np.ndarray, int]:
    import wave

    try:
        with wave.open(path, "rb") as handle:
            if handle.getnchannels() != 1 or handle.getsampwidth() != 2:
                raise _InvalidTarget(f"{path}: expected mono 16-bit PCM")
            rate = handle.getframerate()
            raw = handle.readframes(handle.getnframes())
    except FileNotFoundError as exc:
        raise _InvalidTarget(f"audio file not found: {path}") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(float) / 32767.0
    return samples, rate


# ----- transports ------------------------------------------------------------


def serve_streams(reader, writer, config: ServerConfig | None = None) -> None:
    """Answer requests line by line until EOF."""
    server = BridgeServer(config)
    for line in reader:
        if not line.strip():
            continue
        writer.write(canonical_json(server.handle_line(line)) + b"\n")
        writer.flush()


def serve_socket(host: str, port: int, config: ServerConfig | None = None,
                 max_connections: int | None = None) -> None:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as listener:
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((host, port))
        listener.listen(1)
        served = 0
        while max_connections is None or served < max_connections:
            conn, peer = listener.accept()
            log.info("connection from %s", peer)
            with conn:
                serve_streams(conn.makefile("rb"), conn.makefile("wb"), config)
            served += 1


def serve_stdio(config: ServerConfig | None = None) -> None:
    serve_streams(sys.stdin.buffer, sys.stdout.buffer, config)
