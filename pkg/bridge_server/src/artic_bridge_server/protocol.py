"""Wire-level helpers for protocol v1 (newline-delimited JSON).

Self-contained on purpose: the server speaks the protocol over bytes and must
not depend on any particular client implementation.
"""

from __future__ import annotations

import json

import numpy as np

PROTOCOL_VERSION = 1
FRAME_COLUMNS = 13  # six (x, y) articulator pairs, then loudness


class RequestError(ValueError):
    """Maps to an ok=false response with code BAD_REQUEST."""


def canonical_json(obj) -> bytes:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True, allow_nan=False).encode()


def error_response(request_id, code: str, message: str) -> dict:
    return {"id": request_id, "ok": False, "error": {"code": code, "message": message}}


def ok_response(request_id, payload: dict) -> dict:
    return {"id": request_id, "ok": True, "payload": payload}


def parse_request(line: bytes, last_id: int) -> tuple[int, str, dict]:
    """Validate framing and ids; raises RequestError with a client-safe message."""
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RequestError(f"malformed JSON at position {exc.pos}: {exc.msg}") from exc
    if not isinstance(request, dict):
        raise RequestError("request must be a JSON object")
    request_id = request.get("id")
    if not isinstance(request_id, int) or isinstance(request_id, bool):
        raise RequestError("request id must be an integer")
    if request_id <= last_id:
        raise RequestError(f"request id must be greater than {last_id}") from None
    op = request.get("op")
    if not isinstance(op, str):
        raise RequestError("op must be a string")
    payload = request.get("payload")
    if not isinstance(payload, dict):
        raise RequestError("payload must be a JSON object")
    return request_id, op, payload


def parse_trajectory(payload: dict) -> tuple[np.ndarray, float, int]:
    """Extract (frames, step_duration, sample_rate) from a score-like payload."""
    rows = payload.get("trajectory")
    if not isinstance(rows, list) or not rows:
        raise RequestError("payload.trajectory must be a non-empty list of rows")
    try:
        frames = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise RequestError(f"trajectory rows are not numeric: {exc}") from exc
    if frames.ndim != 2 or frames.shape[1] != FRAME_COLUMNS:
        raise RequestError(f"trajectory rows must have {FRAME_COLUMNS} columns")
    if not np.all(np.isfinite(frames)):
        raise RequestError("trajectory contains non-finite values")
    step_duration = payload.get("step_duration", 0.02)
    sample_rate = payload.get("sample_rate", 16000)
    if not isinstance(step_duration, (int, float)) or step_duration <= 0:
        raise RequestError("step_duration must be a positive number")
    if not isinstance(sample_rate, int) or sample_rate <= 0:
        raise RequestError("sample_rate must be a positive integer")
    return frames, float(step_duration), sample_rate
