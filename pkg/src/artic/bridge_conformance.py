"""Declarative conformance checks any protocol-v1 server must pass.

The golden file is JSONL; each entry describes one request (or a raw byte
line) and the expectations on its response. The runner drives a raw line
transport so it can exercise malformed input and id handling that the
higher-level client would never produce.

Entry fields:
    name                  unique label
    request               {"op": ..., "payload": {...}}; id assigned by runner
    raw_request           literal line to send instead (malformed-input cases)
    repeat                send the request N times (default 1)
    expect.ok             required ok flag
    expect.error_code     required error.code when ok is false
    expect.payload_keys   keys that must be present in the payload
    expect.payload_match  exact-equality subset of the payload
    expect.identical_payload_bytes   canonical payload bytes equal across repeats
    expect.embedding_dim_matches_handshake   payload["dim"] == handshake dim
    expect.null_id        response id must be null

Payload templating: the string "$unit_embedding" expands to a target ref
{"kind": "embedding", "values": [1, 0, ...]} sized to the handshake
embedding_dim; "$saved.<name>.<key>" references a payload value saved by an
earlier entry via "save_payload_as": "<name>".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .bridge import canonical_json
from .errors import ProtocolError

GOLDEN_FILE = Path(__file__).parent / "data" / "protocol_golden.jsonl"


@dataclass
class ConformanceResult:
    name: str
    passed: bool
    detail: str = ""


def load_golden(path=None) -> list[dict]:
    path = Path(path) if path is not None else GOLDEN_FILE
    entries = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(json.loads(line))
    return entries


class _Expander:
    def __init__(self):
        self.handshake_dim: int | None = None
        self.saved: dict[str, dict] = {}

    def expand(self, value):
        if isinstance(value, dict):
            return {k: self.expand(v) for k, v in value.items()}
        if isinstance(value, list):
            return [self.expand(v) for v in value]
        if value == "$unit_embedding":
            if self.handshake_dim is None:
                raise ProtocolError("$unit_embedding used before a handshake entry")
            values = [0.0] * self.handshake_dim
            values[0] = 1.0
            return {"kind": "embedding", "values": values}
        if isinstance(value, str) and value.startswith("$saved."):
            _, name, key = value.split(".", 2)
            return self.saved[name][key]
        return value


def run_conformance(transport, golden_path=None) -> list[ConformanceResult]:
    """Run every golden entry against a live line transport.

    ``transport`` needs send_line(bytes) and recv_line(timeout) -> bytes;
    both bridge transports qualify, as does anything wrapping a spawned
    server's stdio.
    """
    entries = load_golden(golden_path)
    expander = _Expander()
    results: list[ConformanceResult] = []
    next_id = 1

    for entry in entries:
        name = entry["name"]
        expect = entry.get("expect", {})
        repeat = int(entry.get("repeat", 1))
        payload_bytes: list[bytes] = []
        failure = ""

        for _ in range(repeat):
            try:
                if "raw_request" in entry:
                    transport.send_line(entry["raw_request"].encode())
                else:
                    request = {
                        "id": next_id,
                        "op": entry["request"]["op"],
                        "payload": expander.expand(entry["request"].get("payload", {})),
                    }
                    next_id += 1
                    transport.send_line(canonical_json(request))
                response = json.loads(transport.recv_line(30.0))
            except Exception as exc:  # noqa: BLE001 - report, don't crash the suite
                failure = f"no parseable response: {exc}"
                break

            failure = _check_response(entry, expect, response, expander)
            if failure:
                break
            if response.get("ok"):
                payload_bytes.append(canonical_json(response["payload"]))
                if "save_payload_as" in entry:
                    expander.saved[entry["save_payload_as"]] = response["payload"]
                op = entry.get("request", {}).get("op")
                if op == "handshake" and "embedding_dim" in response["payload"]:
                    expander.handshake_dim = response["payload"]["embedding_dim"]

        if not failure and expect.get("identical_payload_bytes"):
            if len(set(payload_bytes)) != 1:
                failure = f"payload bytes differ across {repeat} sends"

        results.append(ConformanceResult(name, not failure, failure))
    return results


def _check_response(entry, expect, response, expander) -> str:
    if not isinstance(response, dict):
        return f"response is not an object: {response!r}"
    if expect.get("null_id"):
        if response.get("id") is not None:
            return f"expected null id, got {response.get('id')!r}"
    if "ok" in expect and response.get("ok") != expect["ok"]:
        return f"ok={response.get('ok')!r}, expected {expect['ok']!r} ({response.get('error')})"
    if "error_code" in expect:
        code = (response.get("error") or {}).get("code")
        if code != expect["error_code"]:
            return f"error code {code!r}, expected {expect['error_code']!r}"
    payload = response.get("payload") or {}
    for key in expect.get("payload_keys", []):
        if key not in payload:
            return f"payload missing key {key!r}"
    for key, want in expect.get("payload_match", {}).items():
        if payload.get(key) != want:
            return f"payload[{key!r}] = {payload.get(key)!r}, expected {want!r}"
    if expect.get("embedding_dim_matches_handshake"):
        if expander.handshake_dim is None:
            return "no handshake dim recorded before dim check"
        if payload.get("dim") != expander.handshake_dim:
            return f"dim {payload.get('dim')!r} != handshake dim {expander.handshake_dim}"
    return ""


def assert_conformant(transport, golden_path=None) -> None:
    """Raise AssertionError listing every failed golden entry."""
    results = run_conformance(transport, golden_path)
    failures = [r for r in results if not r.passed]
    if failures:
        lines = "\n".join(f"  {r.name}: {r.detail}" for r in failures)
        raise AssertionError(f"{len(failures)} conformance failure(s):\n{lines}")
