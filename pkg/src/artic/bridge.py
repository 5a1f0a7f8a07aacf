"""Client side of the decode-and-perceive wire protocol (version 1).

Transport is newline-delimited JSON over either a spawned subprocess's
standard streams or a local TCP socket ("host:port"). One request is in
flight at a time; request ids increase strictly and every response must echo
the id of the request it answers. See PROTOCOL.md for the full message
catalog with byte-level examples.
"""

from __future__ import annotations

import json
import select
import shlex
import socket
import subprocess
import time

import numpy as np

from .backend import BackendDescriptor, SyllableEmbedding
from .env import RewardSignal
from .errors import (
    BackendError,
    BridgeConnectionError,
    BridgeRemoteError,
    IncompatibleProtocol,
    ProtocolError,
)
from .frames import Trajectory

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT_S = 30.0


def canonical_json(obj) -> bytes:
    """Stable serialization shared by client and servers (sorted keys)."""
    return json.dumps(obj, separators=(",", ":"), sort_keys=True, allow_nan=False).encode()


class _SubprocessTransport:
    """Line transport over a spawned server's stdin/stdout."""

    def __init__(self, command: list[str]):
        try:
            self._proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            raise BridgeConnectionError(f"failed to spawn {command!r}: {exc}") from exc
        self._buffer = b""

    def send_line(self, line: bytes) -> None:
        try:
            self._proc.stdin.write(line + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendError(f"bridge transport failure: {exc}") from exc

    def recv_line(self, timeout: float) -> bytes:
        deadline = time.monotonic() + timeout
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BackendError(f"bridge request timed out after {timeout} s")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = self._proc.stdout.read1(65536)
            if not chunk:
                raise BackendError("bridge server closed its output stream")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def close(self) -> None:
        for stream in (self._proc.stdin, self._proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        self._proc.terminate()
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()


class _SocketTransport:
    """Line transport over a local TCP connection."""

    def __init__(self, host: str, port: int, timeout: float):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise BridgeConnectionError(f"failed to connect to {host}:{port}: {exc}") from exc
        self._buffer = b""

    def send_line(self, line: bytes) -> None:
        try:
            self._sock.sendall(line + b"\n")
        except OSError as exc:
            raise BackendError(f"bridge transport failure: {exc}") from exc

    def recv_line(self, timeout: float) -> bytes:
        self._sock.settimeout(timeout)
        while b"\n" not in self._buffer:
            try:
                chunk = self._sock.recv(65536)
            except socket.timeout as exc:
                raise BackendError(f"bridge request timed out after {timeout} s") from exc
            except OSError as exc:
                raise BackendError(f"bridge transport failure: {exc}") from exc
            if not chunk:
                raise BackendError("bridge server closed the connection")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def _parse_endpoint(endpoint):
    """A list is a command; 'host:port' is a socket; any other string is a command."""
    if isinstance(endpoint, (list, tuple)):
        return "command", [str(part) for part in endpoint]
    text = str(endpoint).strip()
    host, sep, port = text.rpartition(":")
    if sep and host and " " not in text and port.isdigit():
        return "socket", (host, int(port))
    return "command", shlex.split(text)


class BridgeSession:
    """One protocol session: strictly increasing ids, one request in flight."""

    def __init__(self, transport, timeout: float = DEFAULT_TIMEOUT_S):
        self._transport = transport
        self._timeout = timeout
        self._next_id = 1
        self._bytes_received = 0
        self.descriptor: BackendDescriptor | None = None
        self._handshake()

    def _handshake(self) -> None:
        try:
            payload = self.request("handshake", {})
        except BackendError as exc:
            raise BridgeConnectionError(f"handshake failed: {exc}") from exc
        version = payload.get("protocol_version")
        if version != PROTOCOL_VERSION:
            raise IncompatibleProtocol(
                f"server speaks protocol version {version!r}, need {PROTOCOL_VERSION}"
            )
        dim = payload.get("embedding_dim")
        if not isinstance(dim, int) or dim < 1:
            raise ProtocolError(f"handshake reported invalid embedding_dim: {dim!r}")
        self.descriptor = BackendDescriptor(
            name=str(payload.get("backend_name", "bridge")),
            embedding_dim=dim,
            kind="bridge",
        )

    @property
    def embedding_dim(self) -> int:
        return self.descriptor.embedding_dim if self.descriptor else 0

    def request(self, op: str, payload: dict) -> dict:
        """Send one request and return the response payload (ok=true)."""
        request_id = self._next_id
        self._next_id += 1
        self._transport.send_line(canonical_json({"id": request_id, "op": op, "payload": payload}))

        line = self._transport.recv_line(self._timeout)
        line_offset = self._bytes_received
        self._bytes_received += len(line) + 1
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(
                f"malformed JSON from server at byte {line_offset + exc.pos}: {exc.msg}"
            ) from exc
        if not isinstance(response, dict):
            raise ProtocolError(f"expected a JSON object response, got {type(response).__name__}")
        if response.get("id") != request_id:
            raise ProtocolError(
                f"out-of-order response id {response.get('id')!r}, expected {request_id}"
            )
        if response.get("ok") is not True:
            error = response.get("error") or {}
            raise BridgeRemoteError(
                str(error.get("code", "UNKNOWN")), str(error.get("message", "no message"))
            )
        payload_out = response.get("payload")
        if not isinstance(payload_out, dict):
            raise ProtocolError("ok response missing payload object")
        return payload_out

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect(endpoint, timeout: float = DEFAULT_TIMEOUT_S) -> BridgeSession:
    """Open a session to a spawnable command or a host:port socket address."""
    kind, parsed = _parse_endpoint(endpoint)
    if kind == "command":
        transport = _SubprocessTransport(parsed)
    else:
        transport = _SocketTransport(parsed[0], parsed[1], timeout)
    return BridgeSession(transport, timeout)


def _trajectory_payload(trajectory: Trajectory, step_duration: float, sample_rate: int) -> dict:
    frames = np.asarray(trajectory.frames, dtype=float)
    if not np.all(np.isfinite(frames)):
        raise BackendError("trajectory contains non-finite values")
    return {
        "trajectory": [[float(v) for v in row] for row in frames],
        "step_duration": float(step_duration),
        "sample_rate": int(sample_rate),
    }


def score_remote(
    session: BridgeSession,
    trajectory: Trajectory,
    target: SyllableEmbedding,
    step_duration: float = 0.02,
    sample_rate: int = 16000,
) -> RewardSignal:
    """Remote score with the same semantics as the in-process backend."""
    payload = _trajectory_payload(trajectory, step_duration, sample_rate)
    payload["target"] = {"kind": "embedding", "values": [float(v) for v in target.values]}
    result = session.request("score", payload)
    detected = bool(result.get("detected"))
    if not detected:
        return RewardSignal.miss()
    similarity = float(result["similarity"])
    if not -1.0 <= similarity <= 1.0:
        raise ProtocolError(f"similarity {similarity} outside [-1, 1]")
    return RewardSignal(value=similarity, detected=True, similarity=similarity)


class BridgeBackend:
    """AcousticBackend adapter over a live bridge session."""

    def __init__(self, session: BridgeSession, sample_rate: int = 16000):
        self._session = session
        self.sample_rate = sample_rate

    @property
    def descriptor(self) -> BackendDescriptor:
        return self._session.descriptor

    def score(self, trajectory, target, step_duration: float = 0.02) -> RewardSignal:
        return score_remote(self._session, trajectory, target, step_duration, self.sample_rate)

    def make_target(self, source, step_duration: float = 0.02) -> SyllableEmbedding:
        if isinstance(source, Trajectory):
            payload = _trajectory_payload(source, step_duration, self.sample_rate)
            payload["source"] = {"kind": "trajectory"}
        else:
            payload = {"source": {"kind": "wav", "path": str(source)}}
        result = self._session.request("make_target", payload)
        return self._embedding_from(result)

    def make_target_text(self, syllable: str) -> SyllableEmbedding:
        result = self._session.request("make_target", {"source": {"kind": "text", "text": syllable}})
        return self._embedding_from(result)

    def _embedding_from(self, result: dict) -> SyllableEmbedding:
        values = np.asarray(result.get("embedding", []), dtype=float)
        if values.size != self._session.embedding_dim:
            raise ProtocolError(
                f"embedding dim {values.size} != handshake dim {self._session.embedding_dim}"
            )
        return SyllableEmbedding(values)

    def synthesize_samples(self, trajectory, step_duration: float = 0.02):
        payload = _trajectory_payload(trajectory, step_duration, self.sample_rate)
        result = self._session.request("synthesize", payload)
        return np.asarray(result["samples"], dtype=float), int(result["sample_rate"])

    def close(self) -> None:
        self._session.close()
