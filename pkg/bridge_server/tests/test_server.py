import wave

import numpy as np
import pytest

from artic_bridge_server.protocol import canonical_json
from artic_bridge_server.server import BridgeServer, ServerConfig


@pytest.fixture
def server():
    return BridgeServer(ServerConfig(models="fake"))


def send(server, op, payload, request_id):
    line = canonical_json({"id": request_id, "op": op, "payload": payload})
    return server.handle_line(line)


def ramp_rows(n=15, loudness=2.0):
    rows = []
    for i in range(n):
        row = [0.0] * 13
        row[12] = min(0.5 * (i + 1), loudness)
        rows.append(row)
    return rows


def score_payload(rows, target):
    return {
        "trajectory": rows,
        "step_duration": 0.02,
        "sample_rate": 16000,
        "target": target,
    }


def unit_target(dim=16):
    values = [0.0] * dim
    values[0] = 1.0
    return {"kind": "embedding", "values": values}


class TestHandshake:
    def test_reports_version_one_and_dim(self, server):
        response = send(server, "handshake", {}, 1)
        assert response["ok"] is True
        assert response["payload"]["protocol_version"] == 1
        assert response["payload"]["embedding_dim"] == 16
        assert "fake-decoder" in response["payload"]["backend_name"]

    def test_missing_models_reported_at_handshake(self, monkeypatch):
        monkeypatch.delenv("ARTIC_BRIDGE_SPARC", raising=False)
        monkeypatch.delenv("ARTIC_BRIDGE_SYLBER", raising=False)
        monkeypatch.delenv("ARTIC_BRIDGE_FACTORY", raising=False)
        server = BridgeServer(ServerConfig(models="pretrained"))
        response = send(server, "handshake", {}, 1)
        assert response["ok"] is False
        assert response["error"]["code"] == "MODEL_MISSING"
        # session survives: the failure is reported again, not a crash
        again = send(server, "handshake", {}, 2)
        assert again["error"]["code"] == "MODEL_MISSING"

    def test_factory_env_is_honored(self, monkeypatch):
        monkeypatch.setenv(
            "ARTIC_BRIDGE_FACTORY", "artic_bridge_server.adapters:fake_models"
        )
        server = BridgeServer(ServerConfig(models="pretrained"))
        response = send(server, "handshake", {}, 1)
        assert response["ok"] is True
        assert response["payload"]["embedding_dim"] == 16


class TestScore:
    def test_silence_scores_detected_false(self, server):
        send(server, "handshake", {}, 1)
        rows = [[0.0] * 13 for _ in range(10)]
        response = send(server, "score", score_payload(rows, unit_target()), 2)
        assert response["ok"] is True
        assert response["payload"]["detected"] is False
        assert response["payload"]["similarity"] is None
        assert response["payload"]["segments"] == []

    def test_loud_ramp_is_detected(self, server):
        send(server, "handshake", {}, 1)
        response = send(server, "score", score_payload(ramp_rows(), unit_target()), 2)
        assert response["ok"] is True
        assert response["payload"]["detected"] is True
        assert -1.0 <= response["payload"]["similarity"] <= 1.0
        assert len(response["payload"]["segments"]) >= 1

    def test_repeated_scoring_is_byte_idempotent(self, server):
        send(server, "handshake", {}, 1)
        payload = score_payload(ramp_rows(), unit_target())
        first = send(server, "score", payload, 2)
        second = send(server, "score", payload, 3)
        assert canonical_json(first["payload"]) == canonical_json(second["payload"])

    def test_wrong_target_dim_rejected(self, server):
        send(server, "handshake", {}, 1)
        response = send(server, "score", score_payload(ramp_rows(), unit_target(dim=5)), 2)
        assert response["ok"] is False
        assert response["error"]["code"] == "BAD_REQUEST"

    def test_inference_error_does_not_kill_session(self, server):
        send(server, "handshake", {}, 1)

        def explode(features, step_duration, sample_rate):
            raise RuntimeError("decoder crashed")

        server.session.decoder.decode = explode
        response = send(server, "score", score_payload(ramp_rows(), unit_target()), 2)
        assert response["ok"] is False
        assert response["error"]["code"] == "INTERNAL"
        # session still answers (handshake path does not touch the broken decode)
        alive = send(server, "handshake", {}, 3)
        assert alive["ok"] is True


class TestMakeTarget:
    def test_trajectory_target_round_trip(self, server):
        send(server, "handshake", {}, 1)
        payload = {
            "source": {"kind": "trajectory"},
            "trajectory": ramp_rows(),
            "step_duration": 0.02,
            "sample_rate": 16000,
        }
        created = send(server, "make_target", payload, 2)
        assert created["ok"] is True
        target_id = created["payload"]["target_id"]
        assert created["payload"]["dim"] == 16

        scored = send(
            server, "score",
            score_payload(ramp_rows(), {"kind": "id", "id": target_id}), 3,
        )
        assert scored["ok"] is True
        assert scored["payload"]["similarity"] == pytest.approx(1.0, abs=1e-9)

    def test_text_without_prompt_is_invalid_target(self, server):
        send(server, "handshake", {}, 1)
        response = send(server, "make_target", {"source": {"kind": "text", "text": "please"}}, 2)
        assert response["ok"] is False
        assert response["error"]["code"] == "INVALID_TARGET"

    def test_text_prompt_cache_returns_identical_bytes(self, tmp_path):
        prompt = tmp_path / "please.wav"
        t = np.arange(16000) / 16000.0
        samples = (0.5 * np.sin(2 * np.pi * 300 * t) * 32767).astype("<i2")
        with wave.open(str(prompt), "wb") as handle:
            handle.setnchannels(1)
            handle.setsampwidth(2)
            handle.setframerate(16000)
            handle.writeframes(samples.tobytes())

        server = BridgeServer(ServerConfig(models="fake", prompts={"please": str(prompt)}))
        send(server, "handshake", {}, 1)
        first = send(server, "make_target", {"source": {"kind": "text", "text": "please"}}, 2)
        second = send(server, "make_target", {"source": {"kind": "text", "text": "please"}}, 3)
        assert first["ok"] and second["ok"]
        assert (
            canonical_json({"e": first["payload"]["embedding"]})
            == canonical_json({"e": second["payload"]["embedding"]})
        )

    def test_silent_trajectory_is_invalid_target(self, server):
        send(server, "handshake", {}, 1)
        payload = {
            "source": {"kind": "trajectory"},
            "trajectory": [[0.0] * 13 for _ in range(10)],
            "step_duration": 0.02,
            "sample_rate": 16000,
        }
        response = send(server, "make_target", payload, 2)
        assert response["ok"] is False
        assert response["error"]["code"] == "INVALID_TARGET"


class TestProtocolDiscipline:
    def test_malformed_json_answered_with_null_id(self, server):
        response = server.handle_line(b"{broken")
        assert response["ok"] is False
        assert response["id"] is None
        assert response["error"]["code"] == "BAD_REQUEST"

    def test_stale_id_rejected(self, server):
        assert send(server, "handshake", {}, 5)["ok"] is True
        stale = send(server, "handshake", {}, 5)
        assert stale["ok"] is False and stale["error"]["code"] == "BAD_REQUEST"

    def test_unknown_op_rejected(self, server):
        response = send(server, "warble", {}, 1)
        assert response["ok"] is False
        assert response["error"]["code"] == "UNSUPPORTED_OP"

    def test_synthesize_returns_clipped_samples(self, server):
        send(server, "handshake", {}, 1)
        payload = {"trajectory": ramp_rows(5), "step_duration": 0.02, "sample_rate": 16000}
        response = send(server, "synthesize", payload, 2)
        assert response["ok"] is True
        samples = response["payload"]["samples"]
        assert len(samples) == 5 * 320
        assert all(-1.0 <= v <= 1.0 for v in samples)

    def test_models_loaded_once_per_process(self, server):
        send(server, "handshake", {}, 1)
        decoder_a = server.session.decoder
        send(server, "handshake", {}, 2)
        assert server.session.decoder is decoder_a
