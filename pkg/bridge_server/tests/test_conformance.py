"""Shared golden-file conformance: the same suite the loopback server passes.

The checker and fixtures ship with the trainer package (artic); only the wire
traffic couples the two processes.
"""

import sys

import pytest

artic_bridge = pytest.importorskip("artic.bridge")
artic_conformance = pytest.importorskip("artic.bridge_conformance")

SERVER_CMD = [sys.executable, "-m", "artic_bridge_server", "--models", "fake"]


def test_fake_model_server_passes_golden_suite():
    transport = artic_bridge._SubprocessTransport(SERVER_CMD)
    try:
        artic_conformance.assert_conformant(transport)
    finally:
        transport.close()


def test_client_session_handshake_against_server():
    with artic_bridge.connect(SERVER_CMD) as session:
        assert session.descriptor.embedding_dim == 16
        assert session.descriptor.kind == "bridge"


def test_client_scores_silence_as_miss():
    import numpy as np
    from artic.backend import SyllableEmbedding
    from artic.frames import Trajectory

    with artic_bridge.connect(SERVER_CMD) as session:
        trajectory = Trajectory.from_frames(np.zeros((10, 13)))
        target = SyllableEmbedding(np.eye(16)[0])
        signal = artic_bridge.score_remote(session, trajectory, target)
        assert signal.value == -1.0 and not signal.detected
