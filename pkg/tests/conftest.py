import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from artic.backend import ReferenceBackend, SyllableEmbedding
from artic.env import EpisodeConfig, RewardSignal

settings.register_profile(
    "artic",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("artic")


@pytest.fixture
def backend():
    return ReferenceBackend()


@pytest.fixture
def unit_target():
    values = np.zeros(40)
    values[0] = 1.0
    return SyllableEmbedding(values)


@pytest.fixture
def episode_config(unit_target):
    return EpisodeConfig(target=unit_target, horizon=50, target_id="unit")


class StubBackend:
    """Constant-scoring backend for tests that only exercise the dynamics."""

    def __init__(self, signal=None):
        self.signal = signal or RewardSignal.miss()
        self.calls = 0

    from artic.backend import BackendDescriptor as _BD

    descriptor = _BD("stub", 40, "reference")

    def score(self, trajectory, target, step_duration=0.02):
        self.calls += 1
        return self.signal

    def make_target(self, source, step_duration=0.02):
        raise NotImplementedError


@pytest.fixture
def stub_backend():
    return StubBackend()
