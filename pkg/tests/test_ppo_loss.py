import math

import numpy as np
import pytest

from artic.errors import ConfigError
from artic.policy import MiniBatch, gaussian_log_prob, zero_policy
from artic.ppo import TrainConfig, ppo_loss, std_schedule

TOY_ARCH = dict(obs_dim=10, act_dim=13, hidden=(4,))


def batch_with_ratio(ratio, advantage, params, obs_dim=10):
    """Single-sample batch engineered so new/old likelihood ratio == ratio."""
    obs = np.zeros((1, obs_dim))
    actions = np.full((1, 13), 0.1)
    log_prob_new = gaussian_log_prob(actions, np.zeros((1, 13)), params.log_std)
    return MiniBatch(
        obs=obs,
        actions=actions,
        log_prob_old=log_prob_new - math.log(ratio),
        advantages=np.array([advantage]),
        returns=np.array([0.0]),
    )


@pytest.fixture
def toy_params():
    from artic.policy import ArchConfig

    return zero_policy(ArchConfig(**TOY_ARCH))


class TestClippedSurrogate:
    def test_identical_params_give_zero_surrogate_and_clipfrac(self, toy_params):
        batch = batch_with_ratio(1.0, 0.0, toy_params)
        components = ppo_loss(batch, toy_params, clip_eps=0.2, value_coef=0.0)
        assert components.surrogate == pytest.approx(0.0, abs=1e-15)
        assert components.clip_fraction == 0.0

    def test_positive_advantage_clips_high_ratio(self, toy_params):
        # ratio 1.5, eps 0.2, A=1 -> min(1.5, 1.2) = 1.2 -> surrogate -1.2
        batch = batch_with_ratio(1.5, 1.0, toy_params)
        components = ppo_loss(batch, toy_params, clip_eps=0.2, value_coef=0.0)
        assert components.surrogate == pytest.approx(-1.2, abs=1e-12)
        assert components.clip_fraction == 1.0

    def test_negative_advantage_clips_low_ratio(self, toy_params):
        # ratio 0.5, eps 0.2, A=-1 -> min(-0.5, -0.8) = -0.8 -> surrogate 0.8
        batch = batch_with_ratio(0.5, -1.0, toy_params)
        components = ppo_loss(batch, toy_params, clip_eps=0.2, value_coef=0.0)
        assert components.surrogate == pytest.approx(0.8, abs=1e-12)
        assert components.clip_fraction == 1.0

    def test_value_loss_scales_with_coefficient(self, toy_params):
        batch = batch_with_ratio(1.0, 0.0, toy_params)
        batch = MiniBatch(
            obs=batch.obs,
            actions=batch.actions,
            log_prob_old=batch.log_prob_old,
            advantages=batch.advantages,
            returns=np.array([2.0]),  # critic outputs 0 -> squared error 4
        )
        components = ppo_loss(batch, toy_params, clip_eps=0.2, value_coef=0.5)
        assert components.value == pytest.approx(4.0, abs=1e-12)
        assert components.total == pytest.approx(0.5 * 4.0, abs=1e-12)

    def test_entropy_term(self, toy_params):
        toy_params.log_std[:] = math.log(0.7)
        batch = batch_with_ratio(1.0, 0.0, toy_params)
        components = ppo_loss(batch, toy_params, clip_eps=0.2, value_coef=0.0, entropy_coef=0.1)
        expected_entropy = 13 * (math.log(0.7) + 0.5 + 0.5 * math.log(2 * math.pi))
        assert components.entropy == pytest.approx(expected_entropy, abs=1e-12)


class TestStdSchedule:
    def test_initial_value(self):
        assert std_schedule(0, TrainConfig()) == pytest.approx(0.7)

    def test_decay_after_thousand_episodes(self):
        # 0.7 - 10 * 0.01 = 0.60
        assert std_schedule(1000, TrainConfig()) == pytest.approx(0.60, abs=1e-12)

    def test_floor_reached_at_six_thousand_five_hundred(self):
        # 0.7 - 65 * 0.01 = 0.05, the floor
        assert std_schedule(6500, TrainConfig()) == pytest.approx(0.05, abs=1e-12)
        assert std_schedule(60000, TrainConfig()) == pytest.approx(0.05, abs=1e-12)

    def test_steps_are_quantized_by_interval(self):
        cfg = TrainConfig()
        assert std_schedule(99, cfg) == std_schedule(0, cfg)
        assert std_schedule(100, cfg) < std_schedule(99, cfg)

    def test_negative_episode_rejected(self):
        with pytest.raises(ConfigError):
            std_schedule(-1, TrainConfig())


class TestTrainConfig:
    def test_defaults_are_valid(self):
        TrainConfig().validate()

    def test_bad_gamma_rejected(self):
        with pytest.raises(ConfigError):
            TrainConfig(gamma=0.0).validate()

    def test_floor_above_init_rejected(self):
        with pytest.raises(ConfigError):
            TrainConfig(std_init=0.04).validate()
