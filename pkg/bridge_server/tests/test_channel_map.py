import numpy as np
import pytest

from artic_bridge_server.adapters import PROTOCOL_ARTICULATORS, ChannelMap


def test_identity_map_keeps_positions_and_scales_loudness():
    rows = np.arange(13, dtype=float)[None, :]
    mapped = ChannelMap().apply(rows)
    assert np.array_equal(mapped[0, :12], rows[0, :12])
    assert mapped[0, 12] == pytest.approx(12.0 / 3.0)


def test_permutation_moves_articulator_pairs_together():
    # decoder wants lips first: UL, LL, then tongue and jaw channels
    channel_map = ChannelMap(articulator_order=("UL", "LL", "TD", "TB", "TT", "LI"))
    rows = np.arange(13, dtype=float)[None, :]
    mapped = channel_map.apply(rows)
    # UL occupies protocol columns 8, 9; LL 10, 11; TD 0, 1
    assert list(mapped[0, 0:2]) == [8.0, 9.0]
    assert list(mapped[0, 2:4]) == [10.0, 11.0]
    assert list(mapped[0, 4:6]) == [0.0, 1.0]


def test_permutation_is_a_bijection_over_positions():
    channel_map = ChannelMap(articulator_order=("LL", "UL", "LI", "TT", "TB", "TD"))
    perm = channel_map.column_permutation()
    assert sorted(perm) == list(range(12))


def test_loudness_affine_map_is_config_overridable():
    channel_map = ChannelMap(loudness_scale=0.5, loudness_offset=-1.0)
    rows = np.zeros((2, 13))
    rows[:, 12] = [3.0, -3.0]
    mapped = channel_map.apply(rows)
    assert mapped[0, 12] == pytest.approx(0.5)
    assert mapped[1, 12] == pytest.approx(-2.5)


def test_invalid_order_rejected():
    with pytest.raises(ValueError):
        ChannelMap(articulator_order=("TD", "TD", "TT", "LI", "UL", "LL")).validate()
    with pytest.raises(ValueError):
        ChannelMap(articulator_order=("TD",)).validate()


def test_default_order_matches_protocol():
    assert ChannelMap().articulator_order == PROTOCOL_ARTICULATORS
