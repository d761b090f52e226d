import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vrmcast.core_model import UserDemand, VideoConfig
from vrmcast.partition import compute_partition, partition_violations, subset_order, tiles_for_fov
from vrmcast.selfcheck import EXAMPLE1_GROUPS

from conftest import random_demands
from oracles import brute_partition, sampled_fov_tiles


def test_example_partition(example1):
    part = example1.partition
    assert {s: set(t) for s, t in part.groups.items()} == EXAMPLE1_GROUPS
    assert part.index_set == [(1,), (2,), (3,), (1, 2), (2, 3)]
    assert (1, 3) not in part.groups and (1, 2, 3) not in part.groups


def test_single_user():
    part = compute_partition([UserDemand(1, frozenset({(1, 1)}), 1)])
    assert part.groups == {(1,): frozenset({(1, 1)})}


def test_identical_fovs_share_one_group():
    g = frozenset({(2, 2), (3, 3)})
    part = compute_partition([UserDemand(1, g, 1), UserDemand(2, g, 1)])
    assert part.groups == {(1, 2): g}


def test_random_instances_match_owner_set_oracle():
    rng = np.random.default_rng(5)
    for _ in range(200):
        K = int(rng.integers(1, 6))
        demands = random_demands(rng, K, int(rng.integers(1, 9)), int(rng.integers(1, 9)))
        part = compute_partition(demands)
        assert {s: set(t) for s, t in part.groups.items()} == brute_partition(demands)
        assert partition_violations(part, demands) == []
        assert sum(len(t) for t in part.groups.values()) == len(set().union(*(d.tiles for d in demands)))


def test_violations_detect_misplaced_tile(example1):
    groups = dict(example1.partition.groups)
    groups[(1,)] = groups[(1,)] | {(2, 4)}
    from vrmcast.partition import Partition

    msgs = partition_violations(Partition(groups), example1.demands)
    assert any("overlaps" in m or "owned by" in m for m in msgs)


def test_index_set_order():
    assert sorted([(1, 2), (3,), (1,), (2, 3)], key=subset_order) == [(1,), (3,), (1, 2), (2, 3)]


# FoV mapping; frozen outputs of the sampled-lattice oracle


def test_fov_equatorial_block():
    tiles = tiles_for_fov((0.0, 180.0), (100, 100), 10, VideoConfig())
    assert len(tiles) == 144
    assert {m for m, _ in tiles} == set(range(4, 16))
    assert {n for _, n in tiles} == set(range(13, 25))
    assert tiles == sampled_fov_tiles((0, 180), (100, 100), 10, 18, 36)


def test_fov_wraps_at_seam():
    tiles = tiles_for_fov((0.0, 0.0), (100, 100), 10, VideoConfig())
    assert len(tiles) == 144
    assert {n for _, n in tiles} == set(range(1, 7)) | set(range(31, 37))
    assert tiles == sampled_fov_tiles((0, 0), (100, 100), 10, 18, 36)


def test_fov_single_tile():
    assert tiles_for_fov((85.0, 5.0), (10, 10), 0, VideoConfig()) == {(1, 1)}
    assert tiles_for_fov((5.0, 5.0), (10, 10), 0, VideoConfig()) == {(9, 1)}


def test_fov_polar_cap_takes_all_longitudes():
    tiles = tiles_for_fov((80.0, 30.0), (100, 40), 0, VideoConfig())
    row1 = {n for m, n in tiles if m == 1}
    assert row1 == set(range(1, 37))
    # below the cap the ordinary rectangle rule applies
    lower = sampled_fov_tiles((80, 30), (100, 40), 0, 18, 36)
    assert {t for t in tiles if t[0] > 1} == {t for t in lower if t[0] > 1}


def test_fov_rejects_oversized():
    with pytest.raises(ValueError):
        tiles_for_fov((0, 0), (350, 100), 10, VideoConfig())
    with pytest.raises(ValueError):
        tiles_for_fov((0, 0), (100, 170), 10, VideoConfig())
    with pytest.raises(ValueError):
        tiles_for_fov((0, 0), (-1, 10), 0, VideoConfig())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 35), st.floats(-30, 30))
def test_fov_size_invariant_under_tile_shifts(k, lat):
    v = VideoConfig()
    a = tiles_for_fov((lat, 37.0), (100, 100), 10, v)
    b = tiles_for_fov((lat, 37.0 + 10.0 * k), (100, 100), 10, v)
    assert len(a) == len(b)


@settings(max_examples=40, deadline=None)
@given(st.floats(-40, 40), st.floats(0, 360), st.floats(5, 120), st.floats(5, 80))
def test_fov_matches_lattice_oracle(lat, lon, w, h):
    # lattice spacing 0.25 deg: compare away from edges that fall between lattice points
    lat, lon, w, h = round(lat), round(lon), round(w), round(h)
    v = VideoConfig()
    assert tiles_for_fov((lat, lon), (w, h), 0, v) == sampled_fov_tiles((lat, lon), (w, h), 0, 18, 36)
