import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vrmcast.core_model import ChannelModel, Instance, SystemParams, UserDemand, VideoConfig
from vrmcast.planner_no_transcode import solve_no_transcode
from vrmcast.planner_transcode_dc import (
    DCOptions, SelectionY, dc_iterate, penalized_objective, penalty, random_feasible_y, round_selection,
    selection_from_levels, selection_pairs, solve_fixed_selection, solve_transcode_dc, transcoding_energy,
)
from vrmcast.selfcheck import example1_instance

from frozen import EXHAUSTIVE_FROZEN
from oracles import exhaustive_y, small_dc_instance



def test_penalty_values():
    sel = SelectionY([((1,), 1)], np.array([[0.0, 1.0, 0.0]]))
    assert penalty(sel) == 0.0
    sel.y[0] = [0.5, 0.5, 0.0]
    assert penalty(sel) == 0.5
    sel.y[0] = [0.5, 0.0, 0.0]
    assert penalty(sel) == 0.25


def test_penalty_termwise_oracle():
    rng = np.random.default_rng(0)
    y = rng.uniform(size=(7, 4))
    ref = sum(v * (1 - v) for v in y.ravel())
    assert penalty(SelectionY([((1,), 1)] * 7, y)) == pytest.approx(ref, rel=1e-12)


def test_random_feasible_y_deterministic_at_top_level():
    inst = example1_instance(qualities=(3, 3, 3))
    sel = random_feasible_y(inst, np.random.default_rng(0))
    assert np.all(sel.y[:, -1] == 1.0) and penalty(sel) == 0 and sel.violations(inst) == []


def test_random_feasible_y_frequency():
    inst = Instance(VideoConfig(2, 2, (1, 2, 3, 4, 5)), (UserDemand(1, frozenset({(1, 1)}), 1),),
                    ChannelModel(((1.0,),), ((1.0,),)), SystemParams(transcode_energy=(0.0,)))
    rng = np.random.default_rng(1)
    n = 10000
    counts = np.zeros(5)
    for _ in range(n):
        counts[random_feasible_y(inst, rng).levels()[((1,), 1)] - 1] += 1
    sigma = np.sqrt(n * 0.2 * 0.8)
    assert np.all(np.abs(counts - 0.2 * n) <= 3 * sigma)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3)))
def test_random_feasible_y_always_valid(seed, qs):
    inst = example1_instance(qualities=qs)
    sel = random_feasible_y(inst, np.random.default_rng(seed))
    assert sel.binary and sel.violations(inst) == [] and penalty(sel) == 0.0


def test_transcoding_energy_formula():
    inst = example1_instance(qualities=(1, 2, 2))
    pairs = selection_pairs(inst)
    levels = {p: inst.demands[p[1] - 1].quality for p in pairs}
    assert transcoding_energy(inst, selection_from_levels(inst, levels)) == 0.0
    levels[((1,), 1)] = 3  # 4 tiles, two steps
    levels[((1, 2), 1)] = 2  # 2 tiles, one step
    assert transcoding_energy(inst, selection_from_levels(inst, levels)) == pytest.approx(10 * 1e-6, rel=1e-12)


def test_uniform_requirements_no_transcoding(example1):
    sol = solve_transcode_dc(example1, 0, DCOptions(restarts=3))
    assert sol.ok and sol.transcoding_energy == 0.0
    assert all(l == 2 for l in sol.selection.levels().values())
    assert sol.objective == pytest.approx(solve_no_transcode(example1).energy, rel=1e-6)


def test_fixed_point_from_optimal_binary():
    inst = small_dc_instance(3)
    best, arg = EXHAUSTIVE_FROZEN[3]
    sel = selection_from_levels(inst, dict(zip(selection_pairs(inst), arg)))
    anchor = solve_fixed_selection(inst, sel).objective
    _, nxt, obj, rep = dc_iterate(inst, sel, 10 * anchor)
    assert rep.ok
    assert np.allclose(nxt.y, sel.y, atol=1e-6)


def test_step_from_top_levels_descends():
    inst = small_dc_instance(0)
    L = inst.video.levels
    sel = selection_from_levels(inst, {p: L for p in selection_pairs(inst)})
    cur = solve_fixed_selection(inst, sel)
    rho = 0.1 * cur.objective
    alloc, nxt, obj, rep = dc_iterate(inst, sel, rho)
    assert rep.ok
    assert obj <= penalized_objective(inst, cur.allocation, sel, rho) + 1e-9 * abs(obj)


def test_penalty_nonincreasing_for_large_rho():
    inst = small_dc_instance(7)
    sel = random_feasible_y(inst, np.random.default_rng(4))
    rho = 10 * solve_fixed_selection(inst, sel).objective
    pens = [penalty(sel)]
    for _ in range(6):
        _, sel, _, rep = dc_iterate(inst, sel, rho)
        assert rep.ok
        pens.append(penalty(sel))
    assert all(b <= a + 1e-9 for a, b in zip(pens, pens[1:]))


def test_round_selection_repairs():
    inst = example1_instance(qualities=(2, 2, 2))
    pairs = selection_pairs(inst)
    y = np.zeros((len(pairs), 3))
    y[:, 0] = 0.6  # would round to level 1 < r_k
    y[:, 1] = 0.4
    out = round_selection(inst, SelectionY(pairs, y))
    assert out.binary and out.violations(inst) == []
    assert all(l == 2 for l in out.levels().values())


def shared_pair(ek):
    tiles = frozenset({(1, 1), (1, 2), (2, 1)})
    return Instance(
        VideoConfig(4, 4, (2e7, 4e7)),
        (UserDemand(1, tiles, 1), UserDemand(2, tiles, 2)),
        ChannelModel(((1e-6, 2e-6),) * 2, ((0.5, 0.5),) * 2),
        SystemParams(transcode_energy=(ek, ek)),
    )


# frozen exhaustive enumeration for the one-group, r = (1, 2) instance
SHARED_FROZEN = {1e-12: (2, 2), 1e-9: (2, 2), 1e-8: (1, 2), 1e-6: (1, 2), 1e-3: (1, 2)}


@pytest.mark.parametrize("ek,levels", sorted(SHARED_FROZEN.items()))
def test_costly_transcoding_separates_streams(ek, levels):
    inst = shared_pair(ek)
    sol = solve_transcode_dc(inst, 0, DCOptions(restarts=3))
    got = sol.selection.levels()
    assert (got[((1, 2), 1)], got[((1, 2), 2)]) == levels
    if levels == (1, 2):
        assert sol.objective == pytest.approx(solve_no_transcode(inst).energy, rel=1e-6)


@pytest.mark.parametrize("i", [0, 3, 4])
def test_exhaustive_y_oracle(i):
    inst = small_dc_instance(i)
    sol = solve_transcode_dc(inst, i)
    best, arg = EXHAUSTIVE_FROZEN[i]
    assert sol.ok
    assert sol.objective <= best * (1 + 1e-4)
    assert tuple(sol.selection.levels()[p] for p in selection_pairs(inst)) == arg


def test_exhaustive_oracle_reproduces_frozen_value():
    best, arg = exhaustive_y(small_dc_instance(4))
    assert (best, arg) == (pytest.approx(EXHAUSTIVE_FROZEN[4][0], rel=1e-6), EXHAUSTIVE_FROZEN[4][1])


def test_solution_invariants():
    inst = small_dc_instance(8)
    sol = solve_transcode_dc(inst, 1)
    assert sol.penalty == 0.0 and sol.selection.binary and sol.selection.violations(inst) == []
    assert sol.objective == pytest.approx(sol.transmission_energy + inst.params.beta * sol.transcoding_energy, rel=1e-9)
    assert sol.transcoding_energy == pytest.approx(transcoding_energy(inst, sol.selection), rel=1e-12)
    for trace in sol.traces:
        assert np.all(np.diff(trace) <= 1e-9)
    assert len(sol.restart_status) == DCOptions().restarts + 2
    assert sol.report.max_violation <= 1e-8


def test_dc_not_above_natural_multicast():
    for i in range(5):
        inst = small_dc_instance(i)
        assert solve_transcode_dc(inst, i).objective <= solve_no_transcode(inst).energy * (1 + 1e-6)


def test_reproducible_for_same_seed():
    inst = small_dc_instance(6)
    a = solve_transcode_dc(inst, 5)
    b = solve_transcode_dc(inst, np.random.SeedSequence(5))
    assert a.objective == b.objective and np.array_equal(a.selection.y, b.selection.y)
