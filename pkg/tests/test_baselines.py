import pytest

from vrmcast.baselines import max_quality_selection, solve_baseline_max_quality, solve_baseline_unicast, unicast_subproblem
from vrmcast.core_model import Instance, UserDemand
from vrmcast.planner_no_transcode import solve_no_transcode
from vrmcast.planner_transcode_dc import solve_transcode_dc
from vrmcast.scenario import ScenarioConfig, sample_realization
from vrmcast.selfcheck import example1_instance


def test_unicast_structure(example1):
    sub = unicast_subproblem(example1)
    assert sub.streams == [((1,), 2), ((2,), 2), ((3,), 2)]
    assert [r.bits for r in sub.rates] == [6 * 16.18e5] * 3


def test_unicast_single_user_matches_multicast():
    inst = sample_realization(ScenarioConfig(users=1), 0).instance
    assert solve_baseline_unicast(inst).energy == pytest.approx(solve_no_transcode(inst).energy, rel=1e-6)


def test_unicast_ignores_overlap_pattern(example1):
    # same |G_k| everywhere, overlap removed
    shifted = tuple(UserDemand(d.user, frozenset((d.user, c) for c in range(1, 7)), d.quality) for d in example1.demands)
    other = Instance(example1.video, shifted, example1.channel, example1.params)
    assert solve_baseline_unicast(other).energy == pytest.approx(solve_baseline_unicast(example1).energy, rel=1e-6)


def test_max_quality_uniform_requirements(example1):
    bw = solve_baseline_max_quality(example1)
    assert bw.transcoding_energy == 0.0
    assert bw.objective == pytest.approx(solve_no_transcode(example1).energy, rel=1e-6)


def test_max_quality_example3_transcoding_energy():
    inst = example1_instance(qualities=(1, 2, 2))
    sel = max_quality_selection(inst)
    assert sel.levels()[((1, 2), 1)] == 2 and sel.levels()[((1,), 1)] == 1
    bw = solve_baseline_max_quality(inst)
    # |P_{1,2}| * E_1 * 1 = 2 E_1
    assert bw.transcoding_energy == pytest.approx(2 * inst.params.transcode_energy[0], rel=1e-12)
    assert bw.objective == pytest.approx(bw.transmission_energy + 2e-6, rel=1e-12)


@pytest.mark.parametrize("i", range(4))
def test_ordering_chain(i):
    inst = sample_realization(ScenarioConfig(users=3, quality_lb=1, quality_ub=5), i).instance
    e_star = solve_no_transcode(inst).energy
    e_uni = solve_baseline_unicast(inst).energy
    bw = solve_baseline_max_quality(inst).objective
    dc = solve_transcode_dc(inst, i).objective
    assert dc <= bw * (1 + 1e-6)
    assert dc <= e_star * (1 + 1e-6)
    assert e_star <= e_uni * (1 + 1e-6)
