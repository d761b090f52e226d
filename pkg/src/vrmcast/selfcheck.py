"""Fast invariant checks on built-in small instances, run by ``vrmcast validate``."""
from __future__ import annotations

import math

import numpy as np

from .core_model import ChannelModel, Instance, SystemParams, UserDemand, VideoConfig, validate_instance

# The three-user 4x8 illustration: G_1, G_2, G_3 with L = 3.
EXAMPLE1_TILES = (
    ((1, 3), (2, 3), (1, 4), (2, 4), (1, 5), (2, 5)),
    ((2, 4), (3, 4), (2, 5), (3, 5), (2, 6), (3, 6)),
    ((3, 5), (4, 5), (3, 6), (4, 6), (3, 7), (4, 7)),
)
EXAMPLE1_GROUPS = {
    (1,): {(1, 3), (2, 3), (1, 4), (1, 5)},
    (2,): {(3, 4), (2, 6)},
    (3,): {(4, 5), (4, 6), (3, 7), (4, 7)},
    (1, 2): {(2, 4), (2, 5)},
    (2, 3): {(3, 5), (3, 6)},
}


def example1_instance(qualities=(2, 2, 2), encoding_rates=(6.66e5, 16.18e5, 24.29e5)) -> Instance:
    K = len(EXAMPLE1_TILES)
    demands = tuple(UserDemand(k + 1, frozenset(t), q) for k, (t, q) in enumerate(zip(EXAMPLE1_TILES, qualities)))
    channel = ChannelModel(((1e-6, 2e-6),) * K, ((0.5, 0.5),) * K)
    return Instance(VideoConfig(4, 8, encoding_rates), demands, channel, SystemParams(transcode_energy=(1e-6,) * K))


def closed_form_energy(n_tiles: int, rate: float, h: float, params: SystemParams) -> float:
    """Minimum energy of one user in one state: full frame, inverted Shannon rate."""
    return params.frame * params.noise / h * math.expm1(n_tiles * rate / params.bandwidth * math.log(2.0))


def run_checks() -> list[tuple[str, bool, str]]:
    from .baselines import solve_baseline_max_quality, solve_baseline_unicast
    from .planner_no_transcode import solve_no_transcode
    from .planner_transcode_dc import PENALTY_TOL, DCOptions, solve_transcode_dc
    from .scenario import ScenarioConfig, sample_realization

    out = []
    inst = example1_instance()
    groups = {s: set(t) for s, t in inst.partition.groups.items()}
    out.append(("example partition", groups == EXAMPLE1_GROUPS and not validate_instance(inst), f"I = {inst.partition.index_set}"))

    p = SystemParams(transcode_energy=(0.0,))
    single = Instance(
        VideoConfig(4, 4, (1e6, 2e6)),
        (UserDemand(1, frozenset({(1, 1), (1, 2), (2, 2)}), 2),),
        ChannelModel(((3e-6,),), ((1.0,),)),
        p,
    )
    e_ref = closed_form_energy(3, 2e6, 3e-6, p)
    sol = solve_no_transcode(single)
    rel = abs(sol.energy - e_ref) / e_ref
    out.append(("closed form", sol.ok and rel <= 1e-6, f"relative error {rel:.2e}"))

    worst = -math.inf
    ok = True
    descent = True
    for i in range(3):
        inst = sample_realization(ScenarioConfig(users=2, realizations=3), i).instance
        e_star = solve_no_transcode(inst)
        e_uni = solve_baseline_unicast(inst)
        e_bw = solve_baseline_max_quality(inst)
        dc = solve_transcode_dc(inst, i, DCOptions(restarts=2))
        ok &= all(s.ok for s in (e_star, e_uni, e_bw, dc))
        tol = 1e-6
        worst = max(
            worst,
            (dc.objective - e_star.energy) / e_star.energy,
            (dc.objective - e_bw.objective) / e_bw.objective,
            (e_star.energy - e_uni.energy) / e_uni.energy,
        )
        descent &= all(np.all(np.diff(tr) <= 1e-9) for tr in dc.traces) and dc.penalty <= PENALTY_TOL
    out.append(("ordering chain", ok and worst <= tol, f"worst relative excess {worst:.2e}"))
    out.append(("dc descent", descent, "traces nonincreasing, zero penalty"))

    base = sample_realization(ScenarioConfig(users=2), 0).instance
    e0 = solve_no_transcode(base).energy
    worst = 0.0
    for alpha in (0.5, 2.0, 10.0):
        scaled = Instance(base.video, base.demands, base.channel, SystemParams(
            base.params.bandwidth, base.params.frame, alpha * base.params.noise, base.params.transcode_energy, base.params.beta,
        ))
        worst = max(worst, abs(solve_no_transcode(scaled).energy / (alpha * e0) - 1.0))
    out.append(("noise scaling", worst <= 1e-5, f"worst relative error {worst:.2e}"))
    return out
