"""Energy minimization without user transcoding (natural multicast only)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convex_engine import Allocation, ConvexSubproblem, RateRequirement, SolverReport, Tolerances, solve_convex
from .core_model import Instance, UserSubset


@dataclass
class NoTranscodeSolution:
    allocation: Allocation
    energy: float  # average transmission energy per frame (J)
    report: SolverReport
    stream_energy: dict[tuple[UserSubset, int], float] = field(default_factory=dict)
    state_energy: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.report.ok


def fixed_selection_subproblem(inst: Instance, levels: dict[tuple[UserSubset, int], int], const: float = 0.0):
    """Subproblem where each pair (S, k) is served at the given level.

    Users of the same subset assigned the same level share one stream.
    """
    part = inst.partition
    streams: list[tuple[UserSubset, int]] = []
    index: dict[tuple[UserSubset, int], int] = {}
    rates = []
    for s in part.index_set:
        size = part.size(s)
        for k in s:
            level = levels[(s, k)]
            key = (s, level)
            if key not in index:
                index[key] = len(streams)
                streams.append(key)
            rates.append(RateRequirement(index[key], k, size * inst.video.rate(level)))
    return ConvexSubproblem(inst, streams, rates, const=const)


def summarize(alloc: Allocation, report: SolverReport, energy: float | None = None) -> NoTranscodeSolution:
    per_stream = alloc.probs @ alloc.e
    return NoTranscodeSolution(
        alloc,
        alloc.average_energy() if energy is None else energy,
        report,
        {key: float(v) for key, v in zip(alloc.streams, per_stream)},
        alloc.e.sum(axis=1),
    )


def no_transcode_subproblem(inst: Instance) -> ConvexSubproblem:
    levels = {(s, k): inst.demands[k - 1].quality for s in inst.partition.index_set for k in s}
    return fixed_selection_subproblem(inst, levels)


def solve_no_transcode(inst: Instance, tol: Tolerances = Tolerances()) -> NoTranscodeSolution:
    alloc, _, report = solve_convex(no_transcode_subproblem(inst), tol)
    return summarize(alloc, report)
