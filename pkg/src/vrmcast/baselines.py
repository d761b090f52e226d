"""Comparison schemes: pure unicast, and max-quality multicast with forced transcoding."""
from __future__ import annotations

from .convex_engine import ConvexSubproblem, RateRequirement, Tolerances, solve_convex
from .core_model import Instance
from .planner_no_transcode import NoTranscodeSolution, summarize
from .planner_transcode_dc import SelectionY, TranscodeSolution, selection_from_levels, solve_fixed_selection


def unicast_subproblem(inst: Instance) -> ConvexSubproblem:
    # one private stream per user carrying its whole G_k; shared tiles are sent once per user
    streams = [((d.user,), d.quality) for d in inst.demands]
    rates = [RateRequirement(i, d.user, len(d.tiles) * inst.video.rate(d.quality)) for i, d in enumerate(inst.demands)]
    return ConvexSubproblem(inst, streams, rates)


def solve_baseline_unicast(inst: Instance, tol: Tolerances = Tolerances()) -> NoTranscodeSolution:
    alloc, _, report = solve_convex(unicast_subproblem(inst), tol)
    return summarize(alloc, report)


def max_quality_selection(inst: Instance) -> SelectionY:
    levels = {}
    for s in inst.partition.index_set:
        top = max(inst.demands[k - 1].quality for k in s)
        for k in s:
            levels[(s, k)] = top
    return selection_from_levels(inst, levels)


def solve_baseline_max_quality(inst: Instance, tol: Tolerances = Tolerances()) -> TranscodeSolution:
    return solve_fixed_selection(inst, max_quality_selection(inst), tol)
