"""Joint quality selection and resource allocation with user transcoding.

The binary selection y[S, k, l] says which representation of the tiles in
P_S user k receives.  Binarity is relaxed to the box and enforced through
the penalty P(y) = sum y (1 - y); the concave part -sum y^2 is linearized
at the previous iterate, so each step is a convex subproblem and the true
penalized objective never increases.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .convex_engine import Allocation, ConvexSubproblem, RateRequirement, SolverReport, Tolerances, solve_convex
from .core_model import Instance, UserSubset
from .planner_no_transcode import fixed_selection_subproblem

log = logging.getLogger(__name__)

PENALTY_TOL = 1e-6


@dataclass
class SelectionY:
    """Selection values for every pair (S, k in S) over levels 1..L."""

    pairs: list[tuple[UserSubset, int]]
    y: np.ndarray  # (n_pairs, L)

    @property
    def binary(self) -> bool:
        return bool(np.all((self.y == 0.0) | (self.y == 1.0)))

    def levels(self) -> dict[tuple[UserSubset, int], int]:
        return {pair: int(np.argmax(row)) + 1 for pair, row in zip(self.pairs, self.y)}

    def mean_levels(self) -> np.ndarray:
        return self.y @ np.arange(1, self.y.shape[1] + 1)

    def key(self) -> bytes:
        return self.y.tobytes()

    def violations(self, inst: Instance, atol: float = 1e-9) -> list[str]:
        out = []
        if np.any(self.y < -atol) or np.any(self.y > 1 + atol):
            out.append("box constraint violated")
        if not np.allclose(self.y.sum(axis=1), 1.0, atol=atol, rtol=0):
            out.append("simplex constraint violated")
        req = np.array([inst.demands[k - 1].quality for _, k in self.pairs])
        if np.any(self.mean_levels() < req - atol):
            out.append("quality constraint violated")
        return out


def selection_pairs(inst: Instance) -> list[tuple[UserSubset, int]]:
    return [(s, k) for s in inst.partition.index_set for k in s]


def selection_from_levels(inst: Instance, levels: dict[tuple[UserSubset, int], int]) -> SelectionY:
    pairs = selection_pairs(inst)
    y = np.zeros((len(pairs), inst.video.levels))
    for i, pair in enumerate(pairs):
        y[i, levels[pair] - 1] = 1.0
    return SelectionY(pairs, y)


def penalty(sel: SelectionY) -> float:
    y = sel.y
    return float(np.sum(y * (1.0 - y)))


def transcoding_energy(inst: Instance, sel: SelectionY) -> float:
    part = inst.partition
    e_k = inst.params.transcode_energy
    req = np.array([inst.demands[k - 1].quality for _, k in sel.pairs], dtype=float)
    weight = np.array([part.size(s) * e_k[k - 1] for s, k in sel.pairs])
    return float(weight @ (sel.mean_levels() - req))


@dataclass
class TranscodeSolution:
    selection: SelectionY
    allocation: Allocation
    transmission_energy: float
    transcoding_energy: float
    objective: float  # transmission + beta * transcoding (J)
    penalty: float
    report: SolverReport
    traces: list[list[float]] = field(default_factory=list)
    restart: int = -1
    restart_status: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.report.ok


def random_feasible_y(inst: Instance, rng: np.random.Generator) -> SelectionY:
    L = inst.video.levels
    levels = {}
    for s, k in selection_pairs(inst):
        r = inst.demands[k - 1].quality
        levels[(s, k)] = int(rng.integers(r, L + 1))
    return selection_from_levels(inst, levels)


def solve_fixed_selection(inst: Instance, sel: SelectionY, tol: Tolerances = Tolerances()) -> TranscodeSolution:
    """Allocation for a binary selection; the objective includes beta * transcoding."""
    if not sel.binary or sel.violations(inst):
        raise ValueError("selection must be binary and feasible")
    tc = transcoding_energy(inst, sel)
    sub = fixed_selection_subproblem(inst, sel.levels(), const=inst.params.beta * tc)
    alloc, _, report = solve_convex(sub, tol)
    tx = alloc.average_energy()
    return TranscodeSolution(sel, alloc, tx, tc, tx + inst.params.beta * tc, 0.0, report)


def _relaxed_subproblem(inst: Instance, y_prev: SelectionY, rho: float):
    """Convex majorizer of the penalized problem around ``y_prev``.

    Levels below a user's requirement can never be selected by a binary
    point, so their y is fixed at zero.
    """
    part = inst.partition
    L = inst.video.levels
    beta = inst.params.beta
    e_k = inst.params.transcode_energy
    streams, index = [], {}
    rates, y_keys, y_groups, cost = [], [], [], []
    const = 0.0
    for i, (s, k) in enumerate(y_prev.pairs):
        r = inst.demands[k - 1].quality
        size = part.size(s)
        const -= beta * size * e_k[k - 1] * r
        group = []
        for l in range(r, L + 1):
            key = (s, l)
            if key not in index:
                index[key] = len(streams)
                streams.append(key)
            bits = size * inst.video.rate(l)
            if r == L:
                rates.append(RateRequirement(index[key], k, bits))
                const += beta * size * e_k[k - 1] * l
                continue
            v = len(y_keys)
            y_keys.append((s, k, l))
            group.append(v)
            rates.append(RateRequirement(index[key], k, bits, v))
            cost.append(beta * size * e_k[k - 1] * l + rho * (1.0 - 2.0 * y_prev.y[i, l - 1]))
        if group:
            y_groups.append(tuple(group))
    return ConvexSubproblem(inst, streams, rates, y_keys, y_groups, np.array(cost), const)


def _selection_from_solution(inst: Instance, like: SelectionY, y_keys, y) -> SelectionY:
    out = np.zeros_like(like.y)
    row = {pair: i for i, pair in enumerate(like.pairs)}
    for i, (s, k) in enumerate(like.pairs):
        if inst.demands[k - 1].quality == inst.video.levels:
            out[i, -1] = 1.0
    for (s, k, l), v in zip(y_keys, y):
        out[row[(s, k)], l - 1] = v
    return SelectionY(like.pairs, out)


def penalized_objective(inst: Instance, alloc: Allocation, sel: SelectionY, rho: float) -> float:
    return alloc.average_energy() + inst.params.beta * transcoding_energy(inst, sel) + rho * penalty(sel)


def dc_iterate(inst: Instance, y_prev: SelectionY, rho: float, tol: Tolerances = Tolerances()):
    """One convex step; returns ``(allocation, selection, penalized objective, report)``."""
    sub = _relaxed_subproblem(inst, y_prev, rho)
    alloc, y, report = solve_convex(sub, tol)
    sel = _selection_from_solution(inst, y_prev, sub.y_keys, y if y is not None else [])
    return alloc, sel, penalized_objective(inst, alloc, sel, rho), report


def round_selection(inst: Instance, sel: SelectionY) -> SelectionY:
    """Snap to the nearest binary point, repairing any broken simplex or quality constraint."""
    y = (sel.y > 0.5).astype(float)
    L = inst.video.levels
    for i, (s, k) in enumerate(sel.pairs):
        r = inst.demands[k - 1].quality
        if y[i].sum() != 1.0 or y[i] @ np.arange(1, L + 1) < r:
            best = int(np.argmax(np.where(np.arange(1, L + 1) >= r, sel.y[i], -np.inf)))
            y[i] = 0.0
            y[i, max(best, r - 1)] = 1.0
    return SelectionY(sel.pairs, y)


@dataclass
class DCOptions:
    restarts: int = 10
    max_iter: int = 100
    rel_decrease: float = 1e-6
    rho_factor: float = 0.1
    rho_growth: float = 10.0
    max_escalations: int = 5


def _descent(inst, y0, rho0, opts, tol):
    """Run the DC iteration from ``y0`` escalating rho; returns (selection, traces, status)."""
    traces = []
    y = y0
    rho = rho0
    for stage in range(opts.max_escalations + 1):
        trace = []
        prev = None
        for _ in range(opts.max_iter):
            _, y_new, obj, report = dc_iterate(inst, y, rho, tol)
            if not report.ok:
                traces.append(trace)
                return None, traces, report.status
            if prev is not None and obj > prev:
                break  # no progress at solver precision; keep the previous iterate
            trace.append(obj)
            y = y_new
            if prev is not None and prev - obj < opts.rel_decrease * abs(obj):
                break
            prev = obj
        traces.append(trace)
        if penalty(y) <= PENALTY_TOL:
            return y, traces, "optimal"
        rho *= opts.rho_growth
    return None, traces, "penalty-not-zero"


def _pick(candidates):
    best_obj = min(c.objective for c in candidates)
    close = [c for c in candidates if c.objective <= best_obj * (1 + 1e-9) + 1e-300]
    return min(close, key=lambda c: (float(c.selection.mean_levels().sum()), tuple(c.selection.y.ravel())))


def solve_transcode_dc(
    inst: Instance,
    rng: np.random.Generator | np.random.SeedSequence | int | None = 0,
    opts: DCOptions = DCOptions(),
    tol: Tolerances = Tolerances(),
) -> TranscodeSolution:
    """Multi-start penalized DC descent.

    Start 0 is the max-quality (Baseline-w) selection and start 1 the
    no-transcoding selection; their fixed-selection solutions are always
    candidates, so the result never loses to either.  Starts 2.. are random.
    """
    from .baselines import max_quality_selection

    if isinstance(rng, np.random.SeedSequence):
        seed_seq = rng
    elif isinstance(rng, np.random.Generator):
        seed_seq = rng.bit_generator.seed_seq
    else:
        seed_seq = np.random.SeedSequence(rng)
    starts = [max_quality_selection(inst), selection_from_levels(inst, {p: inst.demands[p[1] - 1].quality for p in selection_pairs(inst)})]
    for child in seed_seq.spawn(opts.restarts):
        starts.append(random_feasible_y(inst, np.random.default_rng(child)))

    cache: dict[bytes, TranscodeSolution] = {}

    def evaluate(sel):
        key = sel.key()
        if key not in cache:
            cache[key] = solve_fixed_selection(inst, sel, tol)
        return cache[key]

    anchors = [evaluate(s) for s in starts[:2]]
    rho0 = opts.rho_factor * max(min(a.objective for a in anchors if a.ok) if any(a.ok for a in anchors) else 0.0, 1e-300)

    candidates, statuses, all_traces = [], [], []
    for idx, y0 in enumerate(starts):
        sel, traces, status = _descent(inst, y0, rho0, opts, tol)
        all_traces.extend(traces)
        if sel is not None:
            cand = evaluate(round_selection(inst, sel))
            if cand.ok:
                candidates.append((idx, cand, penalty(sel)))
            else:
                status = cand.report.status
        statuses.append(status)
    for idx, a in enumerate(anchors):
        if a.ok:
            candidates.append((idx, a, 0.0))
    if not candidates:
        bad = anchors[0]
        return TranscodeSolution(
            bad.selection, bad.allocation, bad.transmission_energy, bad.transcoding_energy,
            bad.objective, math.nan, bad.report, all_traces, -1, statuses,
        )
    best = _pick([c for _, c, _ in candidates])
    restart = next(i for i, c, _ in candidates if c is best)
    return TranscodeSolution(
        best.selection, best.allocation, best.transmission_energy, best.transcoding_energy,
        best.objective, penalty(best.selection), best.report, all_traces, restart, statuses,
    )
