"""Perspective-rate functions and the conic solver for the energy subproblems.

Every subproblem handled here has the same shape:

    minimize    sum_h q(h) sum_j e[h, j] + w . y + const
    subject to  sum_j t[h, j] <= T                              (each state h)
                c_i * y_i <= (B/T) sum_h q(h) t log2(1 + e g / (t n0))   (each rate row)
                t, e, y >= 0,  simplex equalities on y

where ``j`` runs over transmission streams (a user subset S and a quality
level l) and each rate row ties one stream to one receiving user.  Rows
without a selection variable use ``y_i = 1``.

Each perspective term is exponential-cone representable, so the whole
subproblem is handed to Clarabel in normalized units (time / T, energy /
(T n0 / h_ref), bits / B).  The returned point is cleaned up (tiny entries
snapped to zero, energies nudged up to meet every rate row exactly) and
re-checked in physical units before a status is reported.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
import numpy as np
import clarabel
from scipy import sparse

from .core_model import Instance, UserSubset

LN2 = math.log(2.0)
log = logging.getLogger(__name__)


def perspective_rate(t, e, h, n0, B, T):
    """(B/T) t log2(1 + e h / (t n0)), extended by 0 at t = 0."""
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    if np.any(t < 0) or np.any(e < 0):
        raise ValueError("perspective_rate needs t >= 0 and e >= 0")
    safe_t = np.where(t > 0, t, 1.0)
    val = np.where(t > 0, (B / T) * t * np.log1p(e * h / (safe_t * n0)) / LN2, 0.0)
    return val[()] if val.ndim == 0 else val


def perspective_rate_gradient(t, e, h, n0, B, T):
    """Partial derivatives (d/dt, d/de) of :func:`perspective_rate` for t > 0."""
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    if np.any(t <= 0):
        raise ValueError("gradient undefined at t = 0")
    if np.any(e < 0):
        raise ValueError("perspective_rate_gradient needs e >= 0")
    x = e * h / (t * n0)
    d_t = (B / T) * (np.log1p(x) - x / (1.0 + x)) / LN2
    d_e = (B / T) * (h / (n0 * LN2)) * t / (t + e * h / n0)
    return (d_t[()] if d_t.ndim == 0 else d_t, d_e[()] if d_e.ndim == 0 else d_e)


StreamKey = tuple[UserSubset, int]
YKey = tuple[UserSubset, int, int]


@dataclass(frozen=True)
class RateRequirement:
    """Required bits/s ``bits`` (times ``y[y_index]`` when set) delivered to ``user`` by ``stream``."""

    stream: int
    user: int
    bits: float
    y_index: int | None = None


@dataclass
class ConvexSubproblem:
    instance: Instance
    streams: list[StreamKey]
    rates: list[RateRequirement]
    y_keys: list[YKey] = field(default_factory=list)
    y_groups: list[tuple[int, ...]] = field(default_factory=list)
    y_cost: np.ndarray | None = None  # Joules per unit of y
    const: float = 0.0  # Joules

    def __post_init__(self):
        if self.y_cost is None:
            self.y_cost = np.zeros(len(self.y_keys))
        self.y_cost = np.asarray(self.y_cost, dtype=float)

    def check(self) -> list[str]:
        out = []
        n_j, n_y = len(self.streams), len(self.y_keys)
        for i, r in enumerate(self.rates):
            if not 0 <= r.stream < n_j:
                out.append(f"rate row {i}: unknown stream {r.stream}")
            if not (math.isfinite(r.bits) and r.bits >= 0):
                out.append(f"rate row {i}: bad coefficient {r.bits}")
            if r.y_index is not None and not 0 <= r.y_index < n_y:
                out.append(f"rate row {i}: unknown y index {r.y_index}")
        grouped = sorted(i for g in self.y_groups for i in g)
        if grouped != list(range(n_y)):
            out.append("every y variable must belong to exactly one simplex group")
        if self.y_cost.shape != (n_y,) or not np.all(np.isfinite(self.y_cost)):
            out.append("y_cost must be a finite vector over y")
        return out


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-8
    stationarity: float = 1e-6
    max_newton: int = 500  # interior-point iteration cap
    gap: float = 1e-10  # duality gap target, relative to the objective


@dataclass
class SolverReport:
    status: str  # "optimal" | "infeasible" | "max-iterations"
    objective: float
    max_violation: float
    kkt_residual: float
    iterations: int

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass
class Allocation:
    """Time (s) and energy (J) per joint channel state and stream."""

    states: np.ndarray  # (n_h, K) channel gains
    probs: np.ndarray  # (n_h,)
    streams: list[StreamKey]
    t: np.ndarray  # (n_h, n_j)
    e: np.ndarray  # (n_h, n_j)

    def average_energy(self) -> float:
        return float(self.probs @ self.e.sum(axis=1))

    def power(self) -> np.ndarray:
        return np.divide(self.e, self.t, out=np.zeros_like(self.e), where=self.t > 0)

    def table(self) -> dict[tuple[tuple[float, ...], UserSubset, int], tuple[float, float]]:
        out = {}
        for h, gains in enumerate(self.states):
            for j, (s, l) in enumerate(self.streams):
                out[(tuple(float(g) for g in gains), s, l)] = (float(self.t[h, j]), float(self.e[h, j]))
        return out

    def delivered_rate(self, stream: int, user: int, params) -> float:
        """Average bits/s stream ``stream`` delivers to ``user`` (1-based)."""
        h = self.states[:, user - 1]
        r = perspective_rate(self.t[:, stream], self.e[:, stream], h, params.noise, params.bandwidth, params.frame)
        return float(self.probs @ r)


class _Problem:
    """Normalized, vectorized view of a ConvexSubproblem."""

    def __init__(self, sub: ConvexSubproblem):
        inst = sub.instance
        p = inst.params
        ch = inst.channel
        self.q = np.asarray(ch.state_probs, dtype=float)
        states = np.asarray(ch.states, dtype=float)
        self.h_ref = float(states.min())
        self.e_unit = p.frame * p.noise / self.h_ref
        self.n_h = len(self.q)
        self.n_j = len(sub.streams)
        self.n_y = len(sub.y_keys)
        self.n_s = self.n_h * self.n_j
        self.n = 2 * self.n_s + self.n_y
        rows = sub.rates
        self.n_r = len(rows)
        self.row_stream = np.array([r.stream for r in rows], dtype=int)
        self.row_user = np.array([r.user - 1 for r in rows], dtype=int)
        self.row_c = np.array([r.bits / p.bandwidth for r in rows], dtype=float)
        self.row_y = np.array([-1 if r.y_index is None else r.y_index for r in rows], dtype=int)
        self.g = states[:, self.row_user] / self.h_ref  # (n_h, n_r)
        tidx = np.arange(self.n_s).reshape(self.n_h, self.n_j)
        self.tidx = tidx
        self.row_tcols = tidx[:, self.row_stream].T  # (n_r, n_h)
        self.row_ecols = self.row_tcols + self.n_s
        self.has_y = self.row_y >= 0
        self.c0 = np.zeros(self.n)
        self.c0[self.n_s : 2 * self.n_s] = np.repeat(self.q, self.n_j)
        self.c0[2 * self.n_s :] = sub.y_cost / self.e_unit
        self.const = sub.const / self.e_unit
        self.A = np.zeros((len(sub.y_groups), self.n))
        for gi, grp in enumerate(sub.y_groups):
            self.A[gi, [2 * self.n_s + v for v in grp]] = 1.0
        self.groups = [tuple(g) for g in sub.y_groups]

    def split(self, x):
        t = x[: self.n_s].reshape(self.n_h, self.n_j)
        e = x[self.n_s : 2 * self.n_s].reshape(self.n_h, self.n_j)
        return t, e, x[2 * self.n_s :]

    def requirement(self, y):
        yv = np.ones(self.n_r)
        if self.n_y:
            yv[self.has_y] = y[self.row_y[self.has_y]]
        return self.row_c * yv

    def rates(self, t, e):
        """Per-row rate, and the intermediate arrays needed for derivatives."""
        tr = t[:, self.row_stream]
        er = e[:, self.row_stream]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(tr > 0, er / np.where(tr > 0, tr, 1.0), 0.0)
        z = self.g * u
        lz = np.log1p(z)
        phi = tr * lz / LN2
        return self.q @ phi, (tr, u, z, lz)

    def constraints(self, x):
        t, e, y = self.split(x)
        rate, aux = self.rates(t, e)
        f_rate = self.requirement(y) - rate
        slack_time = 1.0 - t.sum(axis=1)
        return f_rate, slack_time, aux

    def objective(self, x):
        return float(self.c0 @ x) + self.const


def _zero_solution(sub: ConvexSubproblem, prob: _Problem):
    inst = sub.instance
    t = np.zeros((prob.n_h, prob.n_j))
    y = None
    obj = sub.const
    if prob.n_y:
        # no rate rows: pick the cheapest level in every group
        y = np.zeros(prob.n_y)
        for grp in prob.groups:
            best = min(grp, key=lambda v: (sub.y_cost[v], v))
            y[best] = 1.0
        obj += float(sub.y_cost @ y)
    alloc = Allocation(inst.channel.states, inst.channel.state_probs, list(sub.streams), t, t.copy())
    return alloc, y, SolverReport("optimal", obj, 0.0, 0.0, 0)


def _conic_data(prob: _Problem):
    """Exponential-cone form of the subproblem for Clarabel.

    Extra variables s[h, i] (nats) with (s, t, t + g e) in K_exp, i.e.
    s <= t ln(1 + g e / t); each rate row asks for sum_h q(h) s[h, i] >= c_i ln2 y_i.
    """
    n_s, n_y, n_h, n_r = prob.n_s, prob.n_y, prob.n_h, prob.n_r
    n_x = 2 * n_s + n_y
    n_aux = n_h * n_r
    n = n_x + n_aux
    aux = n_x + np.arange(n_aux).reshape(n_h, n_r)
    rows, cols, vals, b = [], [], [], []
    cones = []
    r0 = 0

    def add(r, c, v):
        rows.extend(np.broadcast_to(r, np.broadcast(r, c, v).shape).ravel())
        cols.extend(np.broadcast_to(c, np.broadcast(r, c, v).shape).ravel())
        vals.extend(np.broadcast_to(v, np.broadcast(r, c, v).shape).ravel())

    if prob.groups:
        for gi, grp in enumerate(prob.groups):
            add(r0 + gi, 2 * n_s + np.asarray(grp), 1.0)
        b.extend([1.0] * len(prob.groups))
        cones.append(clarabel.ZeroConeT(len(prob.groups)))
        r0 += len(prob.groups)
    n_pos = n_x + n_h + n_r
    add(r0 + np.arange(n_x), np.arange(n_x), -1.0)
    b.extend([0.0] * n_x)
    r0 += n_x
    add(r0 + np.repeat(np.arange(n_h), prob.n_j), prob.tidx.ravel(), 1.0)
    b.extend([1.0] * n_h)
    r0 += n_h
    add(r0 + np.arange(n_r)[None, :], aux, -np.repeat(prob.q[:, None], n_r, axis=1))
    yr = np.nonzero(prob.has_y)[0]
    add(r0 + yr, 2 * n_s + prob.row_y[yr], prob.row_c[yr] * LN2)
    b.extend(np.where(prob.has_y, 0.0, -prob.row_c * LN2))
    r0 += n_r
    cones.append(clarabel.NonnegativeConeT(n_pos))
    tcols = prob.row_tcols.T  # (n_h, n_r)
    ecols = tcols + n_s
    base = r0 + 3 * aux.ravel() - 3 * n_x
    add(base, aux.ravel(), -1.0)
    add(base + 1, tcols.ravel(), -1.0)
    add(base + 2, tcols.ravel(), -1.0)
    add(base + 2, ecols.ravel(), -prob.g.ravel())
    b.extend([0.0] * (3 * n_aux))
    cones.extend([clarabel.ExponentialConeT()] * n_aux)
    m = r0 + 3 * n_aux
    A = sparse.csc_matrix((vals, (rows, cols)), shape=(m, n))
    A.sum_duplicates()
    c = np.concatenate([prob.c0, np.zeros(n_aux)])
    return sparse.csc_matrix((n, n)), c, A, np.asarray(b, dtype=float), cones


def _settings(tol: Tolerances):
    st = clarabel.DefaultSettings()
    st.verbose = False
    st.max_iter = tol.max_newton
    st.tol_feas = min(tol.feasibility, 1e-8) * 1e-1
    st.tol_gap_rel = tol.gap
    st.tol_gap_abs = tol.gap
    st.tol_ktratio = 1e-7
    st.presolve_enable = False
    st.direct_solve_method = "qdldl"
    return st


def _restore_feasibility(prob: _Problem, t, e, y):
    """Scale each stream's energies up by the smallest factor meeting its rate rows."""
    req = prob.requirement(y)
    for j in range(prob.n_j):
        rows = np.nonzero(prob.row_stream == j)[0]
        if not len(rows):
            continue

        def short(f):
            ej = e.copy()
            ej[:, j] *= f
            rate, _ = prob.rates(t, ej)
            return float(np.max(req[rows] - rate[rows]))

        if short(1.0) <= 0:
            continue
        lo, hi = 1.0, 1.0 + 1e-9
        while short(hi) > 0 and hi < 2.0:
            lo, hi = hi, 1.0 + 2 * (hi - 1.0)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if short(mid) > 0 else (lo, mid)
        e[:, j] *= hi
    return e


def solve_convex(sub: ConvexSubproblem, tol: Tolerances = Tolerances()):
    """Solve a subproblem; returns ``(allocation, y or None, report)``.

    The perspective rate rows are exponential-cone representable, so the
    subproblem goes to Clarabel's interior-point method.
    """
    problems = sub.check()
    if problems:
        raise ValueError("; ".join(problems))
    prob = _Problem(sub)
    if prob.n_r == 0:
        return _zero_solution(sub, prob)

    P, c, A, b, cones = _conic_data(prob)
    sol = clarabel.DefaultSolver(P, c, A, b, cones, _settings(tol)).solve()
    status = _STATUS.get(str(sol.status), "max-iterations")
    x = np.asarray(sol.x, dtype=float)[: prob.n]
    iters = int(sol.iterations)
    if status == "infeasible" or not np.all(np.isfinite(x)):
        x = np.nan_to_num(x, nan=0.0, posinf=0.0, neginf=0.0)

    t, e, y = prob.split(np.maximum(x, 0.0))
    t = t.copy()
    e = e.copy()
    y = y.copy()
    if prob.n_y:
        for grp in prob.groups:
            idx = list(grp)
            tot = y[idx].sum()
            if tot > 0:
                y[idx] /= tot
    over = t.sum(axis=1)
    t /= np.maximum(over, 1.0)[:, None]
    snap = (t < 1e-12) | (e < 1e-14 * max(float(e.max()), 1e-300))
    t[snap] = 0.0
    e[snap] = 0.0
    if status != "infeasible":
        e = _restore_feasibility(prob, t, e, y)
    rate, _ = prob.rates(t, e)
    req = prob.requirement(y)
    viol = np.maximum(req - rate, 0.0) / np.maximum(prob.row_c, 1e-300)
    max_viol = float(viol.max(initial=0.0))
    max_viol = max(max_viol, float(np.max(t.sum(axis=1) - 1.0, initial=0.0)))
    if len(prob.A):
        max_viol = max(max_viol, float(np.max(np.abs(prob.A[:, 2 * prob.n_s :] @ y - 1.0))))

    # optimality certificate: dual residual and the gap between the restored
    # primal objective and Clarabel's dual bound (normalized units)
    primal = float(prob.c0 @ np.concatenate([t.ravel(), e.ravel(), y]))
    gap = abs(primal - sol.obj_val_dual) / max(1.0, abs(primal))
    kkt = float(max(sol.r_dual, gap)) if np.all(np.isfinite(x)) else math.inf
    if status == "almost":
        status = "optimal" if kkt <= tol.stationarity else "max-iterations"
    if status == "optimal" and (max_viol > tol.feasibility or kkt > tol.stationarity):
        status = "max-iterations"

    inst = sub.instance
    alloc = Allocation(
        np.asarray(inst.channel.states),
        np.asarray(inst.channel.state_probs),
        list(sub.streams),
        t * inst.params.frame,
        e * prob.e_unit,
    )
    objective = alloc.average_energy() + float(sub.y_cost @ y) + sub.const
    report = SolverReport(status, objective, max_viol, kkt, iters)
    return alloc, (y if prob.n_y else None), report


_STATUS = {
    "Solved": "optimal",
    "AlmostSolved": "almost",
    "InsufficientProgress": "almost",
    "PrimalInfeasible": "infeasible",
    "AlmostPrimalInfeasible": "infeasible",
    "MaxIterations": "max-iterations",
}
