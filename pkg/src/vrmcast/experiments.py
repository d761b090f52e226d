"""Sweeps over K, gamma and mean quality with all four schemes on paired instances."""
from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import solve_baseline_max_quality, solve_baseline_unicast
from .convex_engine import Tolerances
from .planner_no_transcode import solve_no_transcode
from .planner_transcode_dc import DCOptions, solve_transcode_dc
from .scenario import ScenarioConfig, sample_realization

log = logging.getLogger(__name__)

SCHEMES = ("proposed_wo", "proposed_w", "baseline_wo", "baseline_w")
PARAMS = ("K", "gamma", "rbar")
CSV_HEADER = ("param", "value", "scheme", "mean_energy_j", "stderr_j", "n_ok", "n_total")
THREADS_ENV = "VRMCAST_THREADS"

_DC_TAG = 2  # RNG purpose tag for DC restarts (0, 1 are used by scenario sampling)


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    schemes: tuple[str, ...] = SCHEMES
    realizations: int = 100
    seed: int = 0
    dc: DCOptions = field(default_factory=DCOptions)
    tol: Tolerances = field(default_factory=Tolerances)

    def check(self) -> list[str]:
        out = []
        if self.param not in PARAMS:
            out.append(f"param must be one of {PARAMS}, got {self.param!r}")
        if not self.values:
            out.append("values must be nonempty")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            out.append(f"schemes must be a nonempty subset of {SCHEMES}")
        if self.realizations < 1:
            out.append("realizations must be >= 1")
        if not out:
            for v in self.values:
                try:
                    out.extend(f"{self.param}={v}: {m}" for m in self.config_for(v).check())
                except (TypeError, ValueError) as exc:
                    out.append(f"{self.param}={v}: {exc}")
        return out

    def config_for(self, value) -> ScenarioConfig:
        cfg = self.base.with_(seed=self.seed, realizations=self.realizations)
        if self.param == "K":
            if int(value) != value:
                raise ValueError("K values must be integers")
            return cfg.with_(users=int(value))
        if self.param == "gamma":
            return cfg.with_(gamma=float(value))
        # rbar sweep: r_ub = r_lb + 2 around the mean
        if int(value) != value:
            raise ValueError("rbar values must be integers")
        return cfg.with_(quality_lb=int(value) - 1, quality_ub=int(value) + 1)


@dataclass
class SweepRow:
    param: str
    value: float
    scheme: str
    mean_energy: float
    stderr: float
    n_ok: int
    n_total: int


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow]
    # energies[value index][scheme] -> per-realization array, nan where the solver failed
    energies: list[dict[str, np.ndarray]]

    def row(self, value, scheme) -> SweepRow:
        return next(r for r in self.rows if r.value == value and r.scheme == scheme)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([r.param, _fmt(r.value), r.scheme, _fmt(r.mean_energy), _fmt(r.stderr), r.n_ok, r.n_total])
        return buf.getvalue()


def _fmt(x: float) -> str:
    # %-formatting ignores locale, so '.' is always the decimal separator
    return "%.9g" % x


def run_cell(cfg: ScenarioConfig, index: int, schemes=SCHEMES, dc: DCOptions = DCOptions(), tol: Tolerances = Tolerances()):
    """Solve one realization with every requested scheme; returns ``{scheme: energy or nan}``."""
    inst = sample_realization(cfg, index).instance
    out = {}
    for scheme in schemes:
        try:
            if scheme == "proposed_wo":
                sol = solve_no_transcode(inst, tol)
                val = sol.energy
            elif scheme == "baseline_wo":
                sol = solve_baseline_unicast(inst, tol)
                val = sol.energy
            elif scheme == "baseline_w":
                sol = solve_baseline_max_quality(inst, tol)
                val = sol.objective
            else:
                seq = np.random.SeedSequence([cfg.seed, index, _DC_TAG])
                sol = solve_transcode_dc(inst, seq, dc, tol)
                val = sol.objective
            out[scheme] = val if sol.ok else math.nan
            if not sol.ok:
                log.warning("%s failed on realization %d: %s", scheme, index, sol.report.status)
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            log.warning("%s raised on realization %d: %s", scheme, index, exc)
            out[scheme] = math.nan
    return out


def _cell_job(args):
    return run_cell(*args)


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Run every (value, realization) cell and aggregate in index order.

    Realization i uses the same RNG streams for every swept value, so the
    schemes and the values are compared on paired draws.
    """
    errors = spec.check()
    if errors:
        raise ValueError("; ".join(errors))
    workers = worker_count() if workers is None else max(int(workers), 1)
    jobs = [
        (spec.config_for(v), i, spec.schemes, spec.dc, spec.tol)
        for v in spec.values
        for i in range(spec.realizations)
    ]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_cell_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_cell_job(j) for j in jobs]

    rows, energies = [], []
    n = spec.realizations
    for vi, v in enumerate(spec.values):
        chunk = results[vi * n : (vi + 1) * n]
        per = {s: np.array([c[s] for c in chunk], dtype=float) for s in spec.schemes}
        energies.append(per)
        for s in spec.schemes:
            ok = per[s][np.isfinite(per[s])]
            mean = float(ok.mean()) if len(ok) else math.nan
            se = float(ok.std(ddof=1) / math.sqrt(len(ok))) if len(ok) > 1 else 0.0
            rows.append(SweepRow(spec.param, float(v), s, mean, se, len(ok), n))
    return SweepResult(spec, rows, energies)


def trend_sweep_specs(realizations: int = 100, seed: int = 0, base: ScenarioConfig | None = None) -> list[SweepSpec]:
    """The three sweeps: K at gamma=0, gamma at K=3, mean quality at gamma=0 and K=3."""
    base = base or ScenarioConfig()
    return [
        SweepSpec("K", (1, 2, 3, 4), base.with_(gamma=0.0, quality_lb=1, quality_ub=5), realizations=realizations, seed=seed),
        SweepSpec("gamma", (0.0, 0.5, 1.0, 2.0), base.with_(users=3, quality_lb=1, quality_ub=5), realizations=realizations, seed=seed),
        SweepSpec("rbar", (2, 3, 4), base.with_(users=3, gamma=0.0), realizations=realizations, seed=seed),
    ]
