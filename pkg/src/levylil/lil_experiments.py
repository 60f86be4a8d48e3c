"""
Normalized LIL statistics over geometric time ladders.

Path functionals (running supremum, ``L*`` and range) are evaluated once per
path at the ladder times and collected in a :class:`LadderSamples` table.
Every statistic below is a deterministic function of that table, so
truncating the ladder, changing quantiles or switching normalizations never
resimulates paths.

The limiting constants of the LILs are not reachable at finite horizons;
what is checkable is exponent regression on quantiles (loglog factors
cancel) and stability of the normalized medians when the ladder grows.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .errors import DomainError, LadderError, StatisticalError
from .occupation import default_bandwidth, lattice_functionals, lattice_functionals_scaled
from .process_sim import PathEnsemble, TimeGrid, build_ensemble, coarsen, first_exit_time
from .scale_functions import RateKind, ScaleFunction, Verdict, lil_rate

__all__ = [
    "Functional",
    "LilMode",
    "DyadicLadder",
    "LadderSamples",
    "LilStatistic",
    "RegressionReport",
    "ConfinementCurve",
    "ExitTailCurve",
    "UlilTable",
    "ladder_samples",
    "log_log_regression",
    "quantile_scaling",
    "chung_statistic",
    "local_time_limsup_statistic",
    "local_time_liminf_statistic",
    "range_lil_statistics",
    "pairing_factor",
    "median_shift",
    "grid_refinement_check",
    "confinement_curve",
    "exit_tail_curve",
    "ulil_hypothesis_check",
    "integral_test_path_consistency",
]


class Functional(enum.Enum):
    RunningSup = "RunningSup"
    SupLocalTime = "SupLocalTime"
    Range = "Range"


class LilMode(enum.Enum):
    SmallTime = "SmallTime"
    LargeTime = "LargeTime"


@dataclass(frozen=True)
class DyadicLadder:
    """Times ``t0 * ratio**k`` (or ``t0 * ratio**-k`` when descending), ``k = 0..n_levels``."""

    t0: float = 16.0
    n_levels: int = 15
    ratio: float = 2.0
    descending: bool = False

    def __post_init__(self):
        if not (self.t0 > 0 and self.ratio > 1 and self.n_levels >= 1):
            raise DomainError("ladder needs t0 > 0, ratio > 1 and n_levels >= 1")

    @classmethod
    def small_time(cls) -> "DyadicLadder":
        return cls(2.0 ** -6, 14, 2.0, True)

    @property
    def times(self) -> np.ndarray:
        k = np.arange(self.n_levels + 1)
        sign = -1.0 if self.descending else 1.0
        return np.sort(self.t0 * self.ratio ** (sign * k))

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def truncated(self, n_levels: int) -> "DyadicLadder":
        if not 1 <= n_levels <= self.n_levels:
            raise DomainError("truncation must keep between 1 and n_levels levels")
        return DyadicLadder(self.t0, n_levels, self.ratio, self.descending)

    def check_domain(self, mode: LilMode) -> None:
        t = self.times
        if mode is LilMode.LargeTime and not np.all(t > math.e):
            raise LadderError(f"large-time ladder needs every t > e (t_min={t[0]:.4g})")
        if mode is LilMode.SmallTime and not np.all(t < math.exp(-1)):
            raise LadderError(f"small-time ladder needs every t < 1/e (t_max={t[-1]:.4g})")

    def indices(self, grid: TimeGrid) -> np.ndarray:
        t = self.times
        if t[-1] > grid.horizon * (1 + 1e-12):
            raise LadderError(f"ladder reaches {t[-1]:.4g} beyond the grid horizon {grid.horizon:.4g}")
        idx = np.rint(t / grid.dt).astype(np.int64)
        if np.any(np.abs(idx * grid.dt - t) > 1e-9 * t) or idx[0] < 1:
            raise LadderError("ladder times must be positive multiples of the grid step")
        return idx


@dataclass
class LadderSamples:
    """Per-path functionals at ladder times; arrays of shape ``(n_paths, n_times)``."""

    times: np.ndarray
    running_sup: np.ndarray | None = None
    sup_local_time: np.ndarray | None = None
    range: np.ndarray | None = None
    eps: float | None = None
    meta: dict = field(default_factory=dict)

    def get(self, functional: Functional) -> np.ndarray:
        name = {Functional.RunningSup: "running_sup",
                Functional.SupLocalTime: "sup_local_time",
                Functional.Range: "range"}[Functional(functional)]
        arr = getattr(self, name)
        if arr is None:
            raise DomainError(f"{Functional(functional).value} was not computed for these samples")
        return arr

    @property
    def n_paths(self) -> int:
        for a in (self.running_sup, self.sup_local_time, self.range):
            if a is not None:
                return a.shape[0]
        return 0

    def restrict(self, times) -> "LadderSamples":
        """Columns at a subset of the stored times."""
        cols = np.searchsorted(self.times, times)
        if np.any(cols >= self.times.size) or not np.allclose(self.times[cols], times):
            raise LadderError("requested times are not in the sampled ladder")

        def take(a):
            return None if a is None else a[:, cols]

        return LadderSamples(self.times[cols], take(self.running_sup),
                             take(self.sup_local_time), take(self.range), self.eps, dict(self.meta))


def ladder_samples(ensemble: PathEnsemble, ladder: DyadicLadder,
                   functionals=(Functional.RunningSup,), eps: float | None = None,
                   subdiv: int = 2, bandwidth_exponent: float = 0.0,
                   threads: int | None = None) -> LadderSamples:
    """Evaluate the requested functionals on every path of the ensemble.

    ``eps`` is the bandwidth at the first ladder time (default
    :func:`default_bandwidth`); at ``t_k`` it is
    ``eps * (t_k / t_0)**bandwidth_exponent``.  An exponent of ``1/beta``
    makes the ``L*`` and range estimators self-similar along the ladder.
    """
    functionals = {Functional(f) for f in functionals}
    idx = ladder.indices(ensemble.grid)
    dt = ensemble.grid.dt
    need_occ = bool(functionals & {Functional.SupLocalTime, Functional.Range})
    if eps is None:
        eps = default_bandwidth(dt, ensemble.spec.beta_eff)
    eps_levels = eps * (ladder.times / ladder.times[0]) ** bandwidth_exponent

    def reduce(p):
        out = []
        if Functional.RunningSup in functionals:
            prefix = p.positions[: idx[-1] + 1]
            out.append(np.maximum.accumulate(np.abs(prefix - prefix[0]))[idx])
        if need_occ:
            if bandwidth_exponent == 0.0:
                ls, rv = lattice_functionals(p.positions[: idx[-1] + 1], dt, eps, idx, subdiv)
            else:
                ls, rv = lattice_functionals_scaled(p.positions, dt, eps_levels, idx, subdiv)
            out.extend([ls, rv])
        return out

    rows = ensemble.map(reduce, threads)
    col = 0
    res = LadderSamples(ladder.times, eps=float(eps) if need_occ else None,
                        meta={"master_seed": ensemble.master_seed, "n_paths": ensemble.n_paths,
                              "dt": dt, "bandwidth_exponent": bandwidth_exponent})
    if Functional.RunningSup in functionals:
        res.running_sup = np.array([r[col] for r in rows])
        col += 1
    if need_occ:
        ls = np.array([r[col] for r in rows])
        rv = np.array([r[col + 1] for r in rows])
        res.sup_local_time = ls if Functional.SupLocalTime in functionals else None
        res.range = rv if Functional.Range in functionals else None
    return res


def _as_samples(source, ladder, functionals, threads=None) -> LadderSamples:
    if isinstance(source, LadderSamples):
        if ladder is None:
            return source
        return source.restrict(ladder.times)
    if isinstance(source, PathEnsemble):
        return ladder_samples(source, ladder, functionals, threads=threads)
    raise DomainError("expected a PathEnsemble or LadderSamples")


@dataclass(frozen=True)
class RegressionReport:
    slope: float
    intercept: float
    r2: float
    residual_band: float
    probe: str
    x: tuple = ()
    y: tuple = ()

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "residual_band": self.residual_band, "probe": self.probe}


def log_log_regression(x, y, probe: str = "") -> RegressionReport:
    """Least-squares fit of ``log y`` on ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(x <= 0):
        raise StatisticalError("log-log regression needs positive data")
    lx, ly = np.log(x), np.log(y)
    res = stats.linregress(lx, ly)
    resid = ly - (res.intercept + res.slope * lx)
    r2 = float(res.rvalue ** 2) if np.ptp(ly) > 0 else 1.0
    return RegressionReport(float(res.slope), float(res.intercept), r2,
                            float(np.max(np.abs(resid))), probe, tuple(x), tuple(y))


def quantile_scaling(source, functional: Functional, ladder: DyadicLadder | None = None,
                     q: float = 0.5, threads: int | None = None) -> RegressionReport:
    """Slope of ``log(q-quantile of F(t_k))`` against ``log t_k``."""
    if not 0 < q < 1:
        raise DomainError("quantile level must lie in (0, 1)")
    functional = Functional(functional)
    s = _as_samples(source, ladder, [functional], threads)
    qs = np.quantile(np.sort(s.get(functional), axis=0), q, axis=0)
    if np.any(qs <= 0):
        raise StatisticalError(f"{functional.value} quantile q={q} is zero at some ladder time")
    return log_log_regression(s.times, qs, f"{functional.value} q={q} over t in "
                              f"[{s.times[0]:.4g}, {s.times[-1]:.4g}]")


@dataclass
class LilStatistic:
    kind: RateKind
    values: np.ndarray
    times: np.ndarray
    extremum: str              # "max" for limsup kinds, "min" for liminf kinds

    def quantiles(self, qs=(0.1, 0.25, 0.5, 0.75, 0.9)) -> dict:
        v = np.sort(self.values)
        return {float(q): float(np.quantile(v, q)) for q in qs}

    @property
    def median(self) -> float:
        return float(np.median(self.values))

    @property
    def iqr(self) -> float:
        q = self.quantiles((0.25, 0.75))
        return q[0.75] - q[0.25]

    def summary(self) -> dict:
        return {"kind": self.kind.value, "extremum": self.extremum, "n_paths": int(self.values.size),
                "median": self.median, "iqr": self.iqr,
                "t_min": float(self.times[0]), "t_max": float(self.times[-1])}

    def write_csv(self, filename) -> None:
        with open(filename, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_index", "value"])
            for i, v in enumerate(self.values):
                w.writerow([i, repr(float(v))])

    def write_json(self, filename) -> None:
        with open(filename, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _normalized(values: np.ndarray, times, V, phi, kind: RateKind, extremum: str) -> LilStatistic:
    rate = np.asarray(lil_rate(V, phi, kind, times), dtype=float)
    ratio = values / rate[None, :]
    out = ratio.max(axis=1) if extremum == "max" else ratio.min(axis=1)
    return LilStatistic(kind, out, np.asarray(times), extremum)


def chung_statistic(source, V: ScaleFunction, phi: ScaleFunction, mode: LilMode = LilMode.LargeTime,
                    ladder: DyadicLadder | None = None, threads: int | None = None) -> LilStatistic:
    """Per-path ``min_k sup_{s<=t_k}|X_s| / phi^-1(t_k / loglog)``."""
    mode = LilMode(mode)
    if ladder is not None:
        ladder.check_domain(mode)
    s = _as_samples(source, ladder, [Functional.RunningSup], threads)
    _check_times(s.times, mode)
    kind = RateKind.ChungSmall if mode is LilMode.SmallTime else RateKind.ChungLarge
    return _normalized(s.get(Functional.RunningSup), s.times, V, phi, kind, "min")


def _check_times(times, mode: LilMode) -> None:
    if mode is LilMode.LargeTime and not np.all(times > math.e):
        raise LadderError("large-time statistics need every ladder time > e")
    if mode is LilMode.SmallTime and not np.all(times < math.exp(-1)):
        raise LadderError("small-time statistics need every ladder time < 1/e")


def _require_local_time(source) -> None:
    spec = getattr(source, "spec", None)
    if spec is not None and not spec.beta_eff > 1.0:
        raise DomainError("local-time statistics need effective index > 1")


def local_time_limsup_statistic(source, V: ScaleFunction, phi: ScaleFunction,
                                ladder: DyadicLadder | None = None,
                                threads: int | None = None) -> LilStatistic:
    """Per-path ``max_k L*(t_k) / (t_k / V(phi^-1(t_k / loglog t_k)))``."""
    _require_local_time(source)
    s = _as_samples(source, ladder, [Functional.SupLocalTime], threads)
    _check_times(s.times, LilMode.LargeTime)
    return _normalized(s.get(Functional.SupLocalTime), s.times, V, phi, RateKind.LocalLimsup, "max")


def local_time_liminf_statistic(source, V: ScaleFunction, phi: ScaleFunction,
                                ladder: DyadicLadder | None = None,
                                threads: int | None = None) -> LilStatistic:
    """Per-path ``min_k L*(t_k) / ((t_k/loglog t_k) / V(phi^-1(t_k / loglog t_k)))``."""
    _require_local_time(source)
    s = _as_samples(source, ladder, [Functional.SupLocalTime], threads)
    _check_times(s.times, LilMode.LargeTime)
    return _normalized(s.get(Functional.SupLocalTime), s.times, V, phi, RateKind.LocalLiminf, "min")


def range_lil_statistics(source, V: ScaleFunction, phi: ScaleFunction,
                         ladder: DyadicLadder | None = None,
                         threads: int | None = None) -> tuple[LilStatistic, LilStatistic]:
    """``(limsup, liminf)`` range statistics with the range LIL normalizations."""
    s = _as_samples(source, ladder, [Functional.Range], threads)
    _check_times(s.times, LilMode.LargeTime)
    r = s.get(Functional.Range)
    return (_normalized(r, s.times, V, phi, RateKind.RangeLimsup, "max"),
            _normalized(r, s.times, V, phi, RateKind.RangeLiminf, "min"))


def pairing_factor(times) -> float:
    """Largest ``liminf/limsup`` ratio the pairing of rates allows on a ladder.

    Both L* and range rates of the pair differ by one factor ``loglog t``, so
    evaluating both at the first ladder time gives
    ``liminf <= max(1, loglog t_0) * limsup`` on every path.
    """
    return max(1.0, math.log(math.log(float(np.min(times)))))


def median_shift(short: LilStatistic, long: LilStatistic) -> float:
    """Relative change of the ensemble median between two ladder lengths."""
    return abs(long.median - short.median) / abs(short.median)


def grid_refinement_check(ensemble: PathEnsemble, ladder: DyadicLadder, V: ScaleFunction,
                          phi: ScaleFunction, factor: int = 4, threads: int | None = None):
    """Chung statistic on the ensemble grid and on the grid ``factor`` times coarser.

    Both use the same paths (the coarse path reads the fine one every
    ``factor`` steps), so the median shift isolates the grid bias of the
    running supremum.  Returns ``(fine, coarse, median shift)``.
    """
    idx = ladder.indices(ensemble.grid)
    if np.any(idx % factor):
        raise LadderError(f"ladder times must be multiples of {factor} grid steps")

    def reduce(p):
        c = coarsen(p, factor)
        fine = np.maximum.accumulate(np.abs(p.positions - p.positions[0]))[idx]
        rough = np.maximum.accumulate(np.abs(c.positions - c.positions[0]))[idx // factor]
        return fine, rough

    rows = ensemble.map(reduce, threads)
    fine = LadderSamples(ladder.times, running_sup=np.array([r[0] for r in rows]))
    rough = LadderSamples(ladder.times, running_sup=np.array([r[1] for r in rows]))
    mode = LilMode.LargeTime if ladder.times[0] > math.e else LilMode.SmallTime
    a = chung_statistic(fine, V, phi, mode)
    b = chung_statistic(rough, V, phi, mode)
    return a, b, median_shift(a, b)


@dataclass(frozen=True)
class ConfinementCurve:
    n: np.ndarray
    p_hat: np.ndarray
    ratio: float
    r2: float
    trials: int
    c0: float


def _exit_indices(spec, grid: TimeGrid, r: float, trials: int, seed: int,
                  threads: int | None) -> np.ndarray:
    ens = build_ensemble(spec, grid, trials, seed, threads or 1)

    def reduce(p):
        e = first_exit_time(p, r)
        return grid.n_steps + 1 if e.censored else e.index

    return ens.map_array(reduce, threads)


def confinement_curve(spec, phi: ScaleFunction, r: float, n_max: int, trials: int, seed: int,
                      c0: float = 1.0, dt: float | None = None,
                      threads: int | None = None) -> ConfinementCurve:
    """Fraction of paths staying in ``[-r, r]`` up to ``c0 n phi(r)`` and a geometric fit.

    The fit regresses ``log p_n`` on ``n`` for ``n = 1..n_max``; ``ratio`` is
    ``exp(slope)``.  ``dt`` defaults to ``c0 phi(r) / 100``.
    """
    if not r > 0:
        raise DomainError("radius must be positive")
    if n_max < 4:
        raise DomainError("n_max must be at least 4")
    unit = c0 * float(phi(r))
    if dt is None:
        dt = unit / 100.0
    steps_per_unit = int(round(unit / dt))
    if abs(steps_per_unit * dt - unit) > 1e-9 * unit:
        raise DomainError("c0 phi(r) must be a multiple of dt")
    grid = TimeGrid(dt, steps_per_unit * n_max)
    exits = _exit_indices(spec, grid, r, trials, seed, threads)
    n = np.arange(n_max + 1)
    p = np.array([np.mean(exits > k * steps_per_unit) for k in n])
    if p[-1] == 0.0 or p[-1] == 1.0:
        raise StatisticalError(f"p_n at n_max is {p[-1]}; adjust c0")
    res = stats.linregress(n[1:], np.log(p[1:]))
    return ConfinementCurve(n, p, float(math.exp(res.slope)), float(res.rvalue ** 2), trials, c0)


@dataclass(frozen=True)
class ExitTailCurve:
    t: np.ndarray
    p_hat: np.ndarray
    slope: float
    r2: float
    excluded: tuple
    trials: int


def exit_tail_curve(spec, phi: ScaleFunction, r: float, t_grid, trials: int, seed: int,
                    dt: float | None = None, threads: int | None = None) -> ExitTailCurve:
    """Empirical ``P(tau_{B(0,r)} <= t)`` on ``t_grid`` and its log-log slope.

    Points with zero exits are excluded from the fit and reported.
    """
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    if not (t_grid[0] > 0 and t_grid[-1] < phi(r)):
        raise DomainError("t grid must lie in (0, phi(r))")
    if dt is None:
        dt = float(t_grid[0]) / 4.0
    idx = np.rint(t_grid / dt).astype(np.int64)
    if np.any(np.abs(idx * dt - t_grid) > 1e-9 * t_grid):
        raise DomainError("t grid must consist of multiples of dt")
    grid = TimeGrid(dt, int(idx[-1]))
    exits = _exit_indices(spec, grid, r, trials, seed, threads)
    p = np.array([np.mean(exits <= k) for k in idx])
    keep = p > 0
    excluded = tuple(float(t) for t in t_grid[~keep])
    if keep.sum() < 2:
        raise StatisticalError("fewer than two t values with exits")
    rep = log_log_regression(t_grid[keep], p[keep])
    return ExitTailCurve(t_grid, p, rep.slope, rep.r2, excluded, trials)


@dataclass(frozen=True)
class UlilTable:
    b: np.ndarray
    sup_exceedance: np.ndarray
    monotone: bool
    final_below: bool

    @property
    def ok(self) -> bool:
        return self.monotone and self.final_below


def ulil_hypothesis_check(values, times, phi_rate: Callable, b_grid, level: float = 0.05) -> UlilTable:
    """``max_k P(F_{t_k} >= b phi_rate(t_k))`` for each ``b``.

    ``values`` has shape ``(n_paths, n_times)``.
    """
    values = np.asarray(values, dtype=float)
    b_grid = np.asarray(b_grid, dtype=float)
    rate = np.array([float(phi_rate(t)) for t in times])
    table = np.array([np.max(np.mean(values >= b * rate[None, :], axis=0)) for b in b_grid])
    monotone = bool(np.all(np.diff(table) <= 0))
    return UlilTable(b_grid, table, monotone, bool(table[-1] < level))


def integral_test_path_consistency(source, phi: Callable, verdict: Verdict,
                                   ladder: DyadicLadder | None = None, k0: int | None = None,
                                   scale: float = 1.0, threads: int | None = None):
    """Fraction of paths with ``running_sup(t_k) <= scale * phi(t_k)`` for all ``k >= k0``.

    For a convergent test function the fraction should approach one, for a
    divergent one zero.  ``k0`` defaults to the middle of the ladder.
    Returns ``(fraction, scale, verdict)``.
    """
    s = _as_samples(source, ladder, [Functional.RunningSup], threads)
    sup = s.get(Functional.RunningSup)
    if k0 is None:
        k0 = s.times.size // 2
    bound = scale * np.array([float(phi(t)) for t in s.times[k0:]])
    frac = float(np.mean(np.all(sup[:, k0:] <= bound[None, :], axis=1)))
    return frac, scale, Verdict(verdict)
