"""
Local times, ranges and Kac moments.

The local time at ``x`` is estimated from the grid path by the occupation
density of the ball ``B(x, eps)`` (Lebesgue measure ``2 eps``):

    l(x, t_k) = dt / (2 eps) * #{0 <= j < k : |X_{t_j} - x| <= eps},

i.e. a left Riemann sum of ``int_0^t 1_B(X_s) ds``.  The range is estimated
by counting disjoint cells ``floor(X / eps)`` visited up to ``t_k``.

For long paths :func:`lattice_functionals` evaluates ``L*(t)`` and the range
at ladder times without materializing a dense center grid; it coincides with
:func:`local_time` on the lattice of centers ``i * eps / subdiv``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, stats

from .errors import CoverageError, DomainError, NumericError, StatisticalError
from .kernel_oracle import QuadConfig, diagonal_kernel, heat_kernel, resolvent
from .process_sim import PathEnsemble, PathSample, TimeGrid
from .scale_functions import ScaleFunction

__all__ = [
    "OccupationField",
    "RangeEstimate",
    "MomentReport",
    "TailFit",
    "GarsiaReport",
    "default_bandwidth",
    "local_time",
    "local_time_at",
    "occupation_identity_check",
    "sup_local_time",
    "range_estimate",
    "lattice_functionals",
    "lattice_functionals_scaled",
    "lsup_range_identity_check",
    "local_time_samples",
    "richardson",
    "kac_moments_exact",
    "kac_moments_riemann",
    "kac_product_bound_check",
    "local_time_tail_check",
    "garsia_modulus",
    "modulus_profile",
    "pooled_modulus_exponent",
    "discounted_local_time",
    "resolvent_local_identity_check",
    "write_field_csv",
]


def default_bandwidth(dt: float, beta_eff: float) -> float:
    """Half the spatial scale of one increment, ``0.5 * dt**(1/beta)``."""
    return 0.5 * dt ** (1.0 / beta_eff)


def _positions(path):
    if isinstance(path, PathSample):
        return path.positions, path.grid.dt
    raise DomainError("expected a PathSample")


def _ladder_indices(grid: TimeGrid, times) -> np.ndarray:
    if times is None:
        return np.array([grid.n_steps])
    idx = np.atleast_1d(grid.index_of(times))
    if np.any(np.diff(idx) < 0):
        raise DomainError("ladder times must be non-decreasing")
    return idx


@dataclass
class OccupationField:
    centers: np.ndarray
    eps: float
    times: np.ndarray
    values: np.ndarray            # shape (n_centers, n_times)
    dt: float
    visited: tuple[float, float] = (0.0, 0.0)   # min/max position up to the last time
    path: PathSample | None = field(default=None, repr=False)

    @property
    def spacing(self) -> float:
        return float(np.diff(self.centers).mean()) if self.centers.size > 1 else 2 * self.eps


def local_time(path: PathSample, centers, eps: float, times=None) -> OccupationField:
    """Occupation-density local time at each center and ladder time."""
    if not eps > 0:
        raise DomainError("bandwidth must be positive")
    centers = np.asarray(centers, dtype=float)
    if np.any(np.diff(centers) < 0):
        raise DomainError("centers must be sorted")
    pos, dt = _positions(path)
    idx = _ladder_indices(path.grid, times)
    values = np.empty((centers.size, idx.size))
    sorted_prefix = np.empty(0)
    done = 0
    for m, k in enumerate(idx):
        if k > done:
            sorted_prefix = np.sort(np.concatenate([sorted_prefix, pos[done:k]]))
            done = k
        cnt = (np.searchsorted(sorted_prefix, centers + eps, side="right")
               - np.searchsorted(sorted_prefix, centers - eps, side="left"))
        values[:, m] = cnt * (dt / (2.0 * eps))
    last = pos[: idx[-1] + 1]
    return OccupationField(centers, float(eps), idx * dt, values, dt,
                           (float(last.min()), float(last.max())), path)


def local_time_at(positions: np.ndarray, dt: float, x: float, eps: float,
                  ladder_idx=None) -> np.ndarray:
    """Fast single-center version returning ``l(x, t_k)`` at ladder indices."""
    hit = (np.abs(np.asarray(positions) - x) <= eps).astype(np.int64)
    csum = np.concatenate([[0], np.cumsum(hit)])
    if ladder_idx is None:
        ladder_idx = [len(positions) - 1]
    return csum[np.asarray(ladder_idx)] * (dt / (2.0 * eps))


def occupation_identity_check(path: PathSample, field: OccupationField, f_values,
                              t_index: int = -1) -> float:
    """Relative discrepancy between ``int_0^t f(X_s) ds`` and ``sum f(x_i) l(x_i,t) h``.

    ``f_values`` tabulates a step function on the centers: ``f(x) = f_i`` on
    the cell of width ``h`` (center spacing) around ``x_i`` and zero outside.
    """
    f_values = np.asarray(f_values, dtype=float)
    if f_values.shape != field.centers.shape:
        raise DomainError("f must be tabulated on the field's centers")
    pos, dt = _positions(path)
    k = int(round(field.times[t_index] / dt))
    t = k * dt
    if t == 0:
        return 0.0
    h = field.spacing
    cell = np.rint((pos[:k] - field.centers[0]) / h).astype(np.int64)
    inside = (cell >= 0) & (cell < field.centers.size)
    lhs = dt * float(f_values[cell[inside]].sum())
    rhs = float(np.sum(f_values * field.values[:, t_index]) * h)
    return abs(lhs - rhs) / t


def _coverage(field: OccupationField, t_index):
    lo, hi = field.visited
    if lo < field.centers[0] - field.eps or hi > field.centers[-1] + field.eps:
        raise CoverageError(
            f"visited set [{lo:.4g}, {hi:.4g}] not covered by centers "
            f"[{field.centers[0]:.4g}, {field.centers[-1]:.4g}]")


def sup_local_time(field: OccupationField) -> np.ndarray:
    """``L*(t_k) = max_i l(x_i, t_k)``; requires centers covering the visited set."""
    _coverage(field, -1)
    return field.values.max(axis=0)


@dataclass(frozen=True)
class RangeEstimate:
    eps: float
    times: np.ndarray
    counts: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.counts * self.eps


def range_estimate(path: PathSample, eps: float, times=None) -> RangeEstimate:
    """``R(t_k) = eps * #{distinct floor(X_{t_j}/eps) : j <= k}``."""
    if not eps > 0:
        raise DomainError("cell size must be positive")
    pos, dt = _positions(path)
    idx = _ladder_indices(path.grid, times)
    cells = np.floor(pos / eps).astype(np.int64)
    counts = np.array([np.unique(cells[: k + 1]).size for k in idx])
    return RangeEstimate(float(eps), idx * dt, counts)


def _merge_counts(keys, counts, new_keys):
    all_keys = np.concatenate([keys, new_keys])
    all_w = np.concatenate([counts, np.ones(new_keys.size, dtype=np.int64)])
    uniq, inv = np.unique(all_keys, return_inverse=True)
    return uniq, np.bincount(inv, weights=all_w).astype(np.int64)


def lattice_functionals(positions: np.ndarray, dt: float, eps: float, ladder_idx,
                        subdiv: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """``(L*(t_k), R(t_k))`` at ladder indices using sparse cell counts.

    Centers are the lattice ``i * h`` with ``h = eps / subdiv``; the closed
    ball ``[i h - eps, i h + eps]`` is the union of ``2 subdiv`` half-open fine
    cells plus its right endpoint, so the maximal ball count is the maximal
    window sum (with points sitting exactly on the right edge added), attained
    at a window whose first cell is occupied.
    """
    h = eps / subdiv
    width = 2 * subdiv
    pos = np.asarray(positions, dtype=float)
    fine = np.floor(pos / h).astype(np.int64)
    on_edge = fine * h == pos
    keys = np.empty(0, dtype=np.int64)
    counts = np.empty(0, dtype=np.int64)
    ekeys = np.empty(0, dtype=np.int64)
    ecounts = np.empty(0, dtype=np.int64)
    lstar = np.empty(len(ladder_idx))
    rng_counts = np.empty(len(ladder_idx), dtype=np.int64)
    done = 0
    for m, k in enumerate(ladder_idx):
        k = int(k)
        if k > done:
            keys, counts = _merge_counts(keys, counts, fine[done:k])
            new_edges = fine[done:k][on_edge[done:k]]
            if new_edges.size:
                ekeys, ecounts = _merge_counts(ekeys, ecounts, new_edges)
            done = k
        if keys.size:
            csum = np.concatenate([[0], np.cumsum(counts)])
            j = np.searchsorted(keys, keys + width, side="left")
            window = csum[j] - csum[:-1]
            if ekeys.size:
                right = keys + width
                e = np.minimum(np.searchsorted(ekeys, right), ekeys.size - 1)
                window = window + np.where(ekeys[e] == right, ecounts[e], 0)
            lstar[m] = window.max() * (dt / (2.0 * eps))
        else:
            lstar[m] = 0.0
        # range uses j <= k: the occupied fine cells plus the current one
        coarse = keys // subdiv
        n_coarse = int(np.count_nonzero(np.diff(coarse))) + 1 if coarse.size else 0
        last = fine[k] // subdiv
        pos_in = np.searchsorted(coarse, last)
        rng_counts[m] = n_coarse + int(pos_in >= coarse.size or coarse[pos_in] != last)
    return lstar, rng_counts * eps


def lattice_functionals_scaled(positions: np.ndarray, dt: float, eps_levels, ladder_idx,
                               subdiv: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """As :func:`lattice_functionals` with a separate bandwidth per ladder time.

    With ``eps_k`` proportional to ``t_k**(1/beta)`` the estimator inherits the
    self-similarity of a stable path, so its relative bias is the same at
    every ladder time and cancels in exponent regressions.
    """
    pos = np.asarray(positions)
    lstar = np.empty(len(ladder_idx))
    rvals = np.empty(len(ladder_idx))
    for m, (k, eps) in enumerate(zip(ladder_idx, eps_levels)):
        ls, rv = lattice_functionals(pos[: int(k) + 1], dt, float(eps), [int(k)], subdiv)
        lstar[m], rvals[m] = ls[0], rv[0]
    return lstar, rvals


def lsup_range_identity_check(field_lstar, range_est, times=None, allowance: float = 0.2):
    """Margin ``min_k L*(t_k) R(t_k) / t_k`` and whether it clears ``1 - allowance``.

    Accepts an :class:`OccupationField` with a :class:`RangeEstimate`, or
    plain arrays ``(lstar, range_values, times)``.
    """
    if isinstance(field_lstar, OccupationField):
        lstar = sup_local_time(field_lstar)
        times = field_lstar.times
    else:
        lstar = np.asarray(field_lstar, dtype=float)
    rvals = range_est.values if isinstance(range_est, RangeEstimate) else np.asarray(range_est)
    times = np.asarray(times, dtype=float)
    keep = times > 0
    margin = float(np.min(lstar[keep] * rvals[keep] / times[keep]))
    return margin, margin >= 1.0 - allowance


def local_time_samples(ensemble: PathEnsemble, y: float, t: float, eps_values,
                       threads: int | None = None) -> np.ndarray:
    """Per-path ``l(y, t)`` for each bandwidth; shape ``(n_paths, n_eps)``."""
    k = ensemble.grid.index_of(t)
    dt = ensemble.grid.dt
    eps_values = [float(e) for e in np.atleast_1d(eps_values)]

    def reduce(p):
        pos = p.positions[:k]
        return [np.count_nonzero(np.abs(pos - y) <= e) * (dt / (2.0 * e)) for e in eps_values]

    return np.array(ensemble.map(reduce, threads), dtype=float).reshape(-1, len(eps_values))


def richardson(coarse, fine, order: float, ratio: float = 2.0):
    """Eliminate an ``eps**order`` bias from estimates at ``eps`` and ``eps/ratio``."""
    w = ratio ** order
    return (w * np.asarray(fine) - np.asarray(coarse)) / (w - 1.0)


@dataclass(frozen=True)
class MomentReport:
    order: int
    exact: float
    exact_err: float
    mc: float | None = None
    mc_stderr: float | None = None
    product_bound: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _require_local_time(spec):
    if not spec.beta_eff > 1.0:
        raise DomainError(
            f"local times need effective index > 1 (got {spec.beta_eff}); "
            "the diagonal kernel is not integrable")


def _simplex_moment(spec, x_minus_y: float, t: float, n: int, m: int, diag,
                    quad_config) -> float:
    beta = spec.beta_eff
    q = 1.0 / (1.0 - 1.0 / beta)        # g = T u**q regularizes g**(-1/beta)
    u, w = np.polynomial.legendre.leggauss(m)
    u = 0.5 * (u + 1.0)
    w = 0.5 * w
    jac_u = q * u ** (q - 1.0)

    # first gap: p(g1, x - y); on the diagonal it carries the same singularity
    g1 = t * u ** q
    w1 = w * t * jac_u
    if x_minus_y == 0.0:
        first = diag(g1)
    else:
        first = np.array([heat_kernel(spec, g, x_minus_y, quad_config).density for g in g1])

    def inner(rem: np.ndarray, k: int) -> np.ndarray:
        """``int over k ordered gaps with sum <= rem of prod p(g, 0)``."""
        if k == 0:
            return np.ones_like(rem)
        g = rem[:, None] * u[None, :] ** q
        wt = rem[:, None] * (w * jac_u)[None, :]
        vals = diag(g) * inner((rem[:, None] - g).ravel(), k - 1).reshape(g.shape)
        return (wt * vals).sum(axis=1)

    return math.factorial(n) * float(np.sum(w1 * first * inner(t - g1, n - 1)))


def kac_moments_exact(spec, x: float, y: float, t: float, n: int,
                      quad_config: QuadConfig | None = None, order: int = 48):
    """``E^x l(y, t)**n`` as ``n!`` times a time-ordered simplex integral.

    Tensorized Gauss-Legendre over successive gaps after the power change of
    variables that removes the ``s**(-1/beta)`` diagonal singularity.
    Returns ``(value, error estimate)``; the error is the change when the
    order is halved.
    """
    if n not in (1, 2, 3):
        raise DomainError("Kac moments are implemented for n in {1, 2, 3}")
    if not t > 0:
        raise DomainError("t must be positive")
    _require_local_time(spec)
    diag = diagonal_kernel(spec, quad_config)
    d = float(x) - float(y)
    hi = _simplex_moment(spec, d, t, n, order, diag, quad_config)
    lo = _simplex_moment(spec, d, t, n, order // 2, diag, quad_config)
    return hi, abs(hi - lo)


def kac_moments_riemann(spec, t: float, n_cells: int = 400, grading: float = 4.0) -> float:
    """Brute-force second moment ``E^0 l(0,t)**2`` on a graded product grid.

    Midpoint rule over cells ``(s_i, s_j)`` of a power-graded mesh of
    ``[0, t]``, keeping cells with ``s_i + s_j <= t``; an independent check on
    the simplex quadrature.
    """
    _require_local_time(spec)
    diag = diagonal_kernel(spec)
    edges = t * np.linspace(0.0, 1.0, n_cells + 1) ** grading
    mids = 0.5 * (edges[1:] + edges[:-1])
    widths = np.diff(edges)
    f = diag(mids) * widths
    # cell (i, j) is kept when its midpoint sum fits in [0, t]
    keep = (mids[:, None] + mids[None, :]) <= t
    return 2.0 * float(np.sum(f[:, None] * f[None, :] * keep))


def kac_product_bound_check(spec, x: float, y: float, t: float, n: int,
                            quad_config: QuadConfig | None = None):
    """``(m_n, n! m_1(x,y,t) m_1(y,y,t)**(n-1))``; raises if ``m_n`` exceeds the product."""
    exact, err = kac_moments_exact(spec, x, y, t, n, quad_config)
    m1_xy = kac_moments_exact(spec, x, y, t, 1, quad_config)[0]
    m1_yy = kac_moments_exact(spec, y, y, t, 1, quad_config)[0]
    product = math.factorial(n) * m1_xy * m1_yy ** (n - 1)
    if exact > product * (1 + 1e-9) + err:
        raise NumericError(f"Kac moment {exact} exceeds product bound {product}")
    return exact, product


@dataclass(frozen=True)
class TailFit:
    slope: float
    intercept: float
    r2: float
    b: np.ndarray
    log_survival: np.ndarray
    n_samples: int


def local_time_tail_check(samples, t: float, V: ScaleFunction, phi: ScaleFunction,
                          n_b: int = 40, min_exceed: int = 50, min_samples: int = 10_000) -> TailFit:
    """Linear fit of ``log P(l >= b t / V(phi^-1(t)))`` against ``b``.

    ``b`` runs over an even grid up to the largest level with at least
    ``min_exceed`` exceedances.
    """
    samples = np.sort(np.asarray(samples, dtype=float))
    n = samples.size
    if n < min_samples:
        raise StatisticalError(f"tail fit needs >= {min_samples} samples, got {n}")
    unit = t / V(phi.inverse(t))
    scaled = samples / unit
    b_max = scaled[n - min_exceed]
    if not b_max > 0:
        raise StatisticalError("fewer than min_exceed positive samples")
    b = np.linspace(0.0, b_max, n_b)
    exceed = n - np.searchsorted(scaled, b, side="left")
    if exceed.min() < min_exceed:
        raise StatisticalError("insufficient exceedances")
    logs = np.log(exceed / n)
    res = stats.linregress(b, logs)
    return TailFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2), b, logs, n)


@dataclass(frozen=True)
class GarsiaReport:
    gamma: float
    violation_rate: float
    c1: float
    c2: float
    modulus_exponent: float
    n_calibration: int
    n_holdout: int


def garsia_modulus(centers, values, c_star: float, U: Callable, V: Callable,
                   H: tuple[float, float], seed: int = 0, c2: float = 1.0,
                   h_range: tuple[float, float] | None = None,
                   eps: float | None = None) -> GarsiaReport:
    """Garsia functional of a local-time profile and a calibrated modulus bound.

    ``Gamma(H) = sum_{x != y in H} (exp(c_star |f(x)-f(y)| / U(|x-y|)) - 1) h**2``.
    The bound ``c1 int_0^d Psi^-1(c2 Gamma / V(u)**2) U(u) du / u`` (with
    ``Psi^-1(y) = log(1 + y) / c_star``) is calibrated on a random half of
    the pairs (smallest ``c1`` that holds there, ``c2`` fixed) and the
    violation rate is measured on the other half.  ``modulus_exponent`` is the
    least-squares slope of ``log max_{|x-y|=h} |f(x)-f(y)|`` against ``log h``
    over ``h_range`` (default ``[2 eps, 0.5]``).
    """
    centers = np.asarray(centers, dtype=float)
    values = np.asarray(values, dtype=float)
    inside = (centers >= H[0]) & (centers <= H[1])
    xs, fs = centers[inside], values[inside]
    if xs.size < 4:
        raise DomainError("too few centers inside H")
    h = float(np.diff(xs).mean())
    i, j = np.triu_indices(xs.size, k=1)
    d = xs[j] - xs[i]
    df = np.abs(fs[j] - fs[i])
    arg = c_star * df / U(d)
    if np.any(arg > 700):
        raise NumericError("Gamma(H) overflows; use a smaller c_star")
    gamma = 2.0 * float(np.sum(np.expm1(arg))) * h * h

    # RHS integral on the distinct separations (multiples of h)
    steps = np.rint(d / h).astype(np.int64)
    uniq = np.unique(steps)

    def integrand(u):
        return np.log1p(c2 * gamma / V(u) ** 2) / c_star * U(u) / u

    rhs_u = np.empty(uniq.size)
    for m, s in enumerate(uniq):
        rhs_u[m] = integrate.quad(integrand, 0.0, s * h, limit=200)[0] if gamma > 0 else 0.0
    rhs = rhs_u[np.searchsorted(uniq, steps)]

    rng = np.random.default_rng(seed)
    calib = rng.random(d.size) < 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, df / rhs, np.where(df > 0, np.inf, 0.0))
    c1 = float(ratio[calib].max()) if calib.any() else 0.0
    hold = ~calib
    viol = float(np.mean(df[hold] > c1 * rhs[hold] * (1 + 1e-12))) if hold.any() else 0.0

    if h_range is None:
        h_range = (2.0 * (eps if eps is not None else h), 0.5)
    hs, mod = modulus_profile(xs, fs, h_range)
    if hs.size >= 2 and np.all(mod > 0):
        expo = float(np.polyfit(np.log(hs), np.log(mod), 1)[0])
    else:
        expo = float("nan")
    return GarsiaReport(gamma, viol, c1, c2, expo, int(calib.sum()), int(hold.sum()))


def modulus_profile(centers, values, h_range: tuple[float, float]):
    """``(h, max_{|x-y|=h} |f(x) - f(y)|)`` for lags ``h`` in ``h_range``.

    Lags are the multiples of the (uniform) center spacing.
    """
    xs = np.asarray(centers, dtype=float)
    fs = np.asarray(values, dtype=float)
    h = float(np.diff(xs).mean())
    lo = max(1, int(math.ceil(h_range[0] / h - 1e-9)))
    hi = min(xs.size - 1, int(math.floor(h_range[1] / h + 1e-9)))
    lags = np.arange(lo, hi + 1)
    mod = np.array([np.abs(fs[s:] - fs[:-s]).max() for s in lags])
    return lags * h, mod


def pooled_modulus_exponent(profiles) -> float:
    """Log-log slope of the cross-path median modulus on a shared lag grid."""
    hs = profiles[0][0]
    for h, _ in profiles:
        if h.shape != hs.shape or not np.allclose(h, hs):
            raise DomainError("modulus profiles must share one lag grid")
    med = np.median(np.array([m for _, m in profiles]), axis=0)
    if np.any(med <= 0):
        raise StatisticalError("zero median modulus at some lag")
    return float(np.polyfit(np.log(hs), np.log(med), 1)[0])


def discounted_local_time(positions: np.ndarray, dt: float, y: float, eps: float,
                          lam: float) -> float:
    """``int_0^T exp(-lam t) dl(y, t)`` for the step-function estimator.

    The estimator jumps by ``dt/(2 eps)`` at ``t_{j+1}`` for each grid
    point ``X_{t_j}`` in the ball, so the Stieltjes integral is a finite sum.
    """
    pos = np.asarray(positions)[:-1]
    hit = np.abs(pos - y) <= eps
    jumps = dt * (np.flatnonzero(hit) + 1)
    return float(np.exp(-lam * jumps).sum() * (dt / (2.0 * eps)))


def resolvent_local_identity_check(ensemble: PathEnsemble, spec, lam: float, y: float,
                                   eps_pair: tuple[float, float] | None = None,
                                   tail_tol: float = 1e-6, abs_floor: float = 1e-3,
                                   quad_config: QuadConfig | None = None):
    """Compare the MC mean of ``int exp(-lam t) dl(y,t)`` with ``u^lam(x0, y)``.

    The horizon is the ensemble grid horizon ``T``; the neglected tail is at
    most ``exp(-lam T) u^lam(0, 0)`` and must stay below ``tail_tol``.
    Estimates at ``eps`` and ``eps/2`` are Richardson-combined with order
    ``beta - 1``.  Returns ``(discrepancy, mc_value, oracle_value, stderr)``;
    the discrepancy is relative unless the oracle is below ``abs_floor``,
    in which case it is absolute.
    """
    _require_local_time(spec)
    if not lam > 0:
        raise DomainError("lam must be positive")
    T = ensemble.grid.horizon
    u00 = resolvent(spec, lam, 0.0, quad_config)
    if math.exp(-lam * T) * u00 > tail_tol:
        raise DomainError(f"horizon T={T} leaves a tail of {math.exp(-lam * T) * u00:.2e}")
    if eps_pair is None:
        # the left Riemann sum near t = 0 carries an O(dt / eps) bias that the
        # Richardson step amplifies, so eps stays well above one increment
        e = 10 * default_bandwidth(ensemble.grid.dt, spec.beta_eff)
        eps_pair = (e, e / 2)
    e1, e2 = eps_pair
    dt = ensemble.grid.dt

    def reduce(p):
        return (discounted_local_time(p.positions, dt, y, e1, lam),
                discounted_local_time(p.positions, dt, y, e2, lam))

    vals = np.array(ensemble.map(reduce))
    combo = richardson(vals[:, 0], vals[:, 1], spec.beta_eff - 1.0, e1 / e2)
    mc = float(combo.mean())
    se = float(combo.std(ddof=1) / math.sqrt(combo.size)) if combo.size > 1 else math.nan
    x0 = ensemble.spec.start
    oracle = resolvent(spec, lam, y - x0, quad_config)
    diff = abs(mc - oracle)
    disc = diff if oracle < abs_floor else diff / oracle
    return disc, mc, oracle, se


def write_field_csv(field: OccupationField, filename) -> None:
    """CSV with columns ``center, t, value``."""
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["center", "t", "value"])
        for i, c in enumerate(field.centers):
            for k, t in enumerate(field.times):
                w.writerow([repr(float(c)), repr(float(t)), repr(float(field.values[i, k]))])
