"""
Structure functions for volume and time scale.

A :class:`ScaleFunction` is a strictly increasing map of the positive half-line
onto itself.  Two of them drive every rate in the package: the volume
function ``V`` (``V(r)`` is comparable to the measure of a ball of radius
``r``) and the time-scale function ``phi`` (``phi(r)`` is the typical time the
process needs to travel distance ``r``).

Four concrete kinds are provided:

* :class:`Power` -- ``r**exponent``
* :class:`StableMixture` -- ``sum_i w_i r**beta_i``
* :class:`InverseMixture` -- ``(sum_i w_i r**(-beta_i))**-1``
* :class:`Tabulated` -- log-log linear interpolation of sorted knots

All of them are immutable and callable on scalars or numpy arrays.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError, ExtrapolationError, NumericError

__all__ = [
    "ScaleFunction",
    "Power",
    "StableMixture",
    "InverseMixture",
    "Tabulated",
    "DoublingExponents",
    "RateKind",
    "Verdict",
    "Endpoint",
    "IntegralTestConfig",
    "IntegralTestResult",
    "eval_scale",
    "inverse_scale",
    "doubling_exponents",
    "lil_rate",
    "integral_test",
    "scale_from_dict",
]


def _check_positive(r):
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise DomainError(f"scale functions are defined on (0, inf); got {r!r}")
    return arr


def _unwrap(value, like):
    return float(value) if np.ndim(like) == 0 else value


class ScaleFunction:
    """Base class; subclasses implement ``_eval`` on positive float arrays."""

    kind: str = ""

    def __call__(self, r):
        arr = _check_positive(r)
        return _unwrap(self._eval(arr), r)

    def _eval(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, y, rel_tol: float = 1e-12):
        return inverse_scale(self, y, rel_tol)

    @property
    def exponent_bounds(self) -> tuple[float, float]:
        """Bounds ``(lo, hi)`` on the local log-log slope."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Power(ScaleFunction):
    exponent: float
    kind = "Power"

    def __post_init__(self):
        if not self.exponent > 0:
            raise DomainError("Power exponent must be positive")

    def _eval(self, r):
        return r ** self.exponent

    @property
    def exponent_bounds(self):
        return (self.exponent, self.exponent)

    def to_dict(self):
        return {"kind": self.kind, "params": {"exponent": float(self.exponent)}}


def _normalize_atoms(atoms) -> tuple[tuple[float, float], ...]:
    atoms = tuple((float(w), float(b)) for w, b in atoms)
    if not atoms:
        raise DomainError("a mixture needs at least one atom")
    weights = np.array([w for w, _ in atoms])
    indices = np.array([b for _, b in atoms])
    if np.any(weights <= 0) or np.any(indices <= 0):
        raise DomainError("mixture weights and indices must be positive")
    if not math.isclose(weights.sum(), 1.0, rel_tol=0, abs_tol=1e-9):
        raise DomainError(f"mixture weights must sum to 1, got {weights.sum()}")
    return atoms


@dataclass(frozen=True)
class StableMixture(ScaleFunction):
    """``phi(r) = sum_i w_i r**beta_i`` for a probability vector ``w``."""

    atoms: tuple[tuple[float, float], ...]
    kind = "StableMixture"

    def __post_init__(self):
        object.__setattr__(self, "atoms", _normalize_atoms(self.atoms))

    @property
    def weights(self):
        return np.array([w for w, _ in self.atoms])

    @property
    def indices(self):
        return np.array([b for _, b in self.atoms])

    def _eval(self, r):
        out = np.zeros_like(r)
        for w, b in self.atoms:
            out = out + w * r ** b
        return out

    @property
    def exponent_bounds(self):
        return (float(self.indices.min()), float(self.indices.max()))

    def to_dict(self):
        return {"kind": self.kind,
                "params": {"atoms": [[w, b] for w, b in self.atoms]}}


@dataclass(frozen=True)
class InverseMixture(StableMixture):
    """``phi(r) = (sum_i w_i r**-beta_i)**-1``."""

    kind = "InverseMixture"

    def _eval(self, r):
        out = np.zeros_like(r)
        for w, b in self.atoms:
            out = out + w * r ** (-b)
        return 1.0 / out


@dataclass(frozen=True)
class Tabulated(ScaleFunction):
    """Monotone table interpolated linearly in ``(log r, log f)``.

    Queries outside ``[r[0], r[-1]]`` raise :class:`ExtrapolationError`.
    """

    r: tuple[float, ...]
    values: tuple[float, ...]
    kind = "Tabulated"
    _log_r: np.ndarray = field(init=False, repr=False, compare=False)
    _log_v: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise DomainError("Tabulated needs two equal-length 1-d arrays of size >= 2")
        if np.any(r <= 0) or np.any(v <= 0):
            raise DomainError("Tabulated knots and values must be positive")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(v) <= 0):
            raise DomainError("Tabulated knots and values must be strictly increasing")
        object.__setattr__(self, "r", tuple(r.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "_log_r", np.log(r))
        object.__setattr__(self, "_log_v", np.log(v))

    @classmethod
    def from_function(cls, func: Callable, r_min: float, r_max: float, n: int = 400):
        r = np.geomspace(r_min, r_max, n)
        return cls(tuple(r), tuple(np.asarray(func(r), dtype=float)))

    @property
    def domain(self) -> tuple[float, float]:
        return (self.r[0], self.r[-1])

    def _eval(self, r):
        lr = np.log(r)
        lo, hi = self._log_r[0], self._log_r[-1]
        # one ulp of slack so that knots round-tripped through log are accepted
        slack = 4 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0)
        if np.any(lr < lo - slack) or np.any(lr > hi + slack):
            raise ExtrapolationError(
                f"query outside tabulated range [{self.r[0]}, {self.r[-1]}]")
        return np.exp(np.interp(np.clip(lr, lo, hi), self._log_r, self._log_v))

    @property
    def exponent_bounds(self):
        slopes = np.diff(self._log_v) / np.diff(self._log_r)
        return (float(slopes.min()), float(slopes.max()))

    def to_dict(self):
        return {"kind": self.kind,
                "params": {"r": list(self.r), "values": list(self.values)}}


_KINDS = {cls.kind: cls for cls in (Power, StableMixture, InverseMixture, Tabulated)}


def scale_from_dict(data: dict) -> ScaleFunction:
    """Inverse of ``ScaleFunction.to_dict``."""
    kind = data.get("kind")
    params = data.get("params", {})
    if kind not in _KINDS:
        raise DomainError(f"unknown scale function kind {kind!r}")
    if kind == "Power":
        return Power(float(params["exponent"]))
    if kind in ("StableMixture", "InverseMixture"):
        return _KINDS[kind](tuple(tuple(a) for a in params["atoms"]))
    return Tabulated(tuple(params["r"]), tuple(params["values"]))


def eval_scale(f: ScaleFunction, r):
    """Evaluate ``f(r)``; ``r`` must be positive."""
    return f(r)


def inverse_scale(f: ScaleFunction, y, rel_tol: float = 1e-12,
                  max_doublings: int = 200):
    """Solve ``f(r) = y`` by bisection on ``log r``.

    The initial bracket is ``[y**(1/hi), y**(1/lo)]`` (sorted) from the slope
    bounds of ``f``; it is widened by doubling in log-space when needed.
    """
    if np.ndim(y) != 0:
        return np.array([inverse_scale(f, float(v), rel_tol, max_doublings)
                         for v in np.ravel(y)]).reshape(np.shape(y))
    y = float(y)
    if not (y > 0 and math.isfinite(y)):
        raise DomainError(f"inverse_scale needs y > 0, got {y}")
    if isinstance(f, Power):
        return y ** (1.0 / f.exponent)

    log_y = math.log(y)
    if isinstance(f, Tabulated):
        lo_r, hi_r = f.domain
        if not (f.values[0] <= y <= f.values[-1]):
            raise ExtrapolationError(f"{y} outside the tabulated value range")
        a, b = math.log(lo_r), math.log(hi_r)
    else:
        e_lo, e_hi = f.exponent_bounds
        cands = (log_y / e_lo, log_y / e_hi)
        a, b = min(cands) - 1.0, max(cands) + 1.0

    def g(s):
        return math.log(f(math.exp(s))) - log_y

    width = max(b - a, 1.0)
    for _ in range(max_doublings):
        if g(a) <= 0:
            break
        a -= width
        width *= 2
    else:
        raise NumericError("failed to bracket inverse from below")
    width = max(b - a, 1.0)
    for _ in range(max_doublings):
        if g(b) >= 0:
            break
        b += width
        width *= 2
    else:
        raise NumericError("failed to bracket inverse from above")

    # |log f - log y| <= rel_tol/2 implies |f - y|/y <= rel_tol
    target = 0.5 * rel_tol
    for _ in range(400):
        m = 0.5 * (a + b)
        gm = g(m)
        if abs(gm) <= target or b - a < 1e-15 * max(1.0, abs(m)):
            return math.exp(m)
        if gm < 0:
            a = m
        else:
            b = m
    raise NumericError("bisection did not converge")


@dataclass(frozen=True)
class DoublingExponents:
    d_lower: float
    d_upper: float


def doubling_exponents(f: ScaleFunction, r_min: float, r_max: float,
                       samples: int = 64) -> DoublingExponents:
    """Min and max of ``log(f(R)/f(r)) / log(R/r)`` over pairs of a log grid."""
    if not (0 < r_min < r_max):
        raise DomainError("need 0 < r_min < r_max")
    if samples < 2:
        raise DomainError("need at least two samples")
    r = np.geomspace(r_min, r_max, samples)
    lf = np.log(f(r))
    lr = np.log(r)
    i, j = np.triu_indices(samples, k=1)
    slopes = (lf[j] - lf[i]) / (lr[j] - lr[i])
    return DoublingExponents(float(slopes.min()), float(slopes.max()))


class RateKind(enum.Enum):
    ChungSmall = "ChungSmall"
    ChungLarge = "ChungLarge"
    LocalLimsup = "LocalLimsup"
    LocalLiminf = "LocalLiminf"
    RangeLimsup = "RangeLimsup"
    RangeLiminf = "RangeLiminf"
    SupQuantile = "SupQuantile"

    @property
    def small_time(self) -> bool:
        return self is RateKind.ChungSmall

    @property
    def large_time(self) -> bool:
        return self not in (RateKind.ChungSmall, RateKind.SupQuantile)


def lil_rate(V: ScaleFunction, phi: ScaleFunction, kind: RateKind, t):
    """Normalizing function of the given LIL kind at time ``t``.

    ``t`` may be an array; each entry must lie in the kind's domain
    (``(0, 1/e)`` for ``ChungSmall``, ``(e, inf)`` for the large-time kinds).
    """
    kind = RateKind(kind)
    if np.ndim(t) != 0:
        return np.array([lil_rate(V, phi, kind, float(s)) for s in np.ravel(t)]
                        ).reshape(np.shape(t))
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    if kind is RateKind.SupQuantile:
        return phi.inverse(t)
    if kind is RateKind.ChungSmall:
        if not t < math.exp(-1):
            raise DomainError("ChungSmall needs t in (0, 1/e)")
        return phi.inverse(t / math.log(abs(math.log(t))))
    if not t > math.e:
        raise DomainError(f"{kind.value} needs t > e")
    ll = math.log(math.log(t))
    r = phi.inverse(t / ll)
    if kind is RateKind.ChungLarge:
        return r
    vol = V(r)
    if kind is RateKind.LocalLimsup:
        return t / vol
    if kind is RateKind.LocalLiminf:
        return (t / ll) / vol
    if kind is RateKind.RangeLimsup:
        return vol * ll
    return vol


class Verdict(enum.Enum):
    Converges = "Converges"
    Diverges = "Diverges"
    Inconclusive = "Inconclusive"


class Endpoint(enum.Enum):
    Zero = "Zero"
    Infinity = "Infinity"


@dataclass(frozen=True)
class IntegralTestConfig:
    """Decision rule of :func:`integral_test`.

    ``t_ref`` is the finite end of the integration range (defaults to 1, or to
    the edge of a tabulated ``vphi`` when that is closer to the endpoint).
    """

    max_levels: int = 60
    divergence_threshold: float = 1e6
    geometric_ratio: float = 0.9
    rel_tol: float = 1e-6
    power_margin: float = 0.2
    t_ref: float | None = None


@dataclass(frozen=True)
class IntegralTestResult:
    verdict: Verdict
    partial_sums: np.ndarray
    blocks: np.ndarray
    rule: str
    log_power: float | None = None


def integral_test(phi: ScaleFunction, vphi: Callable, endpoint=Endpoint.Zero,
                  config: IntegralTestConfig | None = None) -> IntegralTestResult:
    """Classify ``int dt / phi(vphi(t))`` near ``endpoint``.

    The integral is split into dyadic blocks ``I_k`` over
    ``[t_ref 2**-(k+1), t_ref 2**-k]`` (or ``[t_ref 2**k, t_ref 2**(k+1)]``
    at infinity).  Rules, applied in order:

    1. partial sum above ``divergence_threshold`` -> Diverges;
    2. block ratios on the last quarter all ``<= geometric_ratio`` and the
       geometric tail bound below ``rel_tol`` of the sum -> Converges;
    3. block ratios on the last quarter all ``>= 1/geometric_ratio``
       -> Diverges;
    4. slope ``s`` of ``log I_k`` against ``log k`` over the last half:
       ``s < -1 - power_margin`` -> Converges, ``s > -1 + power_margin``
       -> Diverges (Cauchy condensation of a log-power integrand);
    5. otherwise Inconclusive.
    """
    config = config or IntegralTestConfig()
    endpoint = Endpoint(endpoint)
    t_ref = config.t_ref
    if t_ref is None:
        t_ref = 1.0
        if isinstance(vphi, Tabulated):
            lo, hi = vphi.domain
            t_ref = min(1.0, hi) if endpoint is Endpoint.Zero else max(1.0, lo)

    def integrand(s):
        t = math.exp(s)
        return t / phi(vphi(t))

    K = config.max_levels
    if isinstance(vphi, Tabulated):
        # never integrate past the table
        lo, hi = vphi.domain
        span = t_ref / lo if endpoint is Endpoint.Zero else hi / t_ref
        K = min(K, int(math.floor(math.log2(span) * (1 - 1e-12))))
        if K < 8:
            raise DomainError("the tabulated test function covers fewer than 8 dyadic blocks")
    blocks = np.empty(K)
    ln2 = math.log(2.0)
    s0 = math.log(t_ref)
    for k in range(K):
        if endpoint is Endpoint.Zero:
            a, b = s0 - (k + 1) * ln2, s0 - k * ln2
        else:
            a, b = s0 + k * ln2, s0 + (k + 1) * ln2
        with warnings.catch_warnings():
            # tabulated integrands have kinks; 1e-8 is ample for a classifier
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            blocks[k] = integrate.quad(integrand, a, b, epsabs=0, epsrel=1e-8,
                                       limit=200)[0]
    sums = np.cumsum(blocks)

    def result(verdict, rule, s=None):
        return IntegralTestResult(verdict, sums, blocks, rule, s)

    if np.any(sums > config.divergence_threshold) or not np.all(np.isfinite(sums)):
        return result(Verdict.Diverges, "threshold")
    tail = blocks[-max(K // 4, 2):]
    ratios = tail[1:] / tail[:-1]
    q = config.geometric_ratio
    if np.all(ratios <= q):
        r = ratios.max()
        if blocks[-1] * r / (1 - r) <= config.rel_tol * sums[-1]:
            return result(Verdict.Converges, "geometric")
    if np.all(ratios >= 1.0 / q):
        return result(Verdict.Diverges, "geometric")
    half = np.arange(K // 2, K)
    s = float(np.polyfit(np.log(half + 1.0), np.log(blocks[half]), 1)[0])
    if s < -1 - config.power_margin:
        return result(Verdict.Converges, "log-power", s)
    if s > -1 + config.power_margin:
        return result(Verdict.Diverges, "log-power", s)
    return result(Verdict.Inconclusive, "log-power", s)
