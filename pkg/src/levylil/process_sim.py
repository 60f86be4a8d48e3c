"""
Exact-law simulation of symmetric stable-type Lévy processes on the line.

Three families are supported, all with characteristic exponent ``psi``
(``E exp(i xi X_t) = exp(-t psi(xi))``):

* :class:`StableLevy` -- ``psi(xi) = |xi|**beta``, ``0 < beta <= 2``
  (``beta = 2`` is Brownian motion with variance ``2t``)
* :class:`StableMixtureLevy` -- ``psi(xi) = sum_i w_i |xi|**beta_i``, the
  independent sum of stable processes
* :class:`SubordinatedBM` -- Brownian motion (variance ``2u``) run by a
  ``gamma``-stable subordinator with ``E exp(-u S_t) = exp(-t u**gamma)``;
  its exponent is ``|xi|**(2 gamma)``

Increments are drawn exactly at grid times, so positions carry no
discretization error there.  Path suprema and exit times are grid-based
and therefore biased low; see :func:`running_sup`.
"""
from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import DomainError, ResourceError
from .scale_functions import InverseMixture, Power, ScaleFunction

__all__ = [
    "StableLevy",
    "StableMixtureLevy",
    "SubordinatedBM",
    "ProcessSpec",
    "process_from_dict",
    "TimeGrid",
    "PathSample",
    "PathEnsemble",
    "ExitTime",
    "derive_seed",
    "sample_stable_increment",
    "sample_positive_stable",
    "simulate_path",
    "simulate_subordinated",
    "running_sup",
    "coarsen",
    "first_exit_time",
    "build_ensemble",
    "write_path_dump",
    "read_path_dump",
]


@dataclass(frozen=True)
class StableLevy:
    beta: float
    start: float = 0.0

    def __post_init__(self):
        if not 0 < self.beta <= 2:
            raise DomainError(f"stable index must lie in (0, 2], got {self.beta}")

    @property
    def beta_eff(self) -> float:
        return float(self.beta)

    @property
    def beta_large(self) -> float:
        return float(self.beta)

    def symbol(self, xi):
        return np.abs(xi) ** self.beta

    def phi(self) -> ScaleFunction:
        return Power(self.beta)

    def to_dict(self):
        return {"kind": "StableLevy", "beta": self.beta, "start": self.start}


@dataclass(frozen=True)
class StableMixtureLevy:
    """Independent sum of stable processes with exponent ``sum w_i |xi|**beta_i``.

    The jump intensity is the sum of the component intensities, so the
    matching time-scale function is :class:`InverseMixture` of the same atoms.
    """

    components: tuple[tuple[float, float], ...]
    start: float = 0.0

    def __post_init__(self):
        comps = tuple((float(w), float(b)) for w, b in self.components)
        if not comps:
            raise DomainError("mixture needs at least one component")
        for w, b in comps:
            if not w > 0:
                raise DomainError("mixture weights must be positive")
            if not 0 < b < 2:
                raise DomainError("mixture indices must lie in (0, 2)")
        object.__setattr__(self, "components", comps)

    @property
    def beta_eff(self) -> float:
        """Small-scale (dominant at short times) index."""
        return max(b for _, b in self.components)

    @property
    def beta_large(self) -> float:
        """Large-scale (dominant at long times) index."""
        return min(b for _, b in self.components)

    def symbol(self, xi):
        a = np.abs(xi)
        return sum(w * a ** b for w, b in self.components)

    def phi(self) -> ScaleFunction:
        total = sum(w for w, _ in self.components)
        return InverseMixture(tuple((w / total, b) for w, b in self.components))

    def to_dict(self):
        return {"kind": "StableMixtureLevy",
                "components": [list(c) for c in self.components], "start": self.start}


@dataclass(frozen=True)
class SubordinatedBM:
    gamma: float
    start: float = 0.0

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise DomainError(f"subordinator index must lie in (0, 1), got {self.gamma}")

    @property
    def beta_eff(self) -> float:
        return 2.0 * self.gamma

    @property
    def beta_large(self) -> float:
        return 2.0 * self.gamma

    def symbol(self, xi):
        return np.abs(xi) ** (2.0 * self.gamma)

    def phi(self) -> ScaleFunction:
        return Power(2.0 * self.gamma)

    def to_dict(self):
        return {"kind": "SubordinatedBM", "gamma": self.gamma, "start": self.start}


ProcessSpec = StableLevy | StableMixtureLevy | SubordinatedBM


def process_from_dict(data: dict) -> ProcessSpec:
    kind = data.get("kind")
    start = float(data.get("start", 0.0))
    if kind == "StableLevy":
        return StableLevy(float(data["beta"]), start)
    if kind == "StableMixtureLevy":
        return StableMixtureLevy(tuple(tuple(c) for c in data["components"]), start)
    if kind == "SubordinatedBM":
        return SubordinatedBM(float(data["gamma"]), start)
    raise DomainError(f"unknown process kind {kind!r}")


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("time step must be positive")
        if self.n_steps < 0:
            raise DomainError("n_steps must be non-negative")

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def horizon(self) -> float:
        return self.dt * self.n_steps

    def index_of(self, t) -> np.ndarray | int:
        """Grid index of time(s) ``t``; raises if ``t`` is not a grid time."""
        k = np.rint(np.asarray(t, dtype=float) / self.dt).astype(np.int64)
        if np.any(np.abs(k * self.dt - np.asarray(t)) > 1e-9 * np.maximum(1.0, np.abs(t))):
            raise DomainError(f"{t} is not on the grid with step {self.dt}")
        if np.any(k < 0) or np.any(k > self.n_steps):
            raise DomainError(f"{t} lies outside the grid")
        return int(k) if np.ndim(k) == 0 else k


@dataclass
class PathSample:
    spec: ProcessSpec
    grid: TimeGrid
    positions: np.ndarray
    seed: int
    clock: np.ndarray | None = field(default=None, repr=False)
    """Subordinator values at grid times (subordinated paths only)."""

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def running_sup(self) -> np.ndarray:
        return running_sup(self, self.positions[0])


@dataclass(frozen=True)
class ExitTime:
    time: float
    censored: bool
    index: int


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit per-path seed; a pure function of ``(master_seed, index)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_stable_increment(beta: float, scale: float, rng, size=None):
    """Symmetric stable draws with characteristic function ``exp(-(scale|xi|)**beta)``.

    Uses the Chambers-Mallows-Stuck transform; ``beta = 2`` returns
    ``N(0, 2 scale**2)`` and ``beta = 1`` a Cauchy variable with scale ``scale``.
    """
    if not 0 < beta <= 2:
        raise DomainError(f"stable index must lie in (0, 2], got {beta}")
    if not scale > 0:
        raise DomainError("scale must be positive")
    rng = _rng(rng)
    if beta == 2:
        return math.sqrt(2.0) * scale * rng.standard_normal(size)
    if beta == 1:
        return scale * rng.standard_cauchy(size)
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    w = rng.standard_exponential(size)
    cv = np.cos(v)
    x = np.sin(beta * v) / cv ** (1.0 / beta) * (np.cos((1.0 - beta) * v) / w) ** ((1.0 - beta) / beta)
    return scale * x


def sample_positive_stable(gamma: float, scale: float, rng, size=None):
    """Positive stable draws with Laplace transform ``exp(-(scale u)**gamma)``.

    Kanter's representation: ``(A(U)/W)**((1-gamma)/gamma)`` with ``U``
    uniform on ``(0, pi)`` and ``W`` standard exponential.
    """
    if not 0 < gamma < 1:
        raise DomainError(f"subordinator index must lie in (0, 1), got {gamma}")
    rng = _rng(rng)
    u = rng.uniform(0.0, math.pi, size)
    w = rng.standard_exponential(size)
    a = (np.sin(gamma * u) ** (gamma / (1 - gamma)) * np.sin((1 - gamma) * u)
         / np.sin(u) ** (1 / (1 - gamma)))
    return scale * (a / w) ** ((1 - gamma) / gamma)


def _cumulate(start: float, increments: np.ndarray) -> np.ndarray:
    out = np.empty(increments.size + 1)
    out[0] = start
    np.cumsum(increments, out=out[1:])
    out[1:] += start
    return out


def simulate_subordinated(gamma: float, grid: TimeGrid, seed, start: float = 0.0) -> PathSample:
    """Brownian motion (variance ``2u``) evaluated at a ``gamma``-stable clock."""
    spec = SubordinatedBM(gamma, start)
    rng = _rng(seed)
    n = grid.n_steps
    ds = sample_positive_stable(gamma, grid.dt ** (1.0 / gamma), rng, n)
    dx = np.sqrt(2.0 * ds) * rng.standard_normal(n)
    return PathSample(spec, grid, _cumulate(start, dx), _seed_value(seed),
                      clock=_cumulate(0.0, ds))


def _seed_value(seed) -> int:
    return -1 if isinstance(seed, np.random.Generator) else int(seed)


def simulate_path(spec: ProcessSpec, grid: TimeGrid, seed) -> PathSample:
    """One path at the grid times, with exact finite-dimensional laws."""
    if isinstance(spec, SubordinatedBM):
        return simulate_subordinated(spec.gamma, grid, seed, spec.start)
    rng = _rng(seed)
    n = grid.n_steps
    if isinstance(spec, StableLevy):
        dx = sample_stable_increment(spec.beta, grid.dt ** (1.0 / spec.beta), rng, n)
    elif isinstance(spec, StableMixtureLevy):
        dx = np.zeros(n)
        for w, b in spec.components:
            dx += sample_stable_increment(b, (w * grid.dt) ** (1.0 / b), rng, n)
    else:
        raise DomainError(f"unsupported process spec {spec!r}")
    return PathSample(spec, grid, _cumulate(spec.start, dx), _seed_value(seed))


def coarsen(path: PathSample, factor: int) -> PathSample:
    """The same path observed every ``factor`` steps.

    Sums of ``factor`` independent increments have the law of one increment
    over ``factor * dt``, so the result is a valid coarse-grid sample sharing
    the fine path's driving noise.
    """
    factor = int(factor)
    if factor < 1 or path.grid.n_steps % factor:
        raise DomainError(f"factor {factor} must divide n_steps={path.grid.n_steps}")
    grid = TimeGrid(path.grid.dt * factor, path.grid.n_steps // factor)
    clock = None if path.clock is None else path.clock[::factor]
    return PathSample(path.spec, grid, path.positions[::factor], path.seed, clock)


def running_sup(path, x0: float | None = None) -> np.ndarray:
    """``max_{j<=k} |X_{t_j} - x0|`` for every grid index ``k``.

    Only grid times enter, so this never exceeds the continuous-time supremum
    and refining the grid can only increase it.
    """
    pos = path.positions if isinstance(path, PathSample) else np.asarray(path, dtype=float)
    if x0 is None:
        x0 = pos[0]
    return np.maximum.accumulate(np.abs(pos - x0))


def first_exit_time(path, r: float, dt: float | None = None) -> ExitTime:
    """First grid time with ``|X - X_0| > r``, or the horizon flagged as censored."""
    if not r > 0:
        raise DomainError("radius must be positive")
    if isinstance(path, PathSample):
        pos, dt = path.positions, path.grid.dt
    else:
        pos = np.asarray(path, dtype=float)
        dt = 1.0 if dt is None else dt
    out = np.flatnonzero(np.abs(pos - pos[0]) > r)
    if out.size:
        k = int(out[0])
        return ExitTime(k * dt, False, k)
    k = pos.size - 1
    return ExitTime(k * dt, True, k)


@dataclass(frozen=True)
class PathEnsemble:
    """A seeded family of paths that is generated on demand.

    Paths are never stored; :meth:`map` regenerates each one from its derived
    seed, applies a reducer and returns results ordered by path index, so
    results do not depend on the number of worker threads.
    """

    spec: ProcessSpec
    grid: TimeGrid
    n_paths: int
    master_seed: int
    threads: int = 1

    def seed(self, index: int) -> int:
        return derive_seed(self.master_seed, index)

    def path(self, index: int) -> PathSample:
        if not 0 <= index < self.n_paths:
            raise IndexError(index)
        return simulate_path(self.spec, self.grid, self.seed(index))

    def __iter__(self) -> Iterator[PathSample]:
        for i in range(self.n_paths):
            yield self.path(i)

    def __len__(self):
        return self.n_paths

    def map(self, reducer: Callable[[PathSample], object], threads: int | None = None,
            chunk: int = 64) -> list:
        threads = self.threads if threads is None else threads

        def work(lo_hi):
            lo, hi = lo_hi
            return [reducer(self.path(i)) for i in range(lo, hi)]

        blocks = [(lo, min(lo + chunk, self.n_paths)) for lo in range(0, self.n_paths, chunk)]
        try:
            if threads <= 1:
                parts = [work(b) for b in blocks]
            else:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    parts = list(pool.map(work, blocks))
        except MemoryError as exc:
            raise ResourceError(
                f"ensemble of {self.n_paths} paths x {self.grid.n_steps} steps "
                "exhausted memory; reduce n_steps or the reducer's footprint") from exc
        return [item for part in parts for item in part]

    def map_array(self, reducer, threads: int | None = None) -> np.ndarray:
        return np.asarray(self.map(reducer, threads))

    def terminal_values(self, threads: int | None = None) -> np.ndarray:
        return self.map_array(lambda p: p.positions[-1], threads)


def build_ensemble(spec: ProcessSpec, grid: TimeGrid, n_paths: int, master_seed: int,
                   threads: int = 1) -> PathEnsemble:
    if n_paths < 1:
        raise DomainError("an ensemble needs at least one path")
    return PathEnsemble(spec, grid, int(n_paths), int(master_seed), int(threads))


_DUMP_HEADER = struct.Struct("<4sIQdQ")
_DUMP_MAGIC = b"LILP"
_DUMP_VERSION = 1


def write_path_dump(path: PathSample, filename) -> None:
    """Binary dump: header ``LILP, version u32, n_steps u64, dt f64, seed u64``
    followed by ``n_steps + 1`` little-endian float64 positions."""
    seed = path.seed & 0xFFFFFFFFFFFFFFFF
    with open(filename, "wb") as fh:
        fh.write(_DUMP_HEADER.pack(_DUMP_MAGIC, _DUMP_VERSION, path.grid.n_steps,
                                   path.grid.dt, seed))
        fh.write(np.asarray(path.positions, dtype="<f8").tobytes())


def read_path_dump(filename) -> tuple[TimeGrid, int, np.ndarray]:
    with open(filename, "rb") as fh:
        header = fh.read(_DUMP_HEADER.size)
        if len(header) != _DUMP_HEADER.size:
            raise DomainError("truncated path dump header")
        magic, version, n_steps, dt, seed = _DUMP_HEADER.unpack(header)
        if magic != _DUMP_MAGIC or version != _DUMP_VERSION:
            raise DomainError(f"not a version-{_DUMP_VERSION} LILP dump")
        positions = np.frombuffer(fh.read(), dtype="<f8")
    if positions.size != n_steps + 1:
        raise DomainError("path dump length does not match its header")
    return TimeGrid(dt, n_steps), seed, positions.astype(float)
