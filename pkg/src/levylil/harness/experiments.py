"""Registry of named experiments.

Each entry pairs a runner with the statement it probes.  A runner takes an
:class:`ExperimentConfig` and an output directory, writes its CSV artifacts
and returns ``(metrics, checks)``: scalar results and named pass/fail flags.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .. import kernel_oracle as ko
from .. import lil_experiments as lx
from .. import occupation as oc
from ..errors import DomainError
from ..process_sim import StableLevy, TimeGrid, build_ensemble, write_path_dump
from ..scale_functions import Endpoint, Power, Tabulated, Verdict, integral_test
from .config import ExperimentConfig

__all__ = ["Experiment", "REGISTRY", "get_experiment", "closed_form_density"]

Runner = Callable[[ExperimentConfig, Path], tuple[dict, dict]]


@dataclass(frozen=True)
class Experiment:
    name: str
    family: str
    statement: str
    runner: Runner
    defaults: dict

    def params(self, cfg: ExperimentConfig) -> dict:
        out = dict(self.defaults)
        out.update(cfg.params)
        return out


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _grid(cfg: ExperimentConfig, dt: float, n_steps: int) -> TimeGrid:
    return TimeGrid(float(cfg.grid.get("dt", dt)), int(cfg.grid.get("n_steps", n_steps)))


def _ladder(cfg: ExperimentConfig, **defaults) -> lx.DyadicLadder:
    d = dict(defaults)
    d.update(cfg.ladder)
    return lx.DyadicLadder(float(d["t0"]), int(d["n_levels"]), float(d.get("ratio", 2.0)),
                           bool(d.get("descending", False)))


def closed_form_density(beta: float, t, x):
    """Cauchy (``beta = 1``) and Gaussian (``beta = 2``, variance ``2t``) densities."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if beta == 1.0:
        return t / (math.pi * (t * t + x * x))
    if beta == 2.0:
        return np.exp(-x * x / (4.0 * t)) / np.sqrt(4.0 * math.pi * t)
    raise DomainError("closed forms exist for beta in {1, 2} only")


def run_kernel_verify(cfg, out):
    p = EXPERIMENTS["kernel-verify"].params(cfg)
    spec = cfg.process
    if not isinstance(spec, StableLevy):
        raise DomainError("kernel-verify needs a StableLevy process")
    ts = np.geomspace(p["t_min"], p["t_max"], p["n_t"])
    xs = np.linspace(-p["x_max"], p["x_max"], p["n_x"])
    rows, worst = [], 0.0
    for t in ts:
        num = ko.density(spec, t, xs)
        ref = closed_form_density(spec.beta, t, xs)
        rel = np.abs(num - ref) / ref
        worst = max(worst, float(rel.max()))
        rows.extend(zip([t] * xs.size, xs, num, ref, rel))
    _write_rows(out / "kernel.csv", ["t", "x", "density", "closed_form", "rel_err"], rows)
    masses = {f"mass_t{t:g}": ko.mass_check(spec, t) for t in p["mass_times"]}
    metrics = {"max_rel_err": worst, **masses}
    checks = {"closed_form": worst <= p["rel_tol"],
              "mass": all(abs(m - 1.0) <= p["mass_tol"] for m in masses.values())}
    return metrics, checks


def run_hke_fit(cfg, out):
    p = EXPERIMENTS["hke-fit"].params(cfg)
    base, wide, change = ko.hke_stability(cfg.process, cfg.V, cfg.time_scale,
                                          tuple(p["t_range"]), p["x_factor"], p["widen"])
    _write_rows(out / "hke_ratios.csv", ["ratio"], [[r] for r in np.ravel(base.ratios)])
    metrics = {"C_upper": base.C_upper_hat, "C_lower": base.C_lower_hat, "spread": base.spread,
               "wide_spread": wide.spread, "relative_change": change}
    checks = {"spread": base.spread <= p["max_spread"], "stable": change < p["max_change"]}
    return metrics, checks


def run_exit_tails(cfg, out):
    p = EXPERIMENTS["exit-tails"].params(cfg)
    t_grid = 2.0 ** np.arange(p["log2_t_min"], p["log2_t_max"] + 1)
    curve = lx.exit_tail_curve(cfg.process, cfg.time_scale, p["r"], t_grid, cfg.n_paths,
                               cfg.master_seed, dt=float(cfg.grid.get("dt", p["dt"])),
                               threads=cfg.threads)
    _write_rows(out / "exit_tail.csv", ["t", "p_hat"], zip(curve.t, curve.p_hat))
    metrics = {"slope": curve.slope, "r2": curve.r2, "n_excluded": len(curve.excluded)}
    return metrics, {"slope": abs(curve.slope - 1.0) <= p["slope_tol"]}


def run_confinement(cfg, out):
    p = EXPERIMENTS["confinement"].params(cfg)
    curve = lx.confinement_curve(cfg.process, cfg.time_scale, p["r"], p["n_max"], cfg.n_paths,
                                 cfg.master_seed, c0=p["c0"], dt=cfg.grid.get("dt"),
                                 threads=cfg.threads)
    _write_rows(out / "confinement.csv", ["n", "p_hat"], zip(curve.n, curve.p_hat))
    metrics = {"ratio": curve.ratio, "r2": curve.r2}
    return metrics, {"linear": curve.r2 >= p["min_r2"], "ratio": 0.0 < curve.ratio < 1.0}


def run_local_time_moments(cfg, out):
    p = EXPERIMENTS["local-time-moments"].params(cfg)
    spec = cfg.process
    t = p["t"]
    m1, m1_err = oc.kac_moments_exact(spec, 0.0, 0.0, t, 1)
    m2, product = oc.kac_product_bound_check(spec, 0.0, 0.0, t, 2)
    grid = _grid(cfg, p["dt"], int(round(t / p["dt"])))
    ens = build_ensemble(spec, grid, cfg.n_paths, cfg.master_seed, cfg.threads)
    eps = tuple(p["eps"])
    samples = oc.local_time_samples(ens, 0.0, t, eps, cfg.threads)
    combo = oc.richardson(samples[:, 0], samples[:, 1], spec.beta_eff - 1.0, eps[0] / eps[1])
    mc = float(combo.mean())
    se = float(combo.std(ddof=1) / math.sqrt(combo.size))
    _write_rows(out / "local_time_samples.csv", ["path_index", *[f"eps_{e:g}" for e in eps]],
                ([i, *row] for i, row in enumerate(samples)))
    metrics = {"m1_exact": m1, "m1_err": m1_err, "m2_exact": m2, "m2_product": product,
               "m1_mc": mc, "m1_mc_stderr": se, "m1_rel_diff": abs(mc - m1) / m1}
    return metrics, {"mc_mean": abs(mc - m1) / m1 <= p["rel_tol"], "product_bound": m2 <= product}


def run_tails(cfg, out):
    p = EXPERIMENTS["tails"].params(cfg)
    spec = cfg.process
    fits = {}
    for t in p["times"]:
        grid = _grid(cfg, p["dt"], int(round(t / p["dt"])))
        ens = build_ensemble(spec, grid, cfg.n_paths, cfg.master_seed, cfg.threads)
        vals = oc.local_time_samples(ens, 0.0, t, [p["eps"]], cfg.threads)[:, 0]
        fits[t] = oc.local_time_tail_check(vals, t, cfg.V, cfg.time_scale,
                                           min_samples=p["min_samples"])
    rows = [(t, b, s) for t, f in fits.items() for b, s in zip(f.b, f.log_survival)]
    _write_rows(out / "tail.csv", ["t", "b", "log_survival"], rows)
    metrics, checks = {}, {}
    for t, f in fits.items():
        metrics[f"slope_t{t:g}"] = f.slope
        metrics[f"r2_t{t:g}"] = f.r2
        checks[f"t{t:g}"] = f.slope < 0 and f.r2 >= p["min_r2"]
    slopes = [f.slope for f in fits.values()]
    if len(slopes) > 1:
        spread = (max(slopes) - min(slopes)) / abs(slopes[0])
        metrics["slope_spread"] = spread
        checks["t_uniform"] = spread <= p["max_slope_spread"]
    return metrics, checks


def garsia_paths(spec, t, dt, eps, n_paths, master_seed, c_star=1.0, h_max=0.5):
    """Per-path Garsia reports and modulus profiles on the central half of each range."""
    grid = TimeGrid(dt, int(round(t / dt)))
    ens = build_ensemble(spec, grid, n_paths, master_seed)
    beta = spec.beta_eff

    def U(r):
        return np.asarray(r) ** ((beta - 1.0) / 2.0)

    def V(r):
        return np.asarray(r)

    def reduce(path):
        lo, hi = path.positions.min(), path.positions.max()
        h = eps / 2.0
        centers = np.arange(math.ceil(lo / h), math.floor(hi / h) + 1) * h
        values = oc.local_time(path, centers, eps).values[:, 0]
        H = (lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo))
        inside = (centers >= H[0]) & (centers <= H[1])
        rep = oc.garsia_modulus(centers, values, c_star, U, V, H, seed=path.seed % 2**32,
                                eps=eps)
        return rep, oc.modulus_profile(centers[inside], values[inside], (2.0 * eps, h_max))

    return ens.map(reduce)


def run_garsia(cfg, out):
    p = EXPERIMENTS["garsia"].params(cfg)
    res = garsia_paths(cfg.process, p["t"], p["dt"], p["eps"], cfg.n_paths, cfg.master_seed,
                       p["c_star"])
    reports = [r for r, _ in res]
    pooled = oc.pooled_modulus_exponent([m for _, m in res])
    _write_rows(out / "garsia.csv", ["path_index", "gamma", "violation_rate", "c1", "exponent"],
                ([i, r.gamma, r.violation_rate, r.c1, r.modulus_exponent]
                 for i, r in enumerate(reports)))
    worst = max(r.violation_rate for r in reports)
    lo, hi = p["exponent_band"]
    metrics = {"pooled_exponent": pooled, "max_violation_rate": worst,
               "median_path_exponent": float(np.nanmedian([r.modulus_exponent for r in reports]))}
    return metrics, {"violations": worst <= p["max_violation"], "exponent": lo <= pooled <= hi}


def _lil_setup(cfg, p):
    lad = _ladder(cfg, t0=p["t0"], n_levels=p["n_levels"])
    dt = float(cfg.grid.get("dt", p["dt"]))
    grid = TimeGrid(dt, int(round(lad.t_max / dt)))
    return lad, build_ensemble(cfg.process, grid, cfg.n_paths, cfg.master_seed, cfg.threads)


def _stat_rows(out: Path, name: str, stat: lx.LilStatistic) -> None:
    stat.write_csv(out / f"{name}.csv")
    stat.write_json(out / f"{name}.json")


def run_lil_paths(cfg, out):
    p = EXPERIMENTS["lil-paths"].params(cfg)
    lad, ens = _lil_setup(cfg, p)
    s = lx.ladder_samples(ens, lad, [lx.Functional.RunningSup], threads=cfg.threads)
    reg = lx.quantile_scaling(s, lx.Functional.RunningSup, q=0.5)
    short = lx.chung_statistic(s, cfg.V, cfg.time_scale, lx.LilMode.LargeTime,
                               lad.truncated(lad.n_levels // 2))
    full = lx.chung_statistic(s, cfg.V, cfg.time_scale, lx.LilMode.LargeTime)
    _stat_rows(out, "chung", full)
    _write_rows(out / "sup_quantiles.csv", ["t", "median"], zip(reg.x, reg.y))
    write_path_dump(ens.path(0), out / "path0.lilp")
    target = 1.0 / cfg.process.beta_eff
    shift = lx.median_shift(short, full)
    metrics = {"slope": reg.slope, "target": target, "r2": reg.r2, "chung_median": full.median,
               "chung_shift": shift}
    return metrics, {"slope": abs(reg.slope - target) <= p["slope_tol"],
                     "chung_stable": 0 < full.median < math.inf and shift <= p["max_shift"]}


def _occupation_stats(cfg, p, functional):
    lad, ens = _lil_setup(cfg, p)
    beta = cfg.process.beta_eff
    scaled = lx.ladder_samples(ens, lad, [functional], eps=p.get("eps"),
                               bandwidth_exponent=1.0 / beta, threads=cfg.threads)
    fixed = lx.ladder_samples(ens, lad, [functional], threads=cfg.threads)
    return lad, lx.quantile_scaling(scaled, functional, q=0.5), fixed


def _paired_checks(lad, stat_fn, prefix, max_shift):
    short_sup, short_inf = stat_fn(lad.truncated(lad.n_levels // 2))
    sup, inf = stat_fn(None)
    factor = lx.pairing_factor(lad.times)
    metrics = {f"{prefix}_limsup_median": sup.median, f"{prefix}_liminf_median": inf.median,
               f"{prefix}_limsup_shift": lx.median_shift(short_sup, sup),
               f"{prefix}_liminf_shift": lx.median_shift(short_inf, inf),
               f"{prefix}_literal_pair_violations": int(np.sum(inf.values > sup.values)),
               "pairing_factor": factor}
    checks = {f"{prefix}_finite": all(0 < s.median < math.inf for s in (sup, inf)),
              f"{prefix}_stable": max(metrics[f"{prefix}_limsup_shift"],
                                      metrics[f"{prefix}_liminf_shift"]) <= max_shift,
              f"{prefix}_paired": bool(np.all(inf.values <= factor * sup.values * (1 + 1e-12)))}
    return metrics, checks, sup, inf


def run_lil_localtime(cfg, out):
    p = EXPERIMENTS["lil-localtime"].params(cfg)
    lad, reg, fixed = _occupation_stats(cfg, p, lx.Functional.SupLocalTime)
    V, phi = cfg.V, cfg.time_scale

    def stats(ladder):
        return (lx.local_time_limsup_statistic(fixed, V, phi, ladder),
                lx.local_time_liminf_statistic(fixed, V, phi, ladder))

    metrics, checks, sup, inf = _paired_checks(lad, stats, "lstar", p["max_shift"])
    _stat_rows(out, "lstar_limsup", sup)
    _stat_rows(out, "lstar_liminf", inf)
    target = 1.0 - 1.0 / cfg.process.beta_eff
    metrics.update({"slope": reg.slope, "target": target, "r2": reg.r2})
    checks["slope"] = abs(reg.slope - target) <= p["slope_tol"]
    return metrics, checks


def run_lil_range(cfg, out):
    p = EXPERIMENTS["lil-range"].params(cfg)
    lad, reg, fixed = _occupation_stats(cfg, p, lx.Functional.Range)
    V, phi = cfg.V, cfg.time_scale
    metrics, checks, sup, inf = _paired_checks(
        lad, lambda ladder: lx.range_lil_statistics(fixed, V, phi, ladder), "range", p["max_shift"])
    _stat_rows(out, "range_limsup", sup)
    _stat_rows(out, "range_liminf", inf)
    target = 1.0 / cfg.process.beta_eff
    metrics.update({"slope": reg.slope, "target": target, "r2": reg.r2})
    checks["slope"] = abs(reg.slope - target) <= p["slope_tol"]
    return metrics, checks


def log_power_table(exponent: float, log_power: float, endpoint: Endpoint,
                    lo: float, hi: float, n: int = 400) -> Tabulated:
    """Tabulated ``t**exponent * L(t)**log_power`` with ``L = log(e/t)`` near zero
    and ``L = log t`` near infinity."""
    r = np.geomspace(lo, hi, n)
    L = np.log(math.e / r) if Endpoint(endpoint) is Endpoint.Zero else np.log(r)
    return Tabulated(tuple(r), tuple(r ** exponent * L ** log_power))


def run_integral_test(cfg, out):
    p = EXPERIMENTS["integral-test"].params(cfg)
    phi = cfg.time_scale
    beta = cfg.process.beta_eff
    cases = {
        "power_sq": (Power(2.0 / beta), Endpoint.Zero, Verdict.Diverges),
        "log_power": (log_power_table(1.0 / beta, 2.0 / beta, Endpoint.Zero, 1e-20, 0.3),
                      Endpoint.Zero, Verdict.Converges),
        "power_inv": (Power(1.0 / beta), Endpoint.Zero, Verdict.Diverges),
    }
    metrics, checks = {}, {}
    for name, (vphi, endpoint, expected) in cases.items():
        verdict = integral_test(phi, vphi, endpoint).verdict
        metrics[f"verdict_{name}"] = verdict.value
        checks[f"verdict_{name}"] = verdict is expected
    lad, ens = _lil_setup(cfg, p)
    s = lx.ladder_samples(ens, lad, [lx.Functional.RunningSup], threads=cfg.threads)
    conv = log_power_table(1.0 / beta, 2.0 / beta, Endpoint.Infinity, 2.0, 1e12)
    div = Power(1.0 / beta)
    conv_verdict = integral_test(phi, conv, Endpoint.Infinity).verdict
    div_verdict = integral_test(phi, div, Endpoint.Infinity).verdict
    f_conv, _, _ = lx.integral_test_path_consistency(s, conv, conv_verdict, scale=p["large_scale"])
    f_div, _, _ = lx.integral_test_path_consistency(s, div, div_verdict, scale=p["small_scale"])
    metrics.update({"verdict_large_conv": conv_verdict.value, "verdict_large_div": div_verdict.value,
                    "fraction_conv": f_conv, "fraction_div": f_div})
    checks.update({"paths_conv": conv_verdict is Verdict.Converges and f_conv >= p["min_conv"],
                   "paths_div": div_verdict is Verdict.Diverges and f_div <= p["max_div"]})
    _write_rows(out / "integral_test.csv", ["metric", "value"], metrics.items())
    return metrics, checks


def run_resolvent_identity(cfg, out):
    p = EXPERIMENTS["resolvent-identity"].params(cfg)
    spec = cfg.process
    dt = float(cfg.grid.get("dt", p["dt"]))
    grid = TimeGrid(dt, int(round(p["horizon"] / dt)))
    ens = build_ensemble(spec, grid, cfg.n_paths, cfg.master_seed, cfg.threads)
    disc, mc, oracle, se = oc.resolvent_local_identity_check(
        ens, spec, p["lam"], p["y"], tuple(p["eps"]), tail_tol=p["tail_tol"])
    oracle_fourier = ko.resolvent_fourier(spec, p["lam"], p["y"] - spec.start)
    metrics = {"discrepancy": disc, "mc": mc, "oracle": oracle, "stderr": se,
               "oracle_fourier": oracle_fourier}
    _write_rows(out / "resolvent.csv", ["metric", "value"], metrics.items())
    return metrics, {"identity": disc <= p["tol"],
                     "oracles_agree": abs(oracle - oracle_fourier) <= 1e-6 * max(oracle, 1e-300)}


EXPERIMENTS: dict[str, Experiment] = {}


def _register(name, family, statement, runner, **defaults):
    EXPERIMENTS[name] = Experiment(name, family, statement, runner, defaults)


_register("kernel-verify", "kernel",
          "Fourier-inversion densities equal the Cauchy and Gaussian closed forms; "
          "total mass is one (conservativeness)",
          run_kernel_verify, t_min=0.1, t_max=10.0, n_t=9, x_max=10.0, n_x=81,
          mass_times=[0.1, 1.0, 10.0], rel_tol=1e-8, mass_tol=1e-6)
_register("hke-fit", "kernel",
          "two-sided heat kernel bound 1/V(phi^-1(t)) min t/(V(d) phi(d)) with "
          "stable constants under probe widening",
          run_hke_fit, t_range=[0.1, 10.0], x_factor=20.0, widen=2.0, max_spread=50.0,
          max_change=0.1)
_register("exit-tails", "exit",
          "exit probability from B(x,r) by time t is at most a constant times t/phi(r/2)",
          run_exit_tails, r=1.0, log2_t_min=-10, log2_t_max=-5, dt=2.0 ** -12, slope_tol=0.15)
_register("confinement", "exit",
          "probability of staying in B(x,r) up to c0 n phi(r) decays geometrically in n",
          run_confinement, r=1.0, n_max=8, c0=0.25, min_r2=0.95)
_register("local-time-moments", "local-time",
          "Kac moment formula for E l(y,t)^n and its product upper bound",
          run_local_time_moments, t=1.0, dt=2.0 ** -12, eps=[0.05, 0.025], rel_tol=0.03)
_register("tails", "local-time",
          "exponential tail of l(x,t) on the scale t/V(phi^-1(t)), uniformly in t",
          run_tails, times=[1.0, 2.0], dt=2.0 ** -10, eps=0.05, min_r2=0.9, min_samples=10_000,
          max_slope_spread=0.3)
_register("garsia", "local-time",
          "Garsia modulus bound for local times with U(r) = sqrt(phi(r)/V(r))",
          run_garsia, t=8.0, dt=1e-5, eps=0.02, c_star=1.0, max_violation=0.01,
          exponent_band=[0.15, 0.35])
_register("lil-paths", "lil",
          "running supremum grows like (t/loglog t)^{1/beta}; Chung liminf of "
          "sup|X|/phi^-1(t/loglog t) is a positive constant",
          run_lil_paths, t0=16.0, n_levels=15, dt=1.0, slope_tol=0.02, max_shift=0.3)
_register("lil-localtime", "lil",
          "limsup and liminf laws for L*(t) with normalizers t/V(phi^-1(t/loglog t)) "
          "and (t/loglog t)/V(phi^-1(t/loglog t))",
          run_lil_localtime, t0=15.0, n_levels=10, dt=2.0 ** -4, eps=0.5, slope_tol=0.05,
          max_shift=0.3)
_register("lil-range", "lil",
          "limsup and liminf laws for the range R(t) with normalizers "
          "V(phi^-1(t/loglog t)) loglog t and V(phi^-1(t/loglog t))",
          run_lil_range, t0=15.0, n_levels=10, dt=2.0 ** -4, eps=0.5, slope_tol=0.05,
          max_shift=0.3)
_register("integral-test", "lil",
          "integral test: limsup sup|X|/psi(t) is 0 or infinity as int dt/phi(psi(t)) "
          "converges or diverges",
          run_integral_test, t0=16.0, n_levels=15, dt=1.0, large_scale=100.0,
          small_scale=0.01, min_conv=0.95, max_div=0.2)
_register("resolvent-identity", "local-time",
          "E int exp(-lam t) dl(y,t) equals the resolvent density u^lam(x,y)",
          run_resolvent_identity, lam=1.0, y=0.0, horizon=10.0, dt=2.0 ** -10,
          eps=[0.05, 0.025], tail_tol=1e-3, tol=0.05)

REGISTRY = EXPERIMENTS


def get_experiment(name: str) -> Experiment:
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise DomainError(f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}") from None
