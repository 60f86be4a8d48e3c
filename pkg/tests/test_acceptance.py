"""Acceptance suite: sixteen criteria at their stated sizes and tolerances.

Each test records a one-line detail; ``conftest.py`` prints a PASS/FAIL line
per criterion at the end of the session.  Monte Carlo criteria run the
registered harness experiments at full scale and share one run per
experiment.
"""
import json
import math
import time
import warnings

import numpy as np
import pytest
from scipy import integrate, stats

from levylil.harness import ExperimentConfig, run_experiment
from levylil.kernel_oracle import (cdf, density, dirichlet_kernel_estimate, heat_kernel,
                                   hke_stability, mass_check)
from levylil.occupation import kac_moments_exact, kac_product_bound_check
from levylil.process_sim import StableLevy, StableMixtureLevy, TimeGrid, build_ensemble
from levylil.scale_functions import Power

pytestmark = pytest.mark.acceptance

S15 = StableLevy(1.5)
MIX = StableMixtureLevy(((0.5, 1.0), (0.5, 1.5)))

# E l(0,1) for index 1.5 is 3 Gamma(5/3)/pi (mpmath, 30 digits)
KAC_M1_15 = 0.8620582543564933

FULL_SCALE = {
    "lil-paths": dict(n_paths=2000, master_seed=1, ladder={"t0": 16, "n_levels": 15}),
    "lil-localtime": dict(n_paths=1000, master_seed=2),
    "lil-range": dict(n_paths=1000, master_seed=3),
    "local-time-moments": dict(n_paths=100_000, master_seed=4),
    "tails": dict(n_paths=100_000, master_seed=5),
    "confinement": dict(n_paths=100_000, master_seed=6, grid={"dt": 0.0025}),
    "exit-tails": dict(n_paths=100_000, master_seed=7),
    "integral-test": dict(n_paths=2000, master_seed=8),
    "garsia": dict(n_paths=20, master_seed=9),
}


@pytest.fixture(scope="module")
def records(tmp_path_factory):
    cache = {}

    def get(name):
        if name not in cache:
            cfg = ExperimentConfig(name, S15, **FULL_SCALE[name])
            cache[name] = run_experiment(cfg, tmp_path_factory.mktemp(name))
        return cache[name]

    return get


def closed_form(beta, t, x):
    if beta == 1.0:
        return t / (math.pi * (t * t + x * x))
    return np.exp(-x * x / (4.0 * t)) / np.sqrt(4.0 * math.pi * t)


def test_c1_kernel_oracle_exactness(record_property):
    ts, xs = np.geomspace(0.1, 10.0, 9), np.linspace(-10.0, 10.0, 81)
    start, worst = time.perf_counter(), 0.0
    for beta in (1.0, 2.0):
        for t in ts:
            ref = closed_form(beta, t, xs)
            rel = np.abs(density(StableLevy(beta), t, xs) - ref) / ref
            worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - start
    record_property("detail", f"max rel err {worst:.2e} (<= 1e-8), {elapsed:.1f} s (<= 10 s)")
    assert worst <= 1e-8 and elapsed <= 10.0


def test_c2_conservativeness(record_property):
    start = time.perf_counter()
    specs = [StableLevy(b) for b in (0.8, 1.0, 1.5, 2.0)] + [MIX]
    dev = max(abs(mass_check(s, 1.0) - 1.0) for s in specs)
    elapsed = time.perf_counter() - start
    record_property("detail", f"max |mass - 1| {dev:.2e} (<= 1e-6), {elapsed:.1f} s (<= 30 s)")
    assert dev <= 1e-6 and elapsed <= 30.0


def test_c3_chapman_kolmogorov(record_property):
    worst = 0.0
    for spec in (StableLevy(1.0), S15):
        for x in (0.0, 1.0, 5.0):
            def f(z):
                return heat_kernel(spec, 0.5, x - z).density * heat_kernel(spec, 0.5, z).density

            pts = sorted({0.0, x})
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                v = integrate.quad(f, -np.inf, pts[0], epsabs=1e-9, limit=200)[0]
                if len(pts) == 2:
                    v += integrate.quad(f, pts[0], pts[1], epsabs=1e-9, limit=200)[0]
                v += integrate.quad(f, pts[-1], np.inf, epsabs=1e-9, limit=200)[0]
            worst = max(worst, abs(v - heat_kernel(spec, 1.0, x).density))
    record_property("detail", f"max |p*p - p| {worst:.2e} (<= 1e-5)")
    assert worst <= 1e-5


def test_c4_hke_sandwich(record_property):
    base, wide, change = hke_stability(S15, Power(1.0), Power(1.5), (0.1, 10.0), 20.0, 2.0)
    record_property("detail", f"spread {base.spread:.2f} (<= 50), change under 2x widening "
                              f"{change:.3f} (< 0.1)")
    assert base.spread <= 50 and change < 0.1


def test_c5_sampler_ks(record_property):
    start = time.perf_counter()
    x = build_ensemble(S15, TimeGrid(1.0, 1), 10 ** 6, 55).terminal_values()
    d = stats.kstest(x, lambda v: cdf(S15, 1.0, v)).statistic
    elapsed = time.perf_counter() - start
    record_property("detail", f"KS distance {d:.5f} (<= 0.005), {elapsed:.1f} s (<= 120 s)")
    assert d <= 0.005 and elapsed <= 120.0


def test_c6_path_lil_exponent(records, record_property):
    rec = records("lil-paths")
    m = rec.metrics
    record_property("detail", f"running-sup slope {m['slope']:.4f} (2/3 +- 0.02), "
                              f"{rec.wall_seconds:.0f} s (<= 180 s)")
    # ladder 2**4 ... 2**19
    assert rec.config["ladder"] == {"t0": 16, "n_levels": 15} and rec.config["n_paths"] == 2000
    assert abs(m["slope"] - 2 / 3) <= 0.02 and rec.wall_seconds <= 180.0


def test_c7_local_time_lil_exponent(records, record_property):
    lt, rg = records("lil-localtime"), records("lil-range")
    a, b = lt.metrics["slope"], rg.metrics["slope"]
    wall = lt.wall_seconds + rg.wall_seconds
    record_property("detail", f"L* slope {a:.4f} (1/3 +- 0.05), range slope {b:.4f} "
                              f"(2/3 +- 0.05), {wall:.0f} s (<= 600 s)")
    assert abs(a - 1 / 3) <= 0.05 and abs(b - 2 / 3) <= 0.05 and wall <= 600.0


def test_c8_kac_moments(records, record_property):
    bm = StableLevy(2.0)
    m1, _ = kac_moments_exact(bm, 0.0, 0.0, 1.0, 1)
    m2, _ = kac_moments_exact(bm, 0.0, 0.0, 1.0, 2)
    e1, e2 = abs(m1 * math.sqrt(math.pi) - 1.0), abs(m2 / 0.5 - 1.0)
    bm_exact, bm_product = kac_product_bound_check(bm, 0.0, 0.0, 1.0, 2)
    s_exact, s_product = kac_product_bound_check(S15, 0.0, 0.0, 1.0, 2)
    mc = records("local-time-moments").metrics["m1_mc"]
    mc_rel = abs(mc - KAC_M1_15) / KAC_M1_15
    record_property("detail", f"BM rel errs {e1:.1e}, {e2:.1e} (<= 1e-3); MC m1 rel diff "
                              f"{mc_rel:.4f} (<= 0.03); bounds {bm_exact:.4f} <= {bm_product:.5f}, "
                              f"{s_exact:.4f} <= {s_product:.4f}")
    assert e1 <= 1e-3 and e2 <= 1e-3 and mc_rel <= 0.03
    assert bm_product == pytest.approx(2 / math.pi, rel=1e-6)
    assert bm_exact <= bm_product and s_exact <= s_product


def test_c9_exponential_tail(records, record_property):
    m = records("tails").metrics
    record_property("detail", f"slope {m['slope_t1']:.3f} (< 0), R^2 {m['r2_t1']:.4f} (>= 0.9)")
    assert m["slope_t1"] < 0 and m["r2_t1"] >= 0.9


def test_c10_confinement(records, record_property):
    m = records("confinement").metrics
    record_property("detail", f"R^2 {m['r2']:.5f} (>= 0.95), ratio {m['ratio']:.4f} in (0, 1)")
    assert m["r2"] >= 0.95 and 0 < m["ratio"] < 1


def test_c11_exit_tail(records, record_property):
    m = records("exit-tails").metrics
    record_property("detail", f"small-t slope {m['slope']:.4f} (1 +- 0.15)")
    assert abs(m["slope"] - 1.0) <= 0.15


def test_c12_normalized_statistics(records, record_property):
    chung = records("lil-paths").metrics
    lt, rg = records("lil-localtime").metrics, records("lil-range").metrics
    medians = [chung["chung_median"], lt["lstar_limsup_median"], lt["lstar_liminf_median"],
               rg["range_limsup_median"], rg["range_liminf_median"]]
    shifts = [chung["chung_shift"], lt["lstar_limsup_shift"], lt["lstar_liminf_shift"],
              rg["range_limsup_shift"], rg["range_liminf_shift"]]
    violations = lt["lstar_literal_pair_violations"] + rg["range_literal_pair_violations"]
    record_property("detail", f"medians in [{min(medians):.3f}, {max(medians):.3f}], max shift "
                              f"{max(shifts):.3f} (<= 0.3), liminf > limsup on {violations} paths")
    assert all(0 < v < math.inf for v in medians)
    assert max(shifts) <= 0.3
    assert lt["pairing_factor"] == 1.0 and violations == 0


def test_c13_integral_test(records, record_property):
    m = records("integral-test").metrics
    verdicts = (m["verdict_power_sq"], m["verdict_log_power"], m["verdict_power_inv"])
    record_property("detail", f"verdicts {'/'.join(verdicts)}; fractions "
                              f"{m['fraction_conv']:.3f} (>= 0.95), {m['fraction_div']:.3f} (<= 0.2)")
    assert verdicts == ("Diverges", "Converges", "Diverges")
    assert m["fraction_conv"] >= 0.95 and m["fraction_div"] <= 0.2


def test_c14_garsia_modulus(records, record_property):
    m = records("garsia").metrics
    record_property("detail", f"max held-out violation {m['max_violation_rate']:.2e} (<= 0.01), "
                              f"exponent {m['pooled_exponent']:.4f} in [0.15, 0.35]")
    assert m["max_violation_rate"] <= 0.01 and 0.15 <= m["pooled_exponent"] <= 0.35


def test_c15_dirichlet_lower_bound(record_property):
    t = 0.1 * Power(1.5)(1.0)
    est = dirichlet_kernel_estimate(S15, 1.0, t, np.linspace(-1.0, 1.0, 21), 20_000, 15)
    record_property("detail", f"inner-half-ball 95% lower bound {est.inner_min_lower:.4f} (> 0)")
    assert est.inner_mask.sum() == 10
    assert est.inner_min_lower > 0


SMALL = {
    "kernel-verify": dict(process=StableLevy(1.0), params={"n_t": 3, "n_x": 5, "mass_times": [1.0]}),
    "hke-fit": dict(params={"t_range": [0.5, 2.0]}),
    "exit-tails": dict(n_paths=500, params={"log2_t_min": -6, "log2_t_max": -3, "dt": 2.0 ** -8}),
    "confinement": dict(n_paths=2000, grid={"dt": 0.0025}),
    "local-time-moments": dict(n_paths=200, params={"dt": 2.0 ** -8, "eps": [0.2, 0.1]}),
    "tails": dict(n_paths=10_000, params={"times": [1.0], "dt": 2.0 ** -6, "eps": 0.1}),
    "garsia": dict(n_paths=2, params={"t": 1.0, "dt": 1e-4}),
    "lil-paths": dict(n_paths=50, ladder={"t0": 16, "n_levels": 5}),
    "lil-localtime": dict(n_paths=50, ladder={"t0": 15, "n_levels": 5}),
    "lil-range": dict(n_paths=50, ladder={"t0": 15, "n_levels": 5}),
    "integral-test": dict(n_paths=50, ladder={"t0": 16, "n_levels": 5}),
    "resolvent-identity": dict(n_paths=200, params={"dt": 2.0 ** -6}),
}


def test_c16_reproducibility(tmp_path, record_property):
    differing = []
    for name, kw in SMALL.items():
        kw = dict(kw)
        kw.setdefault("process", S15)
        cfg = ExperimentConfig(name, master_seed=16, **kw)
        a = run_experiment(cfg.replace(threads=1), tmp_path / name / "a")
        b = run_experiment(cfg.replace(threads=1), tmp_path / name / "b")
        c = run_experiment(cfg.replace(threads=2), tmp_path / name / "c")
        dumps = {json.dumps(r.metrics, sort_keys=True) for r in (a, b, c)}
        if len(dumps) != 1 or len({r.config_hash for r in (a, b, c)}) != 1:
            differing.append(name)
    record_property("detail", f"{len(SMALL)} experiments x (rerun, 2 threads); "
                              f"differing: {differing or 'none'}")
    assert not differing
