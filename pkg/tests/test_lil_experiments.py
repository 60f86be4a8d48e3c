import json
import math

import numpy as np
import pytest

from levylil.errors import DomainError, LadderError, StatisticalError
from levylil.lil_experiments import (DyadicLadder, Functional, LadderSamples, LilMode,
                                     chung_statistic, confinement_curve, exit_tail_curve,
                                     grid_refinement_check, integral_test_path_consistency,
                                     ladder_samples, local_time_liminf_statistic,
                                     local_time_limsup_statistic, log_log_regression, median_shift,
                                     pairing_factor, quantile_scaling, range_lil_statistics,
                                     ulil_hypothesis_check)
from levylil.process_sim import StableLevy, TimeGrid, build_ensemble
from levylil.scale_functions import Power, RateKind, Verdict, lil_rate

S15 = StableLevy(1.5)
V, PHI = Power(1.0), Power(1.5)


@pytest.fixture(scope="module")
def samples():
    lad = DyadicLadder(15.0, 8)
    ens = build_ensemble(S15, TimeGrid(1.0, int(lad.t_max)), 400, 2024)
    return ladder_samples(ens, lad, list(Functional), eps=0.5)


def median_stderr(x):
    x = np.sort(x)
    n = x.size
    half = 0.5 * math.sqrt(n)
    return 0.5 * (x[int(n / 2 + half)] - x[int(n / 2 - half)])


class TestLadder:
    def test_times(self):
        np.testing.assert_array_equal(DyadicLadder(16.0, 3).times, [16, 32, 64, 128])

    def test_descending(self):
        lad = DyadicLadder.small_time()
        assert lad.t_max == 2.0 ** -6 and lad.times[0] == 2.0 ** -20

    def test_domains(self):
        with pytest.raises(LadderError):
            DyadicLadder(2.0, 4).check_domain(LilMode.LargeTime)
        with pytest.raises(LadderError):
            DyadicLadder(0.5, 4, descending=True).check_domain(LilMode.SmallTime)
        DyadicLadder.small_time().check_domain(LilMode.SmallTime)

    def test_indices(self):
        lad = DyadicLadder(16.0, 3)
        np.testing.assert_array_equal(lad.indices(TimeGrid(0.5, 256)), [32, 64, 128, 256])
        with pytest.raises(LadderError):
            lad.indices(TimeGrid(1.0, 100))
        with pytest.raises(LadderError):
            lad.indices(TimeGrid(0.3, 1000))

    def test_truncated(self):
        assert DyadicLadder(16.0, 10).truncated(4).t_max == 256
        with pytest.raises(DomainError):
            DyadicLadder(16.0, 3).truncated(5)

    def test_invalid(self):
        with pytest.raises(DomainError):
            DyadicLadder(16.0, 3, ratio=1.0)


class TestRegression:
    @pytest.mark.parametrize("p", [1 / 3, 2 / 3, 1.7])
    def test_synthetic_power_exact(self, p):
        times = DyadicLadder(16.0, 10).times
        s = LadderSamples(times, running_sup=np.tile(times ** p, (5, 1)))
        rep = quantile_scaling(s, Functional.RunningSup)
        assert rep.slope == pytest.approx(p, rel=1e-12)
        assert rep.r2 == pytest.approx(1.0)

    def test_r2_in_unit_interval(self):
        rng = np.random.default_rng(0)
        rep = log_log_regression(np.arange(1, 20), rng.random(19) + 0.1)
        assert 0.0 <= rep.r2 <= 1.0

    def test_degenerate_quantile(self):
        times = DyadicLadder(16.0, 3).times
        s = LadderSamples(times, running_sup=np.zeros((4, times.size)))
        with pytest.raises(StatisticalError):
            quantile_scaling(s, Functional.RunningSup)

    def test_quantile_level(self, samples):
        with pytest.raises(DomainError):
            quantile_scaling(samples, Functional.RunningSup, q=1.0)

    def test_missing_functional(self):
        s = LadderSamples(np.array([16.0, 32.0]), running_sup=np.ones((2, 2)))
        with pytest.raises(DomainError):
            s.get(Functional.Range)


class TestStatistics:
    def test_still_path_gives_zero(self):
        times = DyadicLadder(16.0, 4).times
        s = LadderSamples(times, running_sup=np.zeros((3, times.size)))
        np.testing.assert_array_equal(chung_statistic(s, V, PHI).values, 0.0)

    def test_chung_positive(self, samples):
        stat = chung_statistic(samples, V, PHI)
        assert np.all(stat.values > 0) and np.isfinite(stat.median)
        assert stat.kind is RateKind.ChungLarge

    def test_chung_small_time(self):
        lad = DyadicLadder(2.0 ** -6, 6, descending=True)
        ens = build_ensemble(S15, TimeGrid(2.0 ** -12, 64), 100, 3)
        stat = chung_statistic(ens, V, PHI, LilMode.SmallTime, lad)
        assert np.all(stat.values > 0)

    def test_large_time_domain(self):
        times = np.array([2.0, 4.0])
        with pytest.raises(LadderError):
            chung_statistic(LadderSamples(times, running_sup=np.ones((2, 2))), V, PHI)

    def test_monotone_in_levels(self, samples):
        short = samples.restrict(samples.times[:5])
        for fn, ext in ((local_time_limsup_statistic, "max"), (local_time_liminf_statistic, "min")):
            a, b = fn(short, V, PHI), fn(samples, V, PHI)
            if ext == "max":
                assert np.all(b.values >= a.values)
            else:
                assert np.all(b.values <= a.values)
        a, b = chung_statistic(short, V, PHI), chung_statistic(samples, V, PHI)
        assert np.all(b.values <= a.values)

    def test_liminf_below_limsup(self, samples):
        # at t0 = 15 < e**e the pairing factor is one
        assert pairing_factor(samples.times) == 1.0
        lo = local_time_liminf_statistic(samples, V, PHI).values
        hi = local_time_limsup_statistic(samples, V, PHI).values
        assert np.all(lo <= hi * math.log(math.log(samples.times[-1])))
        assert np.all(lo <= hi)
        rs, ri = range_lil_statistics(samples, V, PHI)
        assert np.all(ri.values <= rs.values)

    def test_pairing_factor(self):
        assert pairing_factor([16.0, 32.0]) == pytest.approx(math.log(math.log(16.0)))
        assert pairing_factor([4.0, 8.0]) == 1.0

    def test_range_lower_bound(self, samples):
        rs, ri = range_lil_statistics(samples, V, PHI)
        floor = samples.eps / lil_rate(V, PHI, RateKind.RangeLimsup, samples.times[-1])
        assert np.all(rs.values >= floor) and np.all(ri.values > 0)

    def test_local_time_needs_index_above_one(self):
        ens = build_ensemble(StableLevy(0.8), TimeGrid(1.0, 64), 2, 1)
        with pytest.raises(DomainError):
            local_time_limsup_statistic(ens, V, Power(0.8), DyadicLadder(16.0, 2))

    def test_relabel_invariance(self, samples):
        perm = np.random.default_rng(1).permutation(samples.n_paths)
        shuffled = LadderSamples(samples.times, samples.running_sup[perm])
        assert chung_statistic(shuffled, V, PHI).quantiles() == chung_statistic(samples, V, PHI).quantiles()

    def test_thread_invariance(self):
        lad = DyadicLadder(16.0, 4)
        ens = build_ensemble(S15, TimeGrid(1.0, 256), 64, 5)
        a = ladder_samples(ens, lad, list(Functional), threads=1)
        b = ladder_samples(ens, lad, list(Functional), threads=3)
        for f in Functional:
            np.testing.assert_array_equal(a.get(f), b.get(f))

    def test_median_shift(self, samples):
        a = chung_statistic(samples, V, PHI)
        assert median_shift(a, a) == 0.0

    def test_exports(self, samples, tmp_path):
        stat = chung_statistic(samples, V, PHI)
        stat.write_csv(tmp_path / "s.csv")
        stat.write_json(tmp_path / "s.json")
        assert (tmp_path / "s.csv").read_text().splitlines()[0] == "path_index,value"
        assert json.loads((tmp_path / "s.json").read_text())["median"] == stat.median


class TestScaling:
    def test_running_sup_slope(self, samples):
        rep = quantile_scaling(samples, Functional.RunningSup)
        # 400 paths: noise of the median slope is a few hundredths
        assert rep.slope == pytest.approx(2 / 3, abs=0.06)

    def test_self_similarity_of_quantiles(self):
        c, beta = 4.0, 1.5
        short, long_ = DyadicLadder(16.0, 4), DyadicLadder(64.0, 4)
        a = ladder_samples(build_ensemble(S15, TimeGrid(1.0, 256), 1500, 7), short).running_sup
        b = ladder_samples(build_ensemble(S15, TimeGrid(1.0, 1024), 1500, 8), long_).running_sup
        for k in range(a.shape[1]):
            lhs, rhs = np.median(b[:, k]), c ** (1 / beta) * np.median(a[:, k])
            se = math.hypot(median_stderr(b[:, k]), c ** (1 / beta) * median_stderr(a[:, k]))
            assert abs(lhs - rhs) <= 3 * se

    def test_grid_refinement(self):
        lad = DyadicLadder(16.0, 8)
        ens = build_ensemble(S15, TimeGrid(0.25, int(4 * lad.t_max)), 300, 9)
        _, _, shift = grid_refinement_check(ens, lad, V, PHI, factor=4)
        assert shift < 0.10

    def test_grid_refinement_alignment(self):
        ens = build_ensemble(S15, TimeGrid(1.0, 64), 2, 1)
        with pytest.raises(LadderError):
            grid_refinement_check(ens, DyadicLadder(16.0, 2), V, PHI, factor=32)


class TestConfinementAndExit:
    def test_confinement(self):
        curve = confinement_curve(S15, PHI, 1.0, 8, 5000, 11, c0=0.25, dt=0.0025)
        assert curve.p_hat[0] == 1.0
        assert np.all(np.diff(curve.p_hat) <= 0)
        assert curve.r2 >= 0.95 and 0 < curve.ratio < 1

    def test_confinement_degenerate(self):
        with pytest.raises(StatisticalError):
            confinement_curve(S15, PHI, 1.0, 8, 200, 11, c0=4.0)

    def test_confinement_needs_levels(self):
        with pytest.raises(DomainError):
            confinement_curve(S15, PHI, 1.0, 3, 10, 1)

    def test_exit_tail(self):
        t = 2.0 ** np.arange(-10, -4)
        curve = exit_tail_curve(S15, PHI, 1.0, t, 20000, 12, dt=2.0 ** -12)
        assert np.all(np.diff(curve.p_hat) >= 0) and np.all(curve.p_hat <= 1)
        assert curve.slope == pytest.approx(1.0, abs=0.15)

    def test_larger_ball_exits_less(self):
        t = 2.0 ** np.arange(-6, -2)
        a = exit_tail_curve(S15, PHI, 1.0, t, 2000, 13, dt=2.0 ** -8).p_hat
        b = exit_tail_curve(S15, PHI, 2.0, t, 2000, 13, dt=2.0 ** -8).p_hat
        assert np.all(b <= a)

    def test_exit_grid_domain(self):
        with pytest.raises(DomainError):
            exit_tail_curve(S15, PHI, 1.0, [0.5, 2.0], 10, 1)


class TestUlil:
    def test_running_sup(self, samples):
        table = ulil_hypothesis_check(samples.running_sup, samples.times, lambda t: t ** (2 / 3),
                                      np.linspace(0, 20, 21))
        assert table.sup_exceedance[0] == 1.0
        assert table.ok

    def test_range(self, samples):
        table = ulil_hypothesis_check(samples.range, samples.times, lambda t: V(PHI.inverse(t)),
                                      np.linspace(0, 20, 21))
        assert table.monotone and table.sup_exceedance[0] == 1.0


class TestIntegralConsistency:
    def test_huge_constant(self, samples):
        frac, _, _ = integral_test_path_consistency(samples, lambda t: 1e12, Verdict.Converges)
        assert frac == 1.0

    def test_convergent_and_divergent(self, samples):
        conv = lambda t: t ** (2 / 3) * math.log(t) ** (4 / 3)
        frac_c, scale, verdict = integral_test_path_consistency(samples, conv, Verdict.Converges,
                                                                scale=100.0)
        assert frac_c >= 0.95 and scale == 100.0 and verdict is Verdict.Converges
        frac_d, _, _ = integral_test_path_consistency(samples, lambda t: t ** (2 / 3),
                                                      Verdict.Diverges, scale=0.01)
        assert frac_d <= 0.2
