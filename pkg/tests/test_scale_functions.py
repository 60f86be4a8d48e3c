import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levylil.errors import DomainError, ExtrapolationError
from levylil.scale_functions import (Endpoint, InverseMixture, Power, RateKind, StableMixture,
                                     Tabulated, Verdict, doubling_exponents, eval_scale,
                                     integral_test, inverse_scale, lil_rate, scale_from_dict)

MIX = ((0.5, 1.0), (0.5, 2.0))

# frozen from a 30-digit mpmath evaluation of the compositions
CHUNG_LARGE_1024 = 65.40118377715946649
RANGE_LIMINF_EE = 6.1238310279673659


class TestEvaluation:
    def test_power(self):
        assert eval_scale(Power(1.5), 4.0) == pytest.approx(8.0, rel=1e-15)

    def test_stable_mixture(self):
        assert eval_scale(StableMixture(MIX), 2.0) == pytest.approx(3.0, rel=1e-15)

    def test_inverse_mixture(self):
        assert eval_scale(InverseMixture(MIX), 2.0) == pytest.approx(8.0 / 3.0, rel=1e-15)

    @pytest.mark.parametrize("r", [0.0, -1.0, math.nan, math.inf])
    def test_rejects_non_positive(self, r):
        with pytest.raises(DomainError):
            Power(1.0)(r)

    def test_tabulated_outside_table(self):
        tab = Tabulated.from_function(lambda r: r ** 2, 0.1, 10.0, 50)
        with pytest.raises(ExtrapolationError):
            tab(20.0)
        with pytest.raises(ExtrapolationError):
            tab(0.05)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(DomainError):
            StableMixture(((0.5, 1.0), (0.4, 2.0)))

    def test_vectorized(self):
        r = np.array([1.0, 2.0, 4.0])
        np.testing.assert_allclose(Power(2.0)(r), r ** 2)

    @pytest.mark.parametrize("f", [Power(1.3), StableMixture(MIX), InverseMixture(MIX),
                                   Tabulated.from_function(lambda r: r ** 1.7, 1e-3, 1e3, 30)])
    def test_dict_round_trip(self, f):
        assert scale_from_dict(f.to_dict()) == f


class TestInverse:
    def test_power(self):
        assert inverse_scale(Power(1.5), 8.0) == pytest.approx(4.0, rel=1e-12)

    def test_identity(self):
        assert inverse_scale(Power(1.0), 7.0) == pytest.approx(7.0, rel=1e-12)

    def test_mixture(self):
        assert inverse_scale(StableMixture(MIX), 3.0) == pytest.approx(2.0, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(w=st.floats(0.05, 0.95), b1=st.floats(0.3, 2.0), b2=st.floats(0.3, 2.0),
           log_r=st.floats(-6 * math.log(10), 6 * math.log(10)),
           kind=st.sampled_from([StableMixture, InverseMixture]))
    def test_round_trip_mixtures(self, w, b1, b2, log_r, kind):
        f = kind(((w, b1), (1.0 - w, b2)))
        r = math.exp(log_r)
        assert abs(inverse_scale(f, f(r)) / r - 1.0) <= 2e-12 * max(1.0, 1.0 / min(b1, b2))

    @settings(max_examples=40, deadline=None)
    @given(p=st.floats(0.2, 3.0), log_r=st.floats(-6 * math.log(10), 6 * math.log(10)))
    def test_round_trip_power(self, p, log_r):
        r = math.exp(log_r)
        assert inverse_scale(Power(p), Power(p)(r)) == pytest.approx(r, rel=2e-12)

    @settings(max_examples=40, deadline=None)
    @given(w=st.floats(0.05, 0.95), a=st.floats(1e-5, 1e5), b=st.floats(1e-5, 1e5))
    def test_strictly_increasing(self, w, a, b):
        if a == b:
            return
        lo, hi = sorted((a, b))
        f = InverseMixture(((w, 0.8), (1 - w, 1.7)))
        assert f(lo) < f(hi)

    @pytest.mark.parametrize("beta", [0.7, 1.0, 1.6])
    def test_single_atom_mixture_is_power(self, beta):
        r = np.geomspace(1e-3, 1e3, 13)
        np.testing.assert_array_equal(StableMixture(((1.0, beta),))(r), Power(beta)(r))
        np.testing.assert_allclose(InverseMixture(((1.0, beta),))(r), Power(beta)(r),
                                   rtol=1e-15)


class TestDoubling:
    def test_power(self):
        d = doubling_exponents(Power(1.5), 0.01, 100.0, 32)
        assert d.d_lower == pytest.approx(1.5, rel=1e-12)
        assert d.d_upper == pytest.approx(1.5, rel=1e-12)

    def test_mixture_bounds(self):
        d = doubling_exponents(StableMixture(MIX), 0.01, 100.0)
        assert 1.0 <= d.d_lower <= d.d_upper <= 2.0

    def test_tabulated_power(self):
        tab = Tabulated.from_function(lambda r: r ** 2, 0.01, 100.0, 200)
        d = doubling_exponents(tab, 0.01, 100.0)
        assert d.d_lower == pytest.approx(2.0, rel=1e-9)
        assert d.d_upper == pytest.approx(2.0, rel=1e-9)

    def test_bad_range(self):
        with pytest.raises(DomainError):
            doubling_exponents(Power(1.0), 1.0, 0.5)


class TestLilRate:
    V, PHI = Power(1.0), Power(1.5)

    def test_chung_large(self):
        assert lil_rate(self.V, self.PHI, RateKind.ChungLarge, 1024.0) == pytest.approx(
            CHUNG_LARGE_1024, rel=1e-12)

    def test_range_liminf_at_e_to_e(self):
        assert lil_rate(self.V, self.PHI, RateKind.RangeLiminf, math.exp(math.e)) == pytest.approx(
            RANGE_LIMINF_EE, rel=1e-12)

    def test_sup_quantile_at_phi_one(self):
        assert lil_rate(Power(2.0), self.PHI, RateKind.SupQuantile, self.PHI(1.0)) == pytest.approx(1.0)

    @pytest.mark.parametrize("kind", [k for k in RateKind if k.large_time])
    def test_large_time_domain(self, kind):
        with pytest.raises(DomainError):
            lil_rate(self.V, self.PHI, kind, 2.0)

    def test_small_time_domain(self):
        with pytest.raises(DomainError):
            lil_rate(self.V, self.PHI, RateKind.ChungSmall, 0.5)

    @pytest.mark.parametrize("alpha,beta", [(1.0, 1.5), (0.5, 1.8), (1.0, 1.2)])
    def test_closed_form_normalizers(self, alpha, beta):
        V, phi = Power(alpha), Power(beta)
        for t in np.geomspace(20.0, 1e9, 20):
            ll = math.log(math.log(t))
            assert lil_rate(V, phi, RateKind.LocalLimsup, t) == pytest.approx(
                t ** (1 - alpha / beta) * ll ** (alpha / beta), rel=1e-10)
            assert lil_rate(V, phi, RateKind.LocalLiminf, t) == pytest.approx(
                t ** (1 - alpha / beta) * ll ** (alpha / beta - 1), rel=1e-10)
            assert lil_rate(V, phi, RateKind.RangeLimsup, t) == pytest.approx(
                t ** (alpha / beta) * ll ** (1 - alpha / beta), rel=1e-10)
            assert lil_rate(V, phi, RateKind.ChungLarge, t) == pytest.approx(
                (t / ll) ** (1 / beta), rel=1e-10)

    def test_chung_small(self):
        t = 1e-4
        expected = (t / math.log(abs(math.log(t)))) ** (2 / 3)
        assert lil_rate(self.V, self.PHI, RateKind.ChungSmall, t) == pytest.approx(expected, rel=1e-12)


def log_power_table(power, log_power, lo, hi):
    return Tabulated.from_function(lambda t: t ** power * np.log(math.e / t) ** log_power, lo, hi, 600)


class TestIntegralTest:
    PHI = Power(1.5)

    def test_square_diverges(self):
        assert integral_test(self.PHI, Power(4.0 / 3.0), Endpoint.Zero).verdict is Verdict.Diverges

    def test_log_squared_converges(self):
        tab = log_power_table(2.0 / 3.0, 4.0 / 3.0, 1e-20, 0.3)
        assert integral_test(self.PHI, tab, Endpoint.Zero).verdict is Verdict.Converges

    def test_reciprocal_diverges(self):
        assert integral_test(self.PHI, Power(2.0 / 3.0), Endpoint.Zero).verdict is Verdict.Diverges

    def test_single_log_is_not_declared_convergent(self):
        tab = log_power_table(2.0 / 3.0, 2.0 / 3.0, 1e-20, 0.3)
        assert integral_test(self.PHI, tab, Endpoint.Zero).verdict is not Verdict.Converges

    @pytest.mark.parametrize("p", [0.3, 0.6, 0.9, 1.5, 2.0, 3.0])
    def test_power_pairs_match_analytic_rule(self, p):
        # int_0^1 dt / t**p converges iff p < 1
        vphi = Power(p / 1.5)
        verdict = integral_test(self.PHI, vphi, Endpoint.Zero).verdict
        assert verdict is (Verdict.Converges if p < 1 else Verdict.Diverges)

    @pytest.mark.parametrize("p,expected", [(2.0, Verdict.Converges), (1.0, Verdict.Diverges),
                                            (0.75, Verdict.Diverges)])
    def test_at_infinity(self, p, expected):
        assert integral_test(self.PHI, Power(p / 1.5), Endpoint.Infinity).verdict is expected

    def test_short_table_rejected(self):
        tab = Tabulated.from_function(lambda t: t, 0.1, 1.0, 10)
        with pytest.raises(DomainError):
            integral_test(self.PHI, tab, Endpoint.Zero)
