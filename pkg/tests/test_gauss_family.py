import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from awgn_types.errors import DomainError
from awgn_types.gauss_family import (
    ChannelSpec,
    c0_c1,
    cond_density,
    expected_sq_noise,
    k_of_rho,
    kl_family_to_channel,
    lipschitz_constant,
    make_rho_point,
    mutual_info_rho,
    peak_density,
    sq_noise_bound,
)

from oracles import gaussian_kl, gh_kl_family

GOLDEN = (math.sqrt(5) - 1) / 2

rhos = st.floats(min_value=-0.99, max_value=100.0, allow_nan=False)
snrs = st.floats(min_value=0.05, max_value=50.0, allow_nan=False)


def ch(snr=1.0, base=2.0, sigma2=1.0):
    return ChannelSpec.from_snr(snr, sigma2=sigma2, log_base=base)


class TestChannelSpec:
    @pytest.mark.parametrize("kw", [dict(s2=0.0), dict(s2=1.0, sigma2=-1.0), dict(s2=1.0, log_base=1.0),
                                    dict(s2=float("nan"))])
    def test_rejects_bad_fields(self, kw):
        with pytest.raises(DomainError):
            ChannelSpec(**kw)

    def test_snr_and_units(self):
        c = ChannelSpec(s2=6.0, sigma2=2.0, log_base=math.e)
        assert c.snr == 3.0
        assert c.from_nats(1.0) == 1.0
        assert ch(base=2).from_nats(math.log(2)) == pytest.approx(1.0, abs=1e-15)


class TestKOfRho:
    def test_rho_zero_is_one(self):
        for snr in (0.1, 1.0, 3.0, 100.0):
            assert k_of_rho(ch(snr), 0.0) == pytest.approx(1.0, abs=4e-16)

    def test_rho_one_golden_ratio(self):
        assert k_of_rho(ch(1.0), 1.0) == pytest.approx(GOLDEN, abs=1e-15)

    def test_rho_minus_one_upper_end(self):
        upper = 0.5 * (1 + math.sqrt(1 + 4 * 1.0 / 1.0))
        assert k_of_rho(ch(1.0), -1.0) == pytest.approx(upper, abs=1e-15)
        assert upper == pytest.approx((1 + math.sqrt(5)) / 2)

    def test_below_minus_one_rejected(self):
        with pytest.raises(DomainError):
            k_of_rho(ch(), -1.0000001)

    @given(snrs, rhos, rhos)
    def test_strictly_decreasing(self, snr, r1, r2):
        if abs(r1 - r2) < 1e-6:
            return
        lo, hi = sorted((r1, r2))
        assert k_of_rho(ch(snr), lo) > k_of_rho(ch(snr), hi)

    @given(snrs, rhos)
    def test_ranges(self, snr, rho):
        k = k_of_rho(ch(snr), rho)
        if rho >= 0:
            assert 0 < k <= 1 + 1e-15
        else:
            assert 1 - 1e-15 <= k <= 0.5 * (1 + math.sqrt(1 + 4 / snr)) * (1 + 1e-15)


class TestRhoPoint:
    def test_rho_zero_reduces_to_channel(self):
        p = make_rho_point(ch(1.0), 0.0)
        assert (p.k_rho, p.sigma2_yx, p.sigma2_y) == pytest.approx((1.0, 1.0, 2.0), abs=1e-15)

    def test_rho_one_values(self):
        p = make_rho_point(ch(1.0), 1.0)
        assert p.sigma2_yx == pytest.approx(2 * GOLDEN, rel=1e-14)
        assert p.sigma2_y == pytest.approx(1 + GOLDEN, rel=1e-14)
        assert p.residuals()["output_variance"] < 1e-12

    def test_precision_identity_negative_rho(self):
        p = make_rho_point(ch(4.0), -0.5)
        lhs = (1 + p.rho) / p.sigma2_yx
        rhs = p.rho / p.sigma2_y + 1.0
        assert abs(lhs - rhs) < 1e-12

    @pytest.mark.parametrize("rho", [-1.0, -1.0 + 1e-10, -2.0])
    def test_floor(self, rho):
        with pytest.raises(DomainError):
            make_rho_point(ch(), rho)

    @given(snrs, rhos, st.floats(0.1, 10.0))
    def test_identities_hold(self, snr, rho, sigma2):
        p = make_rho_point(ch(snr, sigma2=sigma2), rho)
        assert max(p.residuals().values()) < 1e-12


class TestDensities:
    def test_standard_normal_peak(self):
        p = make_rho_point(ch(), 0.0)
        assert cond_density(p, 0.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)

    def test_mode_value(self):
        p = make_rho_point(ch(2.0), 0.7)
        assert cond_density(p, 1.3, p.k_rho * 1.3) == pytest.approx(peak_density(p), rel=1e-15)

    def test_rho_one_at_zero(self):
        p = make_rho_point(ch(), 1.0)
        v = 2 * GOLDEN
        expected = math.exp(-(GOLDEN ** 2) / (2 * v)) / math.sqrt(2 * math.pi * v)
        assert cond_density(p, 1.0, 0.0) == pytest.approx(expected, rel=1e-14)

    def test_vectorized(self):
        p = make_rho_point(ch(), 0.3)
        ys = np.linspace(-3, 3, 7)
        out = cond_density(p, 0.5, ys)
        assert out.shape == (7,)
        assert out[0] == pytest.approx(cond_density(p, 0.5, -3.0))

    @given(st.floats(0.0, 20.0), st.floats(-5, 5), st.floats(-8, 8), st.floats(-8, 8))
    @settings(max_examples=200)
    def test_lipschitz_membership(self, rho, x, y1, y2):
        c = ch(1.0)
        p = make_rho_point(c, rho)
        K = lipschitz_constant(c)
        d = abs(cond_density(p, x, y1) - cond_density(p, x, y2))
        assert d <= K * abs(y1 - y2) + 1e-15
        assert peak_density(p) <= math.sqrt(K) * (1 + 1e-15)


class TestNoiseMoments:
    def test_rho_zero_gives_sigma2(self):
        p = make_rho_point(ch(2.0, sigma2=1.5), 0.0)
        assert expected_sq_noise(p, 0.3) == pytest.approx(1.5)

    def test_rho_one_at_full_power(self):
        p = make_rho_point(ch(), 1.0)
        assert expected_sq_noise(p, 1.0) == pytest.approx(1 + (1 - GOLDEN), rel=1e-14)
        assert expected_sq_noise(p, 1.0) == pytest.approx(1.381966, abs=1e-6)

    @given(snrs, st.floats(-0.99, 50.0), st.floats(0.0, 2.0), st.floats(0.0, 1.0))
    def test_two_branch_bound(self, snr, rho, eps, frac):
        c = ch(snr)
        p = make_rho_point(c, rho)
        sx2 = frac * (c.s2 + eps)
        assert expected_sq_noise(p, sx2) <= sq_noise_bound(c, rho, eps) * (1 + 1e-12) + 1e-12


class TestDivergenceAndInformation:
    def test_kl_zero_at_rho_zero(self):
        assert kl_family_to_channel(ch(), make_rho_point(ch(), 0.0)) == 0.0

    def test_kl_identity_rho_one(self):
        c = ch(1.0, base=2.0)
        p = make_rho_point(c, 1.0)
        c0, c1 = c0_c1(c, 1.0)
        lhs = kl_family_to_channel(c, p) + 1.0 * mutual_info_rho(c, p)
        assert abs(lhs - (c0 + c1 * c.s2)) < 1e-10

    def test_kl_against_gauss_hermite(self):
        c = ch(1.0, base=math.e)
        p = make_rho_point(c, -0.5)
        assert abs(kl_family_to_channel(c, p) - gh_kl_family(1.0, 1.0, -0.5)) < 1e-8

    @pytest.mark.parametrize("snr,rho", [(0.5, 3.0), (4.0, 0.2), (10.0, -0.8), (2.0, 25.0)])
    def test_kl_against_gauss_hermite_more(self, snr, rho):
        c = ch(snr, base=math.e)
        assert abs(kl_family_to_channel(c, make_rho_point(c, rho)) - gh_kl_family(snr, 1.0, rho)) < 1e-8

    @given(snrs, rhos)
    def test_kl_positive_off_zero(self, snr, rho):
        c = ch(snr)
        d = kl_family_to_channel(c, make_rho_point(c, rho))
        assert d >= 0
        if abs(rho) > 1e-3:
            assert d > 0

    def test_capacity_at_rho_zero(self):
        c = ch(3.0)
        assert mutual_info_rho(c, make_rho_point(c, 0.0)) == pytest.approx(1.0, abs=1e-15)

    def test_mi_rho_one(self):
        c = ch(1.0)
        v = mutual_info_rho(c, make_rho_point(c, 1.0))
        assert v == pytest.approx(0.5 * math.log2((1 + GOLDEN) / (2 * GOLDEN)), rel=1e-14)
        # the quoted rounding 0.19434 does not match its own formula; 0.194242 does
        assert v == pytest.approx(0.194242, abs=1e-6)

    def test_mi_monotone(self):
        c = ch(1.0)
        assert mutual_info_rho(c, make_rho_point(c, 0.5)) > mutual_info_rho(c, make_rho_point(c, 1.0))

    def test_point_mass_kl_matches_scalar_oracle(self):
        # sanity check of the oracle helper itself
        assert gaussian_kl(0, 1, 0, 1) == 0


class TestC0C1:
    def test_zero_at_rho_zero(self):
        assert c0_c1(ch(), 0.0) == pytest.approx((0.0, 0.0), abs=1e-16)

    def test_c0_vanishes_for_large_rho(self):
        c0, _ = c0_c1(ch(1.0, base=math.e), 1e4)
        assert abs(c0) < 1e-2

    def test_c1_rho_one(self):
        _, c1 = c0_c1(ch(1.0, base=math.e), 1.0)
        assert c1 == pytest.approx((1 - GOLDEN) / 2, rel=1e-14)
        assert c1 == pytest.approx(0.190983, abs=1e-6)

    @given(snrs, rhos)
    def test_sign_of_c1(self, snr, rho):
        _, c1 = c0_c1(ch(snr), rho)
        assert (c1 >= 0) if rho >= 0 else (c1 <= 0)

    @given(snrs, rhos, st.sampled_from([2.0, math.e, 10.0]))
    def test_identity(self, snr, rho, base):
        c = ch(snr, base=base)
        p = make_rho_point(c, rho)
        c0, c1 = c0_c1(c, rho)
        lhs = kl_family_to_channel(c, p) + rho * mutual_info_rho(c, p)
        assert abs(lhs - (c0 + c1 * c.s2)) < 1e-10
