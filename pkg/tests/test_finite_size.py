"""Tests for the finite-size penalty and worst-case estimation bounds."""

import math

import numpy as np
import pytest
from scipy.special import erfc

from nsqkd import finite_size as fsz
from nsqkd import gaussian as g
from nsqkd import protocols as p

DET = p.DetectorParams()


class TestZFromEpsilon:
    def test_paper_value(self):
        # paper rounds this to 6.5
        assert fsz.z_from_epsilon(1e-10) == pytest.approx(6.4667, abs=1e-3)

    def test_one_sigma_two_sided(self):
        assert fsz.z_from_epsilon(0.3173) == pytest.approx(1.0, abs=1e-3)

    def test_limit_eps_to_one(self):
        assert fsz.z_from_epsilon(1.0 - 1e-12) < 1e-5

    def test_residual_inverts_erf_relation(self):
        for eps in (1e-12, 1e-10, 1e-6, 1e-3, 0.05, 0.3173, 0.9):
            z = fsz.z_from_epsilon(eps)
            assert abs(erfc(z / math.sqrt(2.0)) - eps) < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            fsz.z_from_epsilon(0.0)
        with pytest.raises(ValueError):
            fsz.z_from_epsilon(1.0)


class TestFiniteSizeParams:
    def test_default_split_is_half(self):
        fs = fsz.FiniteSizeParams(n_total=1e9)
        assert fs.key_symbols == 5e8
        assert fs.est_symbols == 5e8

    def test_explicit_split(self):
        fs = fsz.FiniteSizeParams(n_total=10, n_key=7)
        assert fs.key_symbols == 7
        assert fs.est_symbols == 3

    def test_validation(self):
        with pytest.raises(ValueError):
            fsz.FiniteSizeParams(n_total=1)
        with pytest.raises(ValueError):
            fsz.FiniteSizeParams(n_total=10, n_key=10)
        with pytest.raises(ValueError):
            fsz.FiniteSizeParams(n_total=10, eps_pe=0.0)


class TestDeltaN:
    def test_frozen_value(self):
        # (2*2+3)*sqrt(log2(2e10)/1e9) + 2e-9*log2(1e10) = 1.29496e-3
        fs = fsz.FiniteSizeParams(n_total=2e9, n_key=1e9)
        assert fsz.delta_n(fs) == pytest.approx(1.295e-3, rel=1e-3)
        expected = 7.0 * math.sqrt(math.log2(2.0 / 1e-10) / 1e9) + 2e-9 * math.log2(1e10)
        assert fsz.delta_n(fs) == pytest.approx(expected, rel=1e-14)

    def test_vanishes_for_large_n(self):
        big = fsz.FiniteSizeParams(n_total=2e18, n_key=1e18)
        assert fsz.delta_n(big) < 1e-7

    def test_strictly_decreasing_in_n(self):
        vals = [
            fsz.delta_n(fsz.FiniteSizeParams(n_total=2 * n, n_key=n))
            for n in (1e6, 1e8, 1e10, 1e12)
        ]
        assert np.all(np.diff(vals) < 0)


class TestWorstCaseChannel:
    def test_scalar_oracle(self):
        wc = fsz.worst_case_channel(0.1, 0.05, 5.0, 5e8, 1e-10)
        z = fsz.z_from_epsilon(1e-10)
        t_min = math.sqrt(0.1) - z * math.sqrt(1.005 / (5e8 * 4.0))
        s2max = 1.005 + z * 1.005 * math.sqrt(2.0) / math.sqrt(5e8)
        assert wc.t_min == pytest.approx(t_min, abs=1e-12)
        assert wc.sigma2_max == pytest.approx(s2max, abs=1e-12)
        assert wc.t_min < math.sqrt(0.1)
        assert wc.sigma2_max > 1.005

    def test_infinite_samples_limit(self):
        wc = fsz.worst_case_channel(0.1, 0.05, 5.0, 1e30, 1e-10)
        assert wc.t_wc == pytest.approx(0.1, rel=1e-9)
        assert wc.eps_wc == pytest.approx(0.05, rel=1e-6)

    def test_worst_case_always_adverse(self):
        for m in (1e4, 1e8, 1e12):
            wc = fsz.worst_case_channel(0.2, 0.03, 5.0, m, 1e-10)
            assert wc.eps_wc > 0.03
            assert wc.t_wc < 0.2

    def test_convergence_rate_one_over_sqrt_m(self):
        # Richardson-style ratio: deviations shrink by 2 when m grows 4x
        m = 1e8
        wc1 = fsz.worst_case_channel(0.1, 0.05, 5.0, m, 1e-10)
        wc2 = fsz.worst_case_channel(0.1, 0.05, 5.0, 4 * m, 1e-10)
        dt1 = math.sqrt(0.1) - wc1.t_min
        dt2 = math.sqrt(0.1) - wc2.t_min
        ds1 = wc1.sigma2_max - 1.005
        ds2 = wc2.sigma2_max - 1.005
        assert dt1 / dt2 == pytest.approx(2.0, rel=1e-6)
        assert ds1 / ds2 == pytest.approx(2.0, rel=1e-6)

    def test_estimation_failure(self):
        with pytest.raises(fsz.EstimationFailureError):
            fsz.worst_case_channel(1e-6, 0.05, 5.0, 100.0, 1e-10)

    def test_domain(self):
        with pytest.raises(ValueError):
            fsz.worst_case_channel(0.1, 0.05, 1.0, 1e8, 1e-10)


class TestWorstCaseCov:
    def test_infinite_samples_recovers_nominal(self):
        ch = p.ChannelParams(v=5.0, t=0.1, eps=0.05)
        cov = fsz.worst_case_cov(ch, 1e30, 1e-10)
        assert np.allclose(cov, g.epr_channel_cov(5.0, 0.1, 0.05), atol=1e-10)

    def test_off_diagonal_matches_tmin_form(self):
        # cross-form consistency: entry equals t_min * sqrt(V^2 - 1)
        ch = p.ChannelParams(v=5.0, t=0.1, eps=0.05)
        m = 5e8
        cov = fsz.worst_case_cov(ch, m, 1e-10)
        wc = fsz.worst_case_channel(0.1, 0.05, 5.0, m, 1e-10)
        assert cov[0, 2] == pytest.approx(wc.t_min * math.sqrt(24.0), abs=1e-9)
        assert cov[1, 3] == pytest.approx(-wc.t_min * math.sqrt(24.0), abs=1e-9)

    def test_off_diagonal_shrinks(self):
        ch = p.ChannelParams(v=5.0, t=0.1, eps=0.05)
        cov = fsz.worst_case_cov(ch, 5e8, 1e-10)
        assert cov[0, 2] < math.sqrt(0.1 * 24.0)

    def test_b_block_grows(self):
        ch = p.ChannelParams(v=5.0, t=0.1, eps=0.05)
        cov = fsz.worst_case_cov(ch, 5e8, 1e-10)
        nominal = g.epr_channel_cov(5.0, 0.1, 0.05)
        assert cov[2, 2] > nominal[2, 2]

    def test_result_physical(self):
        ch = p.ChannelParams(v=5.0, t=0.1, eps=0.05)
        assert g.is_physical(fsz.worst_case_cov(ch, 1e6, 1e-10))


class TestFiniteKeyrate:
    def test_approaches_asymptotic(self):
        ch = p.ChannelParams(v=5.0, l=30.0, eps=0.05, beta=0.95)
        fs = fsz.FiniteSizeParams(n_total=1e16, n_key=1e16 - 1e12)
        finite = fsz.finite_keyrate(ch, DET, fs).rate
        asym = p.biased_keyrate(ch, DET).rate
        assert finite == pytest.approx(asym, rel=1e-3)
        assert finite <= asym

    def test_monotone_in_block_length(self):
        ch = p.ChannelParams(v=5.0, l=50.0, eps=0.05, beta=0.95)
        rates = [
            fsz.finite_keyrate(ch, DET, fsz.FiniteSizeParams(n)).rate
            for n in (1e8, 1e9, 1e10, 1e11, 1e12, 1e13, 1e14)
        ]
        assert np.all(np.diff(rates) > 0)
        assert rates[-1] <= p.biased_keyrate(ch, DET).rate

    def test_below_asymptotic_everywhere(self):
        for length in (10.0, 50.0, 80.0):
            for n in (1e9, 1e12):
                ch = p.ChannelParams(v=5.0, l=length, eps=0.05, beta=0.95)
                finite = fsz.finite_keyrate(ch, DET, fsz.FiniteSizeParams(n)).rate
                assert finite <= p.biased_keyrate(ch, DET).rate

    def test_bracketing_at_1e9(self):
        # positive at 50 km, non-positive at 90 km (crossing near 70 km)
        fs = fsz.FiniteSizeParams(n_total=1e9)
        ch50 = p.ChannelParams(v=5.0, l=50.0, eps=0.05, beta=0.95)
        ch90 = p.ChannelParams(v=5.0, l=90.0, eps=0.05, beta=0.95)
        assert fsz.finite_keyrate(ch50, DET, fs).rate > 0.0
        assert fsz.finite_keyrate(ch90, DET, fs).rate <= 0.0

    def test_negative_rates_not_clamped(self):
        fs = fsz.FiniteSizeParams(n_total=1e9)
        ch = p.ChannelParams(v=5.0, l=120.0, eps=0.05, beta=0.95)
        assert fsz.finite_keyrate(ch, DET, fs).rate < 0.0

    def test_ideal_model_option(self):
        fs = fsz.FiniteSizeParams(n_total=1e11)
        ch = p.ChannelParams(v=5.0, l=50.0, eps=0.05, beta=0.95)
        rep = fsz.finite_keyrate(ch, DET, fs, model="ideal")
        assert len(rep.eigenvalues_joint) == 3
        assert rep.rate > 0.0

    def test_report_fields(self):
        fs = fsz.FiniteSizeParams(n_total=1e9)
        ch = p.ChannelParams(v=5.0, l=50.0, eps=0.05, beta=0.95)
        rep = fsz.finite_keyrate(ch, DET, fs)
        assert rep.delta_n == pytest.approx(fsz.delta_n(fs))
        assert rep.t_worst < 0.1
        assert rep.eps_worst > 0.05
        assert rep.rate == pytest.approx(
            0.5 * (0.95 * rep.i_ab - rep.chi_be - rep.delta_n), abs=1e-15
        )

    def test_unknown_model(self):
        fs = fsz.FiniteSizeParams(n_total=1e9)
        ch = p.ChannelParams(v=5.0, l=50.0, eps=0.05)
        with pytest.raises(ValueError):
            fsz.finite_keyrate(ch, DET, fs, model="nope")


class TestRequiredBlockLength:
    def test_50km_order_of_magnitude(self):
        m = fsz.required_block_length(0.1, 0.01, 1e-10)
        assert 5e7 <= m <= 2e8

    def test_exact_ceil(self):
        z = fsz.z_from_epsilon(1e-10)
        m = fsz.required_block_length(0.1, 0.01, 1e-10)
        assert m == math.ceil(2.0 * z * z / (0.1**2 * 0.01**2))

    def test_100km_larger(self):
        # at T = 0.01 the formula gives ~1e10
        m = fsz.required_block_length(0.01, 0.01, 1e-10)
        assert 5e9 <= m <= 2e10

    def test_quadratic_scaling(self):
        m1 = fsz.required_block_length(0.05, 0.01, 1e-10)
        m2 = fsz.required_block_length(0.2, 0.01, 1e-10)
        assert m1 / m2 == pytest.approx(16.0, rel=1e-6)

    def test_domain(self):
        with pytest.raises(ValueError):
            fsz.required_block_length(0.0, 0.01, 1e-10)
