import math

import mpmath
import numpy as np
import pytest

from harqdelay.error_model import (
    ChannelParams,
    per_arq_avg,
    per_arq_instant,
    per_harq_avg,
    per_harq_instant,
    q_function,
)
from conftest import (
    DEFAULT_BLOCKLENGTH,
    DEFAULT_ETA,
    P_ARQ_DEFAULT,
    P_ARQ_DEFAULT_SE,
    PIN_SEED,
    PVEC_NRB10,
)
import oracles


class TestQFunction:
    def test_zero(self):
        assert q_function(0.0) == 0.5

    def test_deep_tail_underflows_to_zero(self):
        assert q_function(40.0) <= 1e-300

    def test_against_high_precision_erfc(self):
        # independent oracle: 50-digit erfc
        for x in np.linspace(-8, 8, 33):
            ref = float(0.5 * mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2)))
            got = float(q_function(x))
            assert got == pytest.approx(ref, rel=1e-12)

    def test_quantile_complement(self):
        assert float(q_function(-1.959964)) == pytest.approx(0.975, abs=1e-6)

    def test_vectorized(self):
        out = q_function(np.array([0.0, 40.0]))
        assert out.shape == (2,)


class TestInstantaneousPer:
    def test_half_at_capacity_threshold(self):
        eta = 1.7
        snr = 2.0**eta - 1.0
        assert float(per_arq_instant(snr, eta, 1800.0)) == pytest.approx(0.5, abs=1e-12)

    def test_vanishes_at_high_snr(self):
        assert float(per_arq_instant(1e9, 1.0, 1800.0)) == 0.0

    def test_one_capacity_unit_above_threshold_underflows(self):
        eta = 1.0
        snr = 2.0 ** (eta + 1.0) - 1.0  # log2(1+S) = eta + 1
        assert float(per_arq_instant(snr, eta, 1800.0)) < 1e-300

    def test_monotone_in_snr_and_eta(self):
        vals = [float(per_arq_instant(s, 1.0, 900.0)) for s in (0.5, 1.0, 2.0)]
        assert vals[0] > vals[1] > vals[2]
        vals = [float(per_arq_instant(1.0, e, 900.0)) for e in (0.5, 1.0, 1.5)]
        assert vals[0] < vals[1] < vals[2]

    def test_harq_m1_equals_arq(self):
        for snr in (0.1, 1.0, 3.0):
            assert per_harq_instant([snr], 0.7, 1800.0) == float(
                per_arq_instant(snr, 0.7, 1800.0)
            )

    def test_harq_half_at_joint_threshold(self):
        # all attempts at log2(1+S) = eta / m zero the Q argument
        eta, m = 4.0, 2
        snr = 2.0 ** (eta / m) - 1.0
        assert per_harq_instant([snr] * m, eta, 1800.0) == pytest.approx(0.5, abs=1e-12)

    def test_harq_example_m2(self):
        # S = 3 gives log2(4) = 2 = eta/m for eta = 4
        assert per_harq_instant([3.0, 3.0], 4.0, 1800.0) == pytest.approx(0.5)


class TestPerArqAvg:
    def test_hopeless_channel(self):
        ch = ChannelParams(gamma=1e-9)
        est = per_arq_avg(ch, 1.0, 1800.0, samples=10_000, seed=1)
        assert est.value > 1.0 - 1e-6

    def test_excellent_channel(self):
        ch = ChannelParams(gamma=1e9)
        est = per_arq_avg(ch, 1.0, 1800.0, samples=10_000, seed=1)
        assert est.value < 1e-6

    def test_pinned_default(self, channel):
        est = per_arq_avg(channel, DEFAULT_ETA, DEFAULT_BLOCKLENGTH, seed=PIN_SEED)
        assert est.value == pytest.approx(P_ARQ_DEFAULT, rel=1e-9)
        assert est.std_error == pytest.approx(P_ARQ_DEFAULT_SE, rel=1e-6)

    def test_default_matches_quadrature_within_4_sigma(self, channel):
        est = per_arq_avg(channel, DEFAULT_ETA, DEFAULT_BLOCKLENGTH, seed=PIN_SEED)
        ref = oracles.per_arq_quadrature(channel.gamma, DEFAULT_ETA, DEFAULT_BLOCKLENGTH)
        assert abs(est.value - ref) < 4.0 * est.std_error

    def test_deterministic_for_fixed_seed(self, channel):
        a = per_arq_avg(channel, DEFAULT_ETA, DEFAULT_BLOCKLENGTH, samples=50_000, seed=3)
        b = per_arq_avg(channel, DEFAULT_ETA, DEFAULT_BLOCKLENGTH, samples=50_000, seed=3)
        assert a.value == b.value

    def test_monotone_in_gamma_blocklength_eta(self):
        # 3-point grids, 4-sigma tolerance against MC noise
        kw = dict(samples=200_000, seed=9)
        by_gamma = [
            per_arq_avg(ChannelParams(g), DEFAULT_ETA, 1800.0, **kw) for g in (5.0, 10.0, 20.0)
        ]
        for a, b in zip(by_gamma, by_gamma[1:]):
            assert b.value <= a.value + 4 * (a.std_error + b.std_error)
        ch = ChannelParams(10.0)
        by_bl = [per_arq_avg(ch, DEFAULT_ETA, bl, **kw) for bl in (450.0, 900.0, 1800.0)]
        for a, b in zip(by_bl, by_bl[1:]):
            assert b.value <= a.value + 4 * (a.std_error + b.std_error)
        by_eta = [per_arq_avg(ch, e, 1800.0, **kw) for e in (0.3, 0.49, 0.8)]
        for a, b in zip(by_eta, by_eta[1:]):
            assert b.value >= a.value - 4 * (a.std_error + b.std_error)

    def test_validates_inputs(self):
        with pytest.raises(ValueError):
            ChannelParams(gamma=0.0)
        with pytest.raises(ValueError):
            per_arq_avg(ChannelParams(1.0), 1.0, 100.0, samples=0)


class TestPerHarqAvg:
    def test_m1_equals_arq_same_seed(self, channel):
        vec = per_harq_avg(channel, DEFAULT_ETA, DEFAULT_BLOCKLENGTH, 1,
                           samples=100_000, seed=13)
        est = per_arq_avg(channel, DEFAULT_ETA, DEFAULT_BLOCKLENGTH,
                          samples=100_000, seed=13)
        assert vec.p[0].value == est.value
        assert vec.p[0].std_error == est.std_error

    def test_pinned_default_vector(self, channel):
        vec = per_harq_avg(channel, DEFAULT_ETA, DEFAULT_BLOCKLENGTH, 4, seed=PIN_SEED)
        for got, want in zip(vec.values, PVEC_NRB10):
            assert got == pytest.approx(want, rel=1e-9)

    def test_monotone_nonincreasing(self, channel):
        for seed in (1, 2, 3):
            vec = per_harq_avg(channel, DEFAULT_ETA, DEFAULT_BLOCKLENGTH, 4,
                               samples=50_000, seed=seed)
            vals = vec.values
            assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_against_independent_plain_mc(self, channel):
        # fresh draws per m, unrelated generator and seed stream
        vec = per_harq_avg(channel, DEFAULT_ETA, DEFAULT_BLOCKLENGTH, 3, seed=PIN_SEED)
        for m in (1, 2, 3):
            ref, ref_se = oracles.per_harq_plain_mc(
                channel.gamma, DEFAULT_ETA, DEFAULT_BLOCKLENGTH, m
            )
            est = vec.p[m - 1]
            sigma = math.hypot(est.std_error, ref_se)
            assert abs(est.value - ref) < 4.0 * sigma

    def test_m2_against_nested_quadrature(self, channel):
        vec = per_harq_avg(channel, DEFAULT_ETA, DEFAULT_BLOCKLENGTH, 2, seed=PIN_SEED)
        ref = oracles.per_harq2_quadrature(channel.gamma, DEFAULT_ETA, DEFAULT_BLOCKLENGTH)
        assert abs(vec.p[1].value - ref) < 4.0 * vec.p[1].std_error
