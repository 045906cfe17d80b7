"""Short-packet rate/error formula contracts."""

import math

import numpy as np
import pytest

from irslink import fbl
from irslink.numerics import q_inv

# mpmath oracle: Q(ln2 sqrt(200/0.9375) (2 - 0.5)) = Q(15.186094)
DEEP_TAIL_ERROR = 2.1860421603259983e-52


def test_dispersion_values():
    assert fbl.dispersion(0.0) == 0.0
    assert abs(fbl.dispersion(1.0) - 0.75) < 1e-15
    assert abs(fbl.dispersion(1e9) - 1.0) < 1e-8
    # stable near zero: V(g) = g(g+2)/(1+g)^2, full relative precision
    g = 1e-12
    assert abs(fbl.dispersion(g) / (g * (g + 2.0) / (1.0 + g) ** 2) - 1.0) < 1e-14
    with pytest.raises(ValueError):
        fbl.dispersion(-0.5)


def test_achievable_rate_median_eps_is_shannon():
    # Qinv(0.5) = 0 removes the penalty exactly
    for g in (0.5, 3.0, 100.0):
        assert fbl.achievable_rate(g, 200, 0.5) == math.log2(1.0 + g)


def test_achievable_rate_reference_point():
    rate = fbl.achievable_rate(3.0, 200, 1e-8)
    expect = 2.0 - math.sqrt(0.9375 / 200.0) * q_inv(1e-8) / math.log(2.0)
    assert abs(rate - expect) < 1e-14
    assert abs(rate - 1.4457) < 1e-4


def test_achievable_rate_zero_snr():
    assert fbl.achievable_rate(0.0, 200, 1e-8) == 0.0


def test_achievable_rate_validation():
    with pytest.raises(ValueError):
        fbl.achievable_rate(1.0, 0, 1e-8)
    with pytest.raises(ValueError):
        fbl.achievable_rate(1.0, 200, 0.0)
    with pytest.raises(ValueError):
        fbl.achievable_rate(-1.0, 200, 1e-8)


def test_decode_error_half_power_point():
    # at gamma = 2^(D/M) - 1 the argument vanishes and the error is 1/2
    # (to float rounding of log1p at the ramp center)
    m, d = 200, 100.0
    x0 = 2.0 ** (d / m) - 1.0
    assert abs(fbl.decode_error_prob(x0, m, d) - 0.5) < 1e-12


def test_decode_error_deep_tail():
    val = fbl.decode_error_prob(3.0, 200, 100.0)
    assert abs(val - DEEP_TAIL_ERROR) <= 1e-12 * DEEP_TAIL_ERROR


def test_decode_error_limits_and_convention():
    assert fbl.decode_error_prob(0.0, 200, 100.0) == 1.0
    assert fbl.decode_error_prob(1e12, 200, 100.0) == 0.0


def test_decode_error_monotone():
    m, d = 200, 100.0
    gs = np.geomspace(1e-3, 1e3, 60)
    vals = fbl.decode_error_prob(gs, m, d)
    assert np.all(np.diff(vals) <= 0.0)
    # nonincreasing in blocklength at fixed D
    for g in (0.3, 0.41421356, 2.0):
        errs = [fbl.decode_error_prob(g, m2, d) for m2 in (100, 200, 400, 800)]
        if g > 2.0 ** (d / 100) - 1.0:
            assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_linearization_params_reference():
    lp = fbl.linearization_params(200, 100.0)
    assert abs(lp.center_x0 - (math.sqrt(2.0) - 1.0)) < 1e-15
    assert abs(lp.slope_mu - math.sqrt(200.0 / (2.0 * math.pi))) < 1e-12
    assert abs(lp.slope_mu - 5.6419) < 1e-4


def test_linearization_small_packet_limits():
    lp = fbl.linearization_params(200, 1e-9)
    assert lp.center_x0 < 1e-11
    assert lp.slope_mu > 1e4


def test_linearized_q_pieces():
    lp = fbl.linearization_params(200, 100.0)
    assert fbl.linearized_q(lp.center_x0, lp) == 0.5
    assert abs(fbl.linearized_q(lp.knee_hi, lp)) < 1e-12
    assert fbl.linearized_q(1.01 * lp.knee_hi, lp) == 0.0
    assert fbl.linearized_q(0.0, lp) == 1.0  # lower knee is positive here
    xs = np.linspace(0.0, 1.0, 500)
    vals = fbl.linearized_q(xs, lp)
    assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
    assert np.all(np.diff(vals) <= 1e-15)


def test_rate_penalty_strict_below_half():
    for g in (0.1, 1.0, 50.0):
        assert fbl.achievable_rate(g, 200, 1e-3) < math.log2(1.0 + g)


def test_packet_rate_conventions():
    assert abs(fbl.packet_rate(200, 100.0, "nats") - 100.0 * math.log(2.0) / 200.0) < 1e-16
    assert fbl.packet_rate(200, 100.0, "bits") == 0.5
    with pytest.raises(ValueError):
        fbl.packet_rate(200, 100.0, "furlongs")
