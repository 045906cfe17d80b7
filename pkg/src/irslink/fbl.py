"""Short-packet rate and error formulas plus the Q-ramp linearization.

The normal approximation for M channel uses at error target eps is

    R = log2(1 + gamma) - sqrt(V(gamma)/M) Qinv(eps)/ln2,
    V(gamma) = 1 - (1 + gamma)^-2,

and the matching decoding error for a D-bit packet is

    eps = Q( sqrt(M/V(gamma)) * (ln(1 + gamma) - D ln2 / M) ).

Two rate conventions float around the asymptotic error formulas: the exact
Q argument above uses D ln2 / M nats per use ("nats", the default here),
while some relaxed derivations read D/M as if it were already in nats
("bits").  packet_rate exposes the switch; every asymptotic consumer takes
it as a keyword.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import q_func, q_inv

__all__ = [
    "LinearizationParams",
    "dispersion",
    "achievable_rate",
    "decode_error_prob",
    "linearization_params",
    "linearized_q",
    "packet_rate",
]

_LN2 = math.log(2.0)
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LinearizationParams:
    """Ramp replacement of the error curve: slope slope_mu, center center_x0.

    The ramp is 1 below center_x0 - 1/(2 mu), falls linearly through 1/2 at
    center_x0, and is 0 above center_x0 + 1/(2 mu).  The lower knee may be
    negative; integrating consumers clamp at 0.
    """

    slope_mu: float
    center_x0: float

    def __post_init__(self):
        if not (self.slope_mu > 0.0 and self.center_x0 > 0.0):
            raise ValueError("LinearizationParams requires positive slope and center")

    @property
    def knee_lo(self) -> float:
        return self.center_x0 - 0.5 / self.slope_mu

    @property
    def knee_hi(self) -> float:
        return self.center_x0 + 0.5 / self.slope_mu


def dispersion(gamma):
    """Channel dispersion V(gamma) = 1 - (1 + gamma)^-2, in [0, 1).

    Computed as gamma (gamma + 2) / (1 + gamma)^2 to keep full precision
    near gamma = 0.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("dispersion requires gamma >= 0")
    val = g * (g + 2.0) / (1.0 + g) ** 2
    return float(val) if np.ndim(gamma) == 0 else val


def achievable_rate(gamma, blocklength: int, eps: float):
    """Normal-approximation rate in bits per channel use.

    May be negative at low SNR; the averaging integrals consume the signed
    value, so no clamping happens here.
    """
    if blocklength < 1:
        raise ValueError("blocklength must be >= 1")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("achievable_rate requires gamma >= 0")
    penalty = np.sqrt(dispersion(g) / blocklength) * q_inv(eps) / _LN2
    val = np.log2(1.0 + g) - penalty
    return float(val) if np.ndim(gamma) == 0 else val


def decode_error_prob(gamma, blocklength: int, bits: float):
    """Packet error probability Q(sqrt(M/V) (ln(1+gamma) - D ln2/M)).

    gamma = 0 returns 1 by convention: a zero-rate channel cannot carry a
    positive payload, and V(0) = 0 makes the argument degenerate.
    """
    if blocklength < 1:
        raise ValueError("blocklength must be >= 1")
    if not bits > 0.0:
        raise ValueError("bits must be > 0")
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("decode_error_prob requires gamma >= 0")
    scalar = np.ndim(gamma) == 0
    g = np.atleast_1d(g)
    out = np.ones_like(g)
    pos = g > 0.0
    gp = g[pos]
    arg = np.sqrt(blocklength / dispersion(gp)) * (np.log1p(gp) - bits * _LN2 / blocklength)
    out[pos] = q_func(arg)
    return float(out[0]) if scalar else out


def linearization_params(blocklength: int, bits: float) -> LinearizationParams:
    """Ramp slope and center for the given packet configuration.

    center_x0 = 2^(D/M) - 1 and slope_mu = sqrt(M / (2 pi (2^(2D/M) - 1))),
    the negative derivative of the error curve at its half-power point.
    """
    if blocklength < 1:
        raise ValueError("blocklength must be >= 1")
    if not bits > 0.0:
        raise ValueError("bits must be > 0")
    ratio = bits / blocklength
    x0 = math.expm1(ratio * _LN2)
    mu = math.sqrt(blocklength / (_TWO_PI * math.expm1(2.0 * ratio * _LN2)))
    return LinearizationParams(slope_mu=mu, center_x0=x0)


def linearized_q(x, lp: LinearizationParams):
    """Three-piece ramp standing in for the exact error curve.

    1 on the left plateau, 1/2 - mu (x - x0) on the ramp, 0 past the right
    knee.  Continuous and nonincreasing.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0):
        raise ValueError("linearized_q requires x >= 0")
    ramp = 0.5 - lp.slope_mu * (x_arr - lp.center_x0)
    val = np.clip(ramp, 0.0, 1.0)
    return float(val) if np.ndim(x) == 0 else val


def packet_rate(blocklength: int, bits: float, convention: str = "nats") -> float:
    """Per-use rate fed into the asymptotic error formulas.

    'nats' (default): D ln2 / M, consistent with the exact error formula.
    'bits': D / M read directly, matching the relaxed derivations that
    drop the ln2 weighting.
    """
    if convention == "nats":
        return bits * _LN2 / blocklength
    if convention == "bits":
        return bits / blocklength
    raise ValueError(f"convention must be 'nats' or 'bits', got {convention!r}")
