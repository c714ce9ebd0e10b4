"""Physical-channel model in shot-noise units.

The quantum link is reduced to a handful of scalars (modulation variance,
fiber loss, excess noise, detector efficiency and electronic noise).  This
module converts them into a per-quadrature SNR and generates the correlated
Gaussian / BIAWGN samples every other module consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import TAG_BIAWGN, TAG_CHANNEL_X, TAG_CHANNEL_Z, derive_rng


@dataclass(frozen=True)
class ChannelParams:
    """Physical CV-QKD link parameters; all noise in shot-noise units.

    va: modulation variance (> 0)
    distance_km: fiber length (>= 0)
    alpha_db_per_km: fiber loss coefficient (standard single-mode: 0.2)
    xi: excess noise referred to the channel input (>= 0)
    eta: homodyne detector efficiency in (0, 1]
    vel: electronic noise of the detector (>= 0)
    """

    va: float
    distance_km: float = 0.0
    alpha_db_per_km: float = 0.2
    xi: float = 0.0
    eta: float = 1.0
    vel: float = 0.0

    def __post_init__(self):
        fields = {
            "va": self.va,
            "distance_km": self.distance_km,
            "alpha_db_per_km": self.alpha_db_per_km,
            "xi": self.xi,
            "eta": self.eta,
            "vel": self.vel,
        }
        for name, value in fields.items():
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.va <= 0:
            raise ValueError("modulation variance va must be > 0")
        if self.distance_km < 0 or self.alpha_db_per_km < 0:
            raise ValueError("distance and loss coefficient must be >= 0")
        if self.xi < 0 or self.vel < 0:
            raise ValueError("noise parameters must be >= 0")
        if not 0 < self.eta <= 1:
            raise ValueError("detector efficiency eta must be in (0, 1]")

    @property
    def transmittance(self) -> float:
        return transmittance(self.distance_km, self.alpha_db_per_km)


@dataclass(frozen=True)
class GaussianPair:
    """Correlated Gaussian sequences: y = x + z with Var(x)/Var(z) = snr."""

    x: np.ndarray
    y: np.ndarray
    snr: float

    def __post_init__(self):
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have equal length")


def transmittance(distance_km: float, alpha_db_per_km: float = 0.2) -> float:
    """Fiber transmittance 10^(-alpha*L/10)."""
    if distance_km < 0 or alpha_db_per_km < 0:
        raise ValueError("distance and loss coefficient must be >= 0")
    return 10.0 ** (-alpha_db_per_km * distance_km / 10.0)


def channel_snr(params: ChannelParams) -> float:
    """Per-quadrature SNR of the homodyne link, trusted-detector model.

    gamma = eta*T*va / (1 + vel + eta*T*xi), i.e. detected signal variance
    over the total (shot + electronic + excess) noise variance.
    """
    t = params.transmittance
    return params.eta * t * params.va / (1.0 + params.vel + params.eta * t * params.xi)


def simulate_gaussian_pair(n: int, gamma: float, seed: int) -> GaussianPair:
    """Draw x ~ N(0, gamma), z ~ N(0, 1) i.i.d. and return (x, y=x+z).

    Fully deterministic given the seed: x and z come from two independent
    Philox substreams, so the pair is reproducible sample-for-sample.
    """
    if n <= 0:
        raise ValueError("sample count n must be > 0")
    if gamma <= 0:
        raise ValueError("snr gamma must be > 0")
    x = derive_rng(seed, TAG_CHANNEL_X).normal(0.0, math.sqrt(gamma), n)
    z = derive_rng(seed, TAG_CHANNEL_Z).normal(0.0, 1.0, n)
    return GaussianPair(x=x, y=x + z, snr=float(gamma))


def biawgn_sample(bits, gamma: float, seed: int) -> np.ndarray:
    """Transmit bits over a BIAWGN channel: y_j = (-1)^{c_j} + z_j.

    The noise is zero-mean Gaussian with variance 1/gamma.
    """
    if gamma <= 0:
        raise ValueError("snr gamma must be > 0")
    c = np.asarray(bits, dtype=np.int8)
    signs = 1.0 - 2.0 * c
    z = derive_rng(seed, TAG_BIAWGN).normal(0.0, math.sqrt(1.0 / gamma), c.size)
    return signs + z
