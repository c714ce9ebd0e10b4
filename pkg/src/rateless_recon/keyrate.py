"""Key-rate analytics: capacity, Holevo bound, finite-size rate, sweeps.

The eavesdropper bound follows the standard Gaussian entangling-cloner
model for one-way reverse reconciliation with homodyne detection and
trusted detector noise: two-mode covariance invariants before Bob's
measurement, conditional invariants after it, combined through the bosonic
entropy function G.  All logarithms are base 2 (bits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import xlogy

from .channel import ChannelParams, channel_snr

_SYMPLECTIC_TOL = 1e-9
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NonPhysicalCovarianceError(ValueError):
    """A symplectic eigenvalue fell below 1 beyond numerical tolerance."""


def capacity(gamma: float) -> float:
    """AWGN capacity (1/2)*log2(1 + gamma) in bits per channel use."""
    if gamma < 0:
        raise ValueError("snr gamma must be >= 0")
    return 0.5 * math.log2(1.0 + gamma)


def mutual_information(gamma: float) -> float:
    """I(A:B) of the Gaussian channel at SNR gamma; equals capacity here."""
    if gamma < 0:
        raise ValueError("snr gamma must be >= 0")
    return 0.5 * math.log2(1.0 + gamma)


def realized_rate(k: int, mean_n: float) -> float:
    """Realized rateless-code rate k / E[n]."""
    if mean_n < k:
        raise ValueError("mean symbol count below k implies rate > 1")
    return k / mean_n


def efficiency(rate: float, gamma: float) -> float:
    """Reconciliation efficiency beta = R / C(gamma)."""
    if gamma <= 0:
        raise ValueError("snr gamma must be > 0")
    return rate / capacity(gamma)


def gfunc(x: float) -> float:
    """Bosonic entropy kernel G(x) = (x+1)log2(x+1) - x log2 x; G(0) = 0."""
    if x < 0:
        if x < -_SYMPLECTIC_TOL:
            raise NonPhysicalCovarianceError(f"negative entropy argument {x!r}")
        return 0.0
    return float((xlogy(x + 1.0, x + 1.0) - xlogy(x, x)) / math.log(2.0))


def _entropy_from_eig(lam: float) -> float:
    if lam < 1.0 - _SYMPLECTIC_TOL:
        raise NonPhysicalCovarianceError(f"symplectic eigenvalue {lam!r} < 1")
    return gfunc(max(lam - 1.0, 0.0) / 2.0)


def _sym_pair(s: float, p: float):
    """Symplectic eigenvalues from invariants: lam^2 roots of x^2 - s x + p."""
    disc = s * s - 4.0 * p
    if disc < 0:
        if disc < -_SYMPLECTIC_TOL * max(1.0, s * s):
            raise NonPhysicalCovarianceError("complex symplectic spectrum")
        disc = 0.0
    root = math.sqrt(disc)
    lo = (s - root) / 2.0
    hi = (s + root) / 2.0
    if lo < 0:
        if lo < -_SYMPLECTIC_TOL:
            raise NonPhysicalCovarianceError("negative squared eigenvalue")
        lo = 0.0
    return math.sqrt(hi), math.sqrt(lo)


def holevo_bound(params: ChannelParams) -> float:
    """Eve's Holevo information on Bob's homodyne data, in bits per pulse.

    chi = S(E) - S(E|b) with Eve purifying the channel; the detector
    (eta, vel) is trusted and enters only through the conditioning.
    """
    v = params.va + 1.0
    t = params.transmittance
    xi = params.xi
    chi_line = (1.0 - t) / t + xi
    chi_hom = (1.0 - params.eta + params.vel) / params.eta
    chi_tot = chi_line + chi_hom / t

    a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line) ** 2
    b = (t * (v * chi_line + 1.0)) ** 2
    lam1, lam2 = _sym_pair(a, b)

    denom = t * (v + chi_tot)
    sqrt_b = math.sqrt(b)
    c = (v * sqrt_b + t * (v + chi_line) + a * chi_hom) / denom
    d = sqrt_b * (v + sqrt_b * chi_hom) / denom
    lam3, lam4 = _sym_pair(c, d)

    chi = (
        _entropy_from_eig(lam1)
        + _entropy_from_eig(lam2)
        - _entropy_from_eig(lam3)
        - _entropy_from_eig(lam4)
    )
    return max(chi, 0.0)


def delta_n(n: float, eps_bar: float = 1e-12) -> float:
    """Finite-size offset 7*sqrt(log2(2/eps_bar)/n)."""
    if n <= 0:
        raise ValueError("n must be > 0")
    if not 0 < eps_bar < 1:
        raise ValueError("eps_bar must be in (0, 1)")
    return 7.0 * math.sqrt(math.log2(2.0 / eps_bar) / n)


@dataclass(frozen=True)
class KeyRateInputs:
    """Everything entering the finite-size key-rate formula."""

    params: ChannelParams
    beta: float
    n_total: float = 1e12           # N: total exchanged samples
    key_fraction: float = 1.0       # n/N: fraction kept for key extraction
    eps_pe: float = 1e-12
    eps_bar: float = 1e-12
    eps_pa: float = 1e-12
    rep_rate_hz: float = 5e6

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise ValueError("beta must be in (0, 1]")
        if not 0 < self.key_fraction <= 1:
            raise ValueError("key_fraction n/N must be in (0, 1]")
        if self.n_total <= 0:
            raise ValueError("n_total must be > 0")
        for name in ("eps_pe", "eps_bar", "eps_pa"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must be in (0, 1)")

    @property
    def n_key(self) -> float:
        return self.key_fraction * self.n_total


@dataclass(frozen=True)
class KeyRateReport:
    snr: float
    capacity: float
    mutual_info: float
    holevo: float
    delta: float
    k_finite: float      # bits per pulse
    k_rate: float        # bits per second


def finite_size_key_rate(inputs: KeyRateInputs) -> KeyRateReport:
    """Finite-size secret key rate (n/N)*(beta*I - chi - Delta(n)).

    A negative result is a valid report (no extractable key), not an error.
    """
    gamma = channel_snr(inputs.params)
    i_ab = mutual_information(gamma)
    chi = holevo_bound(inputs.params)
    delta = delta_n(inputs.n_key, inputs.eps_bar)
    k = inputs.key_fraction * (inputs.beta * i_ab - chi - delta)
    return KeyRateReport(
        snr=gamma,
        capacity=capacity(gamma),
        mutual_info=i_ab,
        holevo=chi,
        delta=delta,
        k_finite=k,
        k_rate=k * inputs.rep_rate_hz,
    )


def asymptotic_key_rate(params: ChannelParams, beta: float) -> float:
    """Infinite-block limit beta*I(A:B) - chi, bits per pulse."""
    gamma = channel_snr(params)
    return beta * mutual_information(gamma) - holevo_bound(params)


VA_BOUNDS = (0.01, 100.0)


def optimal_va(params: ChannelParams, beta: float, *, bounds=VA_BOUNDS, rel_tol: float = 1e-4):
    """Modulation variance maximizing the asymptotic key rate.

    Golden-section search on log(va); params.va is ignored.  Returns
    (va_opt, k_at_opt); k_at_opt <= 0 flags an unusable operating point.
    """

    def k_of(log_va: float) -> float:
        return asymptotic_key_rate(replace(params, va=math.exp(log_va)), beta)

    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = k_of(x1), k_of(x2)
    while hi - lo > rel_tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = k_of(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = k_of(x1)
    log_opt = (lo + hi) / 2.0
    va = math.exp(log_opt)
    return va, asymptotic_key_rate(replace(params, va=va), beta)


def va_for_target_snr(params: ChannelParams, target_snr: float) -> float:
    """Modulation variance making channel_snr hit target_snr exactly."""
    t = params.transmittance
    return target_snr * (1.0 + params.vel + params.eta * t * params.xi) / (params.eta * t)


@dataclass(frozen=True)
class DistancePoint:
    distance_km: float
    va: float
    report: KeyRateReport


def skr_vs_distance(
    distances,
    inputs: KeyRateInputs,
    *,
    va_mode: str = "optimal",
    target_snr: float = 0.075,
) -> list:
    """Key-rate reports along a distance grid.

    va_mode selects the modulation variance per point: "optimal"
    (maximizes the asymptotic rate), "fixed" (inputs.params.va as given) or
    "target_snr" (tracks a fixed operating SNR, the fixed-rate-code
    strategy this protocol makes unnecessary).
    """
    if va_mode not in ("optimal", "fixed", "target_snr"):
        raise ValueError(f"unknown va_mode {va_mode!r}")
    out = []
    for dist in distances:
        params = replace(inputs.params, distance_km=float(dist))
        if va_mode == "optimal":
            va, _ = optimal_va(params, inputs.beta)
        elif va_mode == "target_snr":
            va = va_for_target_snr(params, target_snr)
        else:
            va = params.va
        params = replace(params, va=va)
        report = finite_size_key_rate(replace(inputs, params=params))
        out.append(DistancePoint(distance_km=float(dist), va=va, report=report))
    return out
