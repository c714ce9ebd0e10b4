"""Independent reference for the eavesdropper bound.

Builds the Gaussian covariance matrices explicitly (entangled source,
fiber, trusted detector modeled as a beamsplitter fed by one arm of an
EPR state) and extracts symplectic spectra numerically from |eig(i*Omega*V)|.
Shares no code with the production closed-form path.
"""

import math

import numpy as np

Z2 = np.diag([1.0, -1.0])
I2 = np.eye(2)


def bosonic_entropy(nu: float) -> float:
    x = (nu - 1.0) / 2.0
    if x <= 0.0:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def symplectic_eigenvalues(cm: np.ndarray) -> np.ndarray:
    n = cm.shape[0] // 2
    omega1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    omega = np.kron(np.eye(n), omega1)
    ev = np.linalg.eigvals(1j * omega @ cm)
    mags = np.sort(np.abs(ev))
    return mags[::2][::-1].copy()  # each eigenvalue appears as a +- pair


def epr_cm(v: float) -> np.ndarray:
    c = math.sqrt(max(v * v - 1.0, 0.0))
    return np.block([[v * I2, c * Z2], [c * Z2, v * I2]])


def beamsplitter(eta: float, n_modes: int, mode_a: int, mode_b: int) -> np.ndarray:
    s = np.eye(2 * n_modes)
    t = math.sqrt(eta)
    r = math.sqrt(1.0 - eta)
    a, b = 2 * mode_a, 2 * mode_b
    s[a:a + 2, a:a + 2] = t * I2
    s[b:b + 2, b:b + 2] = t * I2
    s[a:a + 2, b:b + 2] = r * I2
    s[b:b + 2, a:a + 2] = -r * I2
    return s


def channel_output_cm(va: float, t_chan: float, xi: float) -> np.ndarray:
    """Two-mode CM of (A, B) after the fiber, excess noise at channel input."""
    v = va + 1.0
    c = math.sqrt(t_chan * (v * v - 1.0))
    b = t_chan * (v + xi) + 1.0 - t_chan
    return np.block([[v * I2, c * Z2], [c * Z2, b * I2]])


def holevo_oracle(va, distance_km, alpha_db_per_km, xi, eta, vel) -> float:
    """chi(B:E) for reverse reconciliation, homodyne, trusted detector."""
    t_chan = 10.0 ** (-alpha_db_per_km * distance_km / 10.0)
    cm_ab = channel_output_cm(va, t_chan, xi)
    s_eve = sum(bosonic_entropy(nu) for nu in symplectic_eigenvalues(cm_ab))

    if eta >= 1.0:
        if vel != 0.0:
            raise ValueError("eta=1 with nonzero vel has no beamsplitter model")
        cm4 = np.zeros((8, 8))
        cm4[:4, :4] = cm_ab
        cm4[4:, 4:] = epr_cm(1.0)
    else:
        v_d = 1.0 + vel / (1.0 - eta)
        cm4 = np.zeros((8, 8))
        cm4[:4, :4] = cm_ab
        cm4[4:, 4:] = epr_cm(v_d)
        s = beamsplitter(eta, 4, 1, 2)  # detector mixes B with EPR arm F
        cm4 = s @ cm4 @ s.T

    # homodyne of B's q quadrature conditions the remaining modes (A, F, G)
    rest = [0, 1, 4, 5, 6, 7]
    col = cm4[np.ix_(rest, [2])]
    cond = cm4[np.ix_(rest, rest)] - (col @ col.T) / cm4[2, 2]
    s_cond = sum(bosonic_entropy(nu) for nu in symplectic_eigenvalues(cond))
    return s_eve - s_cond
