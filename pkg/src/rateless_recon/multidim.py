"""Multidimensional reconciliation: rotations carrying bits over Gaussians.

Bob publishes, per d-dimensional chunk, an orthogonal matrix M mapping his
normalized vector y' onto the spherical image c' of his code bits.  Alice
applies M to her normalized x'; the result rides a virtual binary-input
AWGN channel whose LLRs feed the rateless decoder.

M is built from a division-algebra basis (complex / quaternion / octonion
left-multiplication tables generated by Cayley-Dickson doubling): with
alpha_i = <c', A_i y'> the matrix M = sum_i alpha_i A_i is orthogonal and
satisfies M y' = c' exactly, in O(d^2) arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SUPPORTED_DIMS = (1, 2, 4, 8)
_UNIT_TOL = 1e-12


def _cd_product(i: int, j: int, dim: int):
    """(sign, index) of the basis product e_i * e_j under Cayley-Dickson.

    Doubling rule on pairs: (a, b)(c, d) = (ac - d~b, da + bc~), with
    conjugation (a, b)~ = (a~, -b).  Basis units have a single nonzero
    component, so every product is +-1 times another basis unit.
    """
    if dim == 1:
        return 1, 0
    h = dim // 2

    def conj_sign(idx):
        return 1 if idx == 0 else -1

    if i < h and j < h:
        s, k = _cd_product(i, j, h)
        return s, k
    if i < h and j >= h:
        # (a,0)(0,d) = (0, d a)
        s, k = _cd_product(j - h, i, h)
        return s, k + h
    if i >= h and j < h:
        # (0,b)(c,0) = (0, b c~)
        s, k = _cd_product(i - h, j, h)
        return s * conj_sign(j), k + h
    # (0,b)(0,d) = (-d~ b, 0)
    s, k = _cd_product(j - h, i - h, h)
    return -s * conj_sign(j - h), k


@lru_cache(maxsize=None)
def algebra_basis(d: int) -> np.ndarray:
    """Stack of d orthogonal matrices A_i (A_1 = I): left multiplication
    by the basis units of the dimension-d composition algebra."""
    if d not in SUPPORTED_DIMS:
        raise ValueError(f"dimension must be one of {SUPPORTED_DIMS}, got {d}")
    basis = np.zeros((d, d, d))
    for i in range(d):
        for j in range(d):
            s, k = _cd_product(i, j, d)
            basis[i, k, j] = s  # (e_i x)_k picks up s * x_j
    basis.setflags(write=False)
    return basis


def basis_to_text(d: int) -> str:
    """Serialize the basis tables (one 'i k j sign' line per entry)."""
    b = algebra_basis(d)
    lines = [f"# algebra basis d={d}"]
    for i, k, j in zip(*np.nonzero(b)):
        lines.append(f"{i} {k} {j} {int(b[i, k, j])}")
    return "\n".join(lines) + "\n"


def basis_from_text(text: str) -> np.ndarray:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    d = max(int(r[0]) for r in rows) + 1
    b = np.zeros((d, d, d))
    for i, k, j, s in rows:
        b[int(i), int(k), int(j)] = float(s)
    return b


@dataclass(frozen=True)
class NormalizedVector:
    """Unit vector plus the discarded norm (kept for LLR scaling)."""

    coords: np.ndarray
    norm: float

    def __post_init__(self):
        if abs(np.linalg.norm(self.coords) - 1.0) > _UNIT_TOL:
            raise ValueError("coords must have unit norm")


@dataclass(frozen=True)
class SphericalCodeword:
    """Vector with coordinates +-1/sqrt(d); exactly unit norm."""

    coords: np.ndarray


@dataclass(frozen=True)
class MappingFunction:
    """Orthogonal d x d matrix satisfying M y' = c'."""

    matrix: np.ndarray

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


def normalize(x) -> NormalizedVector:
    """x / ||x||; rejects zero-norm input (a probability-zero data fault)."""
    x = np.asarray(x, dtype=np.float64)
    norm = float(np.linalg.norm(x))
    if norm <= 0.0:
        raise ValueError("cannot normalize a zero vector")
    return NormalizedVector(coords=x / norm, norm=norm)


def to_spherical(bits) -> SphericalCodeword:
    """Map d bits to ((-1)^c_1, ..., (-1)^c_d) / sqrt(d)."""
    c = np.asarray(bits, dtype=np.int8)
    d = c.size
    if d not in SUPPORTED_DIMS:
        raise ValueError(f"chunk size must be one of {SUPPORTED_DIMS}, got {d}")
    return SphericalCodeword(coords=(1.0 - 2.0 * c) / math.sqrt(d))


def make_mapping(yprime, cprime, basis: np.ndarray | None = None) -> MappingFunction:
    """Orthogonal M with M y' = c', via the algebra-basis expansion."""
    y = yprime.coords if isinstance(yprime, NormalizedVector) else np.asarray(yprime)
    c = cprime.coords if isinstance(cprime, SphericalCodeword) else np.asarray(cprime)
    if y.shape != c.shape:
        raise ValueError("dimension mismatch between y' and c'")
    d = y.size
    if basis is None:
        basis = algebra_basis(d)
    alpha = np.einsum("k,ikj,j->i", c, basis, y)
    return MappingFunction(matrix=np.einsum("i,ikj->kj", alpha, basis))


def mapping_coefficients(yprime, cprime, basis: np.ndarray | None = None) -> np.ndarray:
    """The expansion coefficients alpha_i = <c', A_i y'> (unit norm)."""
    y = yprime.coords if isinstance(yprime, NormalizedVector) else np.asarray(yprime)
    c = cprime.coords if isinstance(cprime, SphericalCodeword) else np.asarray(cprime)
    if basis is None:
        basis = algebra_basis(y.size)
    return np.einsum("k,ikj,j->i", c, basis, y)


def apply_mapping(mapping: MappingFunction, xprime) -> np.ndarray:
    """M x'; norm-preserving since M is orthogonal."""
    x = xprime.coords if isinstance(xprime, NormalizedVector) else np.asarray(xprime)
    if x.size != mapping.d:
        raise ValueError("dimension mismatch")
    return mapping.matrix @ x


# Batched forms used by the session layer (one row per d-chunk).

def make_mappings_batch(yprime_rows: np.ndarray, cprime_rows: np.ndarray) -> np.ndarray:
    d = yprime_rows.shape[1]
    basis = algebra_basis(d)
    ay = np.einsum("ikl,bl->bik", basis, yprime_rows)
    alpha = np.einsum("bk,bik->bi", cprime_rows, ay)
    return np.einsum("bi,ikl->bkl", alpha, basis)


def apply_mappings_batch(matrices: np.ndarray, xprime_rows: np.ndarray) -> np.ndarray:
    return np.einsum("bkl,bl->bk", matrices, xprime_rows)


def normalize_rows(rows: np.ndarray):
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms <= 0.0):
        raise ValueError("cannot normalize a zero chunk")
    return rows / norms[:, None], norms


def virtual_llr(e, gamma: float, *, gamma_eq: float | None = None) -> np.ndarray:
    """LLRs treating sqrt(d)*e as +-1 BIAWGN observations at gamma_eq.

    The crude reduction: per-coordinate SNR of the virtual channel equals
    the physical gamma, ignoring the chunk norms.  gamma_eq overrides the
    assumed SNR for calibration experiments.
    """
    if gamma <= 0:
        raise ValueError("snr gamma must be > 0")
    e = np.asarray(e, dtype=np.float64)
    d = e.shape[-1]
    g = gamma if gamma_eq is None else gamma_eq
    return 2.0 * g * math.sqrt(d) * e


def virtual_llr_norm(e, x_norm, y_norm, *, noise_var: float = 1.0) -> np.ndarray:
    """Norm-refined LLRs: 2*||x||*||y||/(d*sigma_z^2) per unit observation.

    Matched to the virtual channel including per-chunk norm fluctuations;
    equivalent on average to gamma_eq = gamma * ||y||/||x||.  e may be a
    (chunks, d) array with x_norm/y_norm per-chunk vectors.
    """
    e = np.asarray(e, dtype=np.float64)
    d = e.shape[-1]
    scale = 2.0 * np.asarray(x_norm) * np.asarray(y_norm) / (d * noise_var)
    return np.expand_dims(scale, -1) * math.sqrt(d) * e if e.ndim > 1 else scale * math.sqrt(d) * e
