"""LT output-degree distributions.

A distribution is a sparse polynomial: (degree, probability) pairs with
probabilities summing to one.  The four production distributions shipped
here cover the -20..0 dB operating range; ``omega1`` targets the lowest
SNRs and ``omega4`` the highest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_PROB_TOL = 1e-9


@dataclass(frozen=True)
class DegreeDistribution:
    """Sparse degree polynomial with cached inverse-CDF arrays."""

    entries: tuple
    name: str = "custom"
    _degrees: np.ndarray = field(init=False, repr=False, compare=False)
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        entries = tuple((int(d), float(p)) for d, p in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("degree distribution must have at least one entry")
        degrees = np.array([d for d, _ in entries], dtype=np.int64)
        probs = np.array([p for _, p in entries], dtype=np.float64)
        if degrees[0] < 1:
            raise ValueError("all degrees must be >= 1")
        if np.any(np.diff(degrees) <= 0):
            raise ValueError("degrees must be strictly increasing")
        if np.any(probs <= 0) or np.any(probs > 1):
            raise ValueError("probabilities must lie in (0, 1]")
        total = probs.sum()
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "_degrees", degrees)
        object.__setattr__(self, "_cdf", np.cumsum(probs))

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.entries])

    @property
    def max_degree(self) -> int:
        return int(self._degrees[-1])

    @property
    def mean_degree(self) -> float:
        return float(np.dot(self._degrees, self.probabilities))

    def sample_array(self, u: np.ndarray) -> np.ndarray:
        """Inverse-CDF lookup for an array of uniforms in [0, 1)."""
        idx = np.searchsorted(self._cdf, u, side="right")
        idx = np.minimum(idx, len(self.entries) - 1)
        return self._degrees[idx].astype(np.int64)

    def to_text(self) -> str:
        lines = [f"# degree distribution {self.name}"]
        lines += [f"{d} {p!r}" for d, p in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, name: str = "custom") -> "DegreeDistribution":
        entries = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            d, p = line.split()
            entries.append((int(d), float(p)))
        return cls(entries=tuple(entries), name=name)


def sample_degree(dist: DegreeDistribution, u: float) -> int:
    """Draw one degree by inverse CDF; u must lie in [0, 1)."""
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    return int(dist.sample_array(np.array([u]))[0])


# Production degree distributions, ascending degree order.
_OMEGA1 = (
    (1, 0.0174), (2, 0.3488), (3, 0.2309), (4, 0.0695), (5, 0.0873),
    (6, 0.0002), (7, 0.0805), (8, 0.0004), (11, 0.0191), (12, 0.0518),
    (20, 0.0122), (41, 0.031), (60, 0.022), (81, 0.002), (320, 0.0269),
)
_OMEGA2 = (
    (1, 0.0174), (2, 0.3488), (3, 0.2309), (4, 0.0695), (5, 0.0873),
    (6, 0.0002), (7, 0.0805), (8, 0.0004), (11, 0.0191), (12, 0.0518),
    (20, 0.0121), (41, 0.03), (60, 0.022), (81, 0.003), (300, 0.027),
)
_OMEGA3 = (
    (1, 0.0174), (2, 0.3488), (3, 0.2307), (4, 0.07), (5, 0.087),
    (6, 0.0003), (7, 0.0803), (8, 0.0005), (11, 0.0191), (12, 0.0518),
    (20, 0.0122), (31, 0.031), (40, 0.0218), (61, 0.002), (80, 0.0271),
)
_OMEGA4 = (
    (1, 0.0066), (2, 0.4639), (3, 0.1769), (4, 0.0641), (5, 0.0656),
    (7, 0.0994), (15, 0.0589), (25, 0.0285), (40, 0.0138), (55, 0.0223),
)

TABLE_DISTRIBUTIONS = {
    1: DegreeDistribution(_OMEGA1, name="omega1"),
    2: DegreeDistribution(_OMEGA2, name="omega2"),
    3: DegreeDistribution(_OMEGA3, name="omega3"),
    4: DegreeDistribution(_OMEGA4, name="omega4"),
}

_BY_NAME = {d.name: d for d in TABLE_DISTRIBUTIONS.values()}


def table1_distribution(which: int) -> DegreeDistribution:
    """Return production distribution omega1..omega4 by number."""
    if which not in TABLE_DISTRIBUTIONS:
        raise ValueError(f"unknown distribution selector {which!r}; expected 1..4")
    return TABLE_DISTRIBUTIONS[which]


def distribution_by_name(name: str) -> DegreeDistribution:
    if name not in _BY_NAME:
        raise ValueError(f"unknown distribution {name!r}; expected one of {sorted(_BY_NAME)}")
    return _BY_NAME[name]
