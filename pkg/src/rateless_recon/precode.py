"""High-rate LDPC precode: construction, systematic encoding, fixture IO.

The production precode is a rate-0.99 regular column-weight-3 code
(k = 9900, k' = 10000) built by progressive edge growth and stored as a
text fixture.  Columns are permuted at build time so the last k'-k columns
form an invertible parity block; encoding is then systematic:
v = (u, P.u mod 2).
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


def gf2_row_reduce(mat: np.ndarray):
    """In-place GF(2) row reduction.  Returns the list of pivot columns."""
    h = mat
    n_rows, n_cols = h.shape
    pivots = []
    r = 0
    for col in range(n_cols):
        if r == n_rows:
            break
        hits = np.nonzero(h[r:, col])[0]
        if hits.size == 0:
            continue
        piv = r + hits[0]
        if piv != r:
            h[[r, piv]] = h[[piv, r]]
        others = np.nonzero(h[:, col])[0]
        others = others[others != r]
        if others.size:
            h[others] ^= h[r]
        pivots.append(col)
        r += 1
    return pivots


def gf2_inverse(mat: np.ndarray) -> np.ndarray:
    """Inverse of a square GF(2) matrix; raises if singular."""
    m = mat.shape[0]
    if mat.shape != (m, m):
        raise ValueError("matrix must be square")
    aug = np.concatenate([mat.astype(np.uint8) & 1, np.eye(m, dtype=np.uint8)], axis=1)
    pivots = gf2_row_reduce(aug)
    if pivots != list(range(m)):
        raise ValueError("matrix is singular over GF(2)")
    return aug[:, m:]


@dataclass
class Precode:
    """Sparse parity structure plus the derived systematic encoder.

    rows[i] holds the sorted variable indices participating in parity
    check i.  Message bits occupy positions 0..k-1 of a codeword; the
    parity block (columns k..k'-1) is invertible by construction.
    """

    k: int
    kprime: int
    rows: list
    _enc: np.ndarray = field(init=False, repr=False)      # (k'-k, k) uint8
    _edge_var: np.ndarray = field(init=False, repr=False)
    _edge_bounds: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.k <= self.kprime:
            raise ValueError("need 0 < k <= kprime")
        if len(self.rows) != self.kprime - self.k:
            raise ValueError("row count must equal kprime - k")
        self.rows = [np.asarray(sorted(set(map(int, r))), dtype=np.int32) for r in self.rows]
        for r in self.rows:
            if len(r) < 2:
                raise ValueError("every parity relation needs >= 2 participants")
            if r[0] < 0 or r[-1] >= self.kprime:
                raise ValueError("parity index out of range")
        self._edge_var = (
            np.concatenate(self.rows) if self.rows else np.empty(0, dtype=np.int32)
        )
        self._edge_bounds = np.concatenate(
            [[0], np.cumsum([len(r) for r in self.rows])]
        ).astype(np.int64)
        self._enc = self._build_encoder()

    @property
    def n_checks(self) -> int:
        return self.kprime - self.k

    @property
    def rate(self) -> float:
        return self.k / self.kprime

    @property
    def edge_var(self) -> np.ndarray:
        """Flat variable indices of the parity edges, row-major."""
        return self._edge_var

    @property
    def edge_bounds(self) -> np.ndarray:
        """Row boundaries into edge_var (length n_checks + 1)."""
        return self._edge_bounds

    def _build_encoder(self) -> np.ndarray:
        m = self.n_checks
        if m == 0:
            return np.empty((0, self.k), dtype=np.uint8)
        h = np.zeros((m, self.kprime), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            h[i, r] = 1
        hp = h[:, self.k:]
        hm = h[:, : self.k]
        hp_inv = gf2_inverse(hp)
        return (hp_inv.astype(np.int32) @ hm.astype(np.int32) % 2).astype(np.uint8)

    def encode(self, u) -> np.ndarray:
        """Systematic encode: v = (u, parity) with H.v = 0 over GF(2)."""
        u = np.asarray(u, dtype=np.uint8)
        if u.shape != (self.k,):
            raise ValueError(f"message length must be {self.k}, got {u.shape}")
        if self.n_checks == 0:
            return u.copy()
        parity = (self._enc.astype(np.int32) @ u.astype(np.int32)) & 1
        return np.concatenate([u, parity.astype(np.uint8)])

    def syndrome(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.uint8)
        if self.n_checks == 0:
            return np.empty(0, dtype=np.uint8)
        sums = np.add.reduceat(v[self._edge_var].astype(np.int64), self._edge_bounds[:-1])
        return (sums & 1).astype(np.uint8)

    def check(self, v) -> bool:
        """True iff every parity relation is satisfied."""
        return not np.any(self.syndrome(v))

    def to_text(self) -> str:
        lines = [
            "# ldpc precode fixture v1",
            f"{self.k} {self.kprime}",
        ]
        lines += [" ".join(map(str, r)) for r in self.rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Precode":
        body = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        k, kprime = map(int, body[0].split())
        rows = [list(map(int, ln.split())) for ln in body[1:]]
        return cls(k=k, kprime=kprime, rows=rows)


def identity_precode(k: int) -> Precode:
    """Trivial precode with no parity relations (k' = k); for toy setups."""
    return Precode(k=k, kprime=k, rows=[])


def peg_construct(n_vars: int, n_checks: int, col_weight: int, seed: int) -> list:
    """Progressive-edge-growth construction of a regular-column-weight code.

    Each variable node connects to ``col_weight`` distinct checks.  Edges
    are placed one variable at a time: the first edge goes to a
    minimum-degree check, later edges to a check as far as possible from
    the variable's current tree (maximizing the local girth), with
    minimum-degree and then seeded-random tie-breaking.

    BFS runs on the check-adjacency graph (checks are adjacent when they
    share a variable), which keeps construction fast for high-rate codes
    where n_checks is small.
    """
    if col_weight > n_checks:
        raise ValueError("column weight cannot exceed the number of checks")
    rng = np.random.default_rng(seed)
    adj = np.zeros((n_checks, n_checks), dtype=bool)
    check_deg = np.zeros(n_checks, dtype=np.int64)
    rows = [[] for _ in range(n_checks)]

    def pick_min_degree(candidates):
        degs = check_deg[candidates]
        best = candidates[degs == degs.min()]
        return int(best[rng.integers(len(best))])

    for var in range(n_vars):
        mine = []
        for edge in range(col_weight):
            if edge == 0:
                chosen = pick_min_degree(np.arange(n_checks))
            else:
                reached = np.zeros(n_checks, dtype=bool)
                reached[mine] = True
                frontier = reached.copy()
                last_frontier = frontier
                while True:
                    grown = adj[frontier].any(axis=0) & ~reached
                    if not grown.any():
                        break
                    reached |= grown
                    frontier = grown
                    last_frontier = grown
                    if reached.all():
                        break
                unreached = np.nonzero(~reached)[0]
                if unreached.size:
                    chosen = pick_min_degree(unreached)
                else:
                    # graph saturated: fall back to the deepest BFS layer
                    cands = np.nonzero(last_frontier)[0]
                    cands = cands[~np.isin(cands, mine)]
                    if cands.size == 0:
                        cands = np.setdiff1d(np.arange(n_checks), mine)
                    chosen = pick_min_degree(cands)
            for c in mine:
                adj[c, chosen] = adj[chosen, c] = True
            mine.append(chosen)
            rows[chosen].append(var)
            check_deg[chosen] += 1
    return rows


def build_systematic_precode(k: int, kprime: int, col_weight: int = 3, seed: int = 0) -> Precode:
    """PEG-construct a precode and permute columns into systematic order.

    The GF(2) pivot columns of the parity-check matrix are moved to the
    tail so the parity block is invertible; remaining columns (the message
    positions) keep their relative order.
    """
    m = kprime - k
    rows = peg_construct(kprime, m, col_weight, seed)
    h = np.zeros((m, kprime), dtype=np.uint8)
    for i, r in enumerate(rows):
        h[i, r] = 1
    work = h.copy()
    pivots = gf2_row_reduce(work)
    if len(pivots) != m:
        raise ValueError("PEG parity matrix is rank deficient; retry with another seed")
    pivot_set = set(pivots)
    message_cols = [c for c in range(kprime) if c not in pivot_set]
    perm = np.array(message_cols + pivots, dtype=np.int64)
    inv_perm = np.empty_like(perm)
    inv_perm[perm] = np.arange(kprime)
    new_rows = [sorted(int(inv_perm[v]) for v in r) for r in rows]
    return Precode(k=k, kprime=kprime, rows=new_rows)


@lru_cache(maxsize=None)
def default_precode() -> Precode:
    """The shipped k=9900, k'=10000 rate-0.99 production precode."""
    text = (
        importlib.resources.files("rateless_recon.data")
        .joinpath("precode_9900_10000.txt")
        .read_text()
    )
    return Precode.from_text(text)
