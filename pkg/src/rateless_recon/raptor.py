"""Rateless codec: seed-shared LT graph, streaming encode, sum-product decode.

Both parties derive the LT graph from a small shared seed, so only the
seed and symbol counts travel on the classical channel.  Decoding runs a
flooding sum-product schedule on the joint factor graph (LT output factors
carrying channel LLRs plus the precode parity factors) and declares
success when every precode parity relation is satisfied by the hard
decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .degree import DegreeDistribution
from .precode import Precode
from .rng import TAG_LT_DEGREE, TAG_LT_INDEX, derive_rng

LLR_CLAMP = 38.0
_TINY = 1e-300
# largest double below 1; arctanh of it stays below the message clamp
_PMAX = np.nextafter(1.0, 0.0)


def _fill_index_sets_py(degrees, uniforms, kprime, out):
    pos = 0
    upos = 0
    for w in degrees:
        base = pos
        for j in range(kprime - w, kprime):
            t = int(uniforms[upos] * (j + 1))
            upos += 1
            duplicate = False
            for q in range(base, pos):
                if out[q] == t:
                    duplicate = True
                    break
            out[pos] = j if duplicate else t
            pos += 1
        out[base:pos].sort()
    return out


try:  # pragma: no cover - equivalence with the python path is unit-tested
    import numba

    _fill_index_sets_jit = numba.njit(cache=True)(_fill_index_sets_py)
except Exception:  # pragma: no cover
    _fill_index_sets_jit = None


def _fill_index_sets(degrees, uniforms, kprime):
    """Floyd sampling of one distinct, ascending index set per symbol.

    Consumes exactly one uniform per selected index, so the draw budget of
    a symbol depends only on its degree; extension of the stream is
    therefore independent of chunking.
    """
    out = np.empty(int(degrees.sum()), dtype=np.int32)
    degrees = degrees.astype(np.int64)
    if _fill_index_sets_jit is not None:
        return _fill_index_sets_jit(degrees, uniforms, kprime, out)
    return _fill_index_sets_py(degrees, uniforms, kprime, out)


class RaptorBlockPlan:
    """Deterministic, lazily extended LT graph for one block.

    Regenerating a plan from the same (seed, dist, kprime) reproduces
    identical index sets regardless of how ensure() calls are chunked.
    """

    def __init__(self, seed: int, dist: DegreeDistribution, kprime: int):
        if kprime < 1:
            raise ValueError("kprime must be >= 1")
        self.seed = int(seed)
        self.dist = dist
        self.kprime = int(kprime)
        self._deg_rng = derive_rng(self.seed, TAG_LT_DEGREE)
        self._idx_rng = derive_rng(self.seed, TAG_LT_INDEX)
        self._degrees = np.empty(0, dtype=np.int64)
        self._flat = np.empty(0, dtype=np.int32)
        self._fac = np.empty(0, dtype=np.int32)
        self._bounds = np.zeros(1, dtype=np.int64)

    def __len__(self) -> int:
        return len(self._degrees)

    def ensure(self, n: int) -> None:
        """Materialize index sets for symbols 0..n-1 (append-only)."""
        need = int(n) - len(self)
        if need <= 0:
            return
        u = self._deg_rng.random(need)
        degs = np.minimum(self.dist.sample_array(u), self.kprime)
        uniforms = self._idx_rng.random(int(degs.sum()))
        flat_new = _fill_index_sets(degs, uniforms, self.kprime)
        start = len(self)
        fac_new = np.repeat(np.arange(start, start + need, dtype=np.int32), degs)
        self._degrees = np.concatenate([self._degrees, degs])
        self._flat = np.concatenate([self._flat, flat_new])
        self._fac = np.concatenate([self._fac, fac_new])
        self._bounds = np.concatenate([self._bounds, self._bounds[-1] + np.cumsum(degs)])

    def degree(self, i: int) -> int:
        self.ensure(i + 1)
        return int(self._degrees[i])

    def index_set(self, i: int) -> np.ndarray:
        self.ensure(i + 1)
        return self._flat[self._bounds[i]:self._bounds[i + 1]]

    def degrees_upto(self, n: int) -> np.ndarray:
        self.ensure(n)
        return self._degrees[:n]

    def edges_upto(self, n: int):
        """(edge_var, edge_fac, bounds) views for the first n symbols."""
        self.ensure(n)
        end = self._bounds[n]
        return self._flat[:end], self._fac[:end], self._bounds[: n + 1]


class FixedPlan:
    """Plan with explicitly given index sets; for toy graphs in tests."""

    def __init__(self, index_sets, kprime: int):
        self.kprime = int(kprime)
        sets = [np.asarray(sorted(s), dtype=np.int32) for s in index_sets]
        if any(len(s) == 0 for s in sets):
            raise ValueError("index sets must be non-empty")
        self._degrees = np.array([len(s) for s in sets], dtype=np.int64)
        self._flat = (
            np.concatenate(sets) if sets else np.empty(0, dtype=np.int32)
        )
        self._fac = np.repeat(np.arange(len(sets), dtype=np.int32), self._degrees)
        self._bounds = np.concatenate([[0], np.cumsum(self._degrees)]).astype(np.int64)

    def __len__(self):
        return len(self._degrees)

    def ensure(self, n):
        if n > len(self):
            raise ValueError("fixed plan cannot be extended")

    def index_set(self, i):
        return self._flat[self._bounds[i]:self._bounds[i + 1]]

    def degrees_upto(self, n):
        return self._degrees[:n]

    def edges_upto(self, n):
        end = self._bounds[n]
        return self._flat[:end], self._fac[:end], self._bounds[: n + 1]


def lt_encode(v, plan, start: int, count: int) -> np.ndarray:
    """Output symbols start..start+count-1: XOR of v over each index set.

    Repeated calls with the same plan extend one rateless stream; the
    result for a given range never depends on how ranges were split.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    v = np.asarray(v, dtype=np.uint8)
    if v.shape != (plan.kprime,):
        raise ValueError(f"input length must be {plan.kprime}")
    plan.ensure(start + count)
    flat, _, bounds = plan.edges_upto(start + count)
    lo = bounds[start]
    segment = flat[lo:bounds[start + count]]
    seg_bounds = (bounds[start:start + count] - lo).astype(np.int64)
    return np.bitwise_xor.reduceat(v[segment], seg_bounds)


def channel_llr(y, gamma: float) -> np.ndarray:
    """Channel LLRs for BIAWGN observations: 2*gamma*y (positive favors 0)."""
    if gamma <= 0:
        raise ValueError("snr gamma must be > 0")
    return 2.0 * gamma * np.asarray(y, dtype=np.float64)


@dataclass
class DecoderState:
    """Messages carried across incremental decode attempts (warm restart)."""

    n_symbols: int = 0
    m_v2lt: np.ndarray = field(default_factory=lambda: np.empty(0))
    m_v2pc: Optional[np.ndarray] = None


@dataclass
class DecodeResult:
    success: bool
    u_hat: Optional[np.ndarray]
    iters_used: int
    posterior: np.ndarray
    v_hat: np.ndarray
    state: DecoderState


def _factor_update(m_in, bounds, fac_ids, chan_t, floor):
    """Tanh-rule factor->variable update via per-factor excluding products.

    Magnitudes are floored (well below any informative message) so exact
    zeros divide out cleanly: the zero edge still receives the product of
    its peers while everyone else receives ~0.  The product is clipped
    just inside +-1 before arctanh, which bounds outgoing magnitudes.
    """
    t = np.tanh(0.5 * m_in)
    np.copyto(t, floor, where=np.abs(t) < floor)
    prod_f = np.multiply.reduceat(t, bounds[:-1]) * chan_t
    ex = prod_f[fac_ids] / t
    pmax = 1.0 - 8.0 * np.finfo(t.dtype).eps
    np.clip(ex, -pmax, pmax, out=ex)
    return 2.0 * np.arctanh(ex)


def _factor_update_reference(m_in, bounds, fac_ids, chan_t):
    """Float64 log-magnitude/sign formulation; cross-checks _factor_update."""
    t = np.tanh(0.5 * m_in)
    mag = np.abs(t)
    np.maximum(mag, _TINY, out=mag)
    logmag = np.log(mag)
    neg = (t < 0).astype(np.int32)
    log_f = np.add.reduceat(logmag, bounds[:-1]) + np.log(np.maximum(np.abs(chan_t), _TINY))
    neg_f = np.add.reduceat(neg, bounds[:-1]) + (chan_t < 0).astype(np.int32)
    ex_log = log_f[fac_ids] - logmag
    ex_neg = (neg_f[fac_ids] - neg) & 1
    prod = np.exp(ex_log)
    np.minimum(prod, _PMAX, out=prod)
    np.copyto(prod, -prod, where=ex_neg.astype(bool))
    return 2.0 * np.arctanh(prod)


def bp_decode(
    llrs,
    plan,
    precode: Precode,
    max_iters: int = 60,
    *,
    state: Optional[DecoderState] = None,
    stall_window: int = 12,
    min_iters: int = 25,
    clamp: float = LLR_CLAMP,
    dtype=np.float32,
) -> DecodeResult:
    """Joint sum-product decode over the LT + precode factor graph.

    Runs a flooding schedule; each iteration updates factor-to-variable
    messages (tanh rule, with the channel LLR as the LT factor's intrinsic
    term), then variable-to-factor messages (sum of the other incoming
    messages), and finally checks the precode parities on the hard
    decisions.  Failure after max_iters (or after the hard decisions have
    been frozen for stall_window iterations) is a normal outcome.

    Passing the previous attempt's ``state`` extends the message set with
    the newly arrived symbols instead of restarting from scratch.
    Messages default to float32: the tanh-domain arithmetic is insensitive
    to the reduced precision and the decoder is memory-bound at low SNR.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    llrs = np.asarray(llrs, dtype=np.float64)
    n = llrs.size
    plan.ensure(n)
    if plan.kprime != precode.kprime:
        raise ValueError("plan and precode disagree on kprime")
    evar, efac, bounds = plan.edges_upto(n)
    n_edges = evar.size
    floor = 1e-18 if dtype == np.float32 else 1e-250

    chan_t = np.tanh(0.5 * np.clip(llrs, -clamp, clamp)).astype(dtype)

    pc_var = precode.edge_var
    pc_bounds = precode.edge_bounds
    pc_fac = np.repeat(np.arange(precode.n_checks, dtype=np.int32), np.diff(pc_bounds))
    pc_chan = np.ones(precode.n_checks, dtype=dtype)

    m_v2lt = np.zeros(n_edges, dtype=dtype)
    if state is not None and 0 < state.n_symbols <= n and state.m_v2pc is not None:
        m_v2lt[: state.m_v2lt.size] = state.m_v2lt
        m_v2pc = state.m_v2pc.astype(dtype)
    else:
        m_v2pc = np.zeros(pc_var.size, dtype=dtype)

    kprime = precode.kprime
    v_prev = None
    frozen = 0
    iters = 0
    success = False
    tot = np.zeros(kprime)
    v_hat = np.zeros(kprime, dtype=np.uint8)
    for it in range(1, max_iters + 1):
        iters = it
        m_lt2v = _factor_update(m_v2lt, bounds, efac, chan_t, floor)
        tot = np.bincount(evar, weights=m_lt2v, minlength=kprime)
        if pc_var.size:
            m_pc2v = _factor_update(m_v2pc, pc_bounds, pc_fac, pc_chan, floor)
            tot += np.bincount(pc_var, weights=m_pc2v, minlength=kprime)
        tot_d = tot.astype(dtype)
        if pc_var.size:
            m_v2pc = np.clip(tot_d[pc_var] - m_pc2v, -clamp, clamp)
        m_v2lt = np.clip(tot_d[evar] - m_lt2v, -clamp, clamp)
        v_hat = (tot < 0).astype(np.uint8)
        if pc_var.size and precode.check(v_hat):
            success = True
            break
        if v_prev is not None and np.array_equal(v_hat, v_prev):
            frozen += 1
            if frozen >= stall_window and it >= min_iters:
                break
        else:
            frozen = 0
        v_prev = v_hat

    if not pc_var.size:
        # a trivial precode has nothing to verify; report the converged guess
        success = True
    new_state = DecoderState(n_symbols=n, m_v2lt=m_v2lt, m_v2pc=m_v2pc)
    u_hat = v_hat[: precode.k].copy() if success else None
    return DecodeResult(
        success=success,
        u_hat=u_hat,
        iters_used=iters,
        posterior=tot,
        v_hat=v_hat,
        state=new_state,
    )


# --- check codes ------------------------------------------------------------

# CRC-64/XZ: reflected form of the ECMA-182 polynomial 0x42F0E1EBA9EA3693.
_CRC64_POLY = 0xC96C5795D7870F42
_CRC64_MASK = (1 << 64) - 1


@lru_cache(maxsize=1)
def _crc64_table():
    table = []
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ _CRC64_POLY if crc & 1 else crc >> 1
        table.append(crc)
    return tuple(table)


def check_code(u, width: int = 64) -> int:
    """Deterministic hash tag of a bit sequence (default 64 bits).

    CRC over the packed bits plus the bit length, truncated to ``width``
    low bits.  At the full 64-bit width any single-bit flip is guaranteed
    to change the tag.
    """
    if not 1 <= width <= 64:
        raise ValueError("width must be in 1..64")
    u = np.asarray(u, dtype=np.uint8)
    data = np.packbits(u).tobytes() + u.size.to_bytes(8, "little")
    table = _crc64_table()
    crc = _CRC64_MASK
    for b in data:
        crc = table[(crc ^ b) & 0xFF] ^ (crc >> 8)
    crc ^= _CRC64_MASK
    if width < 64:
        crc &= (1 << width) - 1
    return crc
