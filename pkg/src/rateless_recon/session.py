"""One reverse-reconciliation run and its Monte Carlo harness.

Bob draws a uniform message, Raptor-encodes it, and publishes mapping
functions chunk by chunk; Alice rotates her samples, forms LLRs and
decodes incrementally, requesting more symbols on failure until either the
check code confirms her recovery or the symbol budget (set by the minimum
acceptable efficiency) runs out.

Two channel modes share the incremental engine: "gaussian" runs the full
protocol on correlated Gaussian pairs, "biawgn" drives the codec over the
binary-input AWGN channel directly (the code-efficiency experiment; the
virtual channel the rotation produces is exactly that at low SNR, so this
is also how efficiency-vs-SNR sweeps are measured).
"""

from __future__ import annotations

import io
import json
import math
import struct
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .channel import simulate_gaussian_pair
from .degree import DegreeDistribution, distribution_by_name
from .keyrate import capacity
from .multidim import (
    apply_mappings_batch,
    make_mappings_batch,
    normalize_rows,
    virtual_llr,
    virtual_llr_norm,
)
from .precode import Precode, default_precode
from .raptor import DecodeResult, RaptorBlockPlan, bp_decode, check_code, lt_encode
from .rng import (
    TAG_BIAWGN,
    TAG_BLOCK_PAIR,
    TAG_MESSAGE,
    TAG_PLAN_SEED,
    derive_rng,
    derive_seed,
)

TRANSCRIPT_VERSION = 1


class UnsupportedSnrRangeError(ValueError):
    """SNR outside the calibrated -20..0 dB operating range."""


class DataExhaustedError(RuntimeError):
    """The Gaussian sample streams are too short for the symbol budget."""


@dataclass(frozen=True)
class SessionConfig:
    """Knobs of one reconciliation run; defaults follow the desk profile."""

    d: int = 8
    k: int = 9900
    dist_policy: Union[str, DegreeDistribution] = "adaptive"
    beta_min: float = 0.90
    beta_start: float = 0.96
    batch: Optional[int] = None          # None: ~2% of k/C per retry
    max_iters: int = 60
    check_width: int = 64
    master_seed: int = 0
    llr_mode: str = "norm"               # "norm" | "snr"
    gamma_eq: Optional[float] = None     # only for llr_mode="snr"
    warm_restart: bool = True
    stall_window: int = 25
    min_iters: int = 50
    coverage_margin: float = 0.15
    precode: Optional[Precode] = None

    def __post_init__(self):
        if self.d not in (1, 2, 4, 8):
            raise ValueError("dimension d must be one of 1, 2, 4, 8")
        if not 0 < self.beta_min < 1:
            raise ValueError("beta_min must be in (0, 1)")
        if not 0 < self.beta_start < 1:
            raise ValueError("beta_start must be in (0, 1)")
        if self.llr_mode not in ("norm", "snr"):
            raise ValueError("llr_mode must be 'norm' or 'snr'")

    def resolve_precode(self) -> Precode:
        if self.precode is not None:
            return self.precode
        if self.k == 9900:
            return default_precode()
        raise ValueError("no precode configured for this k")


# --- transcript --------------------------------------------------------------

_REC_HEADER = 1
_REC_CHUNKS = 2
_REC_CHECK = 3
_REC_STOP = 4


@dataclass
class ChunkBatch:
    start_chunk: int
    matrices: np.ndarray      # (count, d, d) float64
    y_norms: np.ndarray       # (count,) float64


@dataclass
class Transcript:
    """Every classical message of one run, in order.

    Binary layout (little endian): a sequence of records, each
    ``u32 type | u64 length | payload``.  The header payload is JSON; chunk
    payloads are two u64 (first chunk index, chunk count) followed by the
    raw float64 mapping matrices and chunk norms; the check record is a u8
    width plus u64 tag; the stop record is a u8 status plus u64 symbol
    count.  Format changes bump TRANSCRIPT_VERSION in the header.
    """

    header: dict
    batches: list = field(default_factory=list)
    check: Optional[tuple] = None        # (width, value)
    stop: Optional[tuple] = None         # (status, n_used)

    def to_bytes(self) -> bytes:
        out = io.BytesIO()

        def rec(rtype, payload):
            out.write(struct.pack("<IQ", rtype, len(payload)))
            out.write(payload)

        rec(_REC_HEADER, json.dumps(self.header, sort_keys=True).encode())
        for b in self.batches:
            payload = struct.pack("<QQ", b.start_chunk, len(b.y_norms))
            payload += b.matrices.astype("<f8").tobytes()
            payload += b.y_norms.astype("<f8").tobytes()
            rec(_REC_CHUNKS, payload)
            if self.check is not None and b is self._check_after:
                rec(_REC_CHECK, struct.pack("<BQ", self.check[0], self.check[1]))
        if self.check is not None and self._check_after is None:
            rec(_REC_CHECK, struct.pack("<BQ", self.check[0], self.check[1]))
        if self.stop is not None:
            status = 1 if self.stop[0] == "success" else 0
            rec(_REC_STOP, struct.pack("<BQ", status, self.stop[1]))
        return out.getvalue()

    # the check code is sent right after the batch that produced the first
    # parity success; None means it was never sent (abandoned runs)
    _check_after: Optional[ChunkBatch] = None

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Transcript":
        view = memoryview(raw)
        pos = 0
        header = None
        batches = []
        check = None
        check_after = None
        stop = None
        while pos < len(view):
            rtype, length = struct.unpack_from("<IQ", view, pos)
            pos += 12
            payload = bytes(view[pos:pos + length])
            pos += length
            if rtype == _REC_HEADER:
                header = json.loads(payload.decode())
                if header.get("version") != TRANSCRIPT_VERSION:
                    raise ValueError(f"unsupported transcript version {header.get('version')!r}")
            elif rtype == _REC_CHUNKS:
                start, count = struct.unpack_from("<QQ", payload, 0)
                d = header["d"]
                mat_bytes = count * d * d * 8
                mats = np.frombuffer(payload, dtype="<f8", count=count * d * d, offset=16)
                norms = np.frombuffer(payload, dtype="<f8", count=count, offset=16 + mat_bytes)
                batches.append(ChunkBatch(start, mats.reshape(count, d, d).copy(), norms.copy()))
            elif rtype == _REC_CHECK:
                width, value = struct.unpack("<BQ", payload)
                check = (width, value)
                check_after = batches[-1] if batches else None
            elif rtype == _REC_STOP:
                status, n_used = struct.unpack("<BQ", payload)
                stop = ("success" if status == 1 else "abandoned", n_used)
            else:
                raise ValueError(f"unknown transcript record type {rtype}")
        if header is None:
            raise ValueError("transcript missing header record")
        t = cls(header=header, batches=batches, check=check, stop=stop)
        t._check_after = check_after
        return t


@dataclass
class SessionOutcome:
    status: str                      # "success" | "abandoned"
    u: Optional[np.ndarray]
    n_used: int
    realized_rate: float
    efficiency: float
    attempts: int
    iters_total: int
    transcript: Optional[Transcript]
    llrs: Optional[np.ndarray] = None    # Alice's decoder input stream


# --- symbol budget -----------------------------------------------------------

def n_val(gamma: float, beta_min: float, k: int, d: int = 8) -> int:
    """Symbol budget k/(beta_min*C(gamma)), floored to a multiple of d."""
    if gamma <= 0:
        raise ValueError("snr gamma must be > 0")
    if not 0 < beta_min < 1:
        raise ValueError("beta_min must be in (0, 1)")
    raw = int(math.floor(k / (beta_min * capacity(gamma))))
    return raw - (raw % d)


def _round_up(x: int, d: int) -> int:
    return ((x + d - 1) // d) * d


def _symbol_budget(gamma: float, cfg: SessionConfig, kprime: int):
    """(n_start, batch, n_limit) for one run.

    The budget from beta_min is additionally floored at ~(1+margin)*k'
    symbols: with binary symbols the decoder needs the LT graph to cover
    the precoded block regardless of how clean the channel is, so at
    gamma > 1 the Shannon-based budget alone would be unreachable.
    """
    c = capacity(gamma)
    d = cfg.d
    floor_cov = _round_up(int(math.ceil((1.0 + cfg.coverage_margin) * kprime)), d)
    limit = max(n_val(gamma, cfg.beta_min, cfg.k, d), floor_cov)
    batch = cfg.batch if cfg.batch is not None else max(d, int(round(0.02 * cfg.k / c)))
    batch = _round_up(batch, d)
    start = _round_up(int(math.ceil(cfg.k / (cfg.beta_start * c))), d)
    start = min(max(start, floor_cov), limit)
    return start, batch, limit


# --- distribution selection --------------------------------------------------

def _load_dd_table():
    import importlib.resources

    text = (
        importlib.resources.files("rateless_recon.data")
        .joinpath("dd_table.txt")
        .read_text()
    )
    table = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        table[int(round(float(parts[0])))] = (parts[1], float(parts[2]))
    return table


_DD_TABLE_CACHE = None


def dd_table():
    """Calibrated SNR(dB) -> (distribution name, measured efficiency)."""
    global _DD_TABLE_CACHE
    if _DD_TABLE_CACHE is None:
        _DD_TABLE_CACHE = _load_dd_table()
    return _DD_TABLE_CACHE


def select_distribution(gamma: float, policy="adaptive") -> DegreeDistribution:
    """Distribution for this SNR: calibrated-table lookup or fixed policy."""
    if isinstance(policy, DegreeDistribution):
        return policy
    if policy != "adaptive":
        return distribution_by_name(policy)
    if gamma <= 0:
        raise UnsupportedSnrRangeError("snr gamma must be > 0")
    snr_db = 10.0 * math.log10(gamma)
    if snr_db < -20.5 or snr_db > 0.5:
        raise UnsupportedSnrRangeError(
            f"snr {snr_db:.2f} dB outside the calibrated -20..0 dB range"
        )
    table = dd_table()
    return distribution_by_name(table[int(round(min(max(snr_db, -20.0), 0.0)))][0])


def envelope_efficiency(snr_db: float) -> float:
    """Calibrated best measured efficiency at an SNR grid point."""
    table = dd_table()
    key = int(round(min(max(snr_db, -20.0), 0.0)))
    return table[key][1]


# --- the incremental engine --------------------------------------------------

class _BobCodec:
    """Bob's side: message, precoded block and the shared LT plan."""

    def __init__(self, cfg: SessionConfig, dist, precode, block_index):
        self.u = derive_rng(cfg.master_seed, TAG_MESSAGE, block_index).integers(
            0, 2, cfg.k, dtype=np.uint8
        )
        self.v = precode.encode(self.u)
        self.plan_seed = derive_seed(cfg.master_seed, TAG_PLAN_SEED, block_index)
        self.plan = RaptorBlockPlan(self.plan_seed, dist, precode.kprime)
        self.check = check_code(self.u, cfg.check_width)

    def symbols(self, start, stop):
        return lt_encode(self.v, self.plan, start, stop - start)


def _decode_params(cfg: SessionConfig):
    return dict(
        max_iters=cfg.max_iters,
        stall_window=cfg.stall_window,
        min_iters=cfg.min_iters,
    )


def run_reconciliation(
    x,
    y,
    gamma: float,
    cfg: SessionConfig,
    block_index: int = 0,
    dist: Optional[DegreeDistribution] = None,
) -> SessionOutcome:
    """Full multidimensional run over one correlated Gaussian pair.

    Bob's chunk messages (mapping function plus chunk norm) and every other
    classical exchange are logged to the returned transcript; replaying it
    against the same x reproduces Alice's decode bit for bit.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("x and y must have equal length")
    d = cfg.d
    if x.size % d:
        raise ValueError(f"sample count must be a multiple of d={d}")
    if dist is None:
        dist = select_distribution(gamma, cfg.dist_policy)
    precode = cfg.resolve_precode()
    n_start, batch, n_limit = _symbol_budget(gamma, cfg, precode.kprime)
    if x.size < n_limit:
        raise DataExhaustedError(
            f"need {n_limit} samples to honor the symbol budget, got {x.size}"
        )

    bob = _BobCodec(cfg, dist, precode, block_index)
    gamma_eq = cfg.gamma_eq if cfg.gamma_eq is not None else gamma
    header = {
        "version": TRANSCRIPT_VERSION,
        "k": cfg.k,
        "kprime": precode.kprime,
        "d": d,
        "dist": dist.name,
        "plan_seed": bob.plan_seed,
        "check_width": cfg.check_width,
        "llr_mode": cfg.llr_mode,
        "gamma_eq": gamma_eq,
        "warm_restart": cfg.warm_restart,
        **_decode_params(cfg),
    }
    transcript = Transcript(header=header)

    alice_plan = RaptorBlockPlan(bob.plan_seed, dist, precode.kprime)
    llrs = np.empty(0)
    state = None
    n = 0
    attempts = 0
    iters_total = 0
    outcome_status = "abandoned"
    u_hat = None

    while True:
        target = n_start if n == 0 else min(n + batch, n_limit)
        # Bob: encode the new symbols and publish one mapping per d-chunk
        c_new = bob.symbols(n, target)
        y_rows = y[n:target].reshape(-1, d)
        y_prime, y_norms = normalize_rows(y_rows)
        c_prime = (1.0 - 2.0 * c_new.reshape(-1, d)) / math.sqrt(d)
        mats = make_mappings_batch(y_prime, c_prime)
        batch_rec = ChunkBatch(start_chunk=n // d, matrices=mats, y_norms=y_norms)
        transcript.batches.append(batch_rec)

        # Alice: rotate her chunks and extend the LLR stream
        x_rows = x[n:target].reshape(-1, d)
        x_prime, x_norms = normalize_rows(x_rows)
        e = apply_mappings_batch(mats, x_prime)
        if cfg.llr_mode == "norm":
            new_llrs = virtual_llr_norm(e, x_norms, y_norms).ravel()
        else:
            new_llrs = virtual_llr(e, gamma, gamma_eq=gamma_eq).ravel()
        llrs = np.concatenate([llrs, new_llrs])

        attempts += 1
        res = bp_decode(
            llrs,
            alice_plan,
            precode,
            state=state if cfg.warm_restart else None,
            **_decode_params(cfg),
        )
        state = res.state
        iters_total += res.iters_used
        n = target
        if res.success:
            transcript.check = (cfg.check_width, bob.check)
            transcript._check_after = batch_rec
            if check_code(res.u_hat, cfg.check_width) == bob.check:
                outcome_status = "success"
                u_hat = res.u_hat
                break
            # hash mismatch: converged to a wrong codeword, keep collecting
        if n >= n_limit:
            break

    transcript.stop = (outcome_status, n)
    rate = cfg.k / n if outcome_status == "success" else 0.0
    beta = rate / capacity(gamma) if outcome_status == "success" else 0.0
    return SessionOutcome(
        status=outcome_status,
        u=u_hat,
        n_used=n,
        realized_rate=rate,
        efficiency=beta,
        attempts=attempts,
        iters_total=iters_total,
        transcript=transcript,
        llrs=llrs,
    )


def run_biawgn_session(
    gamma: float,
    cfg: SessionConfig,
    block_index: int = 0,
    dist: Optional[DegreeDistribution] = None,
) -> SessionOutcome:
    """Incremental rateless run with symbols observed through BIAWGN.

    The code-level experiment: identical feedback loop and budgets, no
    rotation layer.  No transcript is produced (there are no mapping
    functions to publish).
    """
    if dist is None:
        dist = select_distribution(gamma, cfg.dist_policy)
    precode = cfg.resolve_precode()
    n_start, batch, n_limit = _symbol_budget(gamma, cfg, precode.kprime)
    bob = _BobCodec(cfg, dist, precode, block_index)
    noise_rng = derive_rng(cfg.master_seed, TAG_BIAWGN, block_index)
    sigma = math.sqrt(1.0 / gamma)

    alice_plan = RaptorBlockPlan(bob.plan_seed, dist, precode.kprime)
    llrs = np.empty(0)
    state = None
    n = 0
    attempts = 0
    iters_total = 0
    outcome_status = "abandoned"
    u_hat = None
    while True:
        target = n_start if n == 0 else min(n + batch, n_limit)
        c_new = bob.symbols(n, target)
        y_new = (1.0 - 2.0 * c_new) + noise_rng.normal(0.0, sigma, target - n)
        llrs = np.concatenate([llrs, 2.0 * gamma * y_new])
        attempts += 1
        res = bp_decode(
            llrs,
            alice_plan,
            precode,
            state=state if cfg.warm_restart else None,
            **_decode_params(cfg),
        )
        state = res.state
        iters_total += res.iters_used
        n = target
        if res.success and check_code(res.u_hat, cfg.check_width) == bob.check:
            outcome_status = "success"
            u_hat = res.u_hat
            break
        if n >= n_limit:
            break
    rate = cfg.k / n if outcome_status == "success" else 0.0
    beta = rate / capacity(gamma) if outcome_status == "success" else 0.0
    return SessionOutcome(
        status=outcome_status,
        u=u_hat,
        n_used=n,
        realized_rate=rate,
        efficiency=beta,
        attempts=attempts,
        iters_total=iters_total,
        transcript=None,
    )


# --- replay ------------------------------------------------------------------

@dataclass
class ReplayResult:
    status: str
    n_used: int
    u_hat: Optional[np.ndarray]
    llrs: np.ndarray
    matches_stop: bool


def replay_session(transcript: Union[Transcript, bytes], x) -> ReplayResult:
    """Re-run Alice's side of a logged session from (transcript, x) only."""
    t = Transcript.from_bytes(transcript) if isinstance(transcript, bytes) else transcript
    h = t.header
    d = h["d"]
    dist = distribution_by_name(h["dist"])
    precode = default_precode() if h["k"] == 9900 else None
    if precode is None or precode.kprime != h["kprime"]:
        raise ValueError("transcript references an unavailable precode")
    plan = RaptorBlockPlan(h["plan_seed"], dist, h["kprime"])
    x = np.asarray(x, dtype=np.float64)

    decode_kw = dict(
        max_iters=h["max_iters"],
        stall_window=h["stall_window"],
        min_iters=h["min_iters"],
    )
    llrs = np.empty(0)
    state = None
    status = "abandoned"
    u_hat = None
    n = 0
    for batch in t.batches:
        lo = batch.start_chunk * d
        count = batch.y_norms.size * d
        x_rows = x[lo:lo + count].reshape(-1, d)
        x_prime, x_norms = normalize_rows(x_rows)
        e = apply_mappings_batch(batch.matrices, x_prime)
        if h["llr_mode"] == "norm":
            new_llrs = virtual_llr_norm(e, x_norms, batch.y_norms).ravel()
        else:
            new_llrs = virtual_llr(e, h["gamma_eq"], gamma_eq=h["gamma_eq"]).ravel()
        llrs = np.concatenate([llrs, new_llrs])
        n = lo + count
        res = bp_decode(
            llrs,
            plan,
            precode,
            state=state if h["warm_restart"] else None,
            **decode_kw,
        )
        state = res.state
        if res.success and t.check is not None:
            if check_code(res.u_hat, t.check[0]) == t.check[1]:
                status = "success"
                u_hat = res.u_hat
                break
    matches = t.stop is not None and t.stop[0] == status and t.stop[1] == n
    return ReplayResult(status=status, n_used=n, u_hat=u_hat, llrs=llrs, matches_stop=matches)


# --- Monte Carlo harness ------------------------------------------------------

@dataclass
class BlockResult:
    block: int
    status: str
    n_used: int
    efficiency: float
    attempts: int
    iters_total: int
    wall_ms: float


@dataclass
class EfficiencyReport:
    gamma: float
    dist_name: str
    blocks: int
    fer: float
    mean_n: float                 # over successful blocks; nan if none
    rate: float                   # k / mean_n
    mean_beta: float              # rate / C(gamma)
    per_block: list


def _run_one_block(args):
    gamma, cfg, block, channel, dist = args
    t0 = time.perf_counter()
    if channel == "biawgn":
        out = run_biawgn_session(gamma, cfg, block_index=block, dist=dist)
    elif channel == "gaussian":
        _, _, n_limit = _symbol_budget(gamma, cfg, cfg.resolve_precode().kprime)
        pair = simulate_gaussian_pair(
            n_limit, gamma, derive_seed(cfg.master_seed, TAG_BLOCK_PAIR, block)
        )
        out = run_reconciliation(pair.x, pair.y, gamma, cfg, block_index=block, dist=dist)
    else:
        raise ValueError(f"unknown channel {channel!r}")
    wall = (time.perf_counter() - t0) * 1e3
    return BlockResult(
        block=block,
        status=out.status,
        n_used=out.n_used,
        efficiency=out.efficiency,
        attempts=out.attempts,
        iters_total=out.iters_total,
        wall_ms=wall,
    )


def measure_efficiency(
    gamma: float,
    cfg: SessionConfig,
    blocks: int,
    *,
    channel: str = "biawgn",
    dist: Optional[DegreeDistribution] = None,
    workers: int = 1,
) -> EfficiencyReport:
    """Run independent blocks and report FER, E[n] and beta = R/C.

    The realized rate follows the rateless definition: k over the mean
    symbol count of the successfully decoded blocks; abandoned blocks count
    toward FER only.
    """
    if blocks < 1:
        raise ValueError("blocks must be >= 1")
    if dist is None:
        dist = select_distribution(gamma, cfg.dist_policy)
    tasks = [(gamma, cfg, b, channel, dist) for b in range(blocks)]
    if workers > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(workers) as pool:
            results = pool.map(_run_one_block, tasks)
    else:
        results = [_run_one_block(t) for t in tasks]
    results.sort(key=lambda r: r.block)
    good = [r for r in results if r.status == "success"]
    fer = 1.0 - len(good) / blocks
    if good:
        mean_n = float(np.mean([r.n_used for r in good]))
        rate = cfg.k / mean_n
        beta = rate / capacity(gamma)
    else:
        mean_n = float("nan")
        rate = 0.0
        beta = 0.0
    return EfficiencyReport(
        gamma=gamma,
        dist_name=dist.name,
        blocks=blocks,
        fer=fer,
        mean_n=mean_n,
        rate=rate,
        mean_beta=beta,
        per_block=results,
    )
