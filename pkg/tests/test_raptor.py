import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from rateless_recon.channel import biawgn_sample
from rateless_recon.degree import table1_distribution
from rateless_recon.precode import identity_precode
from rateless_recon.raptor import (
    FixedPlan,
    RaptorBlockPlan,
    _fill_index_sets_jit,
    _fill_index_sets_py,
    _factor_update,
    _factor_update_reference,
    bp_decode,
    channel_llr,
    check_code,
    lt_encode,
)

from toy_codec import TOY_K, map_bit_llrs, toy_encode, toy_instance

OMEGA4 = table1_distribution(4)


# --- plan / graph generation --------------------------------------------------

def test_plan_regeneration_identical():
    p1 = RaptorBlockPlan(seed=5, dist=OMEGA4, kprime=1000)
    p2 = RaptorBlockPlan(seed=5, dist=OMEGA4, kprime=1000)
    p1.ensure(500)
    for n in (37, 200, 500):
        p2.ensure(n)
    for i in (0, 7, 123, 499):
        assert np.array_equal(p1.index_set(i), p2.index_set(i))


def test_plan_seed_changes_graph():
    p1 = RaptorBlockPlan(seed=5, dist=OMEGA4, kprime=1000)
    p2 = RaptorBlockPlan(seed=6, dist=OMEGA4, kprime=1000)
    same = all(
        np.array_equal(p1.index_set(i), p2.index_set(i)) for i in range(50)
    )
    assert not same


def test_index_sets_distinct_sorted_in_range():
    plan = RaptorBlockPlan(seed=11, dist=table1_distribution(1), kprime=400)
    plan.ensure(2000)
    for i in range(2000):
        s = plan.index_set(i)
        assert len(np.unique(s)) == len(s)
        assert np.all(np.diff(s) > 0)
        assert s[0] >= 0 and s[-1] < 400


def test_degree_capped_at_kprime():
    plan = RaptorBlockPlan(seed=2, dist=table1_distribution(1), kprime=100)
    plan.ensure(3000)
    degrees = plan.degrees_upto(3000)
    assert degrees.max() <= 100


def test_fill_kernels_agree():
    if _fill_index_sets_jit is None:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(0)
    degrees = np.array([1, 2, 5, 320, 40, 3], dtype=np.int64)
    uniforms = rng.random(int(degrees.sum()))
    out_a = np.empty(int(degrees.sum()), dtype=np.int32)
    out_b = np.empty(int(degrees.sum()), dtype=np.int32)
    _fill_index_sets_py(degrees, uniforms, 1000, out_a)
    _fill_index_sets_jit(degrees, uniforms, 1000, out_b)
    assert np.array_equal(out_a, out_b)


# --- encoding ------------------------------------------------------------------

def test_all_zero_input_encodes_to_zero():
    plan = RaptorBlockPlan(seed=3, dist=OMEGA4, kprime=500)
    c = lt_encode(np.zeros(500, dtype=np.uint8), plan, 0, 1000)
    assert not c.any()


def test_degree_one_copies_bit():
    plan = FixedPlan([(3,)], kprime=8)
    v = np.zeros(8, dtype=np.uint8)
    v[3] = 1
    assert lt_encode(v, plan, 0, 1)[0] == 1


def test_encode_deterministic_and_extension_consistent(rng):
    v = rng.integers(0, 2, 700, dtype=np.uint8)
    p1 = RaptorBlockPlan(seed=9, dist=OMEGA4, kprime=700)
    p2 = RaptorBlockPlan(seed=9, dist=OMEGA4, kprime=700)
    whole = lt_encode(v, p1, 0, 900)
    a = lt_encode(v, p2, 0, 400)
    b = lt_encode(v, p2, 400, 500)
    assert np.array_equal(whole, np.concatenate([a, b]))
    assert np.array_equal(whole, lt_encode(v, p1, 0, 900))


def test_encode_gf2_linear(rng):
    plan = RaptorBlockPlan(seed=13, dist=OMEGA4, kprime=300)
    u1 = rng.integers(0, 2, 300, dtype=np.uint8)
    u2 = rng.integers(0, 2, 300, dtype=np.uint8)
    c1 = lt_encode(u1, plan, 0, 600)
    c2 = lt_encode(u2, plan, 0, 600)
    c12 = lt_encode(u1 ^ u2, plan, 0, 600)
    assert np.array_equal(c1 ^ c2, c12)


def test_output_uniformity_chi_square(production_precode, rng):
    # uniform message -> every output bit marginal must be 1/2 (per degree class)
    u = rng.integers(0, 2, 9900, dtype=np.uint8)
    v = production_precode.encode(u)
    plan = RaptorBlockPlan(seed=20, dist=OMEGA4, kprime=10000)
    n = 100000
    c = lt_encode(v, plan, 0, n)
    degrees = plan.degrees_upto(n)
    counts = np.array([np.sum(c), n - np.sum(c)])
    assert chisquare(counts).pvalue > 1e-3
    for d in np.unique(degrees):
        mask = degrees == d
        ones = int(c[mask].sum())
        if mask.sum() < 50:
            continue
        assert chisquare([ones, int(mask.sum()) - ones]).pvalue > 1e-4, f"degree {d}"


# --- channel LLRs ---------------------------------------------------------------

def test_channel_llr_closed_form():
    assert channel_llr(np.array([0.0]), 1.0)[0] == 0.0
    assert channel_llr(np.array([1.0]), 1.0)[0] == pytest.approx(2.0)
    assert channel_llr(np.array([-0.5]), 4.0)[0] == pytest.approx(-4.0)
    with pytest.raises(ValueError):
        channel_llr(np.array([1.0]), 0.0)


# --- decoding -------------------------------------------------------------------

def test_factor_update_matches_reference(rng):
    plan = RaptorBlockPlan(seed=42, dist=OMEGA4, kprime=300)
    _, efac, bounds = plan.edges_upto(500)
    m = rng.normal(0, 3, efac.size)
    chan = np.tanh(0.5 * rng.normal(0, 2, 500))
    fast = _factor_update(m.astype(np.float32), bounds, efac, chan.astype(np.float32), 1e-18)
    ref = _factor_update_reference(m, bounds, efac, chan)
    assert np.allclose(fast, ref, rtol=3e-4, atol=3e-4)


def test_bp_matches_exhaustive_map_hard_decisions(rng):
    precode, plan = toy_instance()
    gamma = 1.0
    mismatches = 0
    for trial in range(300):
        u = rng.integers(0, 2, TOY_K, dtype=np.uint8)
        c = toy_encode(u)
        y = (1.0 - 2.0 * c) + rng.normal(0, 1.0, c.size)
        llrs = channel_llr(y, gamma)
        res = bp_decode(llrs, plan, precode, max_iters=8)
        map_llrs = map_bit_llrs(y, gamma)
        mismatches += int(not np.array_equal(res.posterior[:TOY_K] < 0, map_llrs < 0))
    assert mismatches == 0


def test_bp_posterior_exact_on_tree(rng):
    precode, plan = toy_instance()
    u = rng.integers(0, 2, TOY_K, dtype=np.uint8)
    c = toy_encode(u)
    y = (1.0 - 2.0 * c) + rng.normal(0, 1.0, c.size)
    llrs = channel_llr(y, 1.0)
    res = bp_decode(llrs, plan, precode, max_iters=8, dtype=np.float64)
    assert np.allclose(res.posterior[:TOY_K], map_bit_llrs(y, 1.0), atol=1e-9)


def test_bp_gauge_sign_symmetry(rng):
    # flipping the LLR signs along any codeword image flips the posterior
    # signs along the corresponding message: BP commutes with the XOR gauge
    precode, plan = toy_instance()
    y = rng.normal(0, 1, 8)
    llrs = channel_llr(y, 1.0)
    base = bp_decode(llrs, plan, precode, max_iters=6, dtype=np.float64)
    for _ in range(5):
        w = rng.integers(0, 2, TOY_K, dtype=np.uint8)
        flip = 1.0 - 2.0 * toy_encode(w).astype(np.float64)
        gauged = bp_decode(llrs * flip, plan, precode, max_iters=6, dtype=np.float64)
        assert np.allclose(
            gauged.posterior[:TOY_K],
            base.posterior[:TOY_K] * (1.0 - 2.0 * w),
            atol=1e-12,
        )


def test_saturated_llrs_decode_exactly(production_precode, rng):
    u = rng.integers(0, 2, 9900, dtype=np.uint8)
    v = production_precode.encode(u)
    plan = RaptorBlockPlan(seed=31, dist=OMEGA4, kprime=10000)
    n = 12000  # 1.2 k'
    c = lt_encode(v, plan, 0, n)
    llrs = 40.0 * (1.0 - 2.0 * c.astype(np.float64))
    res = bp_decode(llrs, plan, production_precode, max_iters=60)
    assert res.success
    assert np.array_equal(res.u_hat, u)


def test_far_too_few_symbols_fail(production_precode, rng):
    failures = 0
    trials = 100
    for t in range(trials):
        u = rng.integers(0, 2, 9900, dtype=np.uint8)
        v = production_precode.encode(u)
        plan = RaptorBlockPlan(seed=500 + t, dist=OMEGA4, kprime=10000)
        n = 4950  # half of k at gamma=1: far below k/C
        c = lt_encode(v, plan, 0, n)
        y = biawgn_sample(c, 1.0, seed=900 + t)
        res = bp_decode(channel_llr(y, 1.0), plan, production_precode, max_iters=25, min_iters=5, stall_window=5)
        failures += int(not res.success)
    assert failures >= 99


def test_warm_restart_extends_messages(production_precode, rng):
    u = rng.integers(0, 2, 9900, dtype=np.uint8)
    v = production_precode.encode(u)
    plan = RaptorBlockPlan(seed=77, dist=OMEGA4, kprime=10000)
    c = lt_encode(v, plan, 0, 22400)
    y = biawgn_sample(c, 1.0, seed=3)
    llrs = channel_llr(y, 1.0)
    first = bp_decode(llrs[:21000], plan, production_precode, max_iters=30, min_iters=5, stall_window=5)
    second = bp_decode(llrs, plan, production_precode, max_iters=150, state=first.state)
    assert second.success
    assert np.array_equal(second.u_hat, u)


# --- check codes ----------------------------------------------------------------

def test_check_code_deterministic(rng):
    u = rng.integers(0, 2, 9900, dtype=np.uint8)
    assert check_code(u) == check_code(u)


def test_check_code_flip_sensitivity(rng):
    u = rng.integers(0, 2, 2048, dtype=np.uint8)
    base = check_code(u)
    collisions = 0
    for _ in range(10000):
        w = u.copy()
        w[rng.integers(w.size)] ^= 1
        collisions += int(check_code(w) == base)
    assert collisions == 0


def test_check_code_width():
    u = np.ones(100, dtype=np.uint8)
    assert check_code(u, width=32) < 2 ** 32
    assert check_code(u, width=8) < 2 ** 8
    assert check_code(u, width=32) == check_code(u, width=64) & 0xFFFFFFFF
    with pytest.raises(ValueError):
        check_code(u, width=0)


def test_check_code_length_sensitive():
    assert check_code(np.zeros(8, dtype=np.uint8)) != check_code(np.zeros(16, dtype=np.uint8))
