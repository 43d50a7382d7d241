import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from qexclusion.antidist import NotAntidistinguishableError, cfs_criterion, exclusion_sdp, triple_overlaps
from qexclusion.codes import cap_bound_size, missing_basis_family, mub_union, sic3
from qexclusion.numerics import RngStream
from qexclusion.protocols import (
    PovmCache,
    ProtocolError,
    RelationInstance,
    all_instances,
    alice_block_set,
    bounded_error_one_way,
    bounded_error_rates,
    cap_lower_bound_bits,
    multiplicative_support_check,
    one_way_lower_bound_bits,
    paired_strategy,
    pigeonhole_violation,
    quantum_one_way_exact,
    quantum_one_way_sample,
    random_partition,
    relation_holds,
    two_way_bits,
    two_way_protocol,
    two_way_round1,
    two_way_round2,
)


# --- relation -----------------------------------------------------------------


@pytest.mark.parametrize("i, z, expected", [(1, 2, True), (2, 2, False), (2, 3, True), (1, 5, False)])
def test_relation_examples(i, z, expected):
    assert relation_holds(RelationInstance(5, i, (2, 3, 4)), z) is expected


def test_relation_rejects_bad_inputs():
    with pytest.raises(ProtocolError):
        RelationInstance(5, 1, (2, 2, 3))
    with pytest.raises(ProtocolError):
        RelationInstance(5, 6, (1, 2, 3))
    with pytest.raises(ProtocolError):
        relation_holds(RelationInstance(5, 1, (2, 3, 4)), 9)


def test_all_instances_count():
    assert sum(1 for _ in all_instances(9)) == 9 * 84


# --- quantum one-way --------------------------------------------------------------


def _quantum_exhaustive(code):
    cache = PovmCache()
    worst = 0.0
    for inst in all_instances(len(code)):
        inst = RelationInstance.on_code(code, inst.alice_input, inst.bob_input)
        p = quantum_one_way_exact(inst, cache)
        assert sum(p.values()) == pytest.approx(1.0, abs=1e-8)
        if inst.alice_input in p:
            worst = max(worst, p[inst.alice_input])
    return worst


def test_quantum_zero_error_sic3():
    assert _quantum_exhaustive(sic3()) <= 1e-6


@pytest.mark.slow
def test_quantum_zero_error_mub5():
    assert _quantum_exhaustive(mub_union(5)) <= 1e-6


def test_quantum_sampling_never_errs():
    code = sic3()
    gen = RngStream(71).generator()
    cache = PovmCache()
    for _ in range(10_000):
        triple = tuple(gen.choice(9, 3, replace=False) + 1)
        i = int(triple[gen.integers(3)])
        t = quantum_one_way_sample(RelationInstance.on_code(code, i, triple), gen, cache)
        assert t.relation_satisfied
        assert t.total_bits == 2


def test_quantum_cost_mub5():
    code = mub_union(5)
    t = quantum_one_way_sample(RelationInstance.on_code(code, 1, (1, 7, 20)), 0)
    assert t.total_bits == 3


def test_missing_basis_triple_is_not_antidistinguishable():
    code = missing_basis_family(4)
    states = code.states((1, 2, 3))
    # the partial basis measurement leaves weight on rho_1 in Pi_1
    rho1 = code.state(1)
    e = np.eye(4)
    Pi1 = np.eye(4) - np.outer(e[1], e[1]) - np.outer(e[2], e[2])
    assert np.vdot(rho1, Pi1 @ rho1).real == pytest.approx(1 / 3)
    assert not cfs_criterion(triple_overlaps(*states))
    assert exclusion_sdp(states).status.value == "not_antidistinguishable"
    with pytest.raises(NotAntidistinguishableError):
        quantum_one_way_exact(RelationInstance.on_code(code, 1, (1, 2, 3)))


def test_quantum_needs_code():
    with pytest.raises(ProtocolError):
        quantum_one_way_exact(RelationInstance(9, 1, (1, 2, 3)))


# --- two-way --------------------------------------------------------------------


@pytest.mark.parametrize("triple, r", [((1, 2, 3), 1), ((1, 5, 8), 2)])
def test_round1_hand_traces(triple, r):
    assert two_way_round1(triple, 8).r == r


@pytest.mark.parametrize("i, r, p", [(5, 1, 1), (1, 0, 1), (8, 2, 0)])
def test_round2_hand_traces(i, r, p):
    assert two_way_round2(i, r) == p


def test_two_way_hand_trace():
    t = two_way_protocol(RelationInstance(8, 5, (1, 2, 3)))
    assert t.messages[0].payload == {"r": 1}
    assert t.messages[1].payload == {"p": 1}
    assert alice_block_set(8, 1, 1) == {1, 2, 5, 6}
    assert t.output == 3 and t.relation_satisfied and t.total_bits == 3


def _block_oracle(x, r):
    return math.ceil(x / 2**r)


@pytest.mark.parametrize("size, bits", [(8, 3), (16, 3), (32, 4)])
def test_two_way_exhaustive(size, bits):
    q = int(math.log2(size))
    assert two_way_bits(size) == bits == math.ceil(math.log2(math.log2(size))) + 1
    for inst in all_instances(size):
        t = two_way_protocol(inst)
        assert t.relation_satisfied
        assert t.total_bits == bits
        r = t.messages[0].payload["r"]
        assert 0 <= r <= q
        j, k, m = inst.bob_input
        bj, bk, bm = (_block_oracle(x, r) for x in (j, k, m))
        assert (bj == bk and bm == bj + 1) or (bj + 1 == bk == bm)


def test_rectangles_at_size_8():
    size = 8
    conversations = {}
    for triple in itertools.combinations(range(1, size + 1), 3):
        conversations.setdefault(two_way_round1(triple, size).r, []).append(triple)
    for r, bob_inputs in conversations.items():
        for p in (0, 1):
            X = alice_block_set(size, r, p)
            for triple in bob_inputs:
                assert any(z not in X for z in triple), (r, p, triple)


def test_two_way_rejects_non_power_of_two():
    with pytest.raises(ProtocolError):
        two_way_protocol(RelationInstance(9, 1, (1, 2, 3)))


def test_transcript_json_fields():
    d = two_way_protocol(RelationInstance(16, 3, (2, 3, 9))).to_dict()
    assert set(d) == {"protocol", "inputs", "messages", "output", "total_bits", "relation_satisfied"}
    assert d["total_bits"] == sum(m["bits"] for m in d["messages"])


# --- bounded error ------------------------------------------------------------------


def test_partition_is_balanced():
    part = random_partition(10, 4, RngStream(1))
    sizes = np.bincount(part.block_of, minlength=4)
    assert sorted(sizes) == [2, 2, 3, 3]


def test_singleton_blocks_never_err():
    gen = RngStream(2).generator()
    for inst in itertools.islice(all_instances(8), 0, None, 7):
        assert bounded_error_one_way(inst, 8, gen).relation_satisfied
    pairs = [(1, (1, 2, 3)), (4, (2, 4, 8))]
    assert np.all(bounded_error_rates(8, 8, pairs, 2000, RngStream(2)) == 0)


def test_bounded_error_only_errs_when_triple_shares_block():
    gen = RngStream(3).generator()
    for _ in range(2000):
        triple = tuple(gen.choice(16, 3, replace=False) + 1)
        i = int(triple[gen.integers(3)])
        inst = RelationInstance(16, i, triple)
        t = bounded_error_one_way(inst, 4, RngStream(3, (len(triple), int(gen.integers(1 << 30)))))
        if not t.relation_satisfied:
            assert t.output == i


def test_bounded_error_rates_agree_with_single_runs():
    pairs = [(1, (1, 2, 3)), (5, (5, 6, 7)), (1, (2, 3, 4))]
    N = 20_000
    vec = bounded_error_rates(8, 2, pairs, N, RngStream(4), chunk=1000)
    gen = RngStream(5).generator()
    single = np.array(
        [np.mean([not bounded_error_one_way(RelationInstance(8, i, t), 2, gen).relation_satisfied for _ in range(N)])
         for i, t in pairs]
    )
    # exact error for i in the triple: P(other two with i) * 1/3 = (3/7)(2/6)/3
    exact = (3 / 7) * (2 / 6) / 3
    sigma = math.sqrt(exact * (1 - exact) / N)
    for est in (vec, single):
        assert abs(est[0] - exact) < 5 * sigma
        assert abs(est[1] - exact) < 5 * sigma
        assert est[2] == 0


def test_bounded_error_bits():
    t = bounded_error_one_way(RelationInstance(64, 1, (1, 2, 3)), 4, 0)
    assert t.total_bits == 2


def test_invalid_k():
    with pytest.raises(ProtocolError):
        bounded_error_one_way(RelationInstance(8, 1, (1, 2, 3)), 1, 0)
    with pytest.raises(ProtocolError):
        bounded_error_rates(8, 9, [], 10, 0)


# --- lower bounds ---------------------------------------------------------------------


def test_one_way_lower_bound_examples():
    assert one_way_lower_bound_bits(9) == 3
    assert one_way_lower_bound_bits(20) == 4
    assert one_way_lower_bound_bits(2) == 0


@pytest.mark.parametrize("size", range(2, 300))
def test_one_way_lower_bound_formula(size):
    assert one_way_lower_bound_bits(size) == max(0, math.ceil(math.log2(size) - 1))


def test_one_way_lower_bound_monotone():
    vals = [one_way_lower_bound_bits(s) for s in range(2, 5000)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_cap_lower_bound_examples():
    assert cap_lower_bound_bits(1) == 0
    with mpmath.workdps(50):
        ref = int(mpmath.ceil(mpmath.log(mpmath.mpf(4) / 3, 2) * 99 - 1))
    assert ref == 41 == cap_lower_bound_bits(100)


@pytest.mark.parametrize("d", range(2, 65))
def test_cap_bound_consistency(d):
    assert one_way_lower_bound_bits(cap_bound_size(d)) >= cap_lower_bound_bits(d) - 1


# --- multiplicative error -------------------------------------------------------------


def test_multiplicative_examples():
    assert multiplicative_support_check([0.2, 0.8], [0.2, 0.8], 0.0)
    assert not multiplicative_support_check([0, 1], [0.01, 0.99], 1e6)
    assert multiplicative_support_check([0.5, 0.5], [0.55, 0.45], 0.1)
    assert multiplicative_support_check({1: 0.5, 2: 0.5}, {2: 0.45, 1: 0.55}, 0.1)


def test_multiplicative_rejects_malformed():
    with pytest.raises(ProtocolError):
        multiplicative_support_check([0.5, 0.6], [0.5, 0.5], 0.1)
    with pytest.raises(ProtocolError):
        multiplicative_support_check([0.5, 0.5], [1.0], 0.1)
    with pytest.raises(ProtocolError):
        multiplicative_support_check([0.5, 0.5], [0.5, 0.5], -1)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 6), seed=st.integers(0, 2**31), eps=st.floats(0, 2))
def test_multiplicative_matches_direct_check(n, seed, eps):
    gen = np.random.default_rng(seed)
    p = gen.random(n) * (gen.random(n) > 0.3)
    if p.sum() == 0:
        p[0] = 1
    p /= p.sum()
    q = np.clip(p * (1 + gen.uniform(-1.2 * eps, 1.2 * eps, n)), 0, None)
    if q.sum() == 0:
        q = p.copy()
    q /= q.sum()
    if gen.random() < 0.2:
        # move a little mass onto a zero-probability outcome, if any
        zeros = np.flatnonzero(p == 0)
        if zeros.size:
            q = 0.99 * q
            q[zeros[0]] += 0.01
    # keep clear of the rounding band around the bound
    pos = p > 0
    assume(np.all(np.abs(np.abs(q - p)[pos] - eps * p[pos]) > 1e-9 * p[pos]))
    expected = all(abs(qz - pz) <= eps * pz for pz, qz in zip(p, q))
    if any(pz == 0 and qz > 0 for pz, qz in zip(p, q)):
        assert not expected
    assert multiplicative_support_check(p, q, eps) is expected


# --- deterministic one-way strategies ------------------------------------------------


@pytest.mark.parametrize("size", range(3, 7))
def test_pigeonhole_finds_violation_for_every_small_strategy(size):
    M = math.ceil(size / 2) - 1
    for message_of in itertools.product(range(M), repeat=size):
        found = pigeonhole_violation(message_of, size)
        assert found is not None
        msg, triple = found
        # Bob's output depends on (msg, triple) only, and every choice collides
        # with some Alice input that sent msg
        for z in triple:
            assert message_of[z - 1] == msg


@pytest.mark.parametrize("size", [3, 4, 5, 9, 12])
def test_paired_strategy_zero_error(size):
    message_of, bob = paired_strategy(size)
    assert len(set(message_of)) == math.ceil(size / 2)
    assert pigeonhole_violation(message_of, size) is None
    for inst in all_instances(size):
        z = bob(inst.bob_input, message_of[inst.alice_input - 1])
        assert relation_holds(inst, z)
