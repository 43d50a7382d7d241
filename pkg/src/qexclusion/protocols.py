"""The triple-exclusion relation and protocols that solve it.

Alice holds an index ``i`` into a code ``S``; Bob holds three distinct
indices and must output one of them that differs from ``i``. Indices are
1-based throughout.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .antidist import Tolerances, DEFAULT_TOLERANCES, antidistinguishing_povm
from .codes import SphericalCode
from .numerics import RngLike, as_generator

ZERO_ERROR_TOL = 1e-6
MULTIPLICATIVE_SLACK = 1e-12


class ProtocolError(ValueError):
    pass


class ProtocolKind(str, enum.Enum):
    QUANTUM_ONE_WAY = "quantum_one_way"
    CLASSICAL_TWO_WAY = "classical_two_way"
    CLASSICAL_BOUNDED_ERROR = "classical_bounded_error"


@dataclass(frozen=True)
class RelationInstance:
    size: int
    alice_input: int
    bob_input: tuple
    code: SphericalCode | None = None

    def __post_init__(self):
        triple = tuple(sorted(int(x) for x in self.bob_input))
        if len(triple) != 3 or len(set(triple)) != 3:
            raise ProtocolError(f"Bob's input must be three distinct indices, got {self.bob_input}")
        if self.code is not None and len(self.code) != self.size:
            raise ProtocolError("size does not match the code")
        for x in triple + (self.alice_input,):
            if not 1 <= x <= self.size:
                raise ProtocolError(f"index {x} outside [1, {self.size}]")
        object.__setattr__(self, "bob_input", triple)

    @classmethod
    def on_code(cls, code: SphericalCode, i: int, triple) -> "RelationInstance":
        return cls(len(code), i, tuple(triple), code)

    def to_dict(self) -> dict:
        return {"size": self.size, "i": self.alice_input, "triple": list(self.bob_input)}


@dataclass(frozen=True)
class Message:
    sender: str
    payload: object
    bits: int

    def to_dict(self) -> dict:
        return {"sender": self.sender, "payload": self.payload, "bits": self.bits}


@dataclass(frozen=True)
class Transcript:
    protocol: ProtocolKind
    inputs: RelationInstance
    messages: tuple
    output: int
    total_bits: int = field(init=False)
    relation_satisfied: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_bits", sum(m.bits for m in self.messages))
        object.__setattr__(self, "relation_satisfied", relation_holds(self.inputs, self.output))

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol.value,
            "inputs": self.inputs.to_dict(),
            "messages": [m.to_dict() for m in self.messages],
            "output": self.output,
            "total_bits": self.total_bits,
            "relation_satisfied": self.relation_satisfied,
        }


def relation_holds(inst: RelationInstance, z: int) -> bool:
    if not 1 <= z <= inst.size:
        raise ProtocolError(f"output {z} outside [1, {inst.size}]")
    return z in inst.bob_input and z != inst.alice_input


def all_instances(size: int):
    """Every (i, triple) pair, triples in lexicographic order."""
    for triple in itertools.combinations(range(1, size + 1), 3):
        for i in range(1, size + 1):
            yield RelationInstance(size, i, triple)


def qubit_cost(d: int) -> int:
    return math.ceil(math.log2(d)) if d > 1 else 0


# --- quantum one-way -------------------------------------------------------


class PovmCache:
    """Memoizes antidistinguishing measurements per (code, triple)."""

    def __init__(self, tolerances: Tolerances = DEFAULT_TOLERANCES):
        self.tolerances = tolerances
        self._store = {}

    def get(self, code: SphericalCode, triple: tuple):
        key = (id(code), triple)
        if key not in self._store:
            self._store[key] = (code, antidistinguishing_povm(code.states(triple), self.tolerances))
        return self._store[key][1]


_default_cache = PovmCache()


def quantum_one_way_exact(inst: RelationInstance, cache: PovmCache | None = None) -> dict:
    """Born probabilities of Bob's outputs when Alice sends ``|rho_i>``.

    Outcome ``z`` of Bob's measurement excludes ``|rho_z>``; the returned
    mapping is keyed by the triple's indices.
    """
    if inst.code is None:
        raise ProtocolError("the quantum protocol needs a code")
    cache = cache or _default_cache
    povm = cache.get(inst.code, inst.bob_input)
    p = povm.probabilities(inst.code.state(inst.alice_input))
    p = np.clip(p, 0.0, None)
    return {z: float(pz) for z, pz in zip(inst.bob_input, p)}


def quantum_one_way_sample(inst: RelationInstance, rng: RngLike, cache: PovmCache | None = None) -> Transcript:
    probs = quantum_one_way_exact(inst, cache)
    gen = as_generator(rng)
    outcomes = list(probs)
    weights = np.array([probs[z] for z in outcomes])
    z = outcomes[int(gen.choice(len(outcomes), p=weights / weights.sum()))]
    msg = Message("alice", {"state": inst.alice_input}, qubit_cost(inst.code.dimension))
    return Transcript(ProtocolKind.QUANTUM_ONE_WAY, inst, (msg,), z)


# --- two-way classical ------------------------------------------------------


@dataclass(frozen=True)
class TwoWayMessage:
    r: int
    s: int | None = None
    p: int | None = None


def _log2_exact(size: int) -> int:
    if size < 1 or size & (size - 1):
        raise ProtocolError(f"|S| must be a power of two, got {size}")
    return size.bit_length() - 1


def _block(x: int, r: int) -> int:
    # 1-based block index: block b covers ((b-1) 2^r, b 2^r]
    return -(-x // (1 << r))


def two_way_round1(bob_input, size: int) -> TwoWayMessage:
    """Bob's scale ``r``: the largest ``r <= log|S|`` at which his sorted
    triple straddles two adjacent aligned blocks of length ``2^r``, split
    two-and-one or one-and-two."""
    q = _log2_exact(size)
    j, k, m = sorted(bob_input)
    for r in range(q, -1, -1):
        bj, bk, bm = _block(j, r), _block(k, r), _block(m, r)
        if bj == bk and bm == bj + 1:
            return TwoWayMessage(r, bj - 1)
        if bk == bm and bk == bj + 1:
            return TwoWayMessage(r, bj - 1)
    raise ProtocolError(f"no scale separates triple {(j, k, m)}")  # unreachable for distinct inputs


def two_way_round2(i: int, r: int) -> int:
    """Alice's parity bit of ``ceil(i / 2^r)``."""
    return _block(i, r) % 2


def alice_block_set(size: int, r: int, p: int) -> set:
    return {i for i in range(1, size + 1) if two_way_round2(i, r) == p}


def bob_two_way_output(triple, r: int, p: int) -> int:
    # smallest element whose block parity differs from Alice's
    for z in sorted(triple):
        if two_way_round2(z, r) != p:
            return z
    raise ProtocolError("every element of the triple shares Alice's parity")


def two_way_bits(size: int) -> int:
    q = _log2_exact(size)
    return (math.ceil(math.log2(q)) if q > 1 else 0) + 1


def two_way_protocol(inst: RelationInstance) -> Transcript:
    q = _log2_exact(inst.size)
    r_bits = math.ceil(math.log2(q)) if q > 1 else 0
    msg1 = two_way_round1(inst.bob_input, inst.size)
    p = two_way_round2(inst.alice_input, msg1.r)
    z = bob_two_way_output(inst.bob_input, msg1.r, p)
    messages = (Message("bob", {"r": msg1.r}, r_bits), Message("alice", {"p": p}, 1))
    return Transcript(ProtocolKind.CLASSICAL_TWO_WAY, inst, messages, z)


# --- bounded-error one-way --------------------------------------------------


@dataclass(frozen=True)
class Partition:
    num_blocks: int
    block_of: tuple  # block_of[i - 1] in [0, K)

    def __post_init__(self):
        if any(not 0 <= b < self.num_blocks for b in self.block_of):
            raise ProtocolError("block label out of range")

    def block(self, i: int) -> int:
        return self.block_of[i - 1]


def random_partition(size: int, K: int, rng: RngLike) -> Partition:
    """Balanced partition: a random ordering cut into ``K`` near-equal runs."""
    gen = as_generator(rng)
    ranks = np.argsort(gen.random(size))
    block_of = np.empty(size, dtype=np.int64)
    block_of[ranks] = np.arange(size) * K // size
    return Partition(K, tuple(int(b) for b in block_of))


def _check_k(size: int, K: int):
    if K < 2 or size < K:
        raise ProtocolError(f"need 2 <= K <= |S|, got K={K}, |S|={size}")


def bounded_error_one_way(inst: RelationInstance, K: int, rng: RngLike) -> Transcript:
    """One run: Alice names the block holding ``i`` in a shared random
    partition, Bob answers with a random triple element outside it (or any
    triple element if none lies outside)."""
    _check_k(inst.size, K)
    gen = as_generator(rng)
    part = random_partition(inst.size, K, gen)
    label = part.block(inst.alice_input)
    outside = [z for z in inst.bob_input if part.block(z) != label]
    pool = outside if outside else list(inst.bob_input)
    z = pool[int(gen.integers(len(pool)))]
    msg = Message("alice", {"block": label}, math.ceil(math.log2(K)))
    return Transcript(ProtocolKind.CLASSICAL_BOUNDED_ERROR, inst, (msg,), z)


def bounded_error_rates(size: int, K: int, pairs, trials: int, rng: RngLike, chunk: int = 4096) -> np.ndarray:
    """Monte Carlo error rate for each ``(i, triple)`` in ``pairs``.

    Vectorised form of :func:`bounded_error_one_way`: every trial draws one
    shared partition and one uniform choice per pair, used by all pairs.
    """
    _check_k(size, K)
    gen = as_generator(rng)
    pairs = list(pairs)
    alice = np.array([i for i, _ in pairs]) - 1
    trip = np.array([sorted(t) for _, t in pairs]) - 1  # (P, 3)
    errors = np.zeros(len(pairs), dtype=np.int64)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        ranks = np.argsort(gen.random((m, size)), axis=1)
        blocks = np.empty((m, size), dtype=np.int64)
        np.put_along_axis(blocks, ranks, np.arange(size)[None] * K // size, axis=1)
        a_blk = blocks[:, alice]  # (m, P)
        t_blk = blocks[:, trip]  # (m, P, 3)
        out_mask = t_blk != a_blk[..., None]
        n_out = out_mask.sum(axis=2)
        u = gen.random((m, len(pairs)))
        # pick the floor(u * count)-th eligible element
        pool = np.where(n_out[..., None] > 0, out_mask, True)
        count = pool.sum(axis=2)
        pick = np.minimum((u * count).astype(np.int64), count - 1)
        order = np.cumsum(pool, axis=2) - 1
        chosen = np.argmax(pool & (order == pick[..., None]), axis=2)
        z = np.take_along_axis(np.broadcast_to(trip, t_blk.shape), chosen[..., None], axis=2)[..., 0]
        errors += np.sum(z == alice[None], axis=0)
        done += m
    return errors / trials


# --- lower bounds and sampling checks ---------------------------------------


def one_way_lower_bound_bits(size: int) -> int:
    """``ceil(log2|S| - 1)``: Alice needs at least ``|S|/2`` messages."""
    if size < 2:
        raise ProtocolError("|S| must be at least 2")
    # smallest b with 2^(b+1) >= |S|
    return max(0, (size - 1).bit_length() - 1)


def cap_lower_bound_bits(d: int) -> int:
    if d < 1:
        raise ProtocolError("d must be positive")
    return max(0, math.ceil(math.log2(4 / 3) * (d - 1) - 1))


def multiplicative_support_check(exact, simulated, eps: float) -> bool:
    """``|sim(z) - exact(z)| <= eps * exact(z)`` for every outcome.

    Outcomes with zero exact probability therefore must have zero simulated
    probability, whatever ``eps``. The bound is widened by a relative
    ``MULTIPLICATIVE_SLACK`` to absorb rounding in ``sim - exact``; the
    slack vanishes where ``exact(z) = 0``.
    """
    p = _as_distribution(exact)
    q = _as_distribution(simulated)
    if p.shape != q.shape:
        raise ProtocolError("distributions are over different outcome sets")
    if eps < 0:
        raise ProtocolError("eps must be non-negative")
    return bool(np.all(np.abs(q - p) <= (eps + MULTIPLICATIVE_SLACK) * p))


def _as_distribution(p) -> np.ndarray:
    if isinstance(p, dict):
        p = [p[k] for k in sorted(p)]
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ProtocolError("distribution must be a non-empty 1-D sequence")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ProtocolError("distribution has negative or non-finite entries")
    if abs(arr.sum() - 1) > 1e-8:
        raise ProtocolError(f"distribution sums to {arr.sum()!r}, not 1")
    return arr


def pigeonhole_violation(message_of, size: int):
    """For a deterministic message map ``i -> message_of[i-1]``, find a
    message and a triple that leave Bob with no safe output.

    Returns ``(message, triple)`` or ``None`` when every message is shared
    by at most two inputs.
    """
    groups = {}
    for i in range(1, size + 1):
        groups.setdefault(message_of[i - 1], []).append(i)
    for msg, members in sorted(groups.items()):
        if len(members) >= 3:
            return msg, tuple(members[:3])
    return None


def paired_strategy(size: int):
    """Zero-error deterministic strategy with ``ceil(|S|/2)`` messages.

    Alice sends ``ceil(i/2)``; Bob outputs the smallest triple element not
    in the announced pair.
    """
    message_of = [(i + 1) // 2 for i in range(1, size + 1)]

    def bob(triple, msg):
        return next(z for z in sorted(triple) if (z + 1) // 2 != msg)

    return message_of, bob
