"""Complex spherical codes: constructions, coherence analysis and size bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .numerics import (
    RngLike,
    as_generator,
    haar_random_state,
    rademacher_signs,
)

CODE_NORM_TOL = 1e-10
FILE_NORM_TOL = 1e-8
WELCH_TOL = 1e-12


class CodeError(ValueError):
    pass


@dataclass(frozen=True)
class SphericalCode:
    """Ordered unit vectors in ``C^d``; rows of ``vectors`` are the states.

    Indexing through :meth:`state` is 1-based, so ``code.state(1)`` is the
    first vector.
    """

    dimension: int
    vectors: np.ndarray
    label: str = ""

    def __post_init__(self):
        vecs = np.array(self.vectors, dtype=np.complex128)
        if vecs.ndim == 1 and vecs.size == 0:
            vecs = vecs.reshape(0, self.dimension)
        if vecs.ndim != 2 or vecs.shape[1] != self.dimension:
            raise CodeError(f"vectors must have shape (n, {self.dimension}), got {vecs.shape}")
        norms = np.linalg.norm(vecs, axis=1)
        bad = np.flatnonzero(np.abs(norms**2 - 1) > CODE_NORM_TOL)
        if bad.size:
            raise CodeError(f"vector {bad[0] + 1} is not unit norm (|v|^2 = {norms[bad[0]] ** 2!r})")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def size(self) -> int:
        return len(self)

    def state(self, i: int) -> np.ndarray:
        if not 1 <= i <= len(self):
            raise IndexError(f"state index {i} outside [1, {len(self)}]")
        return self.vectors[i - 1]

    def states(self, indices) -> np.ndarray:
        return np.stack([self.state(i) for i in indices])

    def gram(self) -> np.ndarray:
        return self.vectors.conj() @ self.vectors.T

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "label": self.label,
            "vectors": [[[float(z.real), float(z.imag)] for z in v] for v in self.vectors],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SphericalCode":
        try:
            d = int(data["dimension"])
            raw = np.asarray(data["vectors"], dtype=float)
            label = str(data.get("label", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise CodeError(f"malformed code record: {exc}") from exc
        if raw.size == 0:
            raw = raw.reshape(0, d, 2)
        if raw.ndim != 3 or raw.shape[1:] != (d, 2):
            raise CodeError(f"vectors must be a list of {d} [re, im] pairs each")
        vecs = raw[..., 0] + 1j * raw[..., 1]
        norms2 = np.sum(np.abs(vecs) ** 2, axis=1)
        bad = np.flatnonzero(np.abs(norms2 - 1) > FILE_NORM_TOL)
        if bad.size:
            raise CodeError(f"vector {bad[0] + 1} has squared norm {norms2[bad[0]]!r}, not 1")
        # renormalize so the stricter in-memory invariant holds
        vecs = vecs / np.sqrt(norms2)[:, None]
        return cls(d, vecs, label)


def save_code(code: SphericalCode, path) -> None:
    Path(path).write_text(json.dumps(code.to_dict()) + "\n")


def load_code(path) -> SphericalCode:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CodeError(f"{path}: not valid JSON ({exc})") from exc
    return SphericalCode.from_dict(data)


@dataclass(frozen=True)
class CodeReport:
    size: int
    dimension: int
    coherence: float
    coherence_squared: float
    welch_rhs: float
    welch_satisfied: bool
    argmax_pair: tuple

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "dimension": self.dimension,
            "coherence": self.coherence,
            "coherence_squared": self.coherence_squared,
            "welch_rhs": self.welch_rhs,
            "welch_satisfied": self.welch_satisfied,
            "argmax_pair": list(self.argmax_pair),
        }


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def sic3() -> SphericalCode:
    """The nine-vector SIC in dimension 3 (all squared overlaps 1/4).

    Vectors are ``(0, 1, -w^k)/sqrt(2)`` for ``w = exp(2 pi i / 3)`` and
    their cyclic coordinate shifts.
    """
    w = np.exp(2j * np.pi / 3)
    base = [np.array([0, 1, -(w**k)]) / np.sqrt(2) for k in range(3)]
    vecs = [np.roll(v, shift) for shift in range(3) for v in base]
    return SphericalCode(3, np.array(vecs), "sic3")


def mub_union(d: int) -> SphericalCode:
    """Union of ``d + 1`` mutually unbiased bases for prime ``d``.

    The computational basis comes first, then for each ``a`` in ``0..d-1``
    the basis with components ``w^(a j^2 + k j) / sqrt(d)``. For ``d = 2``
    the three Pauli eigenbases are used instead.
    """
    if d < 2:
        raise CodeError("d must be at least 2")
    if not is_prime(d):
        raise CodeError(f"d must be prime, got {d}")
    if d == 2:
        s = 1 / np.sqrt(2)
        vecs = np.array([[1, 0], [0, 1], [s, s], [s, -s], [s, 1j * s], [s, -1j * s]])
        return SphericalCode(2, vecs, "mub2")
    w = np.exp(2j * np.pi / d)
    j = np.arange(d)
    vecs = [row for row in np.eye(d)]
    for a in range(d):
        for k in range(d):
            vecs.append(w ** ((a * j * j + k * j) % d) / np.sqrt(d))
    return SphericalCode(d, np.array(vecs), f"mub{d}")


def missing_basis_family(d: int) -> SphericalCode:
    """``d`` states, the i-th being the uniform superposition of all basis
    vectors except ``e_i``; pairwise overlaps are ``(d-2)/(d-1)``."""
    if d < 2:
        raise CodeError("d must be at least 2")
    vecs = (np.ones((d, d)) - np.eye(d)) / np.sqrt(d - 1)
    return SphericalCode(d, vecs, f"missing-basis{d}")


def random_rademacher_code(
    d: int,
    target_size: int,
    delta: float,
    rng: RngLike,
    max_attempts: int | None = None,
) -> SphericalCode:
    """Greedy code from random sign vectors with coherence at most ``delta``.

    Candidates are drawn one at a time and kept if every overlap with the
    accepted vectors is at most ``delta``. Overlaps of sign vectors are
    integers over ``d``, so the comparison is done exactly on the integer
    dot products. Stops at ``target_size`` accepted vectors or after
    ``max_attempts`` draws (default ``1000 * target_size``); the result
    may be smaller than requested.
    """
    if not 0 < delta < 1:
        raise CodeError("delta must lie strictly between 0 and 1")
    if d < 1 or target_size < 1:
        raise CodeError("d and target_size must be positive")
    if max_attempts is None:
        max_attempts = 1000 * target_size
    gen = as_generator(rng)
    # |dot| / d <= delta  <=>  |dot| <= floor(delta * d), in exact rationals
    limit = math.floor(Fraction(delta) * d)
    accepted = np.empty((0, d), dtype=np.int64)
    for _ in range(max_attempts):
        if len(accepted) >= target_size:
            break
        cand = rademacher_signs(d, gen)
        if len(accepted) and np.max(np.abs(accepted @ cand)) > limit:
            continue
        accepted = np.vstack([accepted, cand])
    vecs = accepted.astype(np.complex128) / np.sqrt(d)
    return SphericalCode(d, vecs, f"rademacher{d}-delta{delta:g}")


def haar_random_set(d: int, n: int, rng: RngLike) -> SphericalCode:
    if d < 1 or n < 1:
        raise CodeError("d and n must be positive")
    gen = as_generator(rng)
    vecs = np.array([haar_random_state(d, gen) for _ in range(n)])
    return SphericalCode(d, vecs, f"haar{d}x{n}")


def welch_rhs(size: int, d: int) -> float:
    if size < 2:
        raise CodeError("Welch bound needs at least two vectors")
    return (size - d) / (d * (size - 1))


def analyze(code: SphericalCode) -> CodeReport:
    """Coherence by exhaustive pair scan, compared with the Welch bound.

    The argmax pair is the lexicographically smallest 1-based pair
    attaining the maximum overlap modulus.
    """
    n = len(code)
    if n < 2:
        raise CodeError("analysis needs at least two vectors")
    mod = np.abs(code.gram())
    iu, ju = np.triu_indices(n, k=1)
    pair_vals = mod[iu, ju]
    k = int(np.argmax(pair_vals))  # first occurrence in row-major order
    coherence = float(min(pair_vals[k], 1.0))
    rhs = welch_rhs(n, code.dimension)
    return CodeReport(
        size=n,
        dimension=code.dimension,
        coherence=coherence,
        coherence_squared=coherence**2,
        welch_rhs=rhs,
        welch_satisfied=bool(coherence**2 >= rhs - WELCH_TOL),
        argmax_pair=(int(iu[k]) + 1, int(ju[k]) + 1),
    )


def cap_volume_ratio(d: int, theta: float) -> float:
    """Ratio of the full complex sphere volume to a cap of angle ``theta``."""
    if d < 1:
        raise CodeError("d must be positive")
    if not 0 < theta <= np.pi / 2:
        raise CodeError("theta must lie in (0, pi/2]")
    return float(np.sin(theta) ** (-(2 * d - 2)))


def cap_bound_size(d: int) -> int:
    """Guaranteed size ``ceil((4/3)^(d-1))`` of a code with coherence 1/2."""
    if d < 1:
        raise CodeError("d must be positive")
    return -(-(4 ** (d - 1)) // 3 ** (d - 1))
