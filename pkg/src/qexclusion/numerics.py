"""Complex linear algebra and seeded randomness shared by the other modules.

Vectors are 1-D ``complex128`` arrays and Hermitian matrices are square
``complex128`` arrays. Nothing here keeps global state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

UNIT_TOL = 1e-12
HERMITIAN_TOL = 1e-12

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class RngStream:
    """Seed plus stream key naming an independent random sequence.

    The key is a tuple of non-negative integers so child streams can be
    derived per trial (``stream.child(d).child(t)``) without depending on
    the order in which workers run.
    """

    seed: int = 0
    key: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        key = tuple(int(k) for k in (self.key if isinstance(self.key, tuple) else (self.key,)))
        if any(k < 0 or k >= 2**64 for k in key):
            raise ValueError("stream key entries must be 64-bit unsigned integers")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "key", key)

    @property
    def stream_id(self) -> int:
        return self.key[-1] if self.key else 0

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.key + (int(index),))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Turn an ``RngStream`` (or bare integer seed) into a generator.

    A ``Generator`` is passed through unchanged so callers can draw many
    samples from one stream.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a non-empty 1-D vector, got shape {arr.shape}")
    return arr


def as_hermitian(M, tol: float = HERMITIAN_TOL) -> np.ndarray:
    arr = np.asarray(M, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    dev = np.max(np.abs(arr - arr.conj().T))
    if dev > tol * max(1.0, np.max(np.abs(arr))):
        raise NotHermitianError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return (arr + arr.conj().T) / 2


def inner_product(u, v) -> complex:
    """Return ``<u|v>``, conjugate-linear in the first argument."""
    u = as_vector(u)
    v = as_vector(v)
    if u.shape != v.shape:
        raise DimensionError(f"dimension mismatch: {u.size} vs {v.size}")
    return complex(np.vdot(u, v))


def is_unit(v, tol: float = UNIT_TOL) -> bool:
    v = as_vector(v)
    return abs(np.vdot(v, v).real - 1.0) <= tol


def normalize(v) -> np.ndarray:
    v = as_vector(v)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / norm


def projector(v) -> np.ndarray:
    v = as_vector(v)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, aligned with eigenvalues

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def _jacobi(A: np.ndarray, tol: float, max_sweeps: int):
    A = A.copy()
    n = A.shape[0]
    V = np.eye(n, dtype=np.complex128)
    scale = np.linalg.norm(A)
    if scale == 0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.linalg.norm(A[~np.eye(n, dtype=bool)])
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                theta = (A[q, q].real - A[p, p].real) / (2 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                # phase rotation diag(1, conj(phase)) followed by a real Givens rotation
                G = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ G
                A[idx, :] = G.conj().T @ A[idx, :]
                A[q, p] = A[p, q] = 0.0
                V[:, idx] = V[:, idx] @ G
    else:
        raise RuntimeError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
    return np.diag(A).real.copy(), V


def hermitian_eigen(M, method: str = "jacobi") -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    ``method="jacobi"`` runs cyclic complex Jacobi rotations until the
    off-diagonal Frobenius mass falls below ``1e-14 * ||M||_F``.
    ``method="lapack"`` defers to ``numpy.linalg.eigh`` and is what the
    solver uses on its hot path.
    """
    A = as_hermitian(M)
    if method == "jacobi":
        w, V = _jacobi(A, JACOBI_TOL, JACOBI_MAX_SWEEPS)
        order = np.argsort(w, kind="stable")
        w, V = w[order], V[:, order]
    elif method == "lapack":
        w, V = np.linalg.eigh(A)
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    return EigenDecomposition(w, V)


def psd_project(M) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix (negative eigenvalues clipped)."""
    A = as_hermitian(M, tol=1e-9)
    w, V = np.linalg.eigh(A)
    if np.all(w >= 0):
        return A
    w = np.clip(w, 0.0, None)
    out = (V * w) @ V.conj().T
    return (out + out.conj().T) / 2


def max_eigenvalue(M) -> float:
    A = np.asarray(M, dtype=np.complex128)
    return float(np.linalg.eigvalsh((A + A.conj().T) / 2)[-1])


def min_eigenvalue(M) -> float:
    A = np.asarray(M, dtype=np.complex128)
    return float(np.linalg.eigvalsh((A + A.conj().T) / 2)[0])


def haar_random_state(d: int, rng: RngLike) -> np.ndarray:
    """Haar-distributed pure state: normalized standard complex Gaussian."""
    if d < 1:
        raise ValueError("dimension must be positive")
    gen = as_generator(rng)
    z = gen.standard_normal(d) + 1j * gen.standard_normal(d)
    return z / np.linalg.norm(z)


def rademacher_signs(d: int, rng: RngLike) -> np.ndarray:
    if d < 1:
        raise ValueError("dimension must be positive")
    gen = as_generator(rng)
    return gen.integers(0, 2, size=d, dtype=np.int64) * 2 - 1


def rademacher_vector(d: int, rng: RngLike) -> np.ndarray:
    """Unit vector with independent equiprobable entries ``+-1/sqrt(d)``."""
    return rademacher_signs(d, rng).astype(np.complex128) / np.sqrt(d)


def random_unitary(d: int, rng: RngLike) -> np.ndarray:
    """Haar unitary from QR of a complex Ginibre matrix, phases fixed."""
    gen = as_generator(rng)
    Z = (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph
