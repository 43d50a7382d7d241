"""Antidistinguishability of pure states.

Two routes are offered: the closed-form criterion on the squared overlaps
of a triple, and the state-exclusion semidefinite program

    minimize    sum_z <rho_z| P_z |rho_z>
    subject to  P_z >= 0,  sum_z P_z = I

with dual

    maximize    tr Y
    subject to  Y <= |rho_z><rho_z|  for every z.

The program is solved by a small primal-dual interior-point method. Whatever
the solver returns is cleaned up and re-checked by :func:`verify_povm` and
:func:`verify_dual`, which only use the states and the candidate
certificates, so a verdict never rests on solver internals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .numerics import DimensionError, as_vector

PRIMAL_THRESHOLD = 1e-6
DUAL_THRESHOLD = 1e-6
FEASIBILITY_TOL = 1e-8
GAP_TOL = 1e-7
UNIT_TOL = 1e-10
CLIP_TOL = 1e-10


@dataclass(frozen=True)
class Tolerances:
    primal_threshold: float = PRIMAL_THRESHOLD
    dual_threshold: float = DUAL_THRESHOLD
    feasibility: float = FEASIBILITY_TOL
    gap: float = GAP_TOL
    max_iterations: int = 200
    solver_gap: float = 1e-11


DEFAULT_TOLERANCES = Tolerances()


class Status(str, enum.Enum):
    ANTIDISTINGUISHABLE = "antidistinguishable"
    NOT_ANTIDISTINGUISHABLE = "not_antidistinguishable"
    INDETERMINATE = "indeterminate"


class NotAntidistinguishableError(ValueError):
    pass


class IndeterminateError(RuntimeError):
    def __init__(self, result):
        super().__init__(f"exclusion SDP was inconclusive: {result.message}")
        self.result = result


@dataclass(frozen=True)
class TripleOverlaps:
    """Squared overlaps ``a = |<j|k>|^2``, ``b = |<j|m>|^2``, ``c = |<m|k>|^2``."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"squared overlap {name}={val!r} outside [0, 1]")


def triple_overlaps(u, v, w) -> TripleOverlaps:
    u, v, w = as_vector(u), as_vector(v), as_vector(w)
    if not u.shape == v.shape == w.shape:
        raise DimensionError("triple has mismatched dimensions")

    def sq(x, y):
        return min(abs(np.vdot(x, y)) ** 2, 1.0)

    return TripleOverlaps(sq(u, v), sq(u, w), sq(w, v))


def cfs_criterion(t: TripleOverlaps, tol: float = 0.0) -> bool:
    """``a + b + c < 1`` and ``(1 - a - b - c)^2 >= 4abc``.

    ``tol`` loosens the second (non-strict) inequality; it is zero by
    default so the bare criterion is evaluated exactly as stated.
    """
    s = t.a + t.b + t.c
    return s < 1.0 and (1.0 - s) ** 2 >= 4.0 * t.a * t.b * t.c - tol


@dataclass(frozen=True)
class Povm:
    elements: np.ndarray  # (n, d, d)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self):
        return self.elements.shape[0]

    def probabilities(self, psi) -> np.ndarray:
        psi = as_vector(psi)
        return np.einsum("i,zij,j->z", psi.conj(), self.elements, psi).real

    def to_dict(self) -> dict:
        return {"elements": _matrices_to_list(self.elements)}


@dataclass(frozen=True)
class PrimalCheck:
    exclusion_probabilities: np.ndarray
    value: float
    min_eigenvalue: float
    completeness_residual: float

    def feasible(self, tol: float = FEASIBILITY_TOL) -> bool:
        return self.min_eigenvalue >= -tol and self.completeness_residual <= tol


@dataclass(frozen=True)
class DualCheck:
    trace: float
    max_violation: float  # max_z lambda_max(Y - |rho_z><rho_z|)

    def feasible(self, tol: float = FEASIBILITY_TOL) -> bool:
        return self.max_violation <= tol


@dataclass(frozen=True)
class ExclusionResult:
    status: Status
    primal_value: float
    dual_value: float
    duality_gap: float
    povm: Povm | None
    dual_certificate: np.ndarray | None
    primal_check: PrimalCheck | None = None
    dual_check: DualCheck | None = None
    iterations: int = 0
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def antidistinguishable(self) -> bool:
        return self.status is Status.ANTIDISTINGUISHABLE

    def to_dict(self, certificates: bool = False) -> dict:
        out = {
            "status": self.status.value,
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "message": self.message,
        }
        if self.primal_check is not None:
            out["primal_residuals"] = {
                "min_eigenvalue": self.primal_check.min_eigenvalue,
                "completeness": self.primal_check.completeness_residual,
                "exclusion_probabilities": self.primal_check.exclusion_probabilities.tolist(),
            }
        if self.dual_check is not None:
            out["dual_residuals"] = {"max_violation": self.dual_check.max_violation}
        if certificates:
            out["povm"] = None if self.povm is None else self.povm.to_dict()
            out["dual_certificate"] = (
                None if self.dual_certificate is None else _matrices_to_list(self.dual_certificate)
            )
        return out


def _matrices_to_list(a: np.ndarray):
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _as_states(states) -> np.ndarray:
    arr = np.array(states, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"states must be an (n, d) array, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValueError("need at least two states")
    norms2 = np.sum(np.abs(arr) ** 2, axis=1)
    bad = np.flatnonzero(np.abs(norms2 - 1) > UNIT_TOL)
    if bad.size:
        raise ValueError(f"state {bad[0] + 1} is not unit norm")
    return arr


def verify_povm(states, elements) -> PrimalCheck:
    """Exclusion probabilities, PSD margin and completeness residual of a POVM."""
    states = np.asarray(states, dtype=np.complex128)
    E = np.asarray(elements, dtype=np.complex128)
    d = states.shape[1]
    probs = np.einsum("zi,zij,zj->z", states.conj(), E, states).real
    herm = (E + np.conj(np.swapaxes(E, 1, 2))) / 2
    min_eig = float(np.min(np.linalg.eigvalsh(herm)))
    resid = float(np.linalg.norm(E.sum(axis=0) - np.eye(d)))
    return PrimalCheck(probs, float(probs.sum()), min_eig, resid)


def verify_dual(states, Y) -> DualCheck:
    states = np.asarray(states, dtype=np.complex128)
    Y = np.asarray(Y, dtype=np.complex128)
    Y = (Y + Y.conj().T) / 2
    proj = np.einsum("zi,zj->zij", states, states.conj())
    viol = float(np.max(np.linalg.eigvalsh(Y[None] - proj)))
    return DualCheck(float(np.trace(Y).real), viol)


def _span_basis(states: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the states (d x r)."""
    U, s, _ = np.linalg.svd(states.T, full_matrices=False)
    r = int(np.sum(s > 1e-12 * s[0]))
    return U[:, :r]


def _max_step(X_chol: np.ndarray, D: np.ndarray) -> float:
    # largest alpha with X + alpha D >= 0, given X = L L^H
    Linv = np.linalg.inv(X_chol)
    M = Linv @ D @ Linv.conj().T
    lam = np.linalg.eigvalsh((M + M.conj().T) / 2)[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _sym(A):
    return (A + np.conj(np.swapaxes(A, -1, -2))) / 2


def _solve_reduced(C: np.ndarray, tol: Tolerances):
    """Interior-point solve in the span; C has shape (n, r, r)."""
    n, r, _ = C.shape
    I = np.eye(r, dtype=np.complex128)
    X = np.repeat(I[None] / n, n, axis=0)
    Y = -I.copy()
    S = C - Y[None]
    info = {"converged": False, "message": "iteration cap reached"}
    best = None
    it = 0
    for it in range(1, tol.max_iterations + 1):
        Rp = I - X.sum(axis=0)
        Rd = C - Y[None] - S
        mu = float(np.einsum("zij,zji->", X, S).real) / (n * r)
        pobj = float(np.einsum("zij,zji->", C, X).real)
        dobj = float(np.trace(Y).real)
        merit = max(abs(pobj - dobj), n * r * mu, np.linalg.norm(Rp), np.linalg.norm(Rd))
        if best is None or merit < best[0]:
            best = (merit, X, Y, it)
        if merit <= tol.solver_gap * (1.0 + abs(pobj)):
            info = {"converged": True, "message": "converged"}
            break
        try:
            Sinv = np.linalg.inv(S)
            LX = np.linalg.cholesky(X)
            LS = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            info = {"converged": False, "message": "lost positive definiteness"}
            break
        # Schur operator Y -> sum_z sym(X_z Y S_z^-1) in row-major vec form
        L = np.zeros((r * r, r * r), dtype=np.complex128)
        for z in range(n):
            L += np.kron(X[z], Sinv[z].T) + np.kron(Sinv[z], X[z].T)
        L /= 2
        XRdS = _sym(X @ Rd @ Sinv)

        def direction(target, corr):
            rhs = Rp - (target * Sinv - X - XRdS - corr).sum(axis=0)
            dY = np.linalg.solve(L, rhs.reshape(-1)).reshape(r, r)
            dY = (dY + dY.conj().T) / 2
            dS = Rd - dY[None]
            dX = target * Sinv - X - _sym(X @ dS @ Sinv) - corr
            return dX, dY, dS

        def steps(dX, dS):
            ap = min(_max_step(LX[z], dX[z]) for z in range(n))
            ad = min(_max_step(LS[z], dS[z]) for z in range(n))
            return ap, ad

        dXa, dYa, dSa = direction(0.0, 0.0)
        ap, ad = steps(dXa, dSa)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = float(np.einsum("zij,zji->", X + ap * dXa, S + ad * dSa).real) / (n * r)
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0
        corr = _sym(dXa @ dSa @ Sinv)
        dX, dY, dS = direction(sigma * mu, corr)
        ap, ad = steps(dX, dS)
        ap = min(1.0, 0.98 * ap)
        ad = min(1.0, 0.98 * ad)
        if ap < 1e-12 and ad < 1e-12:
            info = {"converged": False, "message": "step length collapsed"}
            break
        X = _sym(X + ap * dX)
        Y = Y + ad * dY
        Y = (Y + Y.conj().T) / 2
        S = _sym(S + ad * dS)
    _, X, Y, best_it = best
    info["iterations"] = it
    info["best_iteration"] = best_it
    return X, Y, info


def _clean_povm(X: np.ndarray) -> np.ndarray:
    # clip small negative eigenvalues, then share the completeness residual equally
    w, V = np.linalg.eigh(_sym(X))
    w = np.where(w < CLIP_TOL, np.maximum(w, 0.0), w)
    X = np.einsum("zik,zk,zjk->zij", V, w, V.conj())
    n, r, _ = X.shape
    X = X + (np.eye(r) - X.sum(axis=0))[None] / n
    return _sym(X)


def _clean_dual(Y: np.ndarray, C: np.ndarray) -> np.ndarray:
    Y = (Y + Y.conj().T) / 2
    shift = max(0.0, float(np.max(np.linalg.eigvalsh(Y[None] - C))))
    return Y - shift * np.eye(Y.shape[0])


def exclusion_sdp(states, tolerances: Tolerances = DEFAULT_TOLERANCES) -> ExclusionResult:
    """Decide antidistinguishability of ``states`` (an ``(n, d)`` array of unit rows).

    Returns both certificates when they can be built. The verdict comes from
    the independently re-verified certificates:

    * antidistinguishable: POVM with total exclusion probability
      ``<= primal_threshold`` that is PSD and complete within tolerance;
    * not_antidistinguishable: ``Y`` with ``tr Y >= dual_threshold`` and
      ``Y <= |rho_z><rho_z|`` within tolerance;
    * indeterminate otherwise, or when the re-verified duality gap exceeds
      ``tolerances.gap``.
    """
    states = _as_states(states)
    n, d = states.shape
    Q = _span_basis(states)
    red = states @ Q.conj()  # row z is Q^H rho_z
    red /= np.linalg.norm(red, axis=1)[:, None]
    C = np.einsum("zi,zj->zij", red, red.conj())

    X, Y, info = _solve_reduced(C, tolerances)
    X = _clean_povm(X)
    Y = _clean_dual(Y, C)

    # lift to the full space; the complement of the span goes to the first outcome
    elements = np.einsum("ia,zab,jb->zij", Q, X, Q.conj())
    elements[0] += np.eye(d) - Q @ Q.conj().T
    elements = _sym(elements)
    Yfull = Q @ Y @ Q.conj().T
    Yfull = (Yfull + Yfull.conj().T) / 2

    pc = verify_povm(states, elements)
    dc = verify_dual(states, Yfull)
    gap = pc.value - dc.trace
    return _classify(pc, dc, gap, Povm(elements), Yfull, info, tolerances)


def _classify(pc, dc, gap, povm, Y, info, tol: Tolerances) -> ExclusionResult:
    status = Status.INDETERMINATE
    msg = info.get("message", "")
    if gap > tol.gap:
        msg = f"duality gap {gap:.3e} above {tol.gap:g} ({msg})"
    elif pc.value <= tol.primal_threshold and pc.feasible(tol.feasibility):
        status = Status.ANTIDISTINGUISHABLE
    elif dc.trace >= tol.dual_threshold and dc.feasible(tol.feasibility):
        status = Status.NOT_ANTIDISTINGUISHABLE
    else:
        msg = (
            f"primal {pc.value:.3e} and dual {dc.trace:.3e} inside the "
            f"indeterminate band ({msg})"
        )
    return ExclusionResult(
        status=status,
        primal_value=pc.value,
        dual_value=dc.trace,
        duality_gap=gap,
        povm=povm,
        dual_certificate=Y,
        primal_check=pc,
        dual_check=dc,
        iterations=info.get("iterations", 0),
        message=msg,
        extra={"converged": info.get("converged", False)},
    )


def _basis_excludes(states: np.ndarray) -> bool:
    n, d = states.shape
    return n == d and bool(np.all(np.abs(np.diag(states)) <= 1e-12))


def antidistinguishing_povm(states, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Povm:
    """POVM whose outcome ``z`` never (within tolerance) occurs on state ``z``.

    When the computational basis already excludes every state (``rho_z``
    has no ``e_z`` component) its projectors are returned without solving.
    """
    states = _as_states(states)
    n, d = states.shape
    if _basis_excludes(states):
        return Povm(np.einsum("zi,zj->zij", np.eye(d), np.eye(d)).astype(np.complex128))
    res = exclusion_sdp(states, tolerances)
    if res.status is Status.NOT_ANTIDISTINGUISHABLE:
        raise NotAntidistinguishableError(
            f"states are not antidistinguishable (dual value {res.dual_value:.3e})"
        )
    if res.status is Status.INDETERMINATE:
        raise IndeterminateError(res)
    probs = res.primal_check.exclusion_probabilities
    if np.max(probs) > tolerances.primal_threshold:
        raise IndeterminateError(res)
    return res.povm


def is_antidistinguishable_triple(u, v, w, tolerances: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """Closed-form test for a triple, falling back to the SDP.

    The overlap criterion is only trusted in its sufficient direction; a
    failing triple is decided by :func:`exclusion_sdp`.
    """
    t = triple_overlaps(u, v, w)
    if cfs_criterion(t, tol=1e-12):
        return True
    res = exclusion_sdp(np.stack([as_vector(u), as_vector(v), as_vector(w)]), tolerances)
    if res.status is Status.INDETERMINATE:
        raise IndeterminateError(res)
    return res.antidistinguishable
