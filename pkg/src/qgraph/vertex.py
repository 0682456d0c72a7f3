"""Vertex matching conditions and vertex scattering matrices.

A self-adjoint condition at a vertex of degree ``d`` is a pair ``(A, B)`` of
``d x d`` matrices acting on the values and outward derivatives of the wave
function at the vertex stubs.  It is self-adjoint iff ``(A, B)`` has rank
``d`` and ``A B^dagger`` is Hermitian.  The vertex scattering matrix is

    Sigma(k) = -(A + i k B)^{-1} (A - i k B).

Neumann-Kirchhoff and Dirichlet conditions are k-independent and handled
without inversions.  A ``constant`` condition prescribes a k-independent
unitary matrix directly; it is not derived from an ``(A, B)`` pair and is
flagged as unvalidated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditionError

HERMITIAN_ATOL = 1e-12
RANK_RTOL = 1e-10
UNITARY_ATOL = 1e-10

KINDS = ("neumann_kirchhoff", "dirichlet", "general", "constant")


@dataclass(frozen=True, eq=False)
class VertexCondition:
    """Matching condition at one vertex.

    Use the constructors `neumann_kirchhoff`, `dirichlet`, `general` and
    `constant` rather than instantiating directly.
    """

    kind: str
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    S: np.ndarray | None = None

    @classmethod
    def neumann_kirchhoff(cls):
        return cls("neumann_kirchhoff")

    @classmethod
    def dirichlet(cls):
        return cls("dirichlet")

    @classmethod
    def general(cls, A, B):
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        B = np.atleast_2d(np.asarray(B, dtype=complex))
        return cls("general", A=A, B=B)

    @classmethod
    def constant(cls, S):
        return cls("constant", S=np.atleast_2d(np.asarray(S, dtype=complex)))

    @property
    def k_independent(self) -> bool:
        return self.kind != "general"

    @property
    def validated(self) -> bool:
        """False for prescribed matrices that do not come from an (A, B) pair."""
        return self.kind != "constant"

    def as_ab(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        """Return an equivalent ``(A, B)`` pair (not available for ``constant``)."""
        if self.kind == "general":
            return self.A, self.B
        if self.kind == "dirichlet":
            return np.eye(d, dtype=complex), np.zeros((d, d), dtype=complex)
        if self.kind == "neumann_kirchhoff":
            return nk_matrices(d)
        raise ConditionError("a constant scattering matrix has no (A, B) form")

    def __repr__(self):
        return f"VertexCondition({self.kind!r})"


def nk_matrices(d: int) -> tuple[np.ndarray, np.ndarray]:
    """``(A, B)`` realising Neumann-Kirchhoff at degree `d`.

    Rows ``0..d-2`` of ``A`` impose continuity ``psi_i - psi_{i+1} = 0``; the
    last row of ``B`` imposes the vanishing sum of outward derivatives.
    """
    A = np.zeros((d, d), dtype=complex)
    B = np.zeros((d, d), dtype=complex)
    for i in range(d - 1):
        A[i, i], A[i, i + 1] = 1, -1
    B[d - 1, :] = 1
    return A, B


def validate_condition(cond: VertexCondition, d: int, vertex=None) -> VertexCondition:
    """Check that `cond` is a valid condition at a vertex of degree `d`.

    Raises
    ------
    ConditionError
        On shape mismatch, rank deficiency of ``(A, B)``, a non-Hermitian
        ``A B^dagger``, or a non-unitary prescribed matrix.
    """
    if cond.kind not in KINDS:
        raise ConditionError(f"unknown condition kind {cond.kind!r}", vertex)
    if d < 1:
        raise ConditionError("vertex has no incident edges", vertex)
    if cond.kind == "general":
        A, B = cond.A, cond.B
        if A.shape != (d, d) or B.shape != (d, d):
            raise ConditionError(
                f"A and B must be {d}x{d}, got {A.shape} and {B.shape}", vertex)
        sv = np.linalg.svd(np.hstack([A, B]), compute_uv=False)
        if sv[0] == 0 or np.sum(sv > RANK_RTOL * sv[0]) < d:
            raise ConditionError(f"(A, B) does not have full rank {d}", vertex)
        AB = A @ B.conj().T
        if np.max(np.abs(AB - AB.conj().T)) > HERMITIAN_ATOL:
            raise ConditionError("A B^dagger is not Hermitian", vertex)
    elif cond.kind == "constant":
        S = cond.S
        if S.shape != (d, d):
            raise ConditionError(f"scattering matrix must be {d}x{d}, got {S.shape}", vertex)
        if np.max(np.abs(S.conj().T @ S - np.eye(d))) > UNITARY_ATOL:
            raise ConditionError("prescribed scattering matrix is not unitary", vertex)
    return cond


def vertex_sigma(cond: VertexCondition, k, d: int) -> np.ndarray:
    """Vertex scattering matrix ``Sigma(k)`` for a vertex of degree `d`."""
    if cond.kind == "neumann_kirchhoff":
        return np.full((d, d), 2.0 / d, dtype=complex) - np.eye(d)
    if cond.kind == "dirichlet":
        return -np.eye(d, dtype=complex)
    if cond.kind == "constant":
        return cond.S.copy()
    if k == 0:
        raise ConditionError("vertex scattering matrix requested at k = 0")
    A, B = cond.A, cond.B
    lhs = A + 1j * k * B
    if np.linalg.cond(lhs) > 1e13:
        raise ConditionError(f"A + ikB is singular at k = {k!r}")
    return -np.linalg.solve(lhs, A - 1j * k * B)


def vertex_sigma_derivative(cond: VertexCondition, k, d: int) -> np.ndarray:
    """``dSigma/dk = (I - Sigma^2) / 2k``; zero for k-independent conditions."""
    if cond.k_independent:
        return np.zeros((d, d), dtype=complex)
    S = vertex_sigma(cond, k, d)
    return (np.eye(d) - S @ S) / (2 * k)
