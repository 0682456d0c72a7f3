"""Scattering matrix of open graphs and regularization at perfect scars.

Away from bound states in the continuum

    rho   = (I - U_BB)^{-1} U_BL,
    sigma = U_LL + U_LB rho.

At a wavenumber ``k0`` where ``U_BB`` has a (non-degenerate) unit
eigenvector ``b`` the inverse does not exist.  Splitting amplitudes with the
projectors ``P = b b^dagger`` and ``Q = I - P`` and inverting ``I - U_BB``
on the range of ``Q`` only (``Y_Q^{-1}``) gives finite ``P rho``, ``Q rho``
and ``sigma`` that coincide with the limits ``k -> k0``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as la

from .errors import DegeneracyError, DomainError, GraphSpecError, ScarPresentError
from .graph import MetricGraph, length_and_permutation
from .qmap import QuantumMapSnapshot, quantum_map

SCAR_TOL = 1e-8
NEAR_SCAR_TOL = 1e-4
DENOMINATOR_TOL = 1e-12


class NearScarWarning(UserWarning):
    """``U_BB`` has an eigenvalue close to one; sigma is ill-conditioned here."""


@dataclass(frozen=True, eq=False)
class ScarBasis:
    """Unit vector ``b`` with ``U_BB(k0) b = b`` and its projectors.

    ``gap`` is ``|lambda - 1|`` for the eigenvalue of ``U_BB`` that was
    matched.  ``residuals`` records ``|U_BB b - b|``, ``|U_LB b|`` and
    ``|b^dagger U_BL|`` at ``k0``.
    """

    k0: float
    b: np.ndarray
    gap: float
    residuals: dict

    @cached_property
    def P(self) -> np.ndarray:
        return np.outer(self.b, self.b.conj())

    @cached_property
    def Q(self) -> np.ndarray:
        return np.eye(len(self.b)) - self.P


@dataclass(frozen=True, eq=False)
class ScatteringResult:
    k: complex
    sigma: np.ndarray
    rho: np.ndarray
    regularized: bool = False
    scar: ScarBasis | None = None
    p_rho: np.ndarray | None = None
    q_rho: np.ndarray | None = None


def _require_open(graph):
    if graph.is_compact:
        raise GraphSpecError("scattering quantities need a graph with leads")


def _gaps(UBB):
    lam, vecs = np.linalg.eig(UBB)
    return np.abs(lam - 1), vecs


def yq_inverse(UBB: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``Y_Q^{-1}``: inverse of ``Q (I - U_BB) Q`` on the complement of `b`.

    The complement basis is taken from the Householder reflector that maps
    `b` onto the first coordinate axis (full QR of the column `b`).  The
    result satisfies ``Y^{-1} Y = Q = Y Y^{-1}`` and ``Y^{-1} P = 0 = P Y^{-1}``.
    """
    n = len(b)
    H, _ = la.qr(b.reshape(n, 1).astype(complex), mode="full")
    V = H[:, 1:]
    M = V.conj().T @ (np.eye(n) - UBB) @ V
    return V @ np.linalg.solve(M, V.conj().T)


def _scar_vector(UBB):
    n = len(UBB)
    _, sv, Vh = np.linalg.svd(np.eye(n) - UBB)
    b = Vh[-1].conj()
    b = b / np.linalg.norm(b)
    j = np.argmax(np.abs(b))
    return b * (abs(b[j]) / b[j]), sv


def _basis_from(snap: QuantumMapSnapshot, gap: float) -> ScarBasis:
    b, _ = _scar_vector(snap.UBB)
    res = {
        "U_BB b - b": float(np.linalg.norm(snap.UBB @ b - b)),
        "U_LB b": float(np.linalg.norm(snap.ULB @ b)),
        "b^dagger U_BL": float(np.linalg.norm(b.conj() @ snap.UBL)),
    }
    return ScarBasis(float(snap.k.real), b, float(gap), res)


def detect_scar(graph: MetricGraph, conditions, k, tol: float = SCAR_TOL) -> ScarBasis | None:
    """Return the scar basis if ``U_BB(k)`` has an eigenvalue within `tol` of one.

    Raises
    ------
    DegeneracyError
        More than one eigenvalue of ``U_BB`` lies within `tol` of one.
    """
    k = complex(k)
    if k.imag != 0 or k.real <= 0:
        raise ValueError("scar detection needs real k > 0")
    if graph.n_bonds == 0:
        return None
    snap = quantum_map(graph, conditions, k)
    gaps, _ = _gaps(snap.UBB)
    hits = np.flatnonzero(gaps <= tol)
    if len(hits) == 0:
        return None
    if len(hits) > 1:
        raise DegeneracyError(
            f"{len(hits)} scar states at k = {k.real!r}; degenerate scars are not supported",
            k=k.real, multiplicity=int(len(hits)))
    return _basis_from(snap, gaps[hits[0]])


def _solve(snap: QuantumMapSnapshot):
    nb = len(snap.UBB)
    rho = np.linalg.solve(np.eye(nb) - snap.UBB, snap.UBL)
    sigma = snap.ULL + snap.ULB @ rho
    return sigma, rho


def _check_no_scar(graph, conditions, snap, scar_tol):
    if snap.k.imag != 0 or graph.n_bonds == 0:
        return
    gaps, _ = _gaps(snap.UBB)
    if gaps.min() <= scar_tol:
        scar = detect_scar(graph, conditions, snap.k, scar_tol)
        raise ScarPresentError(
            f"perfect scar at k = {snap.k.real!r} makes I - U_BB singular", scar)


def scattering_matrix(graph: MetricGraph, conditions, k, *,
                      scar_tol: float = SCAR_TOL) -> ScatteringResult:
    """``sigma(k) = U_LL + U_LB (I - U_BB)^{-1} U_BL``.

    Raises `ScarPresentError` (carrying the `ScarBasis`) at a perfect scar;
    use `regularized_scattering` or `evaluate_scattering` there.
    """
    _require_open(graph)
    snap = quantum_map(graph, conditions, k)
    _check_no_scar(graph, conditions, snap, scar_tol)
    sigma, rho = _solve(snap)
    return ScatteringResult(snap.k, sigma, rho)


def internal_amplitudes(graph: MetricGraph, conditions, k, *,
                        scar_tol: float = SCAR_TOL) -> ScatteringResult:
    """``rho(k) = (I - U_BB)^{-1} U_BL``; the same solve also yields sigma."""
    return scattering_matrix(graph, conditions, k, scar_tol=scar_tol)


# --------------------------------------------------------------------------
# regularized evaluation

def _p_rho_simplified(snap, scar, Y):
    """``P rho(k0)`` for k-independent vertex matrices."""
    ell = snap.lengths
    b = scar.b
    num = (ell * b).conj() @ (snap.UBL + snap.UBB @ Y @ snap.UBL)
    den = float(np.real(b.conj() @ (ell * b)))
    return -np.outer(b, num) / den


def _p_rho_full(graph, snap, scar, Y):
    """``P rho(k0)`` when vertex matrices depend on k (self-adjoint (A, B) form)."""
    k0 = snap.k
    ell = snap.lengths
    _, Pi = length_and_permutation(graph)
    L = np.diag(ell)
    ep, em = np.diag(np.exp(1j * k0 * ell)), np.diag(np.exp(-1j * k0 * ell))
    UBB, UBL, b = snap.UBB, snap.UBL, scar.b
    inner = (Pi @ em) / 2j - k0 * L - (k0 * L @ UBB + Pi @ (ep - em @ UBB) / 2j) @ Y
    den = np.real(b.conj() @ (k0 * L + np.diag(np.sin(k0 * ell)) @ Pi) @ b)
    _check_denominator(den)
    return scar.P @ inner @ UBL / den


def p_rho_limit(UBB, UBL, dUBB, dUBL, b, Y):
    """``lim_{k->k0} P rho(k)`` from first derivatives of the blocks.

        P rho(k0) = -P [U_BL' + U_BB' Y_Q^{-1} U_BL] / (b^dagger U_BB' b)

    Valid for any mix of vertex conditions.
    """
    den = b.conj() @ dUBB @ b
    _check_denominator(abs(den))
    return -np.outer(b, b.conj() @ (dUBL + dUBB @ Y @ UBL)) / den


def _check_denominator(den):
    if abs(den) < DENOMINATOR_TOL:
        raise DomainError(f"scar normalisation {den!r} vanishes; input is inconsistent")


def regularized_internal(graph: MetricGraph, conditions, scar: ScarBasis):
    """Finite ``(P rho(k0), Q rho(k0))`` at a perfect scar.

    k-independent conditions use the simplified expression in the bond
    lengths; self-adjoint k-dependent conditions use the full expression with
    the direction swap and the bond phases.  A mix of prescribed constant
    matrices and k-dependent ones falls back to `p_rho_limit`.
    """
    _require_open(graph)
    snap = quantum_map(graph, conditions, scar.k0)
    Y = yq_inverse(snap.UBB, scar.b)
    kinds = {conditions[v].kind for v in graph.vertices}
    if "general" not in kinds:
        den = np.real(scar.b.conj() @ (snap.lengths * scar.b))
        _check_denominator(den)
        p_rho = _p_rho_simplified(snap, scar, Y)
    elif "constant" not in kinds:
        p_rho = _p_rho_full(graph, snap, scar, Y)
    else:
        dU, nb = snap.dU, 2 * graph.n_bonds
        p_rho = p_rho_limit(snap.UBB, snap.UBL, dU[:nb, :nb], dU[:nb, nb:], scar.b, Y)
    q_rho = Y @ snap.UBB @ p_rho + Y @ snap.UBL
    return p_rho, q_rho


def regularized_scattering(graph: MetricGraph, conditions, scar: ScarBasis) -> ScatteringResult:
    """``sigma(k0) = U_LL + U_LB Y_Q^{-1} U_BL`` together with ``rho = P rho + Q rho``."""
    _require_open(graph)
    snap = quantum_map(graph, conditions, scar.k0)
    Y = yq_inverse(snap.UBB, scar.b)
    sigma = snap.ULL + snap.ULB @ Y @ snap.UBL
    p_rho, q_rho = regularized_internal(graph, conditions, scar)
    return ScatteringResult(snap.k, sigma, p_rho + q_rho, True, scar, p_rho, q_rho)


def projected_solve(UBB, UBL, b):
    """Exact ``(P rho, Q rho)`` at any k for a unit vector `b`.

    Uses the block elimination

        P rho = P (I + U_BB Y) U_BL / b^dagger [I - U_BB - U_BB Y U_BB] b,
        Q rho = Y U_BB P rho + Y U_BL,

    which stays finite when ``I - U_BB`` is nearly singular along `b`.
    """
    Y = yq_inverse(UBB, b)
    n = len(b)
    den = b.conj() @ (np.eye(n) - UBB - UBB @ Y @ UBB) @ b
    p_rho = np.outer(b, b.conj() @ (UBL + UBB @ Y @ UBL)) / den
    q_rho = Y @ UBB @ p_rho + Y @ UBL
    return p_rho, q_rho


def evaluate_scattering(graph: MetricGraph, conditions, k, *, scar_tol: float = SCAR_TOL,
                        near_tol: float = NEAR_SCAR_TOL) -> ScatteringResult:
    """sigma and rho at any k, regularizing at scars automatically.

    For ``scar_tol < |lambda - 1| <= near_tol`` the projected system is used
    and a `NearScarWarning` is issued.
    """
    _require_open(graph)
    snap = quantum_map(graph, conditions, k)
    if snap.k.imag != 0 or graph.n_bonds == 0:
        sigma, rho = _solve(snap)
        return ScatteringResult(snap.k, sigma, rho)
    gaps, _ = _gaps(snap.UBB)
    gap = gaps.min()
    if gap <= scar_tol:
        return regularized_scattering(graph, conditions, detect_scar(graph, conditions, k, scar_tol))
    if gap <= near_tol:
        warnings.warn(f"U_BB eigenvalue within {gap:.2e} of one at k = {snap.k.real!r}",
                      NearScarWarning, stacklevel=2)
        if int(np.sum(gaps <= near_tol)) > 1:
            sigma, rho = _solve(snap)
            return ScatteringResult(snap.k, sigma, rho)
        basis = _basis_from(snap, gap)
        p_rho, q_rho = projected_solve(snap.UBB, snap.UBL, basis.b)
        rho = p_rho + q_rho
        return ScatteringResult(snap.k, snap.ULL + snap.ULB @ rho, rho, True, basis, p_rho, q_rho)
    sigma, rho = _solve(snap)
    return ScatteringResult(snap.k, sigma, rho)


def regularized_outgoing(graph: MetricGraph, conditions, scar: ScarBasis) -> np.ndarray:
    """Finite value of ``U_LB (I - U_BB)^{-1}`` at a perfect scar.

    This is the transpose of the internal amplitude problem for the
    transposed blocks: ``U_BB^T`` has the unit eigenvector ``conj(b)`` and
    ``U_BL`` is replaced by ``U_LB^T``, so the same limit applies.
    """
    snap = quantum_map(graph, conditions, scar.k0)
    nb = 2 * graph.n_bonds
    bt = scar.b.conj()
    UBBt, ULBt = snap.UBB.T, snap.ULB.T
    Y = yq_inverse(UBBt, bt)
    dU = snap.dU
    p_rho = p_rho_limit(UBBt, ULBt, dU[:nb, :nb].T, dU[nb:, :nb].T, bt, Y)
    q_rho = Y @ UBBt @ p_rho + Y @ ULBt
    return (p_rho + q_rho).T
