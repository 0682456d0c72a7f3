"""Closed-form Green's functions of compact and open quantum graphs.

Sign convention: ``(E + d^2/dx^2) G(x, x'; E) = delta(x - x')`` with the
outward derivative jump ``d/dx G`` across ``x'`` equal to one, so that the
free kernel on a line is ``exp(ik|x - x'|) / (2ik)``.

With source ``x'`` on bond ``e'`` the waves emitted towards the head and
the tail feed the incoming amplitudes

    s_{e'+} = exp(ik(l' - x')) / 2ik,   s_{e'-} = exp(ik x') / 2ik,

and all further scattering is summed by ``R = U (I - U)^{-1}``.  On a bond
``e`` the field is the direct term plus ``(R s)_{e+} exp(ik(x - l))`` and
``(R s)_{e-} exp(-ik x)``.  Open graphs use the blocks of ``U`` in the same
way, leads carrying outgoing waves ``exp(ik x)`` only.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GraphSpecError, PoleError
from .graph import Edge, GraphPoint, MetricGraph
from .qmap import quantum_map
from .scattering import (SCAR_TOL, detect_scar, regularized_internal, regularized_outgoing,
                         scattering_matrix)
from .spectrum import _newton

POLE_TOL = 1e-8


@dataclass(frozen=True)
class EnergyPoint:
    """``E = k**2`` with the branch ``Im k >= 0``."""

    E: complex
    k: complex

    @classmethod
    def from_energy(cls, E) -> "EnergyPoint":
        E = complex(E)
        if not E.real > 0:
            raise DomainError(f"energy {E!r} outside the positive spectrum (Re E > 0 required)")
        k = cmath.sqrt(E)
        if k.imag < 0:
            k = -k
        return cls(E, k)

    @classmethod
    def from_k(cls, k) -> "EnergyPoint":
        k = complex(k)
        if k.imag < 0:
            raise DomainError(f"wavenumber {k!r} has Im k < 0")
        return cls.from_energy(k * k)


def energy_point(E) -> EnergyPoint:
    return E if isinstance(E, EnergyPoint) else EnergyPoint.from_energy(E)


@dataclass(frozen=True)
class GreensValue:
    value: complex
    x: GraphPoint
    source: GraphPoint
    energy: EnergyPoint
    case: str
    regularized: bool = False


def _bond_source(e: Edge, xp: float, k: complex) -> tuple[complex, complex]:
    """Incoming amplitudes ``(s_{e+}, s_{e-})`` sent out by a unit source."""
    return (cmath.exp(1j * k * (e.length - xp)) / (2j * k),
            cmath.exp(1j * k * xp) / (2j * k))


def _direct(x: GraphPoint, xp: GraphPoint, k: complex) -> complex:
    if x.edge != xp.edge:
        return 0.0
    return cmath.exp(1j * k * abs(x.x - xp.x)) / (2j * k)


def _bond_field(e: Edge, x: float, k: complex, plus: complex, minus: complex) -> complex:
    """Field on bond `e` from incoming amplitudes ``(R s)_{e+}``, ``(R s)_{e-}``."""
    return plus * cmath.exp(1j * k * (x - e.length)) + minus * cmath.exp(-1j * k * x)


# --------------------------------------------------------------------------
# auxiliary graph and the coefficients of the excited edge

def auxiliary_graph(graph: MetricGraph, edge_id: str) -> tuple[MetricGraph, str, str]:
    """Cut bond `edge_id` out and attach a lead at each of its former ends.

    Returns ``(aux, tail_lead, head_lead)``.  The lead at the tail vertex
    takes the tail stub of the removed bond, the lead at the head vertex the
    head stub, so vertex conditions carry over unchanged.
    """
    cut = graph.edge(edge_id)
    if cut.is_lead:
        raise GraphSpecError(f"edge {edge_id!r} is a lead, not a bond")
    taken = set(graph.edge_map)
    tail_id, head_id = f"{edge_id}_T", f"{edge_id}_H"
    while tail_id in taken or head_id in taken:
        tail_id, head_id = tail_id + "_", head_id + "_"
    edges = []
    for e in graph.edges:
        if e.id == edge_id:
            edges += [Edge(tail_id, e.tail, None, math.inf), Edge(head_id, e.head, None, math.inf)]
        else:
            edges.append(e)
    return MetricGraph(graph.vertices, tuple(edges)), tail_id, head_id


def greens_coefficients(graph: MetricGraph, conditions, edge_id: str, xp: float, E,
                        form: str = "sigma") -> tuple[complex, complex]:
    """Amplitudes ``(a_T^in, a_H^in)`` arriving at the tail and head of `edge_id`.

    ``form="sigma"`` solves the 2x2 matching problem with the scattering
    matrix of the auxiliary graph; ``form="resolvent"`` reads them off
    ``(I - U)^{-1}`` of the compact graph.  Both give the same numbers.
    """
    ep = energy_point(E)
    k = ep.k
    e = graph.edge(edge_id)
    if e.is_lead:
        raise GraphSpecError(f"edge {edge_id!r} is a lead, not a bond")
    if not 0 < xp < e.length:
        raise GraphSpecError(f"source {xp!r} must lie strictly inside {edge_id!r}")
    s_plus, s_minus = _bond_source(e, xp, k)
    if form == "resolvent":
        snap = quantum_map(graph, conditions, k)
        s = np.zeros(graph.n_channels, dtype=complex)
        ip, im = graph.bond_index(edge_id, "+"), graph.bond_index(edge_id, "-")
        s[ip], s[im] = s_plus, s_minus
        a = np.linalg.solve(np.eye(len(s)) - snap.U, s)
        return complex(a[im]), complex(a[ip])
    if form != "sigma":
        raise ValueError(f"unknown form {form!r}")
    aux, tid, hid = auxiliary_graph(graph, edge_id)
    sig = scattering_matrix(aux, conditions, k).sigma
    it, ih = aux.lead_index(tid), aux.lead_index(hid)
    sig = sig[np.ix_([it, ih], [it, ih])]
    swap = np.array([[0, 1], [1, 0]])
    phase = cmath.exp(1j * k * e.length)
    a = np.linalg.solve(np.eye(2) - phase * swap @ sig, np.array([s_minus, s_plus]))
    return complex(a[0]), complex(a[1])


# --------------------------------------------------------------------------
# compact graphs

def _pole_guard(graph, conditions, k, U):
    xi = np.linalg.det(np.eye(len(U)) - U)
    if abs(xi) >= POLE_TOL:
        return

    def md(q):
        s = quantum_map(graph, conditions, q)
        return s.U, s.dU

    kn = _newton(md, k.real, 1e-12)
    kn = float(kn.real) if kn is not None else float(k.real)
    raise PoleError(f"E = {k.real ** 2!r} is an eigenvalue (|xi| = {abs(xi):.2e}); "
                    f"nearest k_n = {kn!r}", nearest_k=kn)


def greens_compact(graph: MetricGraph, conditions, x: GraphPoint, xp: GraphPoint, E) -> GreensValue:
    """Green's function of a compact graph.

    ``G = [delta_{ee'} exp(ik|x - x'|) + sum over s, s' of
    exp-factors * (U (I - U)^{-1})_{es, e's'}] / 2ik``.

    Raises `PoleError` at a real energy in the spectrum.
    """
    if not graph.is_compact:
        raise GraphSpecError("greens_compact needs a compact graph")
    ep = energy_point(E)
    k = ep.k
    x, xp = graph.locate(x), graph.locate(xp)
    e, f = graph.edge(x.edge), graph.edge(xp.edge)
    snap = quantum_map(graph, conditions, k)
    U = snap.U
    if ep.E.imag == 0:
        _pole_guard(graph, conditions, k, U)
    R = np.linalg.solve((np.eye(len(U)) - U).T, U.T).T
    sp, sm = _bond_source(f, xp.x, k)
    jp, jm = graph.bond_index(f.id, "+"), graph.bond_index(f.id, "-")
    rows = [graph.bond_index(e.id, "+"), graph.bond_index(e.id, "-")]
    amp = R[rows, jp] * sp + R[rows, jm] * sm
    val = _direct(x, xp, k) + _bond_field(e, x.x, k, amp[0], amp[1])
    return GreensValue(complex(val), x, xp, ep, "bond-bond")


# --------------------------------------------------------------------------
# open graphs

def _open_blocks(graph, conditions, k, need_rho, need_rho_out, scar_tol):
    snap = quantum_map(graph, conditions, k)
    nb = 2 * graph.n_bonds
    scar = None
    if k.imag == 0 and graph.n_bonds:
        scar = detect_scar(graph, conditions, k, scar_tol)
    rho = rho_out = None
    if scar is None:
        A = np.eye(nb) - snap.UBB
        if need_rho:
            rho = np.linalg.solve(A, snap.UBL)
        if need_rho_out:
            rho_out = np.linalg.solve(A.T, snap.ULB.T).T
    else:
        if need_rho:
            p_rho, q_rho = regularized_internal(graph, conditions, scar)
            rho = p_rho + q_rho
        if need_rho_out:
            rho_out = regularized_outgoing(graph, conditions, scar)
    return snap, scar, rho, rho_out


def greens_open(graph: MetricGraph, conditions, x: GraphPoint, xp: GraphPoint, E, *,
                scar_tol: float = SCAR_TOL) -> GreensValue:
    """Green's function of an open graph, by placement of ``x`` and ``x'``.

    ========== ==================================================================
    lead-lead  ``[delta exp(ik|x - x'|) + sigma_{ll'} exp(ik(x + x'))] / 2ik``
    lead-bond  ``exp(ikx) (U_LB (I - U_BB)^{-1} s)_l``
    bond-lead  ``rho`` column ``l'`` times ``exp(ikx')/2ik`` on bond ``e``
    bond-bond  as for compact graphs with ``U_BB (I - U_BB)^{-1}``
    ========== ==================================================================

    At a perfect scar (real k) the cases with a point on a lead use the
    regularized ``rho`` and ``U_LB (I - U_BB)^{-1}``.  Regularity of the
    mixed lead/bond cases at a scar is established numerically only (by
    comparison with two-sided limits), not proven.  Both points on bonds at
    a scar is a true pole and raises `PoleError`.
    """
    if graph.is_compact:
        raise GraphSpecError("greens_open needs a graph with leads")
    ep = energy_point(E)
    k = ep.k
    x, xp = graph.locate(x), graph.locate(xp)
    e, f = graph.edge(x.edge), graph.edge(xp.edge)
    case = f"{'lead' if e.is_lead else 'bond'}-{'lead' if f.is_lead else 'bond'}"
    direct = _direct(x, xp, k)

    if case == "bond-bond":
        snap, scar, _, _ = _open_blocks(graph, conditions, k, False, False, scar_tol)
        if scar is not None:
            raise PoleError(f"both points on bonds at the scar wavenumber {scar.k0!r}",
                            nearest_k=scar.k0)
        nb = 2 * graph.n_bonds
        UBB = snap.UBB
        R = np.linalg.solve((np.eye(nb) - UBB).T, UBB.T).T
        sp, sm = _bond_source(f, xp.x, k)
        jp, jm = graph.bond_index(f.id, "+"), graph.bond_index(f.id, "-")
        rows = [graph.bond_index(e.id, "+"), graph.bond_index(e.id, "-")]
        amp = R[rows, jp] * sp + R[rows, jm] * sm
        val = direct + _bond_field(e, x.x, k, amp[0], amp[1])
        return GreensValue(complex(val), x, xp, ep, case)

    if case == "lead-lead":
        snap, scar, rho, _ = _open_blocks(graph, conditions, k, True, False, scar_tol)
        sigma = snap.ULL + snap.ULB @ rho
        s = sigma[graph.lead_index(e.id), graph.lead_index(f.id)]
        val = direct + s * cmath.exp(1j * k * (x.x + xp.x)) / (2j * k)
        return GreensValue(complex(val), x, xp, ep, case, scar is not None)

    if case == "lead-bond":
        snap, scar, _, rho_out = _open_blocks(graph, conditions, k, False, True, scar_tol)
        sp, sm = _bond_source(f, xp.x, k)
        row = rho_out[graph.lead_index(e.id)]
        out = row[graph.bond_index(f.id, "+")] * sp + row[graph.bond_index(f.id, "-")] * sm
        val = out * cmath.exp(1j * k * x.x)
        return GreensValue(complex(val), x, xp, ep, case, scar is not None)

    snap, scar, rho, _ = _open_blocks(graph, conditions, k, True, False, scar_tol)
    col = rho[:, graph.lead_index(f.id)] * cmath.exp(1j * k * xp.x) / (2j * k)
    val = _bond_field(e, x.x, k, col[graph.bond_index(e.id, "+")], col[graph.bond_index(e.id, "-")])
    return GreensValue(complex(val), x, xp, ep, case, scar is not None)


def greens(graph: MetricGraph, conditions, x: GraphPoint, xp: GraphPoint, E) -> GreensValue:
    """Dispatch to `greens_compact` or `greens_open`."""
    if graph.is_compact:
        return greens_compact(graph, conditions, x, xp, E)
    return greens_open(graph, conditions, x, xp, E)
