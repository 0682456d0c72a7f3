"""Independent reference evaluations of Green's functions.

`path_sum_greens` truncates the Neumann series of the resolvent, which is a
sum over all trajectories with at most N scattering events.  It converges
only for ``Im k > 0``.

`auxiliary_limit_greens` replaces each lead of an open graph by a long bond
of length ``Lambda`` with a dangling vertex and evaluates the compact
closed form.  As ``Lambda`` grows the result approaches the open-graph
Green's function, independently of the dangling condition.
"""

from __future__ import annotations

import cmath

import numpy as np

from .errors import GraphSpecError, SeriesDivergenceError
from .graph import Edge, GraphPoint, MetricGraph
from .greens import GreensValue, _bond_field, _bond_source, _direct, energy_point, greens_compact
from .qmap import quantum_map
from .vertex import VertexCondition


def _power_sum(M, first, last):
    """``sum_{n=first}^{last} M^n`` by a running product."""
    n = len(M)
    term = np.eye(n, dtype=complex)
    total = np.zeros((n, n), dtype=complex)
    for p in range(last + 1):
        if p >= first:
            total += term
        term = term @ M
    return total


def path_sum_greens(graph: MetricGraph, conditions, x: GraphPoint, xp: GraphPoint, E,
                    N: int) -> GreensValue:
    """Green's function with every resolvent replaced by its N-th partial sum.

    Compact graphs use ``sum_{n=1}^N U^n`` in place of ``U (I - U)^{-1}``.
    Open graphs use ``sum_{n=0}^N U_BB^n`` for ``(I - U_BB)^{-1}`` in the
    lead cases and ``sum_{n=1}^N U_BB^n`` in the bond-bond case.

    Raises
    ------
    SeriesDivergenceError
        If ``Im k <= 0``.
    """
    if N < 0:
        raise ValueError("truncation order must be non-negative")
    ep = energy_point(E)
    k = ep.k
    if k.imag <= 0:
        raise SeriesDivergenceError("the path sum converges only for Im k > 0")
    x, xp = graph.locate(x), graph.locate(xp)
    e, f = graph.edge(x.edge), graph.edge(xp.edge)
    snap = quantum_map(graph, conditions, k)
    direct = _direct(x, xp, k)
    case = f"{'lead' if e.is_lead else 'bond'}-{'lead' if f.is_lead else 'bond'}"

    if case == "bond-bond":
        R = _power_sum(snap.U if graph.is_compact else snap.UBB, 1, N)
        sp, sm = _bond_source(f, xp.x, k)
        jp, jm = graph.bond_index(f.id, "+"), graph.bond_index(f.id, "-")
        rows = [graph.bond_index(e.id, "+"), graph.bond_index(e.id, "-")]
        amp = R[rows, jp] * sp + R[rows, jm] * sm
        return GreensValue(complex(direct + _bond_field(e, x.x, k, amp[0], amp[1])), x, xp, ep, case)

    S = _power_sum(snap.UBB, 0, N)
    if case == "lead-lead":
        sigma = snap.ULL + snap.ULB @ S @ snap.UBL
        s = sigma[graph.lead_index(e.id), graph.lead_index(f.id)]
        val = direct + s * cmath.exp(1j * k * (x.x + xp.x)) / (2j * k)
    elif case == "lead-bond":
        row = (snap.ULB @ S)[graph.lead_index(e.id)]
        sp, sm = _bond_source(f, xp.x, k)
        out = row[graph.bond_index(f.id, "+")] * sp + row[graph.bond_index(f.id, "-")] * sm
        val = out * cmath.exp(1j * k * x.x)
    else:
        col = (S @ snap.UBL)[:, graph.lead_index(f.id)] * cmath.exp(1j * k * xp.x) / (2j * k)
        val = _bond_field(e, x.x, k, col[graph.bond_index(e.id, "+")],
                          col[graph.bond_index(e.id, "-")])
    return GreensValue(complex(val), x, xp, ep, case)


def path_sum_envelope(graph: MetricGraph, conditions, E, N: int) -> float:
    """Geometric tail bound ``|M|^{N+1} / (1 - |M|) / 2|k|``.

    ``M`` is ``U`` for compact graphs and ``U_BB`` for open ones (spectral
    norm).  It bounds the truncation error of lead-lead values.
    """
    k = energy_point(E).k
    snap = quantum_map(graph, conditions, k)
    M = snap.U if graph.is_compact else snap.UBB
    r = np.linalg.norm(M, 2)
    if r >= 1:
        return float("inf")
    return float(r ** (N + 1) / (1 - r) / (2 * abs(k)))


DANGLING = {
    "dirichlet": VertexCondition.dirichlet,
    "neumann": VertexCondition.neumann_kirchhoff,
}


def truncate_leads(graph: MetricGraph, conditions, Lambda: float, dangling: str = "dirichlet"):
    """Compact graph with each lead replaced by a bond of length `Lambda`.

    The new bond keeps the lead's coordinate (``x = 0`` at the attachment
    vertex) and ends in a new degree-one vertex carrying the `dangling`
    condition (``"dirichlet"`` or ``"neumann"``).
    """
    if dangling not in DANGLING:
        raise ValueError(f"dangling condition must be one of {sorted(DANGLING)}")
    vertices = list(graph.vertices)
    conds = dict(conditions)
    edges = []
    for e in graph.edges:
        if not e.is_lead:
            edges.append(e)
            continue
        end = f"{e.id}_end"
        while end in vertices:
            end += "_"
        vertices.append(end)
        conds[end] = DANGLING[dangling]()
        edges.append(Edge(e.id, e.tail, end, float(Lambda)))
    return MetricGraph(tuple(vertices), tuple(edges)), conds


def auxiliary_limit_greens(graph: MetricGraph, conditions, x: GraphPoint, xp: GraphPoint, E,
                           Lambda: float, dangling: str = "dirichlet") -> GreensValue:
    """Open-graph Green's function approximated on leads truncated at `Lambda`.

    The error decays like ``exp(-2 Im(k) Lambda)``.
    """
    if graph.is_compact:
        raise GraphSpecError("auxiliary limit needs a graph with leads")
    x, xp = graph.locate(x), graph.locate(xp)
    for p in (x, xp):
        if graph.edge(p.edge).is_lead and not p.x < Lambda:
            raise GraphSpecError(f"lead length {Lambda!r} does not exceed coordinate {p.x!r}")
    g, c = truncate_leads(graph, conditions, Lambda, dangling)
    return greens_compact(g, c, x, xp, E)
