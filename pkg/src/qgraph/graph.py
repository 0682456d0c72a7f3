"""Metric graph data model.

A graph is a list of vertices and a list of edges.  Bonds have two endpoints
and a finite length; leads have a single endpoint (where ``x = 0``) and
infinite length.  Every bond ``e`` carries a coordinate ``x_e`` running from
its *tail* vertex (``x_e = 0``) to its *head* vertex (``x_e = l_e``).

Directed bonds and amplitude channels
-------------------------------------
Each bond contributes two directed bonds, ``e+`` (travelling towards the
head) and ``e-`` (travelling towards the tail).  The channel index of a
directed bond labels the amplitude arriving at a vertex along it, so ``e+``
is incoming at the head and ``e-`` is incoming at the tail.  Channels are
laid out as ``e1+, e1-, e2+, e2-, ...`` over bonds in declaration order,
followed by one channel per lead in declaration order.

Vertex stubs
------------
Matrices attached to a vertex (vertex conditions, vertex scattering
matrices) act on the vertex's *stubs*: the edge ends meeting at it, ordered
by edge declaration order with the tail end of an edge before its head end.
A loop therefore occupies two consecutive stubs at its vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import GraphSpecError

LEAD = math.inf


@dataclass(frozen=True)
class Edge:
    """An edge record.

    ``head`` is ``None`` exactly when the edge is a lead.
    """

    id: str
    tail: str
    head: str | None
    length: float

    @property
    def is_lead(self) -> bool:
        return self.head is None

    @property
    def endpoints(self) -> tuple[str, ...]:
        return (self.tail,) if self.head is None else (self.tail, self.head)


@dataclass(frozen=True)
class GraphPoint:
    """A point ``(edge, x)`` on a metric graph."""

    edge: str
    x: float

    @classmethod
    def parse(cls, text: str) -> "GraphPoint":
        """Parse ``"EDGE:X"``."""
        edge, sep, x = text.rpartition(":")
        if not sep or not edge:
            raise GraphSpecError(f"point {text!r} is not of the form EDGE:X")
        try:
            return cls(edge, float(x))
        except ValueError:
            raise GraphSpecError(f"point {text!r} has a non-numeric coordinate") from None


@dataclass(frozen=True)
class Stub:
    """One edge end at a vertex.

    ``incoming`` and ``outgoing`` are channel indices of the amplitudes
    arriving at and leaving the vertex through this edge end.
    """

    edge: str
    end: str  # "tail", "head" or "lead"
    incoming: int
    outgoing: int


@dataclass(frozen=True, eq=False)
class MetricGraph:
    """Immutable metric graph.  Build instances with `build_graph`."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    @cached_property
    def bonds(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if not e.is_lead)

    @cached_property
    def leads(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.is_lead)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    @property
    def n_leads(self) -> int:
        return len(self.leads)

    @property
    def n_channels(self) -> int:
        return 2 * self.n_bonds + self.n_leads

    @property
    def is_compact(self) -> bool:
        return self.n_leads == 0

    @cached_property
    def edge_map(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    def edge(self, edge_id: str) -> Edge:
        try:
            return self.edge_map[edge_id]
        except KeyError:
            raise GraphSpecError(f"unknown edge {edge_id!r}") from None

    @cached_property
    def directed_bond_order(self) -> tuple[tuple[str, str], ...]:
        """Channel labels: ``(bond, "+")``/``(bond, "-")`` pairs, then ``(lead, "")``."""
        labels = [(e.id, s) for e in self.bonds for s in ("+", "-")]
        labels += [(e.id, "") for e in self.leads]
        return tuple(labels)

    @cached_property
    def _channel_index(self) -> dict[tuple[str, str], int]:
        return {lab: i for i, lab in enumerate(self.directed_bond_order)}

    def bond_index(self, edge_id: str, sign: str) -> int:
        """Channel index of directed bond ``edge_id`` with ``sign`` in ``{"+", "-"}``."""
        try:
            return self._channel_index[(edge_id, sign)]
        except KeyError:
            raise GraphSpecError(f"{edge_id!r} is not a bond") from None

    def lead_index(self, edge_id: str) -> int:
        """Position of a lead among the leads (0-based, not a channel index)."""
        try:
            return self._channel_index[(edge_id, "")] - 2 * self.n_bonds
        except KeyError:
            raise GraphSpecError(f"{edge_id!r} is not a lead") from None

    @cached_property
    def stubs(self) -> dict[str, tuple[Stub, ...]]:
        out: dict[str, list[Stub]] = {v: [] for v in self.vertices}
        for e in self.edges:
            if e.is_lead:
                c = self._channel_index[(e.id, "")]
                out[e.tail].append(Stub(e.id, "lead", c, c))
            else:
                plus = self._channel_index[(e.id, "+")]
                minus = self._channel_index[(e.id, "-")]
                out[e.tail].append(Stub(e.id, "tail", minus, plus))
                out[e.head].append(Stub(e.id, "head", plus, minus))
        return {v: tuple(s) for v, s in out.items()}

    @cached_property
    def degrees(self) -> dict[str, int]:
        return {v: len(s) for v, s in self.stubs.items()}

    @cached_property
    def total_length(self) -> float:
        return float(sum(e.length for e in self.bonds))

    @cached_property
    def bond_lengths(self) -> np.ndarray:
        """Diagonal of the length matrix, one entry per directed bond."""
        return np.repeat([e.length for e in self.bonds], 2).astype(float)

    def locate(self, point: GraphPoint) -> GraphPoint:
        """Check that `point` lies on the graph and return it."""
        edge = self.edge(point.edge)
        x = float(point.x)
        if not math.isfinite(x) or x < 0 or x > edge.length:
            upper = "inf" if edge.is_lead else repr(edge.length)
            raise GraphSpecError(
                f"coordinate {point.x!r} outside [0, {upper}] on edge {edge.id!r}")
        return GraphPoint(edge.id, x)


def build_graph(vertices: Iterable[str],
                edges: Iterable[Mapping | Sequence]) -> MetricGraph:
    """Validate a structural description and return a `MetricGraph`.

    Parameters
    ----------
    vertices : iterable of str
        Vertex ids.
    edges : iterable
        Each edge is either a mapping with keys ``id``, ``endpoints`` and
        ``length`` or a tuple ``(id, endpoints, length)``.  A lead has a
        single endpoint and ``length`` equal to ``"lead"``, ``None`` or
        ``math.inf``; a bond lists ``(tail, head)``.

    Examples
    --------
    >>> g = build_graph(["v1"], [("e1", ["v1"], "lead"), ("e2", ["v1", "v1"], 1.0)])
    >>> g.n_bonds, g.n_leads, g.degrees["v1"]
    (1, 1, 3)
    """
    vids = tuple(str(v) for v in vertices)
    if len(set(vids)) != len(vids):
        raise GraphSpecError("duplicate vertex id")
    known = set(vids)

    records = []
    for item in edges:
        if isinstance(item, Mapping):
            eid, ends, length = item.get("id"), item.get("endpoints"), item.get("length")
        else:
            eid, ends, length = item
        eid = str(eid)
        ends = [str(v) for v in (ends or ())]
        for v in ends:
            if v not in known:
                raise GraphSpecError(f"edge {eid!r} references unknown vertex {v!r}")
        lead = length is None or length == "lead" or length == math.inf
        if lead:
            if len(ends) != 1:
                raise GraphSpecError(f"lead {eid!r} must have exactly one endpoint")
            records.append(Edge(eid, ends[0], None, LEAD))
            continue
        if len(ends) != 2:
            raise GraphSpecError(f"bond {eid!r} must have exactly two endpoints")
        try:
            length = float(length)
        except (TypeError, ValueError):
            raise GraphSpecError(f"edge {eid!r} has non-numeric length {length!r}") from None
        if not math.isfinite(length) or length <= 0:
            raise GraphSpecError(f"edge {eid!r} has non-positive length {length!r}")
        records.append(Edge(eid, ends[0], ends[1], length))

    ids = [e.id for e in records]
    if len(set(ids)) != len(ids):
        raise GraphSpecError("duplicate edge id")
    return MetricGraph(vids, tuple(records))


def length_and_permutation(graph: MetricGraph) -> tuple[np.ndarray, np.ndarray]:
    """Length matrix ``L`` and direction swap ``Pi`` over directed bonds."""
    n = 2 * graph.n_bonds
    L = np.diag(graph.bond_lengths)
    Pi = np.zeros((n, n))
    for j in range(graph.n_bonds):
        Pi[2 * j, 2 * j + 1] = Pi[2 * j + 1, 2 * j] = 1.0
    return L, Pi


def locate(graph: MetricGraph, point: GraphPoint) -> GraphPoint:
    return graph.locate(point)
