"""Graph description files (JSON).

Layout::

    {
      "metadata": {"name": "lasso"},
      "vertices": [{"id": "v1", "condition": "neumann_kirchhoff"}],
      "edges": [
        {"id": "e1", "endpoints": ["v1"], "length": "lead"},
        {"id": "e2", "endpoints": ["v1", "v1"], "length": 1.0}
      ]
    }

A condition is either a kind name or an object ``{"kind": ...}``.  The
``general`` kind carries matrices ``A`` and ``B``, the ``constant`` kind a
matrix ``S``.  Matrix entries are real numbers or ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConditionError, GraphSpecError
from .graph import MetricGraph, build_graph
from .vertex import KINDS, VertexCondition, validate_condition

FIXTURES = ("interval", "loop", "lasso", "star3", "star3-equilateral")


def _complex(v, where):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in v):
        return complex(v[0], v[1])
    raise GraphSpecError(f"{where}: matrix entry {v!r} is neither a number nor [re, im]")


def _matrix(rows, where):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise GraphSpecError(f"{where}: expected a list of matrix rows")
    if len({len(r) for r in rows}) != 1:
        raise GraphSpecError(f"{where}: rows of unequal length")
    return np.array([[_complex(v, where) for v in r] for r in rows], dtype=complex)


def _encode_matrix(M):
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(M, dtype=complex)]


def parse_condition(obj, vertex: str) -> VertexCondition:
    if isinstance(obj, str):
        obj = {"kind": obj}
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConditionError("condition must be a kind name or an object with 'kind'", vertex)
    kind = obj["kind"]
    where = f"vertex {vertex!r}"
    if kind == "neumann_kirchhoff":
        return VertexCondition.neumann_kirchhoff()
    if kind == "dirichlet":
        return VertexCondition.dirichlet()
    if kind == "general":
        if "A" not in obj or "B" not in obj:
            raise ConditionError("general condition needs A and B", vertex)
        return VertexCondition.general(_matrix(obj["A"], where), _matrix(obj["B"], where))
    if kind == "constant":
        if "S" not in obj:
            raise ConditionError("constant condition needs S", vertex)
        return VertexCondition.constant(_matrix(obj["S"], where))
    raise ConditionError(f"unknown condition kind {kind!r} (expected one of {', '.join(KINDS)})",
                         vertex)


def encode_condition(cond: VertexCondition):
    if cond.kind == "general":
        return {"kind": "general", "A": _encode_matrix(cond.A), "B": _encode_matrix(cond.B)}
    if cond.kind == "constant":
        return {"kind": "constant", "S": _encode_matrix(cond.S)}
    return cond.kind


def graph_from_dict(doc) -> tuple[MetricGraph, dict]:
    """Build and validate a graph with its vertex conditions."""
    if not isinstance(doc, dict):
        raise GraphSpecError("graph file must contain a JSON object")
    for key in ("vertices", "edges"):
        if not isinstance(doc.get(key), list):
            raise GraphSpecError(f"graph file needs a list under {key!r}")
    vids, raw = [], {}
    for i, v in enumerate(doc["vertices"]):
        if not isinstance(v, dict) or "id" not in v:
            raise GraphSpecError(f"vertex entry {i} needs an 'id'")
        vid = str(v["id"])
        vids.append(vid)
        raw[vid] = v.get("condition", "neumann_kirchhoff")
    edges = []
    for i, e in enumerate(doc["edges"]):
        if not isinstance(e, dict) or "id" not in e:
            raise GraphSpecError(f"edge entry {i} needs an 'id'")
        if "endpoints" not in e or "length" not in e:
            raise GraphSpecError(f"edge {str(e['id'])!r} needs 'endpoints' and 'length'")
        edges.append(e)
    graph = build_graph(vids, edges)
    conds = {}
    for vid in vids:
        cond = parse_condition(raw[vid], vid)
        conds[vid] = validate_condition(cond, graph.degrees[vid], vid)
    return graph, conds


def parse_graph_file(text: str) -> tuple[MetricGraph, dict]:
    """Parse the JSON text of a graph file."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphSpecError(f"invalid JSON: {exc}") from None
    return graph_from_dict(doc)


def load_graph(path) -> tuple[MetricGraph, dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise GraphSpecError(f"cannot read {str(path)!r}: {exc.strerror}") from None
    return parse_graph_file(text)


def graph_to_dict(graph: MetricGraph, conditions, metadata=None) -> dict:
    doc = {}
    if metadata:
        doc["metadata"] = dict(metadata)
    doc["vertices"] = [{"id": v, "condition": encode_condition(conditions[v])}
                       for v in graph.vertices]
    doc["edges"] = [{"id": e.id, "endpoints": list(e.endpoints),
                     "length": "lead" if e.is_lead else e.length} for e in graph.edges]
    return doc


def emit_graph_file(graph: MetricGraph, conditions, metadata=None) -> str:
    """Serialise to JSON; floats use the shortest round-trip representation."""
    return json.dumps(graph_to_dict(graph, conditions, metadata), indent=2) + "\n"


def fixture_path(name: str):
    """Path of a bundled example graph (``"lasso"`` or ``"lasso.json"``)."""
    stem = name[:-5] if name.endswith(".json") else name
    if stem not in FIXTURES:
        raise GraphSpecError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return resources.files("qgraph") / "fixtures" / f"{stem}.json"


def load_fixture(name: str) -> tuple[MetricGraph, dict]:
    return parse_graph_file(fixture_path(name).read_text())
