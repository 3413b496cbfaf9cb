"""Finite metric graphs with exact rational edge lengths."""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple

from .errors import GraphValidationError
from .terms import as_fraction

__all__ = [
    "Edge",
    "HalfEdge",
    "EdgePoint",
    "QuantumGraph",
    "build_graph",
    "load_graph",
    "serialize",
    "locate",
    "validate",
    "parse_point",
    "decimal_string",
    "interval_graph",
    "star_graph",
    "path_graph",
    "cycle_graph",
]

INIT, TERM = 0, 1


class Edge(NamedTuple):
    id: str
    ends: tuple[str, str]
    length: Fraction

    @property
    def is_loop(self) -> bool:
        return self.ends[0] == self.ends[1]


class HalfEdge(NamedTuple):
    """One end of an edge: side 0 is the initial vertex, side 1 the terminal one."""

    edge: str
    side: int

    @property
    def opposite(self) -> "HalfEdge":
        return HalfEdge(self.edge, 1 - self.side)

    def label(self) -> str:
        return f"{self.edge}:{'init' if self.side == INIT else 'term'}"


@dataclass(frozen=True)
class EdgePoint:
    """Interior point of an edge, ``x`` measured from the initial vertex."""

    edge: str
    x: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", as_fraction(self.x))

    def __str__(self):
        return f"{self.edge}:{self.x}"


def parse_point(text: str) -> EdgePoint:
    """Parse ``"edge:decimal"``; the coordinate stays exact."""
    edge, sep, coord = str(text).rpartition(":")
    if not sep or not edge:
        raise ValueError(f"expected 'edge:coordinate', got {text!r}")
    return EdgePoint(edge, Fraction(coord))


@dataclass(frozen=True)
class QuantumGraph:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "_edge_index", {e.id: e for e in self.edges})
        incidence = defaultdict(list)
        for e in self.edges:
            for side in (INIT, TERM):
                incidence[e.ends[side]].append(HalfEdge(e.id, side))
        object.__setattr__(self, "_incidence", {v: tuple(hs) for v, hs in incidence.items()})

    def edge(self, edge_id: str) -> Edge:
        try:
            return self._edge_index[edge_id]
        except KeyError:
            raise KeyError(f"unknown edge {edge_id!r}") from None

    def half_edges(self, vertex: str) -> tuple[HalfEdge, ...]:
        """E_v as half-edges; a loop at v appears twice."""
        return self._incidence.get(vertex, ())

    def degree(self, vertex: str) -> int:
        return len(self.half_edges(vertex))

    @property
    def degrees(self) -> dict[str, int]:
        return {v: self.degree(v) for v in self.vertices}

    def vertex_of(self, h: HalfEdge) -> str:
        return self.edge(h.edge).ends[h.side]

    def length(self, h: HalfEdge | str) -> Fraction:
        return self.edge(h.edge if isinstance(h, HalfEdge) else h).length

    def all_half_edges(self) -> list[HalfEdge]:
        return [h for v in self.vertices for h in self.half_edges(v)]

    def distance_from_end(self, h: HalfEdge, p: EdgePoint) -> Fraction:
        """Distance along ``p.edge`` from the vertex end ``h`` of that edge."""
        if h.edge != p.edge:
            raise ValueError(f"{p} is not on edge {h.edge}")
        return p.x if h.side == INIT else self.edge(p.edge).length - p.x

    def check_point(self, p: EdgePoint) -> None:
        if p.edge not in self._edge_index:
            raise GraphValidationError(f"point {p} lies on unknown edge {p.edge!r}")
        length = self.edge(p.edge).length
        if not 0 < p.x < length:
            raise GraphValidationError(
                f"point {p} is not strictly inside edge {p.edge} (length {length})"
            )

    def is_interval(self) -> bool:
        return len(self.edges) == 1 and not self.edges[0].is_loop


def validate(g: QuantumGraph) -> list[str]:
    """Report-only invariant check; an empty list means valid."""
    problems = []
    seen = set()
    for v in g.vertices:
        if v in seen:
            problems.append(f"duplicate vertex id {v!r}")
        seen.add(v)
    edge_ids = set()
    for e in g.edges:
        if e.id in edge_ids:
            problems.append(f"duplicate edge id {e.id!r}")
        edge_ids.add(e.id)
        for end in e.ends:
            if end not in seen:
                problems.append(f"edge {e.id!r} has unknown endpoint {end!r}")
        if e.length <= 0:
            problems.append(f"edge {e.id!r} has nonpositive length {e.length}")
    for v in seen:
        if g.degree(v) < 1:
            problems.append(f"vertex {v!r} has degree 0")
    if seen and not problems:
        adjacency = defaultdict(set)
        for e in g.edges:
            adjacency[e.ends[0]].add(e.ends[1])
            adjacency[e.ends[1]].add(e.ends[0])
        start = g.vertices[0]
        reached = {start}
        stack = [start]
        while stack:
            for w in adjacency[stack.pop()]:
                if w not in reached:
                    reached.add(w)
                    stack.append(w)
        if reached != seen:
            problems.append(f"disconnected: {len(seen) - len(reached)} vertices unreachable "
                            f"from {start!r}")
    if not g.vertices:
        problems.append("graph has no vertices")
    return problems


def _parse_length(raw, edge_id):
    if isinstance(raw, float):
        raise GraphValidationError(f"edge {edge_id!r}: length must be a decimal string, not a float")
    try:
        return as_fraction(raw)
    except (TypeError, ValueError, ZeroDivisionError):
        raise GraphValidationError(f"edge {edge_id!r}: cannot parse length {raw!r}") from None


def build_graph(data: dict) -> QuantumGraph:
    """Build and validate a graph from its JSON-object form."""
    if not isinstance(data, dict):
        raise GraphValidationError("graph must be a JSON object")
    try:
        vertices = [str(v) for v in data["vertices"]]
        raw_edges = data["edges"]
    except (KeyError, TypeError):
        raise GraphValidationError("graph needs 'vertices' and 'edges' arrays") from None
    edges = []
    for i, item in enumerate(raw_edges):
        try:
            eid = str(item["id"])
            a, b = item["ends"]
        except (KeyError, TypeError, ValueError):
            raise GraphValidationError(f"edge #{i} needs 'id', two 'ends' and 'length'") from None
        edges.append(Edge(eid, (str(a), str(b)), _parse_length(item.get("length"), eid)))
    g = QuantumGraph(tuple(vertices), tuple(edges), dict(data.get("metadata", {})))
    problems = validate(g)
    if problems:
        raise GraphValidationError(problems)
    return g


def serialize(g: QuantumGraph) -> dict:
    out = {
        "vertices": list(g.vertices),
        "edges": [{"id": e.id, "ends": list(e.ends), "length": decimal_string(e.length)}
                  for e in g.edges],
    }
    if g.metadata:
        out["metadata"] = dict(g.metadata)
    return out


def decimal_string(q: Fraction) -> str:
    """Finite decimal string when the denominator allows it, else ``p/q``."""
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{q.numerator}/{q.denominator}"
    places = max(twos, fives)
    scaled = abs(q.numerator) * (10**places // q.denominator)
    sign = "-" if q < 0 else ""
    if places == 0:
        return f"{sign}{scaled}"
    digits = str(scaled).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def load_graph(path: str | Path) -> QuantumGraph:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphValidationError(f"{path}: invalid JSON ({exc.msg})") from None
    return build_graph(data)


def locate(g: QuantumGraph, p: EdgePoint) -> dict:
    """Distances from ``p`` to the endpoints of its edge.

    For a loop both distances belong to the same vertex and are returned as
    a two-entry list ``[x, L - x]``.
    """
    g.check_point(p)
    e = g.edge(p.edge)
    near, far = p.x, e.length - p.x
    if e.is_loop:
        return {e.ends[0]: [near, far]}
    return {e.ends[0]: near, e.ends[1]: far}


# --- small constructors used by tests and the CLI -------------------------

def interval_graph(length="1", a="v0", b="vL", edge="e1") -> QuantumGraph:
    return build_graph({"vertices": [a, b],
                        "edges": [{"id": edge, "ends": [a, b], "length": str(length)}]})


def star_graph(lengths, center="c") -> QuantumGraph:
    """Edges ``e1..en`` oriented center -> leaf ``l1..ln``."""
    lengths = list(lengths)
    leaves = [f"l{i + 1}" for i in range(len(lengths))]
    return build_graph({
        "vertices": [center, *leaves],
        "edges": [{"id": f"e{i + 1}", "ends": [center, leaf], "length": str(length)}
                  for i, (leaf, length) in enumerate(zip(leaves, lengths))],
    })


def path_graph(lengths) -> QuantumGraph:
    lengths = list(lengths)
    vs = [f"v{i}" for i in range(len(lengths) + 1)]
    return build_graph({
        "vertices": vs,
        "edges": [{"id": f"e{i + 1}", "ends": [vs[i], vs[i + 1]], "length": str(length)}
                  for i, length in enumerate(lengths)],
    })


def cycle_graph(lengths) -> QuantumGraph:
    lengths = list(lengths)
    n = len(lengths)
    vs = [f"v{i}" for i in range(n)]
    return build_graph({
        "vertices": vs,
        "edges": [{"id": f"e{i + 1}", "ends": [vs[i], vs[(i + 1) % n]], "length": str(length)}
                  for i, length in enumerate(lengths)],
    })
