"""Carrier graphs developed into H^3.

A :class:`DevelopedCarrierGraph` stores one lift per vertex and one group
element per directed edge. Edge ``(s, d)`` with label ``L`` is realized as
the geodesic from ``positions[s]`` to ``L . positions[d]``; the reversed
edge carries ``L^-1``. This determines the map to the quotient manifold up
to free homotopy, with geodesic edges parameterized by arclength.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .hyp3 import (
    GeometryError,
    Isometry,
    Point3,
    TOL,
    _angle_between,
    apply_isometry,
    dist,
    tangent_vector,
)
from .kleinian import (
    GroupElement,
    GroupPresentation,
    Word,
    eval_word,
    reduced_words,
)

COLLAPSE_LENGTH = 1e-6
POSITION_TOL = 1e-6
TRIVALENT_ANGLE = 2.0 * math.pi / 3.0


@dataclass(frozen=True)
class GraphCombinatorics:
    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(s), int(d)) for s, d in self.edges))
        for s, d in self.edges:
            if not (0 <= s < self.vertex_count and 0 <= d < self.vertex_count):
                raise GeometryError(f"edge {(s, d)} references a missing vertex")
        if not self.connected:
            raise GeometryError("graph is not connected")

    @property
    def connected(self) -> bool:
        if self.vertex_count == 0:
            return False
        seen = {0}
        stack = [0]
        adj = self.adjacency()
        while stack:
            v = stack.pop()
            for _, w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.vertex_count

    def adjacency(self) -> list[list[tuple[int, int]]]:
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.vertex_count)]
        for i, (s, d) in enumerate(self.edges):
            adj[s].append((i, d))
            if s != d:
                adj[d].append((i, s))
        return adj

    def valence(self, v: int) -> int:
        return sum((s == v) + (d == v) for s, d in self.edges)

    def spanning_tree(self) -> list[int]:
        """Edge indices of a BFS tree rooted at vertex 0, in discovery order."""
        adj = self.adjacency()
        seen = {0}
        order: list[int] = []
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for i, w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    order.append(i)
                    queue.append(w)
        return order


def rank(c: GraphCombinatorics) -> int:
    if not c.connected:
        raise GeometryError("rank of a disconnected graph")
    return len(c.edges) - c.vertex_count + 1


THETA = GraphCombinatorics(2, ((0, 1), (0, 1), (0, 1)))
EYEGLASSES = GraphCombinatorics(2, ((0, 0), (1, 1), (0, 1)))
ROSE2 = GraphCombinatorics(1, ((0, 0), (0, 0)))


@dataclass(frozen=True)
class DevelopedCarrierGraph:
    combinatorics: GraphCombinatorics
    group: GroupPresentation
    positions: tuple[Point3, ...]
    labels: tuple[GroupElement, ...]
    witness: tuple[Word, ...] | None = None
    frozen: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(self.positions))
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "frozen", frozenset(self.frozen))
        c = self.combinatorics
        if len(self.positions) != c.vertex_count:
            raise GeometryError("one position per vertex required")
        if len(self.labels) != len(c.edges):
            raise GeometryError("one label per edge required")
        if rank(c) != self.group.rank:
            raise GeometryError(
                f"graph rank {rank(c)} differs from group rank {self.group.rank}"
            )
        for lab in self.labels:
            if not lab.matrix.close_to(eval_word(self.group, lab.word).matrix):
                raise GeometryError(f"label matrix disagrees with its word {lab.word.to_signed()}")

    @property
    def edges(self):
        return self.combinatorics.edges

    def with_positions(self, positions: Sequence[Point3]) -> "DevelopedCarrierGraph":
        return replace(self, positions=tuple(positions))

    def endpoint(self, i: int) -> Point3:
        """Lift of the far end of edge ``i``: ``label . positions[dst]``."""
        _, d = self.edges[i]
        return apply_isometry(self.labels[i].matrix, self.positions[d])

    def edge_ends(self, v: int) -> list[tuple[int, Point3]]:
        """(edge index, far point) for every edge-end at ``v``; loops give two."""
        out = []
        for i, (s, d) in enumerate(self.edges):
            if s == v:
                out.append((i, self.endpoint(i)))
            if d == v:
                out.append((i, apply_isometry(self.labels[i].matrix.inverse(), self.positions[s])))
        return out


def build_graph(
    combinatorics: GraphCombinatorics,
    group: GroupPresentation,
    labels: Sequence[Word | Sequence[int]],
    positions: Sequence[Point3 | Sequence[float]],
    witness: Sequence[Word] | None = None,
    frozen: Sequence[int] = (),
) -> DevelopedCarrierGraph:
    pts = tuple(p if isinstance(p, Point3) else Point3(*map(float, p)) for p in positions)
    labs = tuple(group.element(w) for w in labels)
    return DevelopedCarrierGraph(
        combinatorics, group, pts, labs,
        None if witness is None else tuple(witness), frozenset(frozen),
    )


def edge_length(cg: DevelopedCarrierGraph, i: int) -> float:
    s, _ = cg.edges[i]
    return dist(cg.positions[s], cg.endpoint(i))


def edge_lengths(cg: DevelopedCarrierGraph) -> list[float]:
    return [edge_length(cg, i) for i in range(len(cg.edges))]


def total_length(cg: DevelopedCarrierGraph) -> float:
    return math.fsum(edge_lengths(cg))


def gauge(cg: DevelopedCarrierGraph, v: int, gamma: GroupElement) -> DevelopedCarrierGraph:
    """Replace the lift of ``v`` by ``gamma . lift``, compensating the labels.

    Edges leaving ``v`` get ``gamma L``, edges entering ``v`` get ``L gamma^-1``
    (loops get both), so every realized edge is moved by an element of the
    group and the projected map is unchanged.
    """
    positions = list(cg.positions)
    positions[v] = apply_isometry(gamma.matrix, positions[v])
    inv = gamma.inverse()
    labels = list(cg.labels)
    for i, (s, d) in enumerate(cg.edges):
        lab = labels[i]
        if s == v:
            lab = gamma * lab
        if d == v:
            lab = lab * inv
        labels[i] = lab
    return replace(cg, positions=tuple(positions), labels=tuple(labels))


def _tree_holonomies(cg: DevelopedCarrierGraph) -> tuple[list[int], list[GroupElement]]:
    tree = cg.combinatorics.spanning_tree()
    T: dict[int, GroupElement] = {0: cg.group.identity()}
    for i in tree:
        s, d = cg.edges[i]
        if s in T:
            T[d] = T[s] * cg.labels[i]
        else:
            T[s] = T[d] * cg.labels[i].inverse()
    return tree, [T[v] for v in range(cg.combinatorics.vertex_count)]


def loop_generators(cg: DevelopedCarrierGraph) -> list[GroupElement]:
    """Holonomies of the fundamental cycles of a BFS spanning tree at vertex 0."""
    tree, T = _tree_holonomies(cg)
    in_tree = set(tree)
    return [
        T[s] * cg.labels[i] * T[d].inverse()
        for i, (s, d) in enumerate(cg.edges)
        if i not in in_tree
    ]


def surjectivity_status(cg: DevelopedCarrierGraph) -> str:
    """``verified``, ``unverified`` (no witness) or ``refuted`` (witness fails).

    A witness lists, for each group generator, a word in the loop generators
    of :func:`loop_generators` evaluating to it.
    """
    if cg.witness is None:
        # the trivial group is generated by the empty list
        return "verified" if cg.group.rank == 0 else "unverified"
    loops = loop_generators(cg)
    if len(cg.witness) != cg.group.rank:
        return "refuted"
    loop_group = GroupPresentation(tuple(g.matrix for g in loops))
    for gen, w in zip(cg.group.generators, cg.witness):
        if any(g >= len(loops) for g, _ in w):
            return "refuted"
        if not eval_word(loop_group, w).matrix.close_to(gen):
            return "refuted"
    return "verified"


@dataclass(frozen=True)
class VertexCertificate:
    valence: int
    tangent_sum_norm: float
    pairwise_angles: tuple[float, ...]
    frozen: bool = False


@dataclass(frozen=True)
class Certificate:
    per_vertex: tuple[VertexCertificate, ...]
    edge_lengths: tuple[float, ...]
    total_length: float
    trivalent: bool
    angle_deviation: float
    collapsed_edges: tuple[int, ...] = ()

    @property
    def collapsed(self) -> bool:
        return bool(self.collapsed_edges)

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_length": self.total_length,
            "edge_lengths": list(self.edge_lengths),
            "trivalent": self.trivalent,
            "angle_deviation": self.angle_deviation,
            "collapsed_edges": list(self.collapsed_edges),
            "vertices": [
                {
                    "valence": vc.valence,
                    "tangent_sum_norm": vc.tangent_sum_norm,
                    "pairwise_angles": list(vc.pairwise_angles),
                    "frozen": vc.frozen,
                }
                for vc in self.per_vertex
            ],
        }


def vertex_tangents(cg: DevelopedCarrierGraph, v: int, skip: set[int] = frozenset()) -> list[tuple[float, float, float]]:
    p = cg.positions[v]
    return [tangent_vector(p, q) for i, q in cg.edge_ends(v) if i not in skip]


def validate(cg: DevelopedCarrierGraph, collapse_length: float = COLLAPSE_LENGTH) -> Certificate:
    lengths = edge_lengths(cg)
    collapsed = tuple(i for i, ell in enumerate(lengths) if ell < collapse_length)
    skip = set(collapsed)
    per_vertex = []
    deviation = 0.0
    for v in range(cg.combinatorics.vertex_count):
        tans = vertex_tangents(cg, v, skip)
        total = np.sum(tans, axis=0) if tans else np.zeros(3)
        angles = tuple(
            _angle_between(tans[i], tans[j])
            for i in range(len(tans))
            for j in range(i + 1, len(tans))
        )
        if angles:
            deviation = max(deviation, max(abs(a - TRIVALENT_ANGLE) for a in angles))
        per_vertex.append(
            VertexCertificate(
                cg.combinatorics.valence(v), float(np.linalg.norm(total)), angles, v in cg.frozen
            )
        )
    return Certificate(
        tuple(per_vertex),
        tuple(lengths),
        math.fsum(lengths),
        all(vc.valence == 3 for vc in per_vertex),
        deviation,
        collapsed,
    )


def _ball(group: GroupPresentation, radius: int) -> list[Isometry]:
    return [eval_word(group, w).matrix for w in reduced_words(group.rank, radius)]


def essentially_equivalent(
    cg1: DevelopedCarrierGraph,
    cg2: DevelopedCarrierGraph,
    search_radius: int = 2,
    position_tol: float = POSITION_TOL,
    label_tol: float = TOL.identity,
) -> bool:
    """Whether two developed graphs project to the same map up to arclength.

    Searches the gauge at vertex 0 over all words of length at most
    ``search_radius``; gauges at the other vertices are then forced along a
    spanning tree. Only the identity graph automorphism is allowed.
    """
    if cg1.combinatorics != cg2.combinatorics:
        raise GeometryError("essential equivalence needs identical combinatorics")
    if not cg1.group.same_as(cg2.group):
        raise GeometryError("essential equivalence needs the same group")
    edges = cg1.edges
    tree = cg1.combinatorics.spanning_tree()
    n = cg1.combinatorics.vertex_count
    m1 = [lab.matrix for lab in cg1.labels]
    m2 = [lab.matrix for lab in cg2.labels]
    for g0 in _ball(cg1.group, search_radius):
        if dist(apply_isometry(g0, cg1.positions[0]), cg2.positions[0]) > position_tol:
            continue
        gauges: dict[int, Isometry] = {0: g0}
        for i in tree:
            s, d = edges[i]
            # gamma_s L1 gamma_d^-1 = L2
            if s in gauges:
                gauges[d] = m2[i].inverse() @ gauges[s] @ m1[i]
            else:
                gauges[s] = m2[i] @ gauges[d] @ m1[i].inverse()
        if any(
            dist(apply_isometry(gauges[v], cg1.positions[v]), cg2.positions[v]) > position_tol
            for v in range(n)
        ):
            continue
        if all(
            (gauges[s] @ m1[i] @ gauges[d].inverse()).close_to(m2[i], label_tol)
            for i, (s, d) in enumerate(edges)
        ):
            return True
    return False


# ---------------------------------------------------------------------------
# document format

def to_document(cg: DevelopedCarrierGraph) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "vertices": cg.combinatorics.vertex_count,
        "edges": [list(e) for e in cg.edges],
        "labels": [lab.word.to_signed() for lab in cg.labels],
        "positions": [list(p.as_tuple()) for p in cg.positions],
    }
    if cg.frozen:
        doc["frozen"] = sorted(cg.frozen)
    if cg.witness is not None:
        doc["witness"] = [w.to_signed() for w in cg.witness]
    return doc


def from_document(doc: dict[str, Any], group: GroupPresentation) -> DevelopedCarrierGraph:
    comb = GraphCombinatorics(int(doc["vertices"]), tuple(tuple(e) for e in doc["edges"]))
    witness = doc.get("witness")
    return build_graph(
        comb,
        group,
        [Word.from_signed(w) for w in doc["labels"]],
        [tuple(p) for p in doc["positions"]],
        None if witness is None else [Word.from_signed(w) for w in witness],
        doc.get("frozen", ()),
    )

