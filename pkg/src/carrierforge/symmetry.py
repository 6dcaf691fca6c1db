"""Ambient isometries acting on developed carrier graphs.

An isometry of the quotient manifold lifts to a matrix ``n`` normalizing the
group. It acts on a developed graph by moving every vertex lift by ``n`` and
conjugating every label, with the label words rewritten through a
conjugation table ``n g_i n^-1 = table[i]``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .carrier import DevelopedCarrierGraph, essentially_equivalent
from .hyp3 import GeometryError, Isometry, apply_isometry
from .kleinian import (
    GroupElement,
    GroupPresentation,
    Word,
    eval_word,
    schottky,
    substitute,
    swap_matrix,
)


@dataclass(frozen=True)
class Normalizer:
    group: GroupPresentation
    matrix: Isometry
    table: tuple[Word, ...]

    def __post_init__(self):
        if len(self.table) != self.group.rank:
            raise GeometryError("conjugation table needs one word per generator")
        n, n_inv = self.matrix, self.matrix.inverse()
        for i, (gen, w) in enumerate(zip(self.group.generators, self.table)):
            image = eval_word(self.group, w).matrix
            if not (n @ gen @ n_inv).close_to(image):
                raise GeometryError(
                    f"conjugation table entry {i + 1} does not match n g n^-1"
                )

    @classmethod
    def identity(cls, group: GroupPresentation) -> "Normalizer":
        return cls(group, Isometry.identity(), tuple(Word(((i, 1),)) for i in range(group.rank)))

    @classmethod
    def inner(cls, group: GroupPresentation, w: Word | Sequence[int]) -> "Normalizer":
        """Conjugation by a group element; acts trivially on the quotient."""
        g = group.element(w)
        table = tuple(g.word * Word(((i, 1),)) * g.word.inverse() for i in range(group.rank))
        return cls(group, g.matrix, table)

    def __matmul__(self, other: "Normalizer") -> "Normalizer":
        if not self.group.same_as(other.group):
            raise GeometryError("normalizers of different groups")
        # (n1 n2) g (n1 n2)^-1 = n1 (n2 g n2^-1) n1^-1
        table = tuple(substitute(w, self.table) for w in other.table)
        return Normalizer(self.group, self.matrix @ other.matrix, table)

    def conjugate(self, g: GroupElement) -> GroupElement:
        m = self.matrix @ g.matrix @ self.matrix.inverse()
        return GroupElement(substitute(g.word, self.table), m)


def swap_normalizer(group: GroupPresentation | None = None) -> Normalizer:
    """The half-turn exchanging the two generators of the Schottky fixture."""
    group = group or schottky()
    return Normalizer(group, swap_matrix(), (Word(((1, 1),)), Word(((0, 1),))))


def act_on_graph(n: Normalizer, cg: DevelopedCarrierGraph) -> DevelopedCarrierGraph:
    if not n.group.same_as(cg.group):
        raise GeometryError("normalizer and graph belong to different groups")
    positions = tuple(apply_isometry(n.matrix, p) for p in cg.positions)
    labels = tuple(n.conjugate(lab) for lab in cg.labels)
    # loop generators get conjugated by n; rewriting a witness would need the
    # table of n^-1, so the image is left unwitnessed
    return replace(cg, positions=positions, labels=labels, witness=None)


def orbit(
    n: Normalizer,
    cg: DevelopedCarrierGraph,
    max_power: int,
    search_radius: int = 2,
) -> list[DevelopedCarrierGraph]:
    """``[cg, n cg, n^2 cg, ...]`` up to ``max_power`` terms or the first repeat."""
    if max_power < 1:
        raise ValueError("max_power must be at least 1")
    out = [cg]
    cur = cg
    for _ in range(max_power - 1):
        cur = act_on_graph(n, cur)
        if any(essentially_equivalent(prev, cur, search_radius) for prev in out):
            break
        out.append(cur)
    return out
