"""Finitely generated Kleinian groups given by matrix generators.

Words are tuples of ``(generator_index, exponent)`` letters with exponent
``+1`` or ``-1`` and 0-based indices. The document format uses signed
1-based integers instead; see :meth:`Word.from_signed`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .hyp3 import GeometryError, Isometry, IsometryKind, TOL, classify

MAX_WORD_LENGTH = 64


class WordError(ValueError):
    pass


Letter = tuple[int, int]


@dataclass(frozen=True)
class Word:
    letters: tuple[Letter, ...] = ()

    def __post_init__(self):
        for gen, exp in self.letters:
            if exp not in (1, -1) or gen < 0:
                raise WordError(f"bad letter {(gen, exp)!r}")

    @classmethod
    def from_signed(cls, signed: Iterable[int]) -> "Word":
        letters = []
        for s in signed:
            if s == 0:
                raise WordError("0 is not a generator symbol")
            letters.append((abs(s) - 1, 1 if s > 0 else -1))
        return cls(tuple(letters))

    def to_signed(self) -> list[int]:
        return [(g + 1) * e for g, e in self.letters]

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return reduce_word(Word(self.letters + other.letters))

    def inverse(self) -> "Word":
        return Word(tuple((g, -e) for g, e in reversed(self.letters)))

    @property
    def is_reduced(self) -> bool:
        return all(
            not (g1 == g2 and e1 == -e2)
            for (g1, e1), (g2, e2) in zip(self.letters, self.letters[1:])
        )

    def format(self, names: Sequence[str] | None = None) -> str:
        if not self.letters:
            return "1"
        parts = []
        for g, e in self.letters:
            name = names[g] if names else f"g{g + 1}"
            parts.append(name if e == 1 else name.upper() if len(name) == 1 else f"{name}^-1")
        return "".join(parts)


EMPTY = Word()


def reduce_word(w: Word) -> Word:
    out: list[Letter] = []
    for g, e in w.letters:
        if out and out[-1][0] == g and out[-1][1] == -e:
            out.pop()
        else:
            out.append((g, e))
    return Word(tuple(out))


def reduced_words(rank: int, max_len: int) -> list[Word]:
    """All freely reduced words of length 0..max_len, shortlex ordered."""
    letters = [(g, e) for g in range(rank) for e in (1, -1)]
    layer = [EMPTY]
    found = [EMPTY]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for g, e in letters:
                if w.letters and w.letters[-1] == (g, -e):
                    continue
                nxt.append(Word(w.letters + ((g, e),)))
        found.extend(nxt)
        layer = nxt
    return found


def substitute(w: Word, images: Sequence[Word]) -> Word:
    """Apply the endomorphism sending generator ``i`` to ``images[i]``."""
    out: tuple[Letter, ...] = ()
    for g, e in w.letters:
        img = images[g]
        out += img.letters if e == 1 else img.inverse().letters
    return reduce_word(Word(out))


@dataclass(frozen=True)
class GroupPresentation:
    generators: tuple[Isometry, ...]
    names: tuple[str, ...] = ()
    relators: tuple[Word, ...] = ()

    def __post_init__(self):
        if not self.names:
            object.__setattr__(self, "names", tuple(f"g{i + 1}" for i in range(len(self.generators))))
        if len(self.names) != len(self.generators):
            raise WordError("one name per generator required")
        for r in self.relators:
            g = eval_word(self, r)
            if not is_identity(g):
                raise GeometryError(f"relator {r.format(self.names)} is not the identity")

    @property
    def rank(self) -> int:
        return len(self.generators)

    @cached_property
    def cusp_note(self) -> bool:
        return any(classify(g).kind is IsometryKind.PARABOLIC for g in self.generators)

    def element(self, w: Word | Sequence[int]) -> "GroupElement":
        if not isinstance(w, Word):
            w = Word.from_signed(w)
        return eval_word(self, w)

    def identity(self) -> "GroupElement":
        return GroupElement(EMPTY, Isometry.identity())

    def same_as(self, other: "GroupPresentation") -> bool:
        if self is other:
            return True
        return self.rank == other.rank and all(
            g.close_to(h) for g, h in zip(self.generators, other.generators)
        )


@dataclass(frozen=True)
class GroupElement:
    word: Word
    matrix: Isometry = field(compare=False)

    def __post_init__(self):
        if len(self.word) > MAX_WORD_LENGTH:
            raise WordError(f"word longer than the {MAX_WORD_LENGTH}-letter cap")

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.word * other.word, self.matrix @ other.matrix)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.word.inverse(), self.matrix.inverse())

    def close_to(self, other: "GroupElement", tol: float = TOL.identity) -> bool:
        return self.matrix.close_to(other.matrix, tol)


def eval_word(group: GroupPresentation, w: Word) -> GroupElement:
    a, b, c, d = 1 + 0j, 0j, 0j, 1 + 0j
    for g, e in w.letters:
        if g >= group.rank:
            raise WordError(f"generator index {g + 1} out of range for rank {group.rank}")
        m = group.generators[g] if e == 1 else group.generators[g].inverse()
        a, b, c, d = (a * m.a + b * m.c, a * m.b + b * m.d, c * m.a + d * m.c, c * m.b + d * m.d)
    return GroupElement(reduce_word(w), Isometry.from_product(a, b, c, d))


def is_identity(g: GroupElement | Isometry, tol: float = TOL.identity) -> bool:
    m = g.matrix if isinstance(g, GroupElement) else g
    return m.distance_to(Isometry.identity()) <= tol


def conjugate(g: GroupElement, h: GroupElement) -> GroupElement:
    """``h g h^-1``."""
    return GroupElement(h.word * g.word * h.word.inverse(), h.matrix @ g.matrix @ h.matrix.inverse())


# ---------------------------------------------------------------------------
# shipped fixtures

OMEGA = complex(-0.5, math.sqrt(3) / 2)


def figure_eight() -> GroupPresentation:
    """Discrete faithful representation of the figure-eight knot group.

    ``a`` and ``b`` are meridians; the Wirtinger relation reads
    ``w b w^-1 = a`` with ``w = b^-1 a b a^-1``.
    """
    a = Isometry(1, 1, 0, 1)
    b = Isometry(1, 0, -OMEGA, 1)
    w = Word.from_signed([-2, 1, 2, -1])
    relator = Word(w.letters + ((1, 1),) + w.inverse().letters + ((0, -1),))
    return GroupPresentation((a, b), ("a", "b"), (reduce_word(relator),))


# half-length of the Schottky generators: cosh = 2
SCHOTTKY_HALF_LENGTH = math.acosh(2.0)


def swap_matrix() -> Isometry:
    """Half-turn ``z -> i/z``; it swaps the axes (-1, 1) and (-i, i)."""
    return Isometry.normalized(0, 1j, 1, 0)


def schottky() -> GroupPresentation:
    """Free group on two loxodromics whose axes cross at right angles.

    ``a = [[2, sqrt3], [sqrt3, 2]]`` has axis (-1, 1) and translation length
    ``2 acosh 2``; ``b`` is its conjugate by :func:`swap_matrix`, so the
    half-turn normalizes the group and exchanges the generators. All four
    isometric circles have radius ``1/sqrt3`` and centres ``+-2/sqrt3``,
    ``+-2i/sqrt3``, hence are disjoint.
    """
    r3 = math.sqrt(3.0)
    a = Isometry(2, r3, r3, 2)
    n = swap_matrix()
    b = n @ a @ n.inverse()
    return GroupPresentation((a, b), ("a", "b"), ())


def trivial() -> GroupPresentation:
    return GroupPresentation((), (), ())


def cyclic(g: Isometry, name: str = "g") -> GroupPresentation:
    return GroupPresentation((g,), (name,), ())


FIXTURES = {
    "figure8": figure_eight,
    "schottky": schottky,
    "trivial": trivial,
}
