"""Experiment configuration documents.

A config is a JSON object validated by :class:`ExperimentConfig`. Complex
numbers are ``[re, im]`` pairs and words are lists of signed 1-based
generator indices, so ``[1, -2]`` means ``a b^-1``. The JSON schema shipped
in ``docs/config.schema.json`` is generated from these models.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Any, Literal, Optional

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, model_validator

from . import kleinian
from .carrier import DevelopedCarrierGraph, GraphCombinatorics, build_graph
from .hyp3 import Isometry, Point3
from .kleinian import GroupPresentation, Word
from .rng import SplitMix64
from .shorten import OptimizerConfig, initial_positions
from .symmetry import Normalizer, swap_normalizer

ComplexPair = tuple[float, float]
MatrixDoc = tuple[tuple[ComplexPair, ComplexPair], tuple[ComplexPair, ComplexPair]]


def _letter(s: int) -> int:
    if s == 0:
        raise ValueError("0 is not a generator symbol")
    return s


SignedWord = list[Annotated[int, AfterValidator(_letter)]]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


def matrix_to_doc(m: Isometry) -> list:
    return [[[z.real, z.imag] for z in row] for row in ((m.a, m.b), (m.c, m.d))]


def matrix_from_doc(doc) -> Isometry:
    (a, b), (c, d) = doc
    return Isometry.normalized(*(complex(re, im) for re, im in (a, b, c, d)))


class GroupSpec(_Model):
    """Either a shipped fixture or explicit generators."""

    fixture: Optional[Literal["figure8", "schottky", "trivial"]] = None
    generators: Optional[list[MatrixDoc]] = None
    names: Optional[list[str]] = None
    relators: list[SignedWord] = Field(default_factory=list)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.fixture is None) == (self.generators is None):
            raise ValueError("give exactly one of 'fixture' and 'generators'")
        if self.fixture is not None and (self.names is not None or self.relators):
            raise ValueError("'names' and 'relators' only go with explicit generators")
        return self

    def build(self) -> GroupPresentation:
        if self.fixture is not None:
            return kleinian.FIXTURES[self.fixture]()
        gens = tuple(matrix_from_doc(m) for m in self.generators)
        return GroupPresentation(
            gens,
            tuple(self.names) if self.names else (),
            tuple(Word.from_signed(r) for r in self.relators),
        )


class GraphSpec(_Model):
    """Combinatorics, labels and (optionally) vertex lifts of a carrier graph.

    Without ``positions`` the lifts are drawn near ``(0, 0, 1)`` from the
    config seed.
    """

    vertices: Annotated[int, Field(ge=1)]
    edges: list[tuple[int, int]]
    labels: list[SignedWord]
    positions: Optional[list[tuple[float, float, float]]] = None
    frozen: list[int] = Field(default_factory=list)
    witness: Optional[list[SignedWord]] = None

    def build(self, group: GroupPresentation, seed: int = 0, jitter: float = 0.1) -> DevelopedCarrierGraph:
        comb = GraphCombinatorics(self.vertices, tuple(self.edges))
        if self.positions is not None:
            pos = [Point3(*p) for p in self.positions]
        else:
            pos = initial_positions(self.vertices, SplitMix64(seed), jitter)
        return build_graph(
            comb,
            group,
            [Word.from_signed(w) for w in self.labels],
            pos,
            None if self.witness is None else [Word.from_signed(w) for w in self.witness],
            self.frozen,
        )


class OptimizerSpec(_Model):
    max_iterations: Annotated[int, Field(ge=0)] = OptimizerConfig.max_iterations
    gradient_tolerance: Annotated[float, Field(gt=0)] = OptimizerConfig.gradient_tolerance
    step_tolerance: Annotated[float, Field(gt=0)] = OptimizerConfig.step_tolerance
    collapse_threshold: Annotated[float, Field(gt=0)] = OptimizerConfig.collapse_threshold
    cusp_height_bound: Annotated[float, Field(gt=0)] = OptimizerConfig.cusp_height_bound
    armijo: Annotated[float, Field(gt=0, lt=1)] = OptimizerConfig.armijo
    shrink: Annotated[float, Field(gt=0, lt=1)] = OptimizerConfig.shrink
    max_step: Annotated[float, Field(gt=0)] = OptimizerConfig.max_step
    jitter: Annotated[float, Field(ge=0)] = OptimizerConfig.jitter
    snap_length: Annotated[float, Field(gt=0)] = OptimizerConfig.snap_length

    def build(self, seed: int) -> OptimizerConfig:
        return OptimizerConfig(seed=seed, **self.model_dump())


class NormalizerSpec(_Model):
    """``fixture``: ``swap`` (Schottky half-turn) or ``identity``; ``inner``:
    conjugation by a group word; otherwise an explicit matrix and table."""

    fixture: Optional[Literal["swap", "identity"]] = None
    inner: Optional[SignedWord] = None
    matrix: Optional[MatrixDoc] = None
    table: Optional[list[SignedWord]] = None

    @model_validator(mode="after")
    def _one_source(self):
        given = [self.fixture is not None, self.inner is not None, self.matrix is not None]
        if sum(given) != 1:
            raise ValueError("give exactly one of 'fixture', 'inner' and 'matrix'")
        if (self.matrix is None) != (self.table is None):
            raise ValueError("'matrix' and 'table' go together")
        return self

    def build(self, group: GroupPresentation) -> Normalizer:
        if self.fixture == "swap":
            return swap_normalizer(group)
        if self.fixture == "identity":
            return Normalizer.identity(group)
        if self.inner is not None:
            return Normalizer.inner(group, self.inner)
        return Normalizer(group, matrix_from_doc(self.matrix), tuple(Word.from_signed(w) for w in self.table))


class ContractSpec(_Model):
    """Target of the homotopy: explicit lifts, or a random move of each free
    vertex by hyperbolic distance ``radius``."""

    target_positions: Optional[list[tuple[float, float, float]]] = None
    radius: Annotated[float, Field(gt=0)] = 0.2
    optimize_source: bool = True


class Params(_Model):
    max_word_len: Annotated[int, Field(ge=1, le=kleinian.MAX_WORD_LENGTH)] = 2
    max_power: Annotated[int, Field(ge=1)] = 4
    search_radius: Annotated[int, Field(ge=0)] = 2
    follow_collapses: bool = False
    optimize_first: bool = True


class ExperimentConfig(_Model):
    group: GroupSpec = Field(default_factory=lambda: GroupSpec(fixture="trivial"))
    graph: Optional[GraphSpec] = None
    optimizer: OptimizerSpec = Field(default_factory=OptimizerSpec)
    normalizer: Optional[NormalizerSpec] = None
    contract: Optional[ContractSpec] = None
    params: Params = Field(default_factory=Params)
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0

    def to_document(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)

    def optimizer_config(self) -> OptimizerConfig:
        return self.optimizer.build(self.seed)


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a config file. JSON syntax errors surface as ``json.JSONDecodeError``
    (with line and column), schema errors as ``pydantic.ValidationError``."""
    text = Path(path).read_text()
    return ExperimentConfig.model_validate(json.loads(text))


def config_schema() -> dict[str, Any]:
    return ExperimentConfig.model_json_schema()
