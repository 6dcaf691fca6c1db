"""Length-decreasing operations on developed carrier graphs.

Two ways of making a graph shorter live here: the midpoint contraction of a
homotopy between two developed graphs with the same labels, and Riemannian
gradient descent on the vertex lifts with labels held fixed. Certificates
from :func:`carrier.validate` check the first-order conditions at the end.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .carrier import (
    COLLAPSE_LENGTH,
    EYEGLASSES,
    THETA,
    Certificate,
    DevelopedCarrierGraph,
    GraphCombinatorics,
    build_graph,
    edge_lengths,
    essentially_equivalent,
    gauge,
    loop_generators,
    surjectivity_status,
    validate,
)
from .hyp3 import (
    GeometryError,
    IsometryKind,
    Point3,
    apply_isometry,
    classify,
    dist,
    exp_map,
    fixed_points,
    horoheight,
    midpoint,
    tangent_vector,
)
from .kleinian import EMPTY, GroupPresentation, Word, reduced_words, substitute
from .rng import SplitMix64

log = logging.getLogger(__name__)

THREADS_ENV = "CARRIERFORGE_THREADS"


# ---------------------------------------------------------------------------
# midpoint contraction

@dataclass(frozen=True)
class HomotopyPair:
    """Straight-line homotopy between two developed graphs.

    Each square ``e x [0, 1]`` is split along the diagonal from
    ``(src, 0)`` to ``(dst, 1)``.
    """

    source: DevelopedCarrierGraph
    target: DevelopedCarrierGraph

    def __post_init__(self):
        s, t = self.source, self.target
        if s.combinatorics != t.combinatorics:
            raise GeometryError("homotopy ends have different combinatorics")
        if not s.group.same_as(t.group):
            raise GeometryError("homotopy ends live in different groups")
        for i, (a, b) in enumerate(zip(s.labels, t.labels)):
            if not a.matrix.close_to(b.matrix):
                raise GeometryError(f"labels of edge {i} disagree")


@dataclass(frozen=True)
class Contraction:
    graph: DevelopedCarrierGraph
    broken_lengths: tuple[float, ...]
    source_lengths: tuple[float, ...]
    target_lengths: tuple[float, ...]
    diagonal_midpoints: tuple[Point3, ...]

    @property
    def bounds(self) -> tuple[float, ...]:
        return tuple(0.5 * (f + g) for f, g in zip(self.source_lengths, self.target_lengths))

    @property
    def broken_total(self) -> float:
        return math.fsum(self.broken_lengths)

    @property
    def bound_total(self) -> float:
        return 0.5 * (math.fsum(self.source_lengths) + math.fsum(self.target_lengths))


def midpoint_contraction(pair: HomotopyPair) -> Contraction:
    """Midpoint graph of the triangulated homotopy.

    Vertices go to the midpoints of their tracks. Edge ``e`` becomes the
    broken geodesic ``h(src) -> m -> L h(dst)`` with ``m`` the midpoint of the
    diagonal, and is then straightened. Each half of the broken path is a
    midline of one of the two triangles, so its length is at most
    ``(len_f(e) + len_g(e)) / 2``.
    """
    f, g = pair.source, pair.target
    h_pos = tuple(midpoint(p, q) for p, q in zip(f.positions, g.positions))
    broken, f_len, g_len, mids = [], [], [], []
    for i, (s, d) in enumerate(f.edges):
        L = f.labels[i].matrix
        f_s, g_s = f.positions[s], g.positions[s]
        f_d, g_d = apply_isometry(L, f.positions[d]), apply_isometry(L, g.positions[d])
        m = midpoint(f_s, g_d)
        h_d = apply_isometry(L, h_pos[d])
        broken.append(dist(h_pos[s], m) + dist(m, h_d))
        f_len.append(dist(f_s, f_d))
        g_len.append(dist(g_s, g_d))
        mids.append(m)
    return Contraction(f.with_positions(h_pos), tuple(broken), tuple(f_len), tuple(g_len), tuple(mids))


def perturb(cg: DevelopedCarrierGraph, radius: float, rng: SplitMix64) -> DevelopedCarrierGraph:
    """Move every free vertex by hyperbolic distance ``radius`` in a random direction."""
    pos = [
        p if v in cg.frozen else exp_map(p, rng.unit_vector(), radius)
        for v, p in enumerate(cg.positions)
    ]
    return cg.with_positions(pos)


# ---------------------------------------------------------------------------
# gradient descent

@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 20000
    gradient_tolerance: float = 1e-8
    step_tolerance: float = 1e-14
    collapse_threshold: float = COLLAPSE_LENGTH
    cusp_height_bound: float = 1e3
    seed: int = 0
    armijo: float = 1e-4
    shrink: float = 0.5
    max_step: float = 1.0
    jitter: float = 0.1
    snap_length: float = 1e-3

    def __post_init__(self):
        for name in ("gradient_tolerance", "step_tolerance", "collapse_threshold",
                     "cusp_height_bound", "armijo", "max_step", "snap_length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")


TERMINATION_REASONS = ("converged", "maxIterations", "collapsed", "cuspEscape")


@dataclass(frozen=True)
class OptimizationReport:
    final_graph: DevelopedCarrierGraph
    length_trace: tuple[float, ...]
    gradient_trace: tuple[float, ...]
    certificate: Certificate
    termination_reason: str
    event: dict = field(default_factory=dict)

    @property
    def length(self) -> float:
        return self.certificate.total_length

    @property
    def gradient_norm(self) -> float:
        return self.gradient_trace[-1] if self.gradient_trace else float("nan")


class _LengthModel:
    """Edge geometry of a graph with frozen labels, on bare position lists."""

    def __init__(self, cg: DevelopedCarrierGraph):
        self.edges = cg.edges
        self.mats = [lab.matrix for lab in cg.labels]
        self.invs = [m.inverse() for m in self.mats]
        self.n = cg.combinatorics.vertex_count
        self.ends: list[list[tuple[int, bool]]] = [[] for _ in range(self.n)]
        for i, (s, d) in enumerate(self.edges):
            self.ends[s].append((i, True))
            self.ends[d].append((i, False))

    def lengths(self, pos: Sequence[Point3]) -> list[float]:
        return [dist(pos[s], apply_isometry(self.mats[i], pos[d])) for i, (s, d) in enumerate(self.edges)]

    def total(self, pos: Sequence[Point3]) -> float:
        return math.fsum(self.lengths(pos))

    def far_points(self, pos: Sequence[Point3], v: int) -> list[tuple[int, Point3]]:
        out = []
        for i, outgoing in self.ends[v]:
            s, d = self.edges[i]
            if outgoing:
                out.append((i, apply_isometry(self.mats[i], pos[d])))
            else:
                out.append((i, apply_isometry(self.invs[i], pos[s])))
        return out

    def descent_direction(self, pos: Sequence[Point3], v: int) -> tuple[float, float, float]:
        """Sum of unit chart tangents at ``v``; minus the Riemannian gradient."""
        wx = wy = wt = 0.0
        p = pos[v]
        for i, q in self.far_points(pos, v):
            if dist(p, q) < COLLAPSE_LENGTH:
                raise GeometryError(f"edge {i} at vertex {v} is degenerate")
            ux, uy, ut = tangent_vector(p, q)
            wx += ux
            wy += uy
            wt += ut
        return (wx, wy, wt)


def length_gradient(cg: DevelopedCarrierGraph, v: int) -> np.ndarray:
    """Partial derivatives of total length in the chart coordinates of vertex ``v``.

    Equals ``-(sum of unit tangents at v) / t_v``.
    """
    w = _LengthModel(cg).descent_direction(cg.positions, v)
    return -np.array(w) / cg.positions[v].t


def initial_positions(n: int, rng: SplitMix64, jitter: float = 0.1) -> list[Point3]:
    """``(0, 0, 1)`` plus noise uniform in a chart ball of radius ``jitter``."""
    out = []
    for _ in range(n):
        u = rng.unit_vector()
        r = jitter * rng.random() ** (1.0 / 3.0)
        out.append(Point3(r * u[0], r * u[1], 1.0 + r * u[2]))
    return out


def cusp_points(cg: DevelopedCarrierGraph) -> list[complex | None]:
    """Parabolic fixed points visible to the graph, ``None`` meaning infinity."""
    if not cg.group.cusp_note:
        return []
    elements = [g for g in cg.group.generators]
    elements += [lab.matrix for lab in cg.labels]
    elements += [g.matrix for g in loop_generators(cg)]
    pts: list[complex | None] = [None]
    for g in elements:
        if classify(g).kind is IsometryKind.PARABOLIC:
            for z in fixed_points(g):
                if z is None:
                    continue
                if all(q is None or abs(q - z) > 1e-9 for q in pts):
                    pts.append(z)
    return pts


def optimize_positions(cg: DevelopedCarrierGraph, cfg: OptimizerConfig = OptimizerConfig()) -> OptimizationReport:
    """Riemannian gradient descent on total length over the free vertex lifts.

    Each iteration moves every free vertex along the geodesic in the
    direction of its summed unit tangents and backtracks (Armijo) until the
    length decreases enough, so the length trace is non-increasing.
    """
    model = _LengthModel(cg)
    free = [v for v in range(model.n) if v not in cg.frozen]
    pos = list(cg.positions)
    lengths = model.lengths(pos)
    if min(lengths, default=1.0) < cfg.collapse_threshold:
        raise GeometryError("optimization needs a graph without collapsed edges")
    cusps = cusp_points(cg)
    length = math.fsum(lengths)
    trace = [length]
    gtrace: list[float] = []
    step = 1.0
    reason = "maxIterations"
    event: dict = {}

    def finish() -> OptimizationReport:
        final = cg.with_positions(pos)
        cert = validate(final, cfg.collapse_threshold)
        return OptimizationReport(final, tuple(trace), tuple(gtrace), cert, reason, event)

    for it in range(cfg.max_iterations + 1):
        dirs = {v: model.descent_direction(pos, v) for v in free}
        norms = {v: math.sqrt(w[0] ** 2 + w[1] ** 2 + w[2] ** 2) for v, w in dirs.items()}
        gnorm = math.sqrt(math.fsum(n * n for n in norms.values()))
        gtrace.append(gnorm)
        if gnorm <= cfg.gradient_tolerance:
            reason = "converged"
            break
        if it == cfg.max_iterations:
            break
        biggest = max(norms.values())
        step = min(2.0 * step, cfg.max_step / biggest)
        while True:
            if step * biggest < cfg.step_tolerance:
                reason = "converged"
                event = {"stalled": True, "gradient_norm": gnorm}
                return finish()
            try:
                trial = list(pos)
                for v in free:
                    if norms[v] > 0:
                        w = dirs[v]
                        trial[v] = exp_map(pos[v], (w[0] / norms[v], w[1] / norms[v], w[2] / norms[v]), step * norms[v])
                new_lengths = model.lengths(trial)
            except GeometryError:
                step *= cfg.shrink
                continue
            new_length = math.fsum(new_lengths)
            if new_length <= length - cfg.armijo * step * gnorm * gnorm:
                break
            step *= cfg.shrink
        pos, lengths, length = trial, new_lengths, new_length
        snapped = _try_snap(model, pos, lengths, length, free, cfg.snap_length)
        if snapped is not None:
            pos, lengths, length = snapped
        trace.append(length)
        shortest = min(range(len(lengths)), key=lengths.__getitem__)
        if lengths[shortest] < cfg.collapse_threshold:
            reason = "collapsed"
            event = {"edge": shortest, "length": lengths[shortest], "iteration": it + 1}
            gtrace.append(float("nan"))
            break
        escaped = _cusp_escape(pos, free, cusps, cfg.cusp_height_bound)
        if escaped is not None:
            reason = "cuspEscape"
            event = {"vertex": escaped[0], "horoheight": escaped[1], "iteration": it + 1}
            gtrace.append(float("nan"))
            break
    return finish()


def _try_snap(model: _LengthModel, pos, lengths, length, free, snap_length):
    # descent zigzags across the kink of a vanishing edge; jump onto it
    # whenever the merged configuration is no longer
    free_set = set(free)
    for i in sorted(range(len(lengths)), key=lengths.__getitem__):
        if lengths[i] >= snap_length:
            break
        s, d = model.edges[i]
        if s == d:
            continue
        options = []
        if d in free_set:
            options.append((d, apply_isometry(model.invs[i], pos[s])))
        if s in free_set:
            options.append((s, apply_isometry(model.mats[i], pos[d])))
        for v, p in options:
            trial = list(pos)
            trial[v] = p
            new_lengths = model.lengths(trial)
            new_length = math.fsum(new_lengths)
            if new_length <= length:
                return trial, new_lengths, new_length
    return None


def _cusp_escape(pos, free, cusps, bound):
    for v in free:
        for c in cusps:
            h = horoheight(pos[v], c)
            if h > bound:
                return v, h
    return None


def _tree_paths(cg: DevelopedCarrierGraph) -> list[list[tuple[int, int]]]:
    """Directed edge path from vertex 0 to each vertex along the BFS tree."""
    paths: dict[int, list[tuple[int, int]]] = {0: []}
    for i in cg.combinatorics.spanning_tree():
        s, d = cg.edges[i]
        if s in paths:
            paths[d] = paths[s] + [(i, 1)]
        else:
            paths[s] = paths[d] + [(i, -1)]
    return [paths[v] for v in range(cg.combinatorics.vertex_count)]


def _cycle_paths(cg: DevelopedCarrierGraph) -> list[list[tuple[int, int]]]:
    paths = _tree_paths(cg)
    tree = set(cg.combinatorics.spanning_tree())
    out = []
    for j, (s, d) in enumerate(cg.edges):
        if j in tree:
            continue
        back = [(i, -e) for i, e in reversed(paths[d])]
        out.append(paths[s] + [(j, 1)] + back)
    return out


def _loop_word(cg: DevelopedCarrierGraph, path: list[tuple[int, int]]) -> Word:
    tree = set(cg.combinatorics.spanning_tree())
    index = {j: k for k, j in enumerate(i for i in range(len(cg.edges)) if i not in tree)}
    return Word(tuple((index[i], e) for i, e in path if i in index)) * EMPTY


def collapse_edge(cg: DevelopedCarrierGraph, i: int) -> DevelopedCarrierGraph:
    """Contract non-loop edge ``i``, merging its endpoints.

    The higher-numbered endpoint is gauged onto the lower one (so vertex 0
    survives and the label of ``i`` becomes trivial) and then removed. The
    rank is unchanged; a surjectivity witness is rewritten in the new loop
    generators.
    """
    s, d = cg.edges[i]
    if s == d:
        raise GeometryError("cannot contract a loop")
    if d > s:
        keep, gone = s, d
        g = gauge(cg, d, cg.labels[i])
    else:
        keep, gone = d, s
        g = gauge(cg, s, cg.labels[i].inverse())

    def renum(v: int) -> int:
        v = keep if v == gone else v
        return v - 1 if v > gone else v

    edges = tuple((renum(a), renum(b)) for j, (a, b) in enumerate(g.edges) if j != i)
    comb = GraphCombinatorics(cg.combinatorics.vertex_count - 1, edges)
    labels = tuple(lab for j, lab in enumerate(g.labels) if j != i)
    positions = tuple(p for v, p in enumerate(g.positions) if v != gone)
    frozen = frozenset(renum(v) for v in cg.frozen)
    old_index = [j for j in range(len(g.edges)) if j != i]
    new = DevelopedCarrierGraph(comb, cg.group, positions, labels, None, frozen)
    if cg.witness is None:
        return new
    new_of_old = {j: k for k, j in enumerate(old_index)}
    images = []
    for path in _cycle_paths(cg):
        mapped = [(new_of_old[j], e) for j, e in path if j != i]
        images.append(_loop_word(new, mapped))
    witness = tuple(substitute(w, images) for w in cg.witness)
    return replace(new, witness=witness)


def optimize_with_collapses(
    cg: DevelopedCarrierGraph, cfg: OptimizerConfig = OptimizerConfig()
) -> list[OptimizationReport]:
    """Optimize, and after each collapse contract the short edges and go on.

    Returns every run in order; the last one describes the outcome. Stops
    when a run ends in anything but a contractible collapse.
    """
    reports = [optimize_positions(cg, cfg)]
    while reports[-1].termination_reason == "collapsed":
        g = reports[-1].final_graph
        while True:
            short = [j for j, ell in enumerate(edge_lengths(g))
                     if ell < cfg.collapse_threshold and g.edges[j][0] != g.edges[j][1]]
            if not short:
                break
            g = collapse_edge(g, short[0])
        if min(edge_lengths(g), default=1.0) < cfg.collapse_threshold:
            break
        reports.append(optimize_positions(g, cfg))
    return reports


# ---------------------------------------------------------------------------
# rank-2 enumeration

@dataclass(frozen=True)
class Candidate:
    kind: str
    loop_words: tuple[Word, Word]
    witness: tuple[Word, ...] | None

    @property
    def combinatorics(self) -> GraphCombinatorics:
        return THETA if self.kind == "theta" else EYEGLASSES

    def labels(self) -> list[Word]:
        w1, w2 = self.loop_words
        if self.kind == "theta":
            return [EMPTY, w1, w2]
        return [w1, w2, EMPTY]


@dataclass(frozen=True)
class EnumerationEntry:
    """One deduplicated outcome; ``runs`` holds the collapse follow-ups too."""

    index: int
    candidate: Candidate
    runs: tuple[OptimizationReport, ...]
    surjectivity: str
    duplicates: tuple[int, ...] = ()

    @property
    def report(self) -> OptimizationReport:
        return self.runs[-1]

    @property
    def collapses(self) -> int:
        return len(self.runs) - 1


def _sort_key(w: Word):
    return (len(w), tuple(w.to_signed()))


def nielsen_witness(w1: Word, w2: Word) -> tuple[Word, Word] | None:
    """Express both free generators in ``w1``, ``w2`` by greedy Nielsen reduction.

    Returns words in the loop letters ``x = 0``, ``y = 1`` or ``None`` when the
    greedy reduction stalls before reaching ``{a, b}``. A ``None`` is
    inconclusive, never a proof of non-generation.
    """
    cur = [w1, w2]
    expr = [Word(((0, 1),)), Word(((1, 1),))]
    while True:
        best = None
        for i in (0, 1):
            j = 1 - i
            for e in (1, -1):
                other = cur[j] if e == 1 else cur[j].inverse()
                oexpr = expr[j] if e == 1 else expr[j].inverse()
                for right in (True, False):
                    cand = cur[i] * other if right else other * cur[i]
                    if len(cand) < len(cur[i]) and (best is None or len(cand) < best[0]):
                        cexpr = expr[i] * oexpr if right else oexpr * expr[i]
                        best = (len(cand), i, cand, cexpr)
        if best is None:
            break
        _, i, cand, cexpr = best
        if len(cand) == 0:
            return None
        cur[i], expr[i] = cand, cexpr
    if not all(len(w) == 1 for w in cur) or {cur[0].letters[0][0], cur[1].letters[0][0]} != {0, 1}:
        return None
    witness: list[Word | None] = [None, None]
    for w, ex in zip(cur, expr):
        gen, e = w.letters[0]
        witness[gen] = ex if e == 1 else ex.inverse()
    return (witness[0], witness[1])


def rank2_candidates(max_word_len: int) -> list[Candidate]:
    """Labelled theta and eyeglasses graphs with loop words up to ``max_word_len``.

    Candidates that differ by an obvious graph symmetry (swapping the two
    loops, reversing a loop of the eyeglasses, exchanging the two theta
    vertices) are listed once. Pairs with ``w2 = w1^+-1`` are skipped.
    """
    words = [w for w in reduced_words(2, max_word_len) if len(w) > 0]
    out: list[Candidate] = []
    seen: set = set()
    for w1 in words:
        for w2 in words:
            if w2 == w1 or w2 == w1.inverse():
                continue
            theta_forms = [(w1, w2), (w2, w1), (w1.inverse(), w2.inverse()), (w2.inverse(), w1.inverse())]
            key = ("theta", min((_sort_key(a), _sort_key(b)) for a, b in theta_forms))
            if key not in seen:
                seen.add(key)
                out.append(Candidate("theta", (w1, w2), nielsen_witness(w1, w2)))
            c1 = min(w1, w1.inverse(), key=_sort_key)
            c2 = min(w2, w2.inverse(), key=_sort_key)
            key = ("eyeglasses", tuple(sorted((_sort_key(c1), _sort_key(c2)))))
            if key not in seen:
                seen.add(key)
                out.append(Candidate("eyeglasses", (w1, w2), nielsen_witness(w1, w2)))
    return out


def _run_candidate(args) -> list[OptimizationReport] | str:
    group, cand, cfg, key = args
    rng = SplitMix64(cfg.seed).spawn(key)
    pos = initial_positions(2, rng, cfg.jitter)
    cg = build_graph(cand.combinatorics, group, cand.labels(), pos, cand.witness)
    try:
        return optimize_with_collapses(cg, cfg)
    except GeometryError as exc:
        return f"failed: {exc}"


def _fanout() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_candidates(
    group: GroupPresentation,
    candidates: Sequence[Candidate],
    cfg: OptimizerConfig,
    search_radius: int = 2,
    dedup_length_tol: float = 1e-6,
    threads: int | None = None,
) -> list[EnumerationEntry]:
    """Optimize every candidate, merge essentially equivalent results, sort by length.

    Runs are independent; with ``threads > 1`` they execute in worker
    processes and are merged in candidate order, so output does not depend
    on scheduling. Candidate ``k`` seeds its start from ``cfg.seed`` and ``k``.
    """
    jobs = [(group, c, cfg, k) for k, c in enumerate(candidates)]
    threads = threads or _fanout()
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_candidate, jobs))
    else:
        results = [_run_candidate(j) for j in jobs]

    kept: list[EnumerationEntry] = []
    for k, (cand, runs) in enumerate(zip(candidates, results)):
        if isinstance(runs, str):
            log.warning("candidate %d skipped: %s", k, runs)
            continue
        rep = runs[-1]
        dup_of = None
        for j, entry in enumerate(kept):
            other = entry.report
            if other.final_graph.combinatorics != rep.final_graph.combinatorics:
                continue
            if abs(other.length - rep.length) > dedup_length_tol:
                continue
            if essentially_equivalent(other.final_graph, rep.final_graph, search_radius):
                dup_of = j
                break
        if dup_of is None:
            kept.append(EnumerationEntry(k, cand, tuple(runs), surjectivity_status(rep.final_graph)))
        else:
            e = kept[dup_of]
            kept[dup_of] = replace(e, duplicates=e.duplicates + (k,))
    kept.sort(key=lambda e: (e.report.length, e.index))
    return kept


def enumerate_rank2(
    group: GroupPresentation,
    max_word_len: int,
    cfg: OptimizerConfig = OptimizerConfig(),
    search_radius: int = 2,
    threads: int | None = None,
) -> list[EnumerationEntry]:
    if group.rank != 2:
        raise GeometryError(f"rank-2 enumeration needs 2 generators, got {group.rank}")
    if max_word_len < 1:
        raise ValueError("max_word_len must be at least 1")
    return run_candidates(group, rank2_candidates(max_word_len), cfg, search_radius, threads=threads)
