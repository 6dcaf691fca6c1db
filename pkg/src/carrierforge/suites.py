"""Seeded property suites behind ``carrierforge verify``.

Every suite samples with :class:`SplitMix64` and returns :class:`Check`
records: the worst observed value of a quantity and the bound it must
respect. Default sizes are the documented ones; all are overridable.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import carrier, hyp3, kleinian, shorten, symmetry
from .hyp3 import Isometry, Point3
from .rng import SplitMix64

BOX = (-3.0, 3.0, 0.1, 10.0)

DEFAULT_SIZES = {
    "metric": 10_000,
    "isometry": 1_000,
    "half_triangle_random": 100_000,
    "half_triangle_collinear": 1_000,
    "half_triangle_angled": 1_000,
    "law_of_cosines": 10_000,
    "contraction": 1_000,
    "gradient": 1_000,
    "gauge": 1_000,
    "normalizer": 100,
}


@dataclass(frozen=True)
class Check:
    name: str
    count: int
    worst: float
    bound: float
    direction: str  # "max" means worst <= bound, "min" means worst >= bound

    @property
    def passed(self) -> bool:
        if self.direction == "max":
            return bool(self.worst <= self.bound)
        return bool(self.worst >= self.bound)

    def line(self) -> str:
        op = "<=" if self.direction == "max" else ">="
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: n={self.count} worst={self.worst:.3e} {op} {self.bound:.1e}"

    def to_dict(self) -> dict:
        return {**asdict(self), "worst": float(self.worst), "passed": self.passed}


def random_point(rng: SplitMix64, box=BOX) -> Point3:
    lo, hi, tlo, thi = box
    return Point3(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(tlo, thi))


def random_isometry(rng: SplitMix64) -> Isometry:
    while True:
        e = [complex(rng.normal(), rng.normal()) for _ in range(4)]
        det = e[0] * e[3] - e[1] * e[2]
        if abs(det) > 0.1:
            return Isometry.normalized(*e)


def distinct_triple(rng: SplitMix64) -> tuple[Point3, Point3, Point3]:
    while True:
        x, y, z = random_point(rng), random_point(rng), random_point(rng)
        if x != y and y != z and x != z:
            return x, y, z


def collinear_triple(rng: SplitMix64, between: bool) -> tuple[Point3, Point3, Point3]:
    """x, y random and z on their geodesic line, between them or beyond one end."""
    while True:
        x, y = random_point(rng), random_point(rng)
        if x == y:
            continue
        if between:
            s = rng.uniform(0.05, 0.95)
        else:
            s = rng.uniform(1.05, 2.0) if rng.random() < 0.5 else rng.uniform(-1.0, -0.05)
        try:
            return x, y, hyp3.geodesic_point(x, y, s)
        except hyp3.GeometryError:
            continue


def angled_triple(rng: SplitMix64, margin: float = 0.1, radii=(0.5, 3.0)) -> tuple[Point3, Point3, Point3]:
    """z random, x and y at distance in ``radii`` from z, angle in [margin, pi - margin]."""
    z = random_point(rng)
    u = np.array(rng.unit_vector())
    while True:
        w = np.array(rng.unit_vector())
        w -= w.dot(u) * u
        n = np.linalg.norm(w)
        if n > 1e-6:
            w /= n
            break
    theta = rng.uniform(margin, math.pi - margin)
    v = math.cos(theta) * u + math.sin(theta) * w
    x = hyp3.exp_map(z, tuple(u), rng.uniform(*radii))
    y = hyp3.exp_map(z, tuple(v), rng.uniform(*radii))
    return x, y, z


# ---------------------------------------------------------------------------

def metric_suite(seed: int = 0, n: int = DEFAULT_SIZES["metric"], n_iso: int = DEFAULT_SIZES["isometry"]) -> list[Check]:
    rng = SplitMix64(seed)
    sym = tri = mid = 0.0
    for _ in range(n):
        p, q, r = random_point(rng), random_point(rng), random_point(rng)
        dpq, dqr, dpr = hyp3.dist(p, q), hyp3.dist(q, r), hyp3.dist(p, r)
        sym = max(sym, abs(dpq - hyp3.dist(q, p)))
        tri = max(tri, dpr - dpq - dqr)
        m = hyp3.midpoint(p, q)
        mid = max(mid, abs(hyp3.dist(p, m) - 0.5 * dpq), abs(hyp3.dist(m, q) - 0.5 * dpq))
    iso = 0.0
    for _ in range(n_iso):
        g = random_isometry(rng)
        p, q = random_point(rng), random_point(rng)
        iso = max(iso, abs(hyp3.dist(g(p), g(q)) - hyp3.dist(p, q)))
    return [
        Check("metric symmetry", n, sym, 1e-12, "max"),
        Check("triangle inequality slack", n, tri, 1e-10, "max"),
        Check("midpoint halves distance", n, mid, 1e-10, "max"),
        Check("isometry invariance", n_iso, iso, 1e-10, "max"),
    ]


def half_triangle_suite(
    seed: int = 0,
    n_random: int = DEFAULT_SIZES["half_triangle_random"],
    n_collinear: int = DEFAULT_SIZES["half_triangle_collinear"],
    n_angled: int = DEFAULT_SIZES["half_triangle_angled"],
) -> list[Check]:
    rng = SplitMix64(seed)
    lowest = math.inf
    for _ in range(n_random):
        lowest = min(lowest, hyp3.half_triangle_gap(*distinct_triple(rng)))
    flat = 0.0
    for k in range(n_collinear):
        x, y, z = collinear_triple(rng, between=k % 2 == 0)
        flat = max(flat, abs(hyp3.half_triangle_gap(x, y, z)))
    bent = math.inf
    for _ in range(n_angled):
        bent = min(bent, hyp3.half_triangle_gap(*angled_triple(rng)))
    return [
        Check("half-triangle gap nonnegative", n_random, lowest, -1e-9, "min"),
        Check("half-triangle gap vanishes on collinear triples", n_collinear, flat, 1e-7, "max"),
        Check("half-triangle gap positive for angles in [0.1, pi-0.1]", n_angled, bent, 1e-6, "min"),
    ]


def law_of_cosines_suite(seed: int = 0, n: int = DEFAULT_SIZES["law_of_cosines"]) -> list[Check]:
    """Law of cosines and the reduced inequality from the half-triangle proof.

    Errors are relative to ``cosh a cosh b``, the magnitude of the terms.
    """
    rng = SplitMix64(seed)
    law = ineq = eq = 0.0
    for k in range(n):
        x, y, z = distinct_triple(rng)
        a, b, c = hyp3.dist(z, x), hyp3.dist(z, y), hyp3.dist(x, y)
        gamma = hyp3.angle_at(z, x, y)
        scale = max(1.0, math.cosh(a) * math.cosh(b))
        rhs = math.cosh(a) * math.cosh(b) - math.sinh(a) * math.sinh(b) * math.cos(gamma)
        law = max(law, abs(math.cosh(c) - rhs) / scale)
        ineq = max(ineq, _reduced_inequality(a / 2, b / 2, gamma))
        xc, yc, zc = collinear_triple(rng, between=k % 2 == 0)
        a, b = hyp3.dist(zc, xc) / 2, hyp3.dist(zc, yc) / 2
        gamma = hyp3.angle_at(zc, xc, yc)
        eq = max(eq, abs(_reduced_inequality(a, b, gamma)))
    return [
        Check("law of cosines (relative)", n, law, 1e-9, "max"),
        Check("reduced half-triangle inequality slack (relative)", n, ineq, 1e-9, "max"),
        Check("reduced inequality is an equality when cos^2 = 1 (relative)", n, eq, 1e-9, "max"),
    ]


def _reduced_inequality(a: float, b: float, gamma: float) -> float:
    """(lhs - rhs) / scale for sinh^2a sinh^2b cos^2g + cosh^2a + cosh^2b <= cosh^2a cosh^2b + 1."""
    ca, cb = math.cosh(a) ** 2, math.cosh(b) ** 2
    lhs = math.sinh(a) ** 2 * math.sinh(b) ** 2 * math.cos(gamma) ** 2 + ca + cb
    rhs = ca * cb + 1.0
    return (lhs - rhs) / max(1.0, rhs)


def theta_graph(group=None, positions=None, rng: SplitMix64 | None = None) -> carrier.DevelopedCarrierGraph:
    """Theta graph with labels (1, a, b) on the Schottky group unless told otherwise."""
    group = group or kleinian.schottky()
    if positions is None:
        positions = [random_point(rng), random_point(rng)]
    return carrier.build_graph(carrier.THETA, group, [[], [1], [2]], positions)


def axial_theta() -> tuple[carrier.DevelopedCarrierGraph, carrier.DevelopedCarrierGraph]:
    """Two theta graphs on the vertical axis, labels translating along it."""
    half = lambda s: Isometry(math.exp(s / 2), 0, 0, math.exp(-s / 2))
    a, b = half(1.0), half(1.7)
    group = kleinian.GroupPresentation(
        (a, b), ("a", "b"), (kleinian.Word.from_signed([1, 2, -1, -2]),)
    )
    f = theta_graph(group, [Point3(0, 0, 1.0), Point3(0, 0, math.exp(0.3))])
    g = theta_graph(group, [Point3(0, 0, math.exp(0.5)), Point3(0, 0, math.exp(0.65))])
    return f, g


def contraction_suite(seed: int = 0, n: int = DEFAULT_SIZES["contraction"]) -> list[Check]:
    rng = SplitMix64(seed)
    group = kleinian.schottky()
    edge_slack = total_slack = 0.0
    for _ in range(n):
        f = theta_graph(group, rng=rng)
        g = theta_graph(group, rng=rng)
        c = shorten.midpoint_contraction(shorten.HomotopyPair(f, g))
        edge_slack = max(edge_slack, max(h - b for h, b in zip(c.broken_lengths, c.bounds)))
        total_slack = max(total_slack, c.broken_total - c.bound_total)
    f, g = axial_theta()
    c = shorten.midpoint_contraction(shorten.HomotopyPair(f, g))
    equality = max(abs(h - b) for h, b in zip(c.broken_lengths, c.bounds))
    return [
        Check("edgewise contraction slack", n, edge_slack, 1e-9, "max"),
        Check("total contraction slack", n, total_slack, 1e-8, "max"),
        Check("equality for collinear homotopy", 1, equality, 1e-9, "max"),
    ]


def gradient_suite(seed: int = 0, n: int = DEFAULT_SIZES["gradient"], step: float = 1e-5) -> list[Check]:
    rng = SplitMix64(seed)
    group = kleinian.schottky()
    worst = 0.0
    for _ in range(n):
        cg = theta_graph(group, rng=rng)
        analytic = np.concatenate([shorten.length_gradient(cg, v) for v in range(2)])
        numeric = finite_difference_gradient(cg, step)
        worst = max(worst, np.linalg.norm(analytic - numeric) / np.linalg.norm(analytic))
    return [Check("gradient vs central differences (relative)", n, worst, 1e-6, "max")]


def finite_difference_gradient(cg: carrier.DevelopedCarrierGraph, step: float = 1e-5) -> np.ndarray:
    out = []
    for v, p in enumerate(cg.positions):
        for k in range(3):
            plus, minus = list(p.as_tuple()), list(p.as_tuple())
            plus[k] += step
            minus[k] -= step
            fp = carrier.total_length(_moved(cg, v, plus))
            fm = carrier.total_length(_moved(cg, v, minus))
            out.append((fp - fm) / (2 * step))
    return np.array(out)


def _moved(cg, v, coords):
    pos = list(cg.positions)
    pos[v] = Point3(*coords)
    return cg.with_positions(pos)


def random_element(group: kleinian.GroupPresentation, rng: SplitMix64, max_len: int) -> kleinian.GroupElement:
    letters = []
    for _ in range(int(rng.random() * (max_len + 1))):
        letters.append((int(rng.random() * group.rank), 1 if rng.random() < 0.5 else -1))
    return kleinian.eval_word(group, kleinian.Word(tuple(letters)))


def random_normalizer(group, rng: SplitMix64, max_len: int = 3) -> symmetry.Normalizer:
    # conjugators much longer than 3 letters push the lifts towards t ~ 1e-4,
    # where chart round-off alone approaches 1e-9 in the lengths
    n = symmetry.Normalizer.inner(group, random_element(group, rng, max_len).word)
    if rng.random() < 0.5:
        n = symmetry.swap_normalizer(group) @ n
    return n


def gauge_suite(
    seed: int = 0,
    n: int = DEFAULT_SIZES["gauge"],
    n_normalizer: int = DEFAULT_SIZES["normalizer"],
) -> list[Check]:
    rng = SplitMix64(seed)
    group = kleinian.schottky()
    base = shorten.optimize_positions(theta_graph(group, rng=rng)).final_graph
    cert = carrier.validate(base)
    dl = dang = 0.0
    for _ in range(n):
        g = carrier.gauge(base, int(rng.random() * 2), random_element(group, rng, 4))
        c = carrier.validate(g)
        dl = max(dl, abs(c.total_length - cert.total_length))
        dang = max(dang, abs(c.angle_deviation - cert.angle_deviation))
    nl = nang = 0.0
    for _ in range(n_normalizer):
        img = symmetry.act_on_graph(random_normalizer(group, rng), base)
        c = carrier.validate(img)
        nl = max(nl, abs(c.total_length - cert.total_length))
        nang = max(nang, abs(c.angle_deviation - cert.angle_deviation))
    return [
        Check("gauge: total length change", n, dl, 1e-9, "max"),
        Check("gauge: angle deviation change", n, dang, 1e-6, "max"),
        Check("normalizer: total length change", n_normalizer, nl, 1e-9, "max"),
        Check("normalizer: angle deviation change", n_normalizer, nang, 1e-6, "max"),
    ]


SUITES: dict[str, Callable[..., list[Check]]] = {
    "metric": metric_suite,
    "half_triangle": half_triangle_suite,
    "law_of_cosines": law_of_cosines_suite,
    "contraction": contraction_suite,
    "gradient": gradient_suite,
    "gauge": gauge_suite,
}


def run_all(seed: int = 0) -> list[tuple[str, list[Check], float]]:
    out = []
    for name, suite in SUITES.items():
        t0 = time.perf_counter()
        checks = suite(seed)
        out.append((name, checks, time.perf_counter() - t0))
    return out
