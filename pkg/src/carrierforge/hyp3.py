"""Hyperbolic 3-space in the upper half-space model.

Points are ``(x, y, t)`` with ``t > 0``. Isometries are SL(2, C) matrices
acting by the Poincare extension of the Mobius map ``z -> (az+b)/(cz+d)``.
The model is conformal, so angles between geodesics are Euclidean angles
between their chart tangent vectors.

Geodesic interpolation goes through the hyperboloid, using the coordinates
``A = 1/t`` and ``X = (x/t, y/t)``; those are linear on the hyperboloid and
never need the cancellation-prone fourth coordinate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class GeometryError(ValueError):
    """Invalid or degenerate geometric input."""


@dataclass(frozen=True)
class Tolerances:
    algebraic: float = 1e-12
    metric: float = 1e-10
    inequality: float = 1e-9
    strict: float = 1e-6
    boundary: float = 1e-8
    identity: float = 1e-9


TOL = Tolerances()


@dataclass(frozen=True, slots=True)
class Point3:
    x: float
    y: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.t)):
            raise GeometryError(f"non-finite point {self!r}")
        if self.t < TOL.boundary:
            raise GeometryError(f"point too close to the boundary plane: t={self.t!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.t)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.t])

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


ORIGIN = Point3(0.0, 0.0, 1.0)


@dataclass(frozen=True, slots=True)
class TangentDir:
    """Unit chart vector at ``basepoint``."""

    basepoint: Point3
    direction: tuple[float, float, float]

    def __post_init__(self):
        n = math.sqrt(sum(c * c for c in self.direction))
        if abs(n - 1.0) > TOL.algebraic:
            raise GeometryError(f"tangent direction not unit length: |v|={n!r}")


def _sq_norm(a: complex, b: complex, c: complex, d: complex) -> float:
    return max(1.0, abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 + abs(d) ** 2)


def _det_tolerance(a: complex, b: complex, c: complex, d: complex) -> float:
    # round-off in ad - bc grows with the entries
    return TOL.algebraic * _sq_norm(a, b, c, d)


@dataclass(frozen=True, slots=True)
class Isometry:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det - 1.0) > _det_tolerance(self.a, self.b, self.c, self.d):
            raise GeometryError(f"matrix not normalized: det={det!r}")

    @classmethod
    def normalized(cls, a, b, c, d) -> "Isometry":
        """Rescale ``[[a, b], [c, d]]`` to determinant 1."""
        a, b, c, d = complex(a), complex(b), complex(c), complex(d)
        det = a * d - b * c
        if abs(det) < 1e-300 or not cmath.isfinite(det):
            raise GeometryError("singular matrix")
        s = cmath.sqrt(det)
        return cls(a / s, b / s, c / s, d / s)

    @classmethod
    def from_array(cls, m) -> "Isometry":
        m = np.asarray(m, dtype=complex)
        return cls.normalized(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(1 + 0j, 0j, 0j, 1 + 0j)

    def to_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @classmethod
    def from_product(cls, a, b, c, d, scale: float = 1.0) -> "Isometry":
        """Wrap a product of determinant-1 matrices without rescaling.

        The exact determinant is 1; the computed one is off by about
        ``eps |M|^2``, and dividing by its square root would spread that error
        over every entry. ``scale`` is the product of the squared factor norms:
        a small product of large factors (``n g n^-1``) inherits their
        round-off, so the determinant check is scaled by it.
        """
        a, b, c, d = complex(a), complex(b), complex(c), complex(d)
        det = a * d - b * c
        if abs(det - 1.0) > max(_det_tolerance(a, b, c, d), TOL.algebraic * scale):
            raise GeometryError(f"matrix not normalized: det={det!r}")
        m = object.__new__(cls)
        for name, z in zip("abcd", (a, b, c, d)):
            object.__setattr__(m, name, z)
        return m

    def __matmul__(self, other: "Isometry") -> "Isometry":
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        scale = _sq_norm(a, b, c, d) * _sq_norm(e, f, g, h)
        return Isometry.from_product(
            a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h, scale
        )

    def inverse(self) -> "Isometry":
        return Isometry(self.d, -self.b, -self.c, self.a)

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def distance_to(self, other: "Isometry") -> float:
        """Frobenius distance in PSL(2, C): the smaller of the two sign choices."""
        plus = _frob(self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d)
        minus = _frob(self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d)
        return min(plus, minus)

    @property
    def norm(self) -> float:
        return _frob(self.a, self.b, self.c, self.d)

    def close_to(self, other: "Isometry", tol: float = TOL.identity) -> bool:
        """PSL(2, C) equality up to ``tol`` relative to the larger norm.

        Products and conjugations lose accuracy like ``eps |M|^2``, so the same
        quadratic allowance as the determinant check is added on top.
        """
        scale = max(1.0, self.norm, other.norm)
        return self.distance_to(other) <= tol * scale + TOL.algebraic * scale * scale

    def __call__(self, p: Point3) -> Point3:
        return apply_isometry(self, p)


def _frob(*entries: complex) -> float:
    return math.sqrt(sum(abs(e) ** 2 for e in entries))


class IsometryKind(str, Enum):
    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    LOXODROMIC = "loxodromic"


@dataclass(frozen=True)
class IsometryClass:
    kind: IsometryKind
    translation_length: float = 0.0

    def __post_init__(self):
        if (self.translation_length > 0) != (self.kind is IsometryKind.LOXODROMIC):
            raise GeometryError("translation length must be positive exactly for loxodromics")


def dist(p: Point3, q: Point3) -> float:
    """Hyperbolic distance, via ``sinh(d/2) = |p - q| / (2 sqrt(t_p t_q))``."""
    dx = p.x - q.x
    dy = p.y - q.y
    dt = p.t - q.t
    euc = math.sqrt(dx * dx + dy * dy + dt * dt)
    return 2.0 * math.asinh(euc / (2.0 * math.sqrt(p.t * q.t)))


def _hyperboloid_combination(p: Point3, q: Point3, wp: float, wq: float) -> Point3:
    # point wp*P + wq*Q, read back through A = 1/t, X = u/t
    ap, aq = 1.0 / p.t, 1.0 / q.t
    A = wp * ap + wq * aq
    if A <= 0.0:
        raise GeometryError("geodesic point left the model")
    return Point3((wp * p.x * ap + wq * q.x * aq) / A, (wp * p.y * ap + wq * q.y * aq) / A, 1.0 / A)


def geodesic_point(p: Point3, q: Point3, s: float) -> Point3:
    """Point at ``s * dist(p, q)`` along the full geodesic line through p and q.

    ``s`` may lie outside [0, 1]; see :func:`geodesic_eval` for the checked
    segment version.
    """
    d = dist(p, q)
    if d == 0.0:
        raise GeometryError("degenerate segment: p == q")
    sh = math.sinh(d)
    return _hyperboloid_combination(p, q, math.sinh((1.0 - s) * d) / sh, math.sinh(s * d) / sh)


def geodesic_eval(p: Point3, q: Point3, s: float) -> Point3:
    if not 0.0 <= s <= 1.0:
        raise GeometryError(f"segment parameter out of range: {s!r}")
    if s == 0.0 and p != q:
        return p
    if s == 1.0 and p != q:
        return q
    return geodesic_point(p, q, s)


def midpoint(p: Point3, q: Point3) -> Point3:
    if p == q:
        return p
    d = dist(p, q)
    # (P + Q) / (2 cosh(d/2)) on the hyperboloid
    w = 1.0 / (2.0 * math.cosh(0.5 * d))
    return _hyperboloid_combination(p, q, w, w)


def tangent_vector(v: Point3, w: Point3) -> tuple[float, float, float]:
    """Unit chart tangent at ``v`` of the geodesic from ``v`` to ``w``.

    The geodesic lies on a circle orthogonal to the boundary plane; its
    tangent at ``v`` is proportional to ``(2 t_v du, |du|^2 + t_w^2 - t_v^2)``.
    """
    dx = w.x - v.x
    dy = w.y - v.y
    vx = 2.0 * v.t * dx
    vy = 2.0 * v.t * dy
    vt = dx * dx + dy * dy + (w.t - v.t) * (w.t + v.t)
    n = math.sqrt(vx * vx + vy * vy + vt * vt)
    if n == 0.0:
        raise GeometryError("tangent of a degenerate segment")
    return (vx / n, vy / n, vt / n)


def tangent(v: Point3, w: Point3) -> TangentDir:
    return TangentDir(v, tangent_vector(v, w))


def _angle_between(u, w) -> float:
    dot = u[0] * w[0] + u[1] * w[1] + u[2] * w[2]
    cx = u[1] * w[2] - u[2] * w[1]
    cy = u[2] * w[0] - u[0] * w[2]
    cz = u[0] * w[1] - u[1] * w[0]
    return math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), dot)


def angle_at(v: Point3, a: Point3, b: Point3) -> float:
    """Angle at ``v`` between the geodesics to ``a`` and to ``b``, in [0, pi]."""
    if a == v or b == v:
        raise GeometryError("angle at a degenerate segment")
    return _angle_between(tangent_vector(v, a), tangent_vector(v, b))


def half_triangle_gap(x: Point3, y: Point3, z: Point3) -> float:
    """``dist(x, y)/2 - dist(x', y')`` where x', y' bisect [x, z] and [y, z].

    Nonnegative in hyperbolic space; zero exactly for degenerate
    (collinear) triangles.
    """
    if x == y or y == z or x == z:
        raise GeometryError("half-triangle gap needs three distinct points")
    return 0.5 * dist(x, y) - dist(midpoint(x, z), midpoint(y, z))


def apply_isometry(g: Isometry, p: Point3) -> Point3:
    z = complex(p.x, p.y)
    t2 = p.t * p.t
    num = g.a * z + g.b
    den = g.c * z + g.d
    denom = abs(den) ** 2 + abs(g.c) ** 2 * t2
    w = (num * den.conjugate() + g.a * g.c.conjugate() * t2) / denom
    return Point3(w.real, w.imag, p.t / denom)


def exp_map(v: Point3, direction, length: float) -> Point3:
    """Point reached by leaving ``v`` along the unit chart ``direction``.

    Moves hyperbolic distance ``length`` along the geodesic, computed as
    ``cosh(s) P + sinh(s) V`` on the hyperboloid.
    """
    ux, uy, ut = direction
    ch, sh = math.cosh(length), math.sinh(length)
    t = v.t
    # V = t * dLift(u) in the (A, X1, X2) coordinates
    dA = -ut / t
    dX1 = ux - v.x * ut / t
    dX2 = uy - v.y * ut / t
    A = ch / t + sh * dA
    X1 = ch * v.x / t + sh * dX1
    X2 = ch * v.y / t + sh * dX2
    return Point3(X1 / A, X2 / A, 1.0 / A)


def classify(g: Isometry, tol: float = TOL.identity) -> IsometryClass:
    if g.distance_to(Isometry.identity()) <= tol:
        return IsometryClass(IsometryKind.IDENTITY)
    tr = g.trace
    if abs(tr - 2) <= tol or abs(tr + 2) <= tol:
        return IsometryClass(IsometryKind.PARABOLIC)
    if abs(tr.imag) <= tol and abs(tr.real) < 2:
        return IsometryClass(IsometryKind.ELLIPTIC)
    length = 2.0 * abs(cmath.acosh(tr / 2).real)
    if length == 0.0:
        return IsometryClass(IsometryKind.ELLIPTIC)
    return IsometryClass(IsometryKind.LOXODROMIC, length)


def translation_length(g: Isometry) -> float:
    return classify(g).translation_length


def fixed_points(g: Isometry) -> list[complex | None]:
    """Fixed points on the sphere at infinity; ``None`` stands for infinity."""
    a, b, c, d = g.a, g.b, g.c, g.d
    if abs(c) < 1e-14:
        pts: list[complex | None] = [None]
        if abs(a - d) > 1e-14:
            pts.append(b / (d - a))
        return pts
    disc = cmath.sqrt((a - d) ** 2 + 4 * b * c)
    roots = [((a - d) + disc) / (2 * c), ((a - d) - disc) / (2 * c)]
    if abs(roots[0] - roots[1]) < 1e-12:
        return [roots[0]]
    return roots


def horoheight(p: Point3, cusp: complex | None) -> float:
    """Height of ``p`` after moving ``cusp`` to infinity by ``z -> 1/(z - cusp)``."""
    if cusp is None:
        return p.t
    dz = complex(p.x, p.y) - cusp
    return p.t / (abs(dz) ** 2 + p.t * p.t)
