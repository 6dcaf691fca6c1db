import math

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from scipy import optimize as sopt

from carrierforge.carrier import GraphCombinatorics, build_graph
from carrierforge.hyp3 import Isometry, Point3, dist, exp_map
from carrierforge.kleinian import trivial

settings.register_profile(
    "default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

coord = st.floats(-3.0, 3.0, allow_nan=False)
height = st.floats(0.1, 10.0, allow_nan=False)
points = st.builds(Point3, coord, coord, height)

entry = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


@st.composite
def isometries(draw):
    a, b, c, d = draw(entry), draw(entry), draw(entry), draw(entry)
    det = a * d - b * c
    if abs(det) < 0.1:
        d = d + 1.0
        if abs(a * d - b * c) < 0.1:
            a, b, c, d = 1 + 0j, b, 0j, 1 + 0j
    return Isometry.normalized(a, b, c, d)


def close(a, b, tol):
    return abs(a - b) <= tol


def point_close(p, q, tol=1e-10):
    return max(abs(p.x - q.x), abs(p.y - q.y), abs(p.t - q.t)) <= tol


def tripod(leaves, start=Point3(0.1, 0.1, 1.5)):
    comb = GraphCombinatorics(4, ((0, 1), (0, 2), (0, 3)))
    return build_graph(comb, trivial(), [[], [], []], [start] + list(leaves), frozen=[1, 2, 3])


def equilateral_leaves(spread=2.0, phase=0.3):
    r = math.asinh(math.sqrt((math.cosh(spread) - 1) / 1.5))
    origin = Point3(0, 0, 1)
    return [exp_map(origin, (math.cos(phase + k * 2 * math.pi / 3), math.sin(phase + k * 2 * math.pi / 3), 0.0), r) for k in range(3)]


def fermat_oracle(leaves):
    """Nelder-Mead on (x, y, log t); no derivatives involved."""
    def f(u):
        p = Point3(u[0], u[1], math.exp(u[2]))
        return sum(dist(p, q) for q in leaves)

    best = None
    for x0 in ([0.2, -0.1, 0.3], [-0.3, 0.2, -0.2], [0.0, 0.0, 0.0]):
        res = sopt.minimize(f, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 40000})
        if best is None or res.fun < best.fun:
            best = res
    u = best.x
    return Point3(u[0], u[1], math.exp(u[2]))


# -- acceptance reporting ---------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
