"""Carrier graphs in hyperbolic 3-manifolds.

Modules:

- :mod:`~carrierforge.hyp3`: upper half-space geometry and SL(2, C) isometries
- :mod:`~carrierforge.kleinian`: words, matrix groups and shipped fixtures
- :mod:`~carrierforge.carrier`: developed carrier graphs, certificates, equivalence
- :mod:`~carrierforge.shorten`: midpoint contraction, gradient descent, rank-2 enumeration
- :mod:`~carrierforge.symmetry`: normalizer actions and orbits
- :mod:`~carrierforge.cli`: the ``carrierforge`` batch front-end
"""

from .carrier import (
    Certificate,
    DevelopedCarrierGraph,
    GraphCombinatorics,
    build_graph,
    essentially_equivalent,
    gauge,
    loop_generators,
    surjectivity_status,
    total_length,
    validate,
)
from .hyp3 import GeometryError, Isometry, Point3, TOL, classify, dist
from .kleinian import GroupElement, GroupPresentation, Word, eval_word
from .rng import SplitMix64
from .shorten import (
    HomotopyPair,
    OptimizerConfig,
    enumerate_rank2,
    length_gradient,
    midpoint_contraction,
    optimize_positions,
)
from .symmetry import Normalizer, act_on_graph, orbit

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "DevelopedCarrierGraph",
    "GeometryError",
    "GraphCombinatorics",
    "GroupElement",
    "GroupPresentation",
    "HomotopyPair",
    "Isometry",
    "Normalizer",
    "OptimizerConfig",
    "Point3",
    "SplitMix64",
    "TOL",
    "Word",
    "act_on_graph",
    "build_graph",
    "classify",
    "dist",
    "enumerate_rank2",
    "essentially_equivalent",
    "eval_word",
    "gauge",
    "length_gradient",
    "loop_generators",
    "midpoint_contraction",
    "optimize_positions",
    "orbit",
    "surjectivity_status",
    "total_length",
    "validate",
]
