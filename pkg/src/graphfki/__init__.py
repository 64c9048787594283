"""Magnetic Schroedinger operators on weighted graphs, the associated jump
process, and Feynman-Kac-Ito Monte Carlo estimates of their semigroups."""

__version__ = "0.1.0"

from .graph import (  # noqa: E402
    Exhaustion,
    MagneticPotential,
    PathMetric,
    Potential,
    WeightedGraph,
    build_graph,
    default_intrinsic_metric,
    generate,
    make_exhaustion,
    verify_intrinsic,
    weighted_degree,
)
from .operator import (  # noqa: E402
    FiniteOperator,
    apply_formal,
    assemble_finite,
    quadratic_form,
    resolvent,
    semigroup,
    spectrum,
)
from .process import Trajectory, sample_trajectory, simulate  # noqa: E402
from .estimator import (  # noqa: E402
    MCEstimate,
    fki_dirichlet,
    fki_kernel,
    fki_semigroup,
    fki_trace,
)

__all__ = [
    "Exhaustion", "MagneticPotential", "PathMetric", "Potential", "WeightedGraph",
    "build_graph", "default_intrinsic_metric", "generate", "make_exhaustion",
    "verify_intrinsic", "weighted_degree",
    "FiniteOperator", "apply_formal", "assemble_finite", "quadratic_form",
    "resolvent", "semigroup", "spectrum",
    "Trajectory", "sample_trajectory", "simulate",
    "MCEstimate", "fki_dirichlet", "fki_kernel", "fki_semigroup", "fki_trace",
]
