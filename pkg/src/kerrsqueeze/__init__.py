"""Kerr-gate preparation of linearly and nonlinearly squeezed states.

A truncated-Fock simulator with the gates needed to prepare squeezed states
from a single Kerr interaction, the linear and nonlinear squeezing measures,
a multi-start optimizer over the gate parameters, and Monte Carlo analysis of
parameter noise.
"""

__version__ = "0.1.0"

from .fock import (
    DEFAULT_DIM,
    KERR_CONVENTIONS,
    DimensionError,
    FockError,
    FockState,
    OperatorMatrix,
    TruncationError,
    VarianceMatrix,
    apply,
    build_ladder,
    build_quadratures,
    expectation,
    fock_probabilities,
    gate_displacement,
    gate_kerr,
    gate_momentum_displacement,
    gate_rotation,
    gate_squeeze,
    number_operator,
    quadrature_power,
    variance_matrix,
    wigner_grid,
)
from .metrics import (
    GaussianBaselineSolution,
    SingularParameterError,
    SqueezingReport,
    gaussian_baseline,
    linear_min_eigenvalue,
    nonlinear_variance,
    v3_objective,
    v4_objective,
    xi,
)
from .optimize import (
    OptimalPoint,
    OptimizationFailed,
    OptProblem,
    SweepResult,
    optimize_point,
    sweep,
)
from .prep import (
    PrepParamsCubic,
    PrepParamsLinear,
    PrepParamsQuartic,
    prep,
    prep_cubic,
    prep_linear,
    prep_quartic,
)
from .robustness import FluctuationSpec, MCStats, MonteCarloError, monte_carlo, monte_carlo_fixed

__all__ = ["__version__",
    "DEFAULT_DIM",
    "DimensionError",
    "FluctuationSpec",
    "FockError",
    "FockState",
    "GaussianBaselineSolution",
    "KERR_CONVENTIONS",
    "MCStats",
    "MonteCarloError",
    "OperatorMatrix",
    "OptProblem",
    "OptimalPoint",
    "OptimizationFailed",
    "PrepParamsCubic",
    "PrepParamsLinear",
    "PrepParamsQuartic",
    "SingularParameterError",
    "SqueezingReport",
    "SweepResult",
    "TruncationError",
    "VarianceMatrix",
    "apply",
    "build_ladder",
    "build_quadratures",
    "expectation",
    "fock_probabilities",
    "gate_displacement",
    "gate_kerr",
    "gate_momentum_displacement",
    "gate_rotation",
    "gate_squeeze",
    "gaussian_baseline",
    "linear_min_eigenvalue",
    "monte_carlo",
    "monte_carlo_fixed",
    "nonlinear_variance",
    "number_operator",
    "optimize_point",
    "prep",
    "prep_cubic",
    "prep_linear",
    "prep_quartic",
    "quadrature_power",
    "sweep",
    "v3_objective",
    "v4_objective",
    "variance_matrix",
    "wigner_grid",
    "xi",
]
