"""Generalized Tukey-type data depths.

Depth of a hypothesis point is the minimum, over unit directions in the
influence space, of a sum of per-observation sign (or smoothed sign)
discrepancies of projected influences.  The package provides the
influence constructors (location, regression, GLM, covariance, meta),
the annealed accelerated projection solver, exact low-dimensional
oracles, and a deepest-point search.
"""

from .model import (
    CONVENTIONS,
    Dataset,
    DegeneracyError,
    DepthError,
    DepthResult,
    DimensionError,
    Direction,
    HALF_AT_ZERO,
    InfeasibleError,
    InfluenceSet,
    InfluenceSpace,
    RIGHT_CLOSED,
    SolverConfig,
    SolverError,
    ValidationError,
    classify_signs,
    evaluate_d01,
)
from .phi import (
    FAMILIES,
    NonDifferentiableError,
    PhiFunction,
    SIGMOID_FAMILIES,
    SMOOTH_FAMILIES,
    make_phi,
)
from .projections import (
    project_direction,
    project_linear_constraint,
    project_sparse,
    project_sphere,
    project_stiefel,
    project_subspace_sphere,
)
from .influence import (
    GAUSSIAN,
    GlmFamily,
    LOGISTIC,
    POISSON,
    covariance_influences,
    glm_influences,
    location_influences,
    meta_influences,
    normalize_influences,
    regression_influences,
    triangle_objective,
)
from .solver import (
    accelerated_solve,
    gradient_lipschitz_bound,
    init_directions,
    mm_solve,
    mm_step,
    objective,
    objective_and_grad,
    sap,
    subspace_solve,
    triangle_solve,
)
from .oracle import (
    DegenerateConfigurationError,
    exact_depth_1d,
    exact_depth_2d,
    exact_depth_3d,
    grid_depth_curve,
    simplicial_depth_2d,
)
from .deepest import (
    ConstraintRegion,
    DepthProblem,
    composite_depth,
    danskin_grad,
)

__version__ = "0.1.0"
