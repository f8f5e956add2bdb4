"""Adaptive mixed finite elements for buoyancy-driven flow with a point heat
source: structured triangulations with longest-edge bisection, Taylor-Hood
and mini discretizations, a Picard solver, residual error indicators and a
maximum-strategy adaptive loop."""

__version__ = "0.1.0"

from .adaptivity import ConvergenceRecord, adapt_loop, mark, rate_fit
from .assembly import (
    SparseSystem,
    assemble_heat,
    assemble_oseen,
    family_spaces,
    skew_trilinear,
)
from .config import MINI, TAYLOR_HOOD, ConfigError, ProblemConfig
from .estimator import Indicators, compute_indicators, heat_indicator, navier_indicator
from .kernels import active_backend
from .mesh import (
    LSHAPE,
    SQUARE,
    Mesh,
    MeshError,
    Patch,
    Point2,
    bisect,
    build_initial_mesh,
    element_patches,
    geometry,
    locate,
)
from .output import RunManifest, write_convergence_csv, write_vtk
from .solver import (
    SingularMatrixError,
    SolutionState,
    initial_guess,
    monitored_quantities,
    picard_solve,
    solve_sparse,
)
from .spaces import (
    DofMap,
    FieldVec,
    build_space,
    element_laplacian,
    eval_basis,
    interpolate,
    point_evaluate,
    weighted_grad_norm,
)
from .quadrature import QuadRule, edge_rule, simplex_rule

__all__ = [name for name in dir() if not name.startswith("_")]
