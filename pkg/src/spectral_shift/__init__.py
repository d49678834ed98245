"""First-order eigenvalue-shift predictions for perturbed positive forms.

The package discretizes families of positive self-adjoint eigenproblems,
solves a variational corrector for each perturbation strength, and verifies
the first-order shift law (and its remainder bound) by sweep regression.
"""

from .core import (
    DiscreteSpace,
    EigenSolution,
    FormSystem,
    ResolventGapReport,
    SubspaceSpec,
    resolvent_gap_eigenvalue_bound,
    restrict_to_subspace,
    solve_generalized_eigenpairs,
    spectral_distance_bound,
)
from .errors import (
    ConfigError,
    ConstraintError,
    DegeneracyError,
    EmptySubspaceError,
    InsufficientDataError,
    KindError,
    MassDefectError,
    ShapeError,
    SolverError,
    SpectralShiftError,
    SweepError,
    TrackingError,
    UndefinedRatioError,
    ValidationError,
)
from .models import (
    ModelSpec,
    SymbolFamily,
    build_conformal,
    build_dirichlet_hole,
    build_instance,
    build_pseudo,
    build_robin,
    leading_coefficient,
    prepare,
    weighted_capacity,
)
from .perturbation import (
    CorrectorResult,
    EigenfunctionDiagnostics,
    PerturbationInstance,
    ShiftReport,
    defect_functional,
    eigenfunction_diagnostics,
    first_order_shift,
    smallness_ratio,
    solve_corrector,
    torsion_duality_check,
)
from .sweep import (
    ExpansionVerdict,
    RateFit,
    SweepRow,
    SweepTable,
    fit_rate,
    geometric_schedule,
    run_sweep,
    verify_expansion,
)

__version__ = "0.1.0"
