"""Discrete A^c minimizers for stacked prescribed-mean-curvature sheets in the
unit cylinder, with regularity/stability diagnostics and the explicit
constants of the existence theory."""

from .analysis import (
    STABILITY_SUITE,
    RegularityReport,
    StabilityResult,
    contact_radius,
    free_boundary_index,
    regularity_scan,
    stability_form,
)
from .constants import (
    ConstantsReport,
    LocalControlConstants,
    MassBoundInputs,
    MassBounds,
    check_iso_pmc,
    constants_report,
    delta1,
    delta2,
    eta,
    mass_bounds,
    solve_c_max,
)
from .errors import (
    DisconnectedContact,
    Inapplicable,
    MaxItersExceeded,
    NoContact,
    NoFreeBoundary,
    NonCoercive,
    NoThreshold,
    OrderingViolation,
    PMCError,
    RadiusTooSmall,
)
from .geometry import (
    CapParams,
    EnergyBreakdown,
    Grid2DPair,
    Mode,
    RadialProfile,
    StackProblem,
    ah_energy,
    calibration_residual,
    cap_params,
    cap_profile,
    column_length,
    graph_area,
    grid_area,
    pmc_residual,
    region_volume,
    steiner_symmetrize,
    touching_eps,
)
from .solver import (
    SolveReport,
    SolverConfig,
    StepRule,
    contact_intervals,
    shooting_oracle,
    solve,
    solve_single_sheet,
    solve_symmetric_stack,
    solve_two_membrane,
)

__version__ = "0.1.0"
