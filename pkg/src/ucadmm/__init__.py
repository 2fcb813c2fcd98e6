"""Unit commitment by multi-block ADMM with an increasing penalty."""

from .admm import (
    AdmmState,
    SolveResult,
    SolverConfig,
    exchange_iteration,
    gauss_seidel_iteration,
    init_state,
    rho_at,
    run_increasing_rho,
    update_multipliers,
)
from .instance_io import (
    InstanceFormatError,
    InstanceValidationError,
    SyntheticParams,
    TraceRecord,
    generate_synthetic,
    load_instance,
    load_schedule,
    save_instance,
    save_results,
)
from .model import (
    GeneratorSpec,
    LineSpec,
    RenewableSpec,
    Schedule,
    StorageSpec,
    UcInstance,
    Violation,
    check_feasibility,
    evaluate_objective,
    residual_demand,
    validate_instance,
)
from .pwq import PiecewiseQuadratic
from .single_unit import SubproblemInfeasible, solve_1uc
from .subproblems import (
    flow_update,
    injection_update,
    res_update,
    solve_transmission_step,
    storage_dispatch,
)

__version__ = "0.1.0"
