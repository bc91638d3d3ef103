"""Reset-element controllers with complex-order frequency behaviour.

Synthesis and analysis of controllers built around reset elements: harmonic
describing functions, interlaced pole/zero ladders approximating
non-integer-order derivatives, reset-map tuning, loop shaping, and a
time-domain hybrid simulator that cross-validates every frequency-domain
prediction.
"""

__version__ = "0.1.0"

from .lti import (
    FrequencyResponse,
    SingularFrequencyError,
    StateSpace,
    TransferFunction,
    freq_response,
    hz,
    load_frf,
    log_grid,
    save_frf,
    series,
    stage_plant,
    tf_to_ss,
    to_hz,
)
from .reset import (
    HarmonicResponse,
    ResetSystem,
    clegg,
    describing_function,
    fore,
    harmonic_spectrum,
    hosidf,
    lag_chain,
    sore,
    theta_d,
)
from .synthesis import (
    ApproxBand,
    ComplexOrder,
    ComplexOrderFilter,
    ControllerSpec,
    CroneApprox,
    build_benchmark_suite,
    build_cglp,
    build_cloc,
    build_pid,
    controller_harmonic,
    crone_place,
    normalize_open_loop_gain,
    order_to_slopes,
    slope_estimate,
    split_reset,
    tune_arho,
)
from .sim import (
    SimConfig,
    SimResult,
    SimulationDiverged,
    Trajectory,
    generate_trajectory,
    make_feedforward,
    metrics,
    simulate_closed_loop,
    simulate_linear_closed_loop,
    steady_state_harmonics,
)
from .analysis import (
    OpenLoopView,
    crossover_pm,
    normalized_third,
    open_loop,
    open_loop_view,
)

__all__ = [
    "ApproxBand",
    "ComplexOrder",
    "ComplexOrderFilter",
    "ControllerSpec",
    "CroneApprox",
    "FrequencyResponse",
    "HarmonicResponse",
    "OpenLoopView",
    "ResetSystem",
    "SimConfig",
    "SimResult",
    "SimulationDiverged",
    "SingularFrequencyError",
    "StateSpace",
    "Trajectory",
    "TransferFunction",
    "__version__",
    "build_benchmark_suite",
    "build_cglp",
    "build_cloc",
    "build_pid",
    "clegg",
    "controller_harmonic",
    "crone_place",
    "crossover_pm",
    "describing_function",
    "fore",
    "freq_response",
    "generate_trajectory",
    "harmonic_spectrum",
    "hosidf",
    "hz",
    "lag_chain",
    "load_frf",
    "log_grid",
    "make_feedforward",
    "metrics",
    "normalize_open_loop_gain",
    "normalized_third",
    "open_loop",
    "open_loop_view",
    "order_to_slopes",
    "save_frf",
    "series",
    "simulate_closed_loop",
    "simulate_linear_closed_loop",
    "slope_estimate",
    "sore",
    "split_reset",
    "stage_plant",
    "steady_state_harmonics",
    "tf_to_ss",
    "theta_d",
    "to_hz",
    "tune_arho",
]
