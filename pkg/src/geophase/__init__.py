"""Single-qubit geometric phase gates: schedules, propagation and phase analysis."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    GaugeError,
    GeophaseError,
    NonHermitianError,
    NormalizationError,
    NumericalError,
    OpenPathError,
    ScenarioError,
    ScheduleError,
    TuningError,
    UndefinedPhaseError,
)
from .gates import (  # noqa: E402
    OrangeSliceParams,
    RotatingFieldParams,
    SpinEchoParams,
    orange_slice_schedule,
    parameter_tuned_schedule,
    rotating_field_schedule,
    spin_echo_schedule,
)
from .phases import (  # noqa: E402
    BlochPath,
    CyclicBasis,
    check_gamma_omega,
    cyclic_basis,
    decompose,
    dynamical_phase_state,
    relative_phase,
    solid_angle,
)
from .propagator import IntegratorConfig, evolve, refine_until_converged  # noqa: E402
from .schedule import (  # noqa: E402
    ConstantSegment,
    HamiltonianSchedule,
    RotatingSegment,
    SampledSegment,
    make_traceless,
    piecewise_constant,
)
from .su2 import exp_hermitian, pauli_decompose  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
