"""Commutative pairs of linear time-varying systems on cascade channels.

The library synthesizes system pairs whose cascades realize the same
input-output map in either order, simulates double-channel and switched
single-channel transmission with a deterministic fixed-step integrator,
and compares the power spectra of the differently shaped signals that
travel on the medium.
"""

from .commute import (
    CommutativityVerdict,
    NotApplicableError,
    SynthesisParams,
    commutation_deviation,
    commutativity_indicator,
    feedthrough_fn,
    nonzero_ic_condition,
    synthesize_pair_order1,
    synthesize_pair_order2,
)
from .ltvsys import (
    ArityError,
    DegenerateLeadingCoefficient,
    EigenvalueKind,
    EigenvalueReport,
    LtvSystem,
    NonPositiveLeading,
    SystemState,
    average_eigenvalues,
    frozen_eigenvalues,
    make_system,
    state_derivative,
)
from .scenario import (
    RunResult,
    Scenario,
    SemanticError,
    bundled_scenario_names,
    build_systems,
    export_csv,
    export_spectrum_csv,
    load_bundled,
    parse_scenario,
    read_trace_csv,
    run_scenario,
)
from .signalgen import ConstantLevel, PulseTrain, Sawtooth, SignalSpec, Sine, sample
from .simulate import (
    PATH_AB,
    PATH_BA,
    SimulationTrace,
    SolverConfig,
    SwitchingSchedule,
    deviation_outside_transients,
    integrate_cascade,
    integrate_switched,
    relative_sup_deviation,
    settle_after_switches,
)
from .spectrum import (
    GridMismatch,
    PowerSpectrum,
    SeriesTooShort,
    Window,
    parseval_mismatch,
    periodogram,
    spectral_distance,
)
from .timefn import (
    Constant,
    Cos,
    DomainError,
    Negate,
    ParseError,
    Power,
    Product,
    RootQuotient,
    Sin,
    Sum,
    T,
    TimeFunction,
    TimeVar,
    differentiate,
    evaluate,
    is_structurally_constant,
    normalize,
    parse_expression,
    render,
)

__version__ = "0.1.0"
