"""Generalized integral Menger curvature energies on discrete closed curves."""

from .energy import (
    ConvergenceTable,
    EnergyParams,
    EnergyReport,
    QuadratureSpec,
    RangeClass,
    RangeLabel,
    classify,
    energy_convergence,
    energy_decomposed,
    energy_full,
    strand_pair_experiment,
)
from .errors import (
    BadParams,
    BadPreset,
    BadRegime,
    DegenerateConstraint,
    DegenerateTriple,
    MengerError,
    NotArclength,
    QuadratureNotConverged,
    SelfIntersection,
    StepFailure,
    ZeroSeminorm,
)
from .flow import FlowConfig, FlowResult, FlowState, flow_step, run_flow
from .geometry import (
    ClosedCurve,
    PeriodicOffset,
    TriplePoint,
    bilipschitz_constant,
    circle_distance,
    circumradius,
    load_curve,
    make_preset,
    min_segment_distance,
    resample_arclength,
    rpq_kernel,
    save_curve,
    wedge_norm,
)
from .sobolev import (
    EquivalenceReport,
    HoelderReport,
    SeminormSpec,
    energy_space_ratios,
    equivalence_check,
    hoelder_estimate,
    seminorm_first,
    seminorm_second,
)
from .symbol import (
    QFormInputs,
    SymbolTable,
    fourier_coefficients,
    q_form_direct,
    q_form_fourier,
    rho_asymptotic,
    rho_k,
    tilde_rho,
)
from .variation import (
    GradientField,
    ProjectedGradient,
    cross_check_variation,
    discrete_gradient,
    energy_and_gradient,
    first_variation,
    length_gradient,
    pairing,
    projected_gradient,
    variation_gradient,
)

__version__ = "0.1.0"
