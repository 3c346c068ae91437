"""Spherical-code quantum key distribution: exact analysis and simulation.

Qubit signal constellations (trine, tetrahedron, and the BB84/six-state
basis pairs) with exclusion or basis sifting, intercept/resend and gentle
eavesdropping, exact joint-distribution enumeration, key-rate thresholds,
and reproducible Monte Carlo cross-checks.
"""

from .analysis import (
    AnalyticCurves,
    DepolarizingPoint,
    JointDistribution,
    NoThresholdError,
    QSiftEstimate,
    RateReport,
    ThresholdResult,
    analytic_curves,
    depolarizing_curves,
    enumerate_joint,
    estimate_q_from_sift,
    find_threshold,
    key_rate,
    mutual_information,
)
from .codes import (
    CodeKind,
    SphericalCode,
    basis_label,
    bloch_gram,
    code_povm,
    dual_code,
    eigen_bit,
    levi_civita_3,
    levi_civita_4,
    make_code,
    tetra_key_bit,
    trine_key_bit,
)
from .eavesdrop import (
    EnsembleMix,
    EveRecord,
    GentleIntercept,
    InterceptResend,
    eve_guess,
    gentle_povm,
    intercept,
)
from .montecarlo import (
    ComparisonReport,
    RoundArrays,
    SampleStats,
    TrialConfig,
    compare_to_oracle,
    round_uniforms,
    run_trials,
    simulate_rounds,
    stats_from_arrays,
)
from .protocol import (
    IDEAL,
    Announcement,
    Channel,
    ProtocolKind,
    RoundTranscript,
    run_round,
)
from .states import (
    Povm,
    bloch_of,
    born_probability,
    depolarize,
    pure_from_bloch,
    sample_outcome,
    sqrt_post_measurement_state,
    sqrt_psd_2x2,
    validate_state,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticCurves",
    "Announcement",
    "Channel",
    "CodeKind",
    "ComparisonReport",
    "DepolarizingPoint",
    "EnsembleMix",
    "EveRecord",
    "GentleIntercept",
    "IDEAL",
    "InterceptResend",
    "JointDistribution",
    "NoThresholdError",
    "Povm",
    "ProtocolKind",
    "QSiftEstimate",
    "RateReport",
    "RoundArrays",
    "RoundTranscript",
    "SampleStats",
    "SphericalCode",
    "ThresholdResult",
    "TrialConfig",
    "analytic_curves",
    "basis_label",
    "bloch_gram",
    "bloch_of",
    "born_probability",
    "code_povm",
    "compare_to_oracle",
    "depolarize",
    "depolarizing_curves",
    "dual_code",
    "eigen_bit",
    "enumerate_joint",
    "estimate_q_from_sift",
    "eve_guess",
    "find_threshold",
    "gentle_povm",
    "intercept",
    "key_rate",
    "levi_civita_3",
    "levi_civita_4",
    "make_code",
    "mutual_information",
    "pure_from_bloch",
    "round_uniforms",
    "run_round",
    "run_trials",
    "sample_outcome",
    "simulate_rounds",
    "sqrt_post_measurement_state",
    "sqrt_psd_2x2",
    "stats_from_arrays",
    "tetra_key_bit",
    "trine_key_bit",
    "validate_state",
]
