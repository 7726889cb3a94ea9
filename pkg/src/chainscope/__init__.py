"""chainscope: exact-arithmetic chain, shadowing, and entropy analyses.

Finite metric dynamical systems with dyadic-rational distances, analyzed
without floating-point comparisons: chain recurrence and components,
pseudo-orbit shadowing via a subset automaton, separated-set entropy
estimates, pair classification (asymptotic / distal / scrambled proxies),
and reference constructions (odometers, compiled shifts, inverse-limit
truncations) with verified certificates.
"""

from .caps import DEFAULT_EXACT_SET_CAP, DEFAULT_STATE_CAP
from .chains import (
    ChainDecomposition,
    ChainGraph,
    chain_class,
    chain_class_stability_audit,
    chain_components,
    chain_continuity_check,
    chain_graph,
    chain_recurrent,
    chain_stable_check,
    classify_components,
    is_chain_transitive,
    reaches,
)
from .constructions import (
    ChainPair,
    FactorMapSpec,
    InverseLimitTruncation,
    chain_pair_search,
    circular_word_system,
    combine_words,
    full_shift,
    hexpansiveness_probe,
    lift_pair_suite,
    make_chain_pair,
    map_symbols,
    monotone_shift,
    odometer,
    qc_family,
    scrambled_lift_probe,
    separated_family_builder,
    subshift_factor_builder,
    synthetic_mod2_truncation,
    tracking_demo_instance,
    xor_factor,
    xor_tower,
)
from .core import (
    AnalysisParams,
    FiniteSystem,
    ball,
    dump_system,
    load_system,
    restrict,
    system_from_json,
    system_to_json,
    validate_system,
)
from .dyadic import Dyadic, dyadic_max, dyadic_min
from .entropy import (
    TrackingSet,
    chain_separated_count,
    entropy_estimate,
    entropy_point_component_audit,
    entropy_point_test,
    gamma_set,
    growth_rate,
    h_star,
    phi_set,
    separated_count,
    uniform_entropy_rate_audit,
)
from .errors import CapExceeded, ChainscopeError, ConfigError, InternalInconsistencyError
from .pairs import (
    OmegaReport,
    PairVerdict,
    classify_pair,
    is_minimal,
    nonminimality_conditions_test,
    omega_limit,
    sensitive_points,
)
from .shadowing import (
    ShadowingVerdict,
    lift_limit_shadow,
    limit_shadow_check,
    pointwise_class_shadowing_audit,
    shadowable_points,
    shadowing_check,
    track_pseudo_orbit,
)
from .symbolic import (
    SymbolicPoint,
    SymbolicSystem,
    compile_symbolic,
    compiled_resolution,
    metric_eval,
    one_sided_word,
    periodic_word,
    words_equal,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Dyadic",
    "dyadic_max",
    "dyadic_min",
    "ChainscopeError",
    "ConfigError",
    "CapExceeded",
    "InternalInconsistencyError",
    "DEFAULT_STATE_CAP",
    "DEFAULT_EXACT_SET_CAP",
    "AnalysisParams",
    "FiniteSystem",
    "validate_system",
    "ball",
    "restrict",
    "system_to_json",
    "system_from_json",
    "load_system",
    "dump_system",
    "SymbolicPoint",
    "SymbolicSystem",
    "periodic_word",
    "one_sided_word",
    "words_equal",
    "metric_eval",
    "compile_symbolic",
    "compiled_resolution",
    "ChainGraph",
    "ChainDecomposition",
    "chain_graph",
    "reaches",
    "chain_recurrent",
    "chain_components",
    "chain_class",
    "chain_stable_check",
    "chain_class_stability_audit",
    "is_chain_transitive",
    "chain_continuity_check",
    "classify_components",
    "ShadowingVerdict",
    "shadowing_check",
    "shadowable_points",
    "pointwise_class_shadowing_audit",
    "track_pseudo_orbit",
    "limit_shadow_check",
    "lift_limit_shadow",
    "separated_count",
    "growth_rate",
    "entropy_estimate",
    "chain_separated_count",
    "TrackingSet",
    "phi_set",
    "gamma_set",
    "h_star",
    "entropy_point_test",
    "entropy_point_component_audit",
    "uniform_entropy_rate_audit",
    "PairVerdict",
    "classify_pair",
    "OmegaReport",
    "omega_limit",
    "is_minimal",
    "sensitive_points",
    "nonminimality_conditions_test",
    "FactorMapSpec",
    "xor_factor",
    "combine_words",
    "map_symbols",
    "odometer",
    "full_shift",
    "monotone_shift",
    "InverseLimitTruncation",
    "xor_tower",
    "synthetic_mod2_truncation",
    "qc_family",
    "lift_pair_suite",
    "ChainPair",
    "make_chain_pair",
    "separated_family_builder",
    "chain_pair_search",
    "subshift_factor_builder",
    "hexpansiveness_probe",
    "scrambled_lift_probe",
    "circular_word_system",
    "tracking_demo_instance",
]
