"""How many riffle shuffles mix a deck, when cards repeat or only part
of the order matters.

The library centers on descent polynomials of deck transitions: exact
enumeration for small decks, sampled histograms and moment-matched
normal curves beyond, total variation distance from uniform built on
top, and the reductions showing why exact answers are hard in general.
"""

from .approx import (
    DescentMoments,
    PairStatistics,
    TailFit,
    descent_mean,
    descent_moments,
    descent_variance,
    normal_coefficient_estimate,
    normal_error_bound_applies,
    normal_polynomial_estimate,
    tail_extrapolate,
)
from .deck import (
    Deck,
    Permutation,
    TransitionSet,
    apply,
    arrangement_count,
    compose,
    deck_text,
    descents,
    enumerate_arrangements,
    enumerate_transitions,
    identity,
    inverse,
    is_transition,
    label_id,
    label_positions,
    label_token,
    parse_deck,
    sample_uniform_rearrangement,
    sample_uniform_transition,
    transition_cardinality,
)
from .descentpoly import (
    DescentHistogram,
    DescentPolynomial,
    PolynomialFamily,
    descent_distribution_under_a_shuffle,
    descent_polynomial_family,
    digit_transition_counts,
    eulerian_row,
    exact_descent_polynomial,
    family_as_dict,
    histogram_to_polynomial,
    mc_descent_histogram,
    probabilities_to_polynomial,
    probability_from_coefficients,
    transition_probability,
)
from .errors import (
    CapExceededError,
    DeckParseError,
    DegenerateDistributionError,
    InconsistentProbabilitiesError,
    RiffmixError,
    SignatureMismatchError,
)
from .hardness import (
    MatchingInstance,
    MinCutsInstance,
    RiffleInstance,
    balanced_class_count_formula,
    balanced_complement_classes,
    matching_witness_ok,
    mincuts_witness_ok,
    parse_instance,
    random_matching_instance,
    reduce_matching_to_riffle,
    reduce_matching_to_riffle_bracketed,
    reduce_riffle_to_mincuts,
    riffle_witness_ok,
    solve_matching,
    solve_mincuts,
    solve_riffle,
    strided_descent_counts,
    strided_total,
)
from .shuffle import (
    min_cuts,
    permutation_probability,
    sample_a_shuffle,
    sample_digit_sequence,
    sequence_to_permutation,
)
from .tvd import (
    ALPHA_TABLE,
    BACKENDS,
    FIXED_SOURCE,
    FIXED_TARGET,
    Scenario,
    TvdEstimate,
    bayer_diaconis_tvd,
    custom_scenario,
    exact_tvd_small,
    mc_tvd,
    riffles_to_packets,
    scenario,
    scenario_names,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA_TABLE",
    "BACKENDS",
    "CapExceededError",
    "Deck",
    "DeckParseError",
    "DegenerateDistributionError",
    "DescentHistogram",
    "DescentMoments",
    "DescentPolynomial",
    "FIXED_SOURCE",
    "FIXED_TARGET",
    "InconsistentProbabilitiesError",
    "MatchingInstance",
    "MinCutsInstance",
    "PairStatistics",
    "Permutation",
    "PolynomialFamily",
    "RiffleInstance",
    "RiffmixError",
    "Scenario",
    "SignatureMismatchError",
    "TailFit",
    "TransitionSet",
    "TvdEstimate",
    "apply",
    "arrangement_count",
    "balanced_class_count_formula",
    "balanced_complement_classes",
    "bayer_diaconis_tvd",
    "compose",
    "custom_scenario",
    "deck_text",
    "descent_distribution_under_a_shuffle",
    "descent_mean",
    "descent_moments",
    "descent_polynomial_family",
    "descent_variance",
    "descents",
    "digit_transition_counts",
    "enumerate_arrangements",
    "enumerate_transitions",
    "eulerian_row",
    "exact_descent_polynomial",
    "exact_tvd_small",
    "family_as_dict",
    "histogram_to_polynomial",
    "identity",
    "inverse",
    "is_transition",
    "label_id",
    "label_positions",
    "label_token",
    "matching_witness_ok",
    "mc_descent_histogram",
    "mc_tvd",
    "min_cuts",
    "mincuts_witness_ok",
    "normal_coefficient_estimate",
    "normal_error_bound_applies",
    "normal_polynomial_estimate",
    "parse_deck",
    "parse_instance",
    "permutation_probability",
    "probabilities_to_polynomial",
    "probability_from_coefficients",
    "random_matching_instance",
    "reduce_matching_to_riffle",
    "reduce_matching_to_riffle_bracketed",
    "reduce_riffle_to_mincuts",
    "riffle_witness_ok",
    "riffles_to_packets",
    "sample_a_shuffle",
    "sample_digit_sequence",
    "sample_uniform_rearrangement",
    "sample_uniform_transition",
    "scenario",
    "scenario_names",
    "sequence_to_permutation",
    "solve_matching",
    "solve_mincuts",
    "solve_riffle",
    "strided_descent_counts",
    "strided_total",
    "tail_extrapolate",
    "transition_cardinality",
    "transition_probability",
]
