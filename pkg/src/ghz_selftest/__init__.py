"""Numerical toolkit for self-testing the N-round GHZ game."""

from .game import classical_value, enumerate_inputs, sample_input, win_predicate
from .rigidity import (
    chained_isometry,
    check_anticommute,
    check_commute,
    check_correct_pauli,
    check_keyineqs,
    check_multi_pauli,
    check_push,
    extract,
    ghz_eigenbasis,
    relation_report,
    swap_isometry,
)
from .strategy import (
    NoiseSpec,
    Strategy,
    ideal_strategy,
    perturb,
    random_strategy,
    simulate,
    validate,
    winning_probability,
)

__version__ = "0.1.0"

__all__ = [
    "NoiseSpec",
    "Strategy",
    "chained_isometry",
    "check_anticommute",
    "check_commute",
    "check_correct_pauli",
    "check_keyineqs",
    "check_multi_pauli",
    "check_push",
    "classical_value",
    "enumerate_inputs",
    "extract",
    "ghz_eigenbasis",
    "ideal_strategy",
    "perturb",
    "random_strategy",
    "relation_report",
    "sample_input",
    "simulate",
    "swap_isometry",
    "validate",
    "win_predicate",
    "winning_probability",
]
