"""Bold-play equilibrium checks for N-person red-and-black games with bet-dependent win probabilities."""

from redblack.equilibrium import (
    Certificate,
    ProfileValue,
    Strategy,
    best_response,
    bold_strategy,
    certify_bold_nash,
    evaluate_profile,
    one_shot_deviation_value,
    timid_strategy,
)
from redblack.game import GameConfig, classify_state, enumerate_states, transitions, validate_config
from redblack.inequality import check_equation, check_inequality, gmin, hypothesis_check
from redblack.models import (
    Phi,
    make_constant,
    make_proportional_fixed_opp,
    make_scaled_exponential,
    make_threshold_surewin,
    slice_fg,
    validate_model,
)
from redblack.simulate import compare_empirical, run_games

__all__ = [
    "Certificate",
    "GameConfig",
    "Phi",
    "ProfileValue",
    "Strategy",
    "best_response",
    "bold_strategy",
    "certify_bold_nash",
    "check_equation",
    "check_inequality",
    "classify_state",
    "compare_empirical",
    "enumerate_states",
    "evaluate_profile",
    "gmin",
    "hypothesis_check",
    "make_constant",
    "make_proportional_fixed_opp",
    "make_scaled_exponential",
    "make_threshold_surewin",
    "one_shot_deviation_value",
    "run_games",
    "slice_fg",
    "timid_strategy",
    "transitions",
    "validate_config",
    "validate_model",
]
