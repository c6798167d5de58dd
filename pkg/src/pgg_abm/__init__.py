"""Value-driven agent-based public goods game with neural-network decision making."""

__version__ = "0.1.0"

from .values import PersonalValues, UtilityInputs, UtilityBreakdown, utility, gini, proportion
from .pgg import ScenarioConfig, RoundOutcome, payoff, max_payoff, play_round

__all__ = [
    "PersonalValues",
    "UtilityInputs",
    "UtilityBreakdown",
    "utility",
    "gini",
    "proportion",
    "ScenarioConfig",
    "RoundOutcome",
    "payoff",
    "max_payoff",
    "play_round",
]
