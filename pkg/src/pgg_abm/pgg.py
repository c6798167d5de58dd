"""Linear public goods game.

Every member of a group of ``group_size`` players receives ``endowment`` units
and contributes an integer amount. The pot is multiplied by the enhancement
factor and shared equally, so a member's payoff is

    endowment - own + f * sum(contributions) / N

With 1 < f < N contributing nothing is dominant while full contribution
maximises the group total.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .values import (
    DEFAULT_LAMBDA,
    PersonalValues,
    UtilityInputs,
    gini,
    normalize_payoff,
    utility,
    utility_totals,
)

REGROUP_MODES = ("random_each_round", "fixed")


@dataclass(frozen=True)
class ScenarioConfig:
    endowment: int = 20
    enhancement_factor: float = 1.4
    group_size: int = 4
    regroup: str = "random_each_round"
    # Normaliser for p_s and p_o; None means endowment * (1 + f).
    payoff_scale: Optional[float] = None

    def __post_init__(self):
        if int(self.endowment) != self.endowment or self.endowment < 1:
            raise ValueError(f"endowment must be a positive integer, got {self.endowment!r}")
        if int(self.group_size) != self.group_size or self.group_size < 2:
            raise ValueError(f"group_size must be an integer >= 2, got {self.group_size!r}")
        f = self.enhancement_factor
        if not 1.0 < f < self.group_size:
            raise ValueError(
                f"enhancement_factor must satisfy 1 < f < group_size ({self.group_size}), got {f!r}"
            )
        if self.regroup not in REGROUP_MODES:
            raise ValueError(f"regroup must be one of {REGROUP_MODES}, got {self.regroup!r}")
        if self.payoff_scale is not None and self.payoff_scale < max_payoff(self):
            raise ValueError(
                f"payoff_scale {self.payoff_scale!r} is below the attainable maximum {max_payoff(self)!r}"
            )

    @property
    def actions(self) -> np.ndarray:
        return np.arange(self.endowment + 1)

    @property
    def n_actions(self) -> int:
        return self.endowment + 1

    @property
    def scale(self) -> float:
        if self.payoff_scale is not None:
            return float(self.payoff_scale)
        return self.endowment * (1.0 + self.enhancement_factor)


@dataclass
class RoundOutcome:
    group_members: list
    contributions: np.ndarray
    payoffs: np.ndarray
    observations: np.ndarray
    utility_inputs: list = field(default_factory=list)
    utilities: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _check_contributions(contributions, cfg: ScenarioConfig) -> np.ndarray:
    c = np.asarray(contributions)
    if c.ndim != 1 or c.size != cfg.group_size:
        raise ValueError(f"expected {cfg.group_size} contributions, got shape {c.shape}")
    if not np.all(np.isfinite(c)) or np.any(c != np.round(c)) or np.any(c < 0) or np.any(c > cfg.endowment):
        raise ValueError(f"contributions must be integers in 0..{cfg.endowment}, got {c.tolist()}")
    return c.astype(float)


def payoff(own_contribution, all_contributions, cfg: ScenarioConfig) -> float:
    """Payoff of the member contributing ``own_contribution`` (sum form)."""
    c = _check_contributions(all_contributions, cfg)
    if own_contribution not in c:
        raise ValueError(f"own contribution {own_contribution!r} is not among {c.tolist()}")
    return cfg.endowment - float(own_contribution) + cfg.enhancement_factor * c.sum() / cfg.group_size


def payoff_from_average(own_contribution: float, avg_others: float, cfg: ScenarioConfig) -> float:
    """Same payoff written in terms of the mean contribution of the other members."""
    n = cfg.group_size
    pot = own_contribution + (n - 1) * avg_others
    return cfg.endowment - own_contribution + cfg.enhancement_factor * pot / n


def max_payoff(cfg: ScenarioConfig) -> float:
    """Largest attainable payoff: contribute nothing while everyone else gives everything."""
    e, n = cfg.endowment, cfg.group_size
    return e + cfg.enhancement_factor * (n - 1) * e / n


def play_round(
    contributions,
    cfg: ScenarioConfig,
    values: Optional[Sequence[PersonalValues]] = None,
    lam: float = DEFAULT_LAMBDA,
    members: Optional[Sequence] = None,
) -> RoundOutcome:
    """Resolve one round for a single group.

    When ``values`` is given (one entry per member) the utility inputs and
    total utilities are filled in as well.
    """
    c = _check_contributions(contributions, cfg)
    n = cfg.group_size
    members = list(range(n)) if members is None else list(members)
    pays = cfg.endowment - c + cfg.enhancement_factor * c.sum() / n
    obs = (c.sum() - c) / (n - 1)
    out = RoundOutcome(members, c, pays, obs)
    if values is None:
        return out
    if len(values) != n:
        raise ValueError(f"expected {n} value sets, got {len(values)}")
    gc = gini(pays)
    scale = cfg.scale
    inputs, utils = [], []
    for i in range(n):
        others = (pays.sum() - pays[i]) / (n - 1)
        ui = UtilityInputs(normalize_payoff(pays[i], scale), normalize_payoff(others, scale), gc)
        inputs.append(ui)
        utils.append(utility(values[i], ui, lam).total)
    out.utility_inputs = inputs
    out.utilities = np.array(utils)
    return out


@dataclass
class GroupBatch:
    """Outcome arrays for many groups at once, each shaped (groups, N)
    except ``gini`` which has one entry per group."""

    observations: np.ndarray
    payoffs: np.ndarray
    p_s: np.ndarray
    p_o: np.ndarray
    gini: np.ndarray


def group_outcomes(contribs, cfg: ScenarioConfig) -> GroupBatch:
    """Vectorised payoffs and normalised observables for a (groups, N) array."""
    c = np.asarray(contribs, dtype=float)
    n = cfg.group_size
    total = c.sum(axis=1, keepdims=True)
    pays = cfg.endowment - c + cfg.enhancement_factor * total / n
    obs = (total - c) / (n - 1)
    pay_total = pays.sum(axis=1)
    others = (pay_total[:, None] - pays) / (n - 1)
    absdiff = np.abs(pays[:, :, None] - pays[:, None, :]).sum(axis=(1, 2))
    gc = np.divide(absdiff, 2 * n * pay_total, out=np.zeros_like(absdiff), where=pay_total > 0)
    return GroupBatch(obs, pays, pays / cfg.scale, others / cfg.scale, gc)


def group_utilities(contribs, cfg: ScenarioConfig, values: Sequence[PersonalValues],
                    lam: float = DEFAULT_LAMBDA):
    """Vectorised :func:`play_round` over many groups sharing one value set per seat.

    ``contribs`` has shape (groups, N); ``values`` holds one entry per column.
    Returns (observations, utilities), both shaped like ``contribs``.
    """
    batch = group_outcomes(contribs, cfg)
    si, al, co, fa = (np.array([getattr(v, k) for v in values]) for k in ("si", "al", "co", "fa"))
    utils = utility_totals(si, al, co, fa, batch.p_s, batch.p_o, batch.gini[:, None], lam)
    return batch.observations, utils


def homogeneous_utilities(values: PersonalValues, avg_others: float, cfg: ScenarioConfig,
                          lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """Exact utility of every action when each co-player contributes ``avg_others``."""
    if not 0 <= avg_others <= cfg.endowment:
        raise ValueError(f"average contribution must lie in [0, {cfg.endowment}], got {avg_others!r}")
    a = cfg.actions.astype(float)
    n = cfg.group_size
    c = np.empty((a.size, n))
    c[:, 0] = a
    c[:, 1:] = avg_others
    _, utils = group_utilities(c, cfg, [values] * n, lam)
    return utils[:, 0]


def best_response(values: PersonalValues, avg_others: float, cfg: ScenarioConfig,
                  lam: float = DEFAULT_LAMBDA) -> int:
    """Exact utility argmax under homogeneous co-players; ties go to the lowest action."""
    return int(np.argmax(homogeneous_utilities(values, avg_others, cfg, lam)))
