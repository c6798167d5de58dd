"""Generic four-value utility function.

Agents hold four personal values in [0, 1]: self interest (si), altruism (al),
conformity (co) and fairness (fa). Each of si, al and co defines a threshold
whose shortfall is penalised linearly; fa blends a reward between the agent's
own payoff and payoff equality. The cost terms are scaled by ``lam`` so that
the reward can never outweigh an unmet condition by more than ``1/lam``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_LAMBDA = 10.0


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class PersonalValues:
    si: float = 0.0
    al: float = 0.0
    co: float = 0.0
    fa: float = 0.0

    def __post_init__(self):
        for name in ("si", "al", "co", "fa"):
            object.__setattr__(self, name, _check_unit(name, getattr(self, name)))

    def as_dict(self) -> dict:
        return {"si": self.si, "al": self.al, "co": self.co, "fa": self.fa}


@dataclass(frozen=True)
class UtilityInputs:
    """Normalised observables: own payoff, mean payoff of others, Gini of the group."""

    p_s: float
    p_o: float
    gini: float

    def __post_init__(self):
        for name in ("p_s", "p_o", "gini"):
            object.__setattr__(self, name, _check_unit(name, getattr(self, name)))


@dataclass(frozen=True)
class UtilityBreakdown:
    cost_si: float
    cost_al: float
    cost_co: float
    prop: float
    reward: float
    total: float
    lam: float = DEFAULT_LAMBDA


def proportion(p_s: float, p_o: float) -> float:
    """Ratio of the smaller to the larger payoff; 1 when both are zero."""
    p_s = _check_unit("p_s", p_s)
    p_o = _check_unit("p_o", p_o)
    hi = max(p_s, p_o)
    if hi == 0.0:
        return 1.0
    return min(p_s, p_o) / hi


def gini(payoffs) -> float:
    """Gini coefficient of non-negative payoffs (0 for an all-zero vector).

    Uses the sorted-rank identity, which is O(n log n) and equal to the
    mean absolute pairwise difference divided by twice the mean.
    """
    x = np.asarray(payoffs, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("gini of an empty payoff list is undefined")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("gini requires finite, non-negative payoffs")
    total = x.sum()
    if total == 0.0:
        return 0.0
    n = x.size
    ranks = np.arange(1, n + 1)
    xs = np.sort(x)
    # sum_{i<j} (x_j - x_i) = sum_k (2k - n - 1) x_(k)
    pair_sum = float(np.dot(2 * ranks - n - 1, xs))
    return pair_sum / (n * total)


def utility(v: PersonalValues, inputs: UtilityInputs, lam: float = DEFAULT_LAMBDA) -> UtilityBreakdown:
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    prop = proportion(inputs.p_s, inputs.p_o)
    cost_si = max(0.0, v.si - inputs.p_s)
    cost_al = max(0.0, v.al - inputs.p_o)
    cost_co = max(0.0, v.co - prop)
    reward = v.fa * (1.0 - inputs.gini) + (1.0 - v.fa) * inputs.p_s
    total = -lam * (cost_si + cost_al + cost_co) + reward
    return UtilityBreakdown(cost_si, cost_al, cost_co, prop, reward, total, float(lam))


def normalize_payoff(raw: float, max_payoff: float) -> float:
    if not max_payoff > 0:
        raise ValueError(f"max_payoff must be positive, got {max_payoff!r}")
    if raw < 0 or raw > max_payoff:
        raise ValueError(f"payoff {raw!r} outside [0, {max_payoff!r}]")
    return raw / max_payoff


def utility_totals(si, al, co, fa, p_s, p_o, gc, lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """Vectorised total utility; all arguments broadcast against each other.

    Skips per-element validation, so callers must pass in-range arrays
    produced by the game itself. Agrees with :func:`utility` elementwise.
    """
    p_s = np.asarray(p_s, dtype=float)
    p_o = np.asarray(p_o, dtype=float)
    hi = np.maximum(p_s, p_o)
    lo = np.minimum(p_s, p_o)
    prop = np.divide(lo, hi, out=np.ones(np.broadcast(lo, hi).shape), where=hi > 0)
    cost = np.maximum(0.0, si - p_s) + np.maximum(0.0, al - p_o) + np.maximum(0.0, co - prop)
    reward = fa * (1.0 - np.asarray(gc, dtype=float)) + (1.0 - fa) * p_s
    return -lam * cost + reward
