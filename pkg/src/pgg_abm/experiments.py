"""Reproduction experiments: altruism sweep, strategy replication and the
comparison between value-driven learners and exact optimisers.

Every experiment is a pure function of its configs and a master seed.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from . import engine
from .engine import Agent, PhaseConfig, derive_seed
from .pgg import ScenarioConfig, best_response, homogeneous_utilities
from .values import DEFAULT_LAMBDA, PersonalValues

FREE_RIDER = "free_rider"
HUMP_SHAPED = "hump_shaped"
CONDITIONAL_COOPERATOR = "conditional_cooperator"
CUSTOM = "custom"
OTHER = "other"

BUILTIN_VALUES = {
    FREE_RIDER: PersonalValues(si=1.0),
    HUMP_SHAPED: PersonalValues(si=0.5, al=0.5),
    CONDITIONAL_COOPERATOR: PersonalValues(co=0.8),
}

DEFAULT_AL_GRID = (0.40, 0.45, 0.50, 0.55, 0.60)

# seed streams for the individual experiments
STREAM_SWEEP = 11
STREAM_REPLICATE = 12
STREAM_FRAMEWORK = 13
STREAM_RL = 14
STREAM_RESPOND = 15


@dataclass(frozen=True)
class StrategyProfile:
    label: str
    values: PersonalValues
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"profile {self.label!r} has a negative count")
        expected = BUILTIN_VALUES.get(self.label)
        if expected is not None and expected != self.values:
            raise ValueError(f"built-in profile {self.label!r} must use values {expected}")

    @classmethod
    def builtin(cls, label: str, count: int) -> "StrategyProfile":
        return cls(label, BUILTIN_VALUES[label], count)


def default_composition() -> list:
    """44 agents, 11 groups of four.

    The three slots outside the three named strategies hold fairness-only
    agents so the population stays groupable.
    """
    return [
        StrategyProfile.builtin(CONDITIONAL_COOPERATOR, 22),
        StrategyProfile.builtin(FREE_RIDER, 13),
        StrategyProfile.builtin(HUMP_SHAPED, 6),
        StrategyProfile(CUSTOM, PersonalValues(fa=1.0), 3),
    ]


@dataclass(frozen=True)
class ClassifierThresholds:
    free_rider_mean: float = 1.0
    min_rank_correlation: float = 0.8
    peak_window: tuple = (4, 16)
    hump_decay: float = 0.6


def spearman_rho(curve) -> float:
    """Rank correlation between x = 0..len-1 and the curve; 0 for a constant curve."""
    curve = np.asarray(curve, dtype=float)
    if np.all(curve == curve[0]):
        return 0.0
    return float(spearmanr(np.arange(curve.size), curve)[0])


def classify_strategy(curve, thresholds: ClassifierThresholds = ClassifierThresholds(),
                      n_actions: int = 21) -> str:
    curve = np.asarray(curve, dtype=float)
    if curve.shape != (n_actions,):
        raise ValueError(f"expected a response curve of length {n_actions}, got shape {curve.shape}")
    last, mid = curve[-1], curve[(n_actions - 1) // 2]
    if curve.mean() <= thresholds.free_rider_mean:
        return FREE_RIDER
    if spearman_rho(curve) >= thresholds.min_rank_correlation and last >= mid:
        return CONDITIONAL_COOPERATOR
    peak = int(np.argmax(curve))
    lo, hi = thresholds.peak_window
    if lo <= peak <= hi and last <= thresholds.hump_decay * curve[peak]:
        return HUMP_SHAPED
    return OTHER


@dataclass
class ExperimentResult:
    kind: str
    curves: dict = field(default_factory=dict)        # agent id -> curve
    groups: dict = field(default_factory=dict)        # group key -> agent ids
    mean_curves: dict = field(default_factory=dict)   # group key -> mean curve
    classifications: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def group_curves(self, key) -> np.ndarray:
        return np.array([self.curves[i] for i in self.groups[key]])


def _finish(result: ExperimentResult, thresholds: ClassifierThresholds) -> ExperimentResult:
    for key, ids in result.groups.items():
        mean = result.group_curves(key).mean(axis=0)
        result.mean_curves[key] = mean
        result.classifications[key] = classify_strategy(mean, thresholds, mean.size)
    return result


def _metadata(seed, scen, phase, started, **extra) -> dict:
    meta = {
        "master_seed": int(seed),
        "scenario": asdict(scen),
        "phases": asdict(phase),
        "elapsed_seconds": round(time.perf_counter() - started, 3),
    }
    meta.update(extra)
    return meta


def _report_summary(agents) -> dict:
    return {
        str(a.id): {
            "epochs": a.report.epochs_run,
            "validation_r2": a.report.final_validation_score,
            "stopped_by": a.report.stopped_by,
        }
        for a in agents
        if a.report is not None
    }


def _pad(agents: list, values: PersonalValues, group_size: int, next_id: int, label: str) -> list:
    """Fillers with the same values so the population divides into groups."""
    fillers = []
    while (len(agents) + len(fillers)) % group_size:
        fillers.append(Agent(next_id + len(fillers), values, label=label))
    return fillers


def train_agents(population, scen, phase, seed, threads=1, co_players=engine.CO_PLAYERS_POPULATION):
    engine.experience_phase(population, scen, phase, seed, co_players=co_players)
    engine.train_population(population, phase, scen, seed, threads=threads)


def sweep_altruism(al_values: Sequence[float] = DEFAULT_AL_GRID, seed: int = 0,
                   scen: ScenarioConfig = ScenarioConfig(), phase: PhaseConfig = PhaseConfig(),
                   n_agents: int = 10, self_interest: float = 0.5, threads: int = 1,
                   thresholds: ClassifierThresholds = ClassifierThresholds()) -> ExperimentResult:
    """Mean response of ``n_agents`` identical agents for each altruism level."""
    started = time.perf_counter()
    result = ExperimentResult("sweep")
    next_id = 0
    for k, al in enumerate(al_values):
        values = PersonalValues(si=self_interest, al=al)
        key = f"{al:g}"
        agents = [Agent(next_id + i, values, label=key) for i in range(n_agents)]
        next_id += n_agents
        fillers = _pad(agents, values, scen.group_size, next_id, key + ":filler")
        next_id += len(fillers)
        population = agents + fillers
        train_agents(population, scen, phase, derive_seed(seed, STREAM_SWEEP, k), threads)
        result.groups[key] = [a.id for a in agents]
        for a in agents:
            result.curves[a.id] = engine.response_curve(a, scen, phase.lam)
        result.stats.setdefault("training", {}).update(_report_summary(agents))
    result.metadata = _metadata(seed, scen, phase, started, al_values=list(al_values),
                                n_agents=n_agents, self_interest=self_interest)
    return _finish(result, thresholds)


def replicate_experiment(profiles: Optional[Sequence[StrategyProfile]] = None, seed: int = 0,
                         scen: ScenarioConfig = ScenarioConfig(), phase: PhaseConfig = PhaseConfig(),
                         threads: int = 1,
                         thresholds: ClassifierThresholds = ClassifierThresholds()) -> ExperimentResult:
    """Train a mixed population together and report per-profile mean curves."""
    started = time.perf_counter()
    profiles = default_composition() if profiles is None else list(profiles)
    labels = [p.label for p in profiles]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate profile labels: {labels}")
    population = engine.make_population([(p.values, p.count, p.label) for p in profiles])
    if not population or len(population) % scen.group_size:
        raise ValueError(
            f"population of {len(population)} is not divisible by group size {scen.group_size}"
        )
    train_agents(population, scen, phase, derive_seed(seed, STREAM_REPLICATE), threads)
    result = ExperimentResult("replicate")
    for p in profiles:
        if p.count:
            result.groups[p.label] = [a.id for a in population if a.label == p.label]
    result.groups["population"] = [a.id for a in population]
    for a in population:
        result.curves[a.id] = engine.response_curve(a, scen, phase.lam)
    result.stats["training"] = _report_summary(population)
    result.metadata = _metadata(seed, scen, phase, started,
                                profiles=[{"label": p.label, "count": p.count, **p.values.as_dict()}
                                          for p in profiles])
    return _finish(result, thresholds)


def oracle_decide(values: PersonalValues, hypothetical_avg_others: float,
                  scen: ScenarioConfig = ScenarioConfig(), lam: float = DEFAULT_LAMBDA) -> int:
    """Exact best action assuming every co-player contributes the hypothetical mean."""
    return best_response(values, hypothetical_avg_others, scen, lam)


def oracle_curve(values: PersonalValues, scen: ScenarioConfig = ScenarioConfig(),
                 lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    return np.array([oracle_decide(values, x, scen, lam) for x in range(scen.endowment + 1)], dtype=int)


def pairwise_divergence(curves: np.ndarray) -> dict:
    """Largest pointwise gap and mean absolute gap over all pairs of curves."""
    curves = np.asarray(curves, dtype=float)
    max_gap, mean_gaps = 0.0, []
    for i, j in itertools.combinations(range(len(curves)), 2):
        diff = np.abs(curves[i] - curves[j])
        max_gap = max(max_gap, float(diff.max()))
        mean_gaps.append(float(diff.mean()))
    return {"max_pointwise_gap": max_gap, "mean_abs_gap": float(np.mean(mean_gaps)) if mean_gaps else 0.0}


def compare_rl(values: PersonalValues = BUILTIN_VALUES[CONDITIONAL_COOPERATOR], n_agents: int = 4,
               seed: int = 0, scen: ScenarioConfig = ScenarioConfig(), phase: PhaseConfig = PhaseConfig(),
               rl_mode: str = "oracle", rl_threshold: float = 0.9999, rl_max_epochs: int = 3000,
               threads: int = 1,
               thresholds: ClassifierThresholds = ClassifierThresholds()) -> ExperimentResult:
    """Value-driven learners versus full-information optimisers with the same values.

    ``rl_mode="oracle"`` answers with the exact utility argmax. ``"trained"``
    instead trains networks on the exact utility against scripted homogeneous
    co-players until the validation R^2 reaches ``rl_threshold``.
    """
    if n_agents < 2:
        raise ValueError("compare_rl needs at least two agents per group")
    started = time.perf_counter()
    result = ExperimentResult("compare-rl")

    framework = [Agent(i, values, label="framework") for i in range(n_agents)]
    fillers = _pad(framework, values, scen.group_size, n_agents, "framework:filler")
    train_agents(framework + fillers, scen, phase, derive_seed(seed, STREAM_FRAMEWORK), threads)
    base = n_agents + len(fillers)

    rl = [Agent(base + i, values, label="oracle") for i in range(n_agents)]
    if rl_mode == "oracle":
        for a in rl:
            a.policy = engine.POLICY_ORACLE
    elif rl_mode == "trained":
        rl_phase = replace(phase, net_cfg=replace(phase.net_cfg, accuracy_threshold=rl_threshold,
                                                  max_epochs=rl_max_epochs))
        train_agents(rl, scen, rl_phase, derive_seed(seed, STREAM_RL), threads,
                     co_players=engine.CO_PLAYERS_HOMOGENEOUS)
    else:
        raise ValueError(f"unknown rl_mode {rl_mode!r}")

    for a in framework + rl:
        result.curves[a.id] = engine.response_curve(a, scen, phase.lam)
    result.groups["framework"] = [a.id for a in framework]
    result.groups["oracle"] = [a.id for a in rl]
    result.stats["divergence"] = {k: pairwise_divergence(result.group_curves(k)) for k in result.groups}
    result.stats["training"] = _report_summary(framework + rl)
    result.metadata = _metadata(seed, scen, phase, started, values=values.as_dict(),
                                n_agents=n_agents, rl_mode=rl_mode)
    return _finish(result, thresholds)


def respond(values: PersonalValues, seed: int = 0, scen: ScenarioConfig = ScenarioConfig(),
            phase: PhaseConfig = PhaseConfig(), oracle: bool = False) -> dict:
    """Train one agent (in a group of like-minded agents) and query it for x = 0..endowment.

    Returns the curve plus, per x, the predicted (or exact) utility of every action.
    """
    xs = np.arange(scen.endowment + 1)
    if oracle:
        table = np.array([homogeneous_utilities(values, x, scen, phase.lam) for x in xs])
    else:
        population = [Agent(i, values, label="respond") for i in range(scen.group_size)]
        train_agents(population, scen, phase, derive_seed(seed, STREAM_RESPOND))
        table = np.array([engine.predicted_utilities(population[0], x, scen) for x in xs])
    return {"x": xs, "action": table.argmax(axis=1), "utilities": table}
