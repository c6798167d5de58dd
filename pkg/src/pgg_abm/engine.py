"""Four-phase agent lifecycle: initialise, experience, train, apply.

During the experience phase agents act uniformly at random and record what
they observed (the mean contribution of their co-players), what they did and
the scalar utility they received. They never see their own utility formula,
the payoffs of others or the Gini coefficient. Each agent then fits its own
network to predict utility from (observation, action) and, once trained,
picks the action with the highest predicted utility.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .nnet import Network, NetworkConfig, TrainReport, TrainingError, train
from .pgg import ScenarioConfig, best_response, group_outcomes
from .values import DEFAULT_LAMBDA, PersonalValues, utility_totals

log = logging.getLogger(__name__)

POLICY_RANDOM = "random"
POLICY_LEARNED = "learned"
POLICY_ORACLE = "oracle"

CO_PLAYERS_POPULATION = "population"
CO_PLAYERS_HOMOGENEOUS = "homogeneous"

# seed-derivation stream tags
STREAM_EXPERIENCE = 1
STREAM_NETWORK = 2


class PhaseError(RuntimeError):
    """An operation was attempted in the wrong lifecycle phase."""


class AgentTrainingError(RuntimeError):
    def __init__(self, agent_id, cause: TrainingError):
        super().__init__(f"agent {agent_id}: {cause}")
        self.agent_id = agent_id
        self.epoch = cause.epoch


def derive_seed(master_seed: int, *keys: int) -> int:
    """Deterministic 32-bit seed from a master seed and integer keys."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, *(int(k) for k in keys)])
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class Experience:
    observation: float
    action: int
    utility: float
    round: int = 0


@dataclass(frozen=True)
class PhaseConfig:
    experience_rounds: int = 2000
    net_cfg: NetworkConfig = field(default_factory=NetworkConfig)
    lam: float = DEFAULT_LAMBDA
    # experience -> training passes; only a single pass is supported
    iterations: int = 1

    def __post_init__(self):
        if self.experience_rounds < 1:
            raise ValueError("experience_rounds must be >= 1")
        if self.iterations != 1:
            raise ValueError("iterative re-experience is not supported; iterations must be 1")
        if not self.lam > 0:
            raise ValueError("lam must be positive")


@dataclass
class Agent:
    id: int
    values: PersonalValues
    experiences: list = field(default_factory=list)
    net: Optional[Network] = None
    report: Optional[TrainReport] = None
    policy: str = POLICY_RANDOM
    label: str = ""
    # affine map from standardised network output back to utility
    utility_shift: float = 0.0
    utility_scale: float = 1.0

    def experience_arrays(self):
        obs = np.array([e.observation for e in self.experiences], dtype=float)
        act = np.array([e.action for e in self.experiences], dtype=float)
        util = np.array([e.utility for e in self.experiences], dtype=float)
        return obs, act, util


def make_population(spec: Sequence[tuple], start_id: int = 0) -> list:
    """Build agents from ``(values, count, label)`` triples with consecutive ids."""
    agents = []
    next_id = start_id
    for values, count, label in spec:
        for _ in range(int(count)):
            agents.append(Agent(next_id, values, label=label))
            next_id += 1
    return agents


def experience_phase(population: Sequence[Agent], scen: ScenarioConfig, cfg: PhaseConfig, seed: int,
                     co_players: str = CO_PLAYERS_POPULATION) -> None:
    """Fill every agent's experience buffer with ``cfg.experience_rounds`` random-play records.

    With ``co_players="population"`` the agents are matched into groups of
    ``scen.group_size`` each round. With ``"homogeneous"`` every agent instead
    plays against scripted co-players who all contribute the same uniformly
    drawn amount.
    """
    if not population:
        raise ValueError("population is empty")
    for agent in population:
        if agent.policy != POLICY_RANDOM:
            raise PhaseError(f"agent {agent.id} has policy {agent.policy!r}; experience needs random policy")
    rng = np.random.default_rng(derive_seed(seed, STREAM_EXPERIENCE))
    if co_players == CO_PLAYERS_POPULATION:
        obs, act, util = _population_rounds(population, scen, cfg, rng)
    elif co_players == CO_PLAYERS_HOMOGENEOUS:
        obs, act, util = _scripted_rounds(population, scen, cfg, rng)
    else:
        raise ValueError(f"unknown co_players mode {co_players!r}")
    for j, agent in enumerate(population):
        agent.experiences.extend(
            Experience(float(o), int(a), float(u), r)
            for r, (o, a, u) in enumerate(zip(obs[:, j], act[:, j], util[:, j]))
        )


def _values_arrays(population):
    return tuple(np.array([getattr(a.values, k) for a in population]) for k in ("si", "al", "co", "fa"))


def _population_rounds(population, scen, cfg, rng):
    n_agents, n = len(population), scen.group_size
    if n_agents % n:
        raise ValueError(f"population of {n_agents} is not divisible by group size {n}")
    rounds = cfg.experience_rounds
    if scen.regroup == "random_each_round":
        seats = np.stack([rng.permutation(n_agents) for _ in range(rounds)])
    else:
        seats = np.tile(np.arange(n_agents), (rounds, 1))
    actions = rng.integers(0, scen.endowment + 1, size=(rounds, n_agents))
    # seat order -> agent index, grouped (rounds * groups, N)
    members = seats.reshape(-1, n)
    round_of = np.repeat(np.arange(rounds), n_agents // n)
    contribs = actions[round_of[:, None], members]
    batch = group_outcomes(contribs, scen)
    si, al, co, fa = (v[members] for v in _values_arrays(population))
    utils = utility_totals(si, al, co, fa, batch.p_s, batch.p_o, batch.gini[:, None], cfg.lam)

    obs = np.empty((rounds, n_agents))
    util = np.empty((rounds, n_agents))
    obs[round_of[:, None], members] = batch.observations
    util[round_of[:, None], members] = utils
    return obs, actions, util


def _scripted_rounds(population, scen, cfg, rng):
    n_agents, n = len(population), scen.group_size
    rounds = cfg.experience_rounds
    actions = rng.integers(0, scen.endowment + 1, size=(rounds, n_agents))
    others = rng.integers(0, scen.endowment + 1, size=(rounds, n_agents))
    contribs = np.empty((rounds * n_agents, n))
    contribs[:, 0] = actions.ravel()
    contribs[:, 1:] = others.ravel()[:, None]
    batch = group_outcomes(contribs, scen)
    si, al, co, fa = (np.tile(v, rounds) for v in _values_arrays(population))
    utils = utility_totals(si, al, co, fa, batch.p_s[:, 0], batch.p_o[:, 0], batch.gini, cfg.lam)
    return batch.observations[:, 0].reshape(rounds, n_agents), actions, utils.reshape(rounds, n_agents)


def encode_inputs(observation, action, scen: ScenarioConfig) -> np.ndarray:
    """Map (observation, action) in [0, endowment]^2 onto [-1, 1]^2."""
    e = float(scen.endowment)
    obs = np.asarray(observation, dtype=float)
    act = np.asarray(action, dtype=float)
    obs, act = np.broadcast_arrays(obs, act)
    return np.column_stack([2.0 * obs.ravel() / e - 1.0, 2.0 * act.ravel() / e - 1.0])


def fit_agent_network(agent_id: int, obs, act, util, scen: ScenarioConfig, net_cfg: NetworkConfig):
    """Train a fresh network on one agent's experiences.

    Returns (network, report, shift, scale). Targets are standardised with the
    sample mean and standard deviation of the recorded utilities.
    """
    util = np.asarray(util, dtype=float)
    shift = float(util.mean())
    scale = float(util.std())
    if scale == 0.0:
        scale = 1.0
    X = encode_inputs(obs, act, scen)
    y = (util - shift) / scale
    net = Network.initialize(net_cfg)
    try:
        report = train(net, (X, y), net_cfg)
    except TrainingError as exc:
        raise AgentTrainingError(agent_id, exc) from exc
    return net, report, shift, scale


def training_phase(agent: Agent, cfg: PhaseConfig, scen: ScenarioConfig, seed: int) -> TrainReport:
    """Fit the agent's own network to its experiences and switch it to the learned policy."""
    if agent.policy != POLICY_RANDOM:
        raise PhaseError(f"agent {agent.id} is already {agent.policy}")
    if not agent.experiences:
        raise PhaseError(f"agent {agent.id} has no experiences to train on")
    net_cfg = replace(cfg.net_cfg, rng_seed=derive_seed(seed, STREAM_NETWORK, agent.id))
    result = fit_agent_network(agent.id, *agent.experience_arrays(), scen, net_cfg)
    _install(agent, result)
    return agent.report


def _install(agent: Agent, result) -> None:
    agent.net, agent.report, agent.utility_shift, agent.utility_scale = result
    agent.experiences = tuple(agent.experiences)
    agent.policy = POLICY_LEARNED


def _fit_job(args):
    return fit_agent_network(*args)


def train_population(agents: Sequence[Agent], cfg: PhaseConfig, scen: ScenarioConfig, seed: int,
                     threads: int = 1) -> list:
    """Run :func:`training_phase` for every agent, optionally across processes.

    Results are identical for any ``threads`` value; each agent's network seed
    depends only on (seed, agent id).
    """
    jobs = []
    for agent in agents:
        if agent.policy != POLICY_RANDOM:
            raise PhaseError(f"agent {agent.id} is already {agent.policy}")
        if not agent.experiences:
            raise PhaseError(f"agent {agent.id} has no experiences to train on")
        net_cfg = replace(cfg.net_cfg, rng_seed=derive_seed(seed, STREAM_NETWORK, agent.id))
        jobs.append((agent.id, *agent.experience_arrays(), scen, net_cfg))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_fit_job, jobs))
    else:
        results = [_fit_job(job) for job in jobs]
    for agent, result in zip(agents, results):
        _install(agent, result)
        log.debug("agent %s trained: %s", agent.id, agent.report.stopped_by)
    return [agent.report for agent in agents]


def predicted_utilities(agent: Agent, hypothetical_avg_others: float, scen: ScenarioConfig) -> np.ndarray:
    """Predicted utility of every action given the co-players' mean contribution."""
    if agent.policy != POLICY_LEARNED or agent.net is None:
        raise PhaseError(f"agent {agent.id} has no trained network (policy {agent.policy!r})")
    X = encode_inputs(hypothetical_avg_others, scen.actions, scen)
    return agent.net.predict(X) * agent.utility_scale + agent.utility_shift


def decide(agent: Agent, hypothetical_avg_others: float, scen: ScenarioConfig,
           lam: float = DEFAULT_LAMBDA) -> int:
    """Best action by predicted (or, for oracle agents, exact) utility; ties go low."""
    if not 0 <= hypothetical_avg_others <= scen.endowment:
        raise ValueError(f"average contribution must lie in [0, {scen.endowment}]")
    if agent.policy == POLICY_ORACLE:
        return best_response(agent.values, hypothetical_avg_others, scen, lam)
    if agent.policy != POLICY_LEARNED or agent.net is None:
        raise PhaseError(f"agent {agent.id} cannot decide before training (policy {agent.policy!r})")
    X = encode_inputs(hypothetical_avg_others, scen.actions, scen)
    return int(np.argmax(agent.net.predict(X)))


def response_curve(agent: Agent, scen: ScenarioConfig, lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """Chosen contribution for every hypothetical mean contribution 0..endowment."""
    return np.array([decide(agent, x, scen, lam) for x in range(scen.endowment + 1)], dtype=int)


def export_experiences_csv(population: Sequence[Agent], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["agent_id", "round", "observation", "action", "utility"])
        for agent in population:
            for e in agent.experiences:
                writer.writerow([agent.id, e.round, repr(e.observation), e.action, repr(e.utility)])
