import csv

import numpy as np
import pytest

from pgg_abm import engine
from pgg_abm.engine import (
    Agent,
    PhaseConfig,
    PhaseError,
    decide,
    encode_inputs,
    experience_phase,
    make_population,
    predicted_utilities,
    response_curve,
    training_phase,
    train_population,
)
from pgg_abm.nnet import Network, NetworkConfig
from pgg_abm.pgg import ScenarioConfig, homogeneous_utilities
from pgg_abm.values import PersonalValues

SCEN = ScenarioConfig()
FAST = PhaseConfig(experience_rounds=300, net_cfg=NetworkConfig(hidden_units=30, max_epochs=100))


def population(n=4, values=PersonalValues(si=0.5, al=0.5)):
    return make_population([(values, n, "x")])


def test_buffer_sizes():
    pop = population()
    experience_phase(pop, SCEN, PhaseConfig(experience_rounds=10), seed=0)
    assert [len(a.experiences) for a in pop] == [10] * 4
    assert [e.round for e in pop[0].experiences] == list(range(10))
    for a in pop:
        for e in a.experiences:
            assert 0 <= e.action <= 20 and 0 <= e.observation <= 20


def test_experience_is_deterministic():
    a, b = population(8), population(8)
    experience_phase(a, SCEN, PhaseConfig(experience_rounds=50), seed=3)
    experience_phase(b, SCEN, PhaseConfig(experience_rounds=50), seed=3)
    assert [x.experiences for x in a] == [y.experiences for y in b]
    c = population(8)
    experience_phase(c, SCEN, PhaseConfig(experience_rounds=50), seed=4)
    assert [x.experiences for x in a] != [y.experiences for y in c]


def test_observation_coverage():
    pop = population(8)
    experience_phase(pop, SCEN, PhaseConfig(experience_rounds=2000), seed=1)
    for a in pop:
        obs = np.array([e.observation for e in a.experiences])
        assert len(np.unique(np.round(obs).astype(int))) >= 15


def test_experience_utilities_match_game():
    pop = population(4)
    experience_phase(pop, SCEN, PhaseConfig(experience_rounds=5), seed=2, co_players=engine.CO_PLAYERS_HOMOGENEOUS)
    for e in pop[0].experiences:
        u = homogeneous_utilities(pop[0].values, e.observation, SCEN)[e.action]
        assert e.utility == pytest.approx(u, abs=1e-12)


def test_indivisible_population_rejected():
    with pytest.raises(ValueError):
        experience_phase(population(5), SCEN, PhaseConfig(experience_rounds=5), seed=0)


def test_phase_ordering_errors():
    agent = Agent(0, PersonalValues())
    with pytest.raises(PhaseError):
        training_phase(agent, FAST, SCEN, seed=0)
    with pytest.raises(PhaseError):
        decide(agent, 10, SCEN)
    pop = population()
    experience_phase(pop, SCEN, FAST, seed=0)
    training_phase(pop[0], FAST, SCEN, seed=0)
    assert pop[0].policy == engine.POLICY_LEARNED
    assert isinstance(pop[0].experiences, tuple)
    with pytest.raises(PhaseError):
        training_phase(pop[0], FAST, SCEN, seed=0)
    with pytest.raises(PhaseError):
        experience_phase(pop, SCEN, FAST, seed=0)


def test_iterations_other_than_one_rejected():
    with pytest.raises(ValueError):
        PhaseConfig(iterations=2)


def test_encode_inputs_range():
    X = encode_inputs([0, 10, 20], [20, 10, 0], SCEN)
    np.testing.assert_allclose(X, [[-1, 1], [0, 0], [1, -1]])


def test_zero_network_ties_to_lowest_action():
    agent = Agent(0, PersonalValues(), net=Network.zeros(2, 5), policy=engine.POLICY_LEARNED)
    assert all(decide(agent, x, SCEN) == 0 for x in range(21))


def test_oracle_policy_agent():
    agent = Agent(0, PersonalValues(si=1), policy=engine.POLICY_ORACLE)
    np.testing.assert_array_equal(response_curve(agent, SCEN), np.zeros(21))


def test_trained_free_rider_contributes_nothing():
    pop = population(4, PersonalValues(si=1))
    experience_phase(pop, SCEN, PhaseConfig(), seed=0)
    train_population(pop, PhaseConfig(), SCEN, seed=0)
    for a in pop:
        curve = response_curve(a, SCEN)
        assert curve.shape == (21,)
        np.testing.assert_array_equal(curve, np.zeros(21))


def test_constant_environment_prediction():
    # co-players scripted to 10: the network should reproduce the exact utility profile at x=10
    values = PersonalValues(si=0.5, al=0.5)
    agent = Agent(0, values)
    rng = np.random.default_rng(0)
    actions = rng.integers(0, 21, 3000)
    exact = homogeneous_utilities(values, 10, SCEN)
    agent.experiences = [engine.Experience(10.0, int(a), float(exact[a]), r) for r, a in enumerate(actions)]
    training_phase(agent, PhaseConfig(net_cfg=NetworkConfig(accuracy_threshold=0.999, max_epochs=1000)), SCEN, seed=0)
    pred = predicted_utilities(agent, 10, SCEN)
    span = exact.max() - exact.min()
    assert np.max(np.abs(pred - exact)) <= 0.05 * span


def test_training_is_deterministic_across_threads():
    a, b = population(4), population(4)
    for pop in (a, b):
        experience_phase(pop, SCEN, FAST, seed=5)
    train_population(a, FAST, SCEN, seed=5, threads=1)
    train_population(b, FAST, SCEN, seed=5, threads=2)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.net.weights_out, y.net.weights_out)
        np.testing.assert_array_equal(response_curve(x, SCEN), response_curve(y, SCEN))


def test_decide_rejects_out_of_range():
    agent = Agent(0, PersonalValues(), policy=engine.POLICY_ORACLE)
    with pytest.raises(ValueError):
        decide(agent, 21, SCEN)


def test_export_csv(tmp_path):
    pop = population()
    experience_phase(pop, SCEN, PhaseConfig(experience_rounds=3), seed=0)
    path = tmp_path / "exp.csv"
    engine.export_experiences_csv(pop, path)
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["agent_id", "round", "observation", "action", "utility"]
    assert len(rows) == 1 + 4 * 3
    assert float(rows[1][4]) == pop[0].experiences[0].utility


def test_derive_seed_stable():
    assert engine.derive_seed(0, 1) == engine.derive_seed(0, 1)
    assert engine.derive_seed(0, 1) != engine.derive_seed(0, 2)
    assert engine.derive_seed(0, 1) != engine.derive_seed(1, 1)
