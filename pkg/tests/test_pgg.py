import itertools

import numpy as np
import pytest

from pgg_abm.pgg import (
    ScenarioConfig,
    best_response,
    group_outcomes,
    group_utilities,
    homogeneous_utilities,
    max_payoff,
    payoff,
    payoff_from_average,
    play_round,
)
from pgg_abm.values import PersonalValues, gini

CFG = ScenarioConfig()
CFG41 = ScenarioConfig(payoff_scale=41.0)


@pytest.mark.parametrize("contribs,own,expected", [
    ((0, 0, 0, 0), 0, 20.0),
    ((20, 20, 20, 20), 20, 28.0),
    ((0, 20, 20, 20), 0, 41.0),
    ((0, 20, 20, 20), 20, 21.0),
])
def test_payoff_examples(contribs, own, expected):
    assert payoff(own, contribs, CFG) == pytest.approx(expected)


def test_payoff_forms_agree_on_grid():
    for c in itertools.product(range(0, 21, 4), repeat=4):
        for i in range(4):
            others = (sum(c) - c[i]) / 3
            assert payoff(c[i], c, CFG) == pytest.approx(payoff_from_average(c[i], others, CFG), abs=1e-9)


def test_payoff_rejections():
    with pytest.raises(ValueError):
        payoff(0, (0, 0, 0, 21), CFG)
    with pytest.raises(ValueError):
        payoff(0, (0, 0, 0), CFG)
    with pytest.raises(ValueError):
        payoff(0, (0, 0.5, 0, 0), CFG)
    with pytest.raises(ValueError):
        payoff(5, (0, 0, 0, 0), CFG)


def test_max_payoff():
    assert max_payoff(CFG) == pytest.approx(41.0)
    assert max_payoff(ScenarioConfig(enhancement_factor=1.0001, group_size=2)) == pytest.approx(30.001)


@pytest.mark.parametrize("kwargs", [
    dict(endowment=0), dict(group_size=1), dict(enhancement_factor=1.0),
    dict(enhancement_factor=4.0), dict(regroup="sometimes"), dict(payoff_scale=30.0),
])
def test_scenario_rejects_degenerate(kwargs):
    with pytest.raises(ValueError):
        ScenarioConfig(**kwargs)


def test_scale_defaults_and_override():
    assert CFG.scale == pytest.approx(48.0)
    assert CFG41.scale == 41.0
    assert CFG.n_actions == 21


def test_dominance_and_social_optimum():
    # contributing one more unit always lowers own payoff, raises the group total
    for c in itertools.product(range(0, 20, 3), repeat=4):
        up = (c[0] + 1,) + c[1:]
        assert payoff(up[0], up, CFG) < payoff(c[0], c, CFG)
        assert sum(payoff(x, up, CFG) for x in up) > sum(payoff(x, c, CFG) for x in c)


def test_play_round_all_zero():
    out = play_round([0, 0, 0, 0], CFG41, values=[PersonalValues()] * 4)
    for ui in out.utility_inputs:
        assert ui.p_s == pytest.approx(20 / 41)
        assert ui.p_o == pytest.approx(20 / 41)
        assert ui.gini == 0.0
    np.testing.assert_array_equal(out.observations, [0, 0, 0, 0])


def test_play_round_one_free_rider():
    out = play_round([0, 20, 20, 20], CFG41, values=[PersonalValues()] * 4)
    np.testing.assert_allclose(out.payoffs, [41, 21, 21, 21])
    assert out.utility_inputs[0].p_s == pytest.approx(1.0)
    assert out.utility_inputs[0].gini == pytest.approx(gini([41, 21, 21, 21]))
    np.testing.assert_allclose(out.observations, [20, 40 / 3, 40 / 3, 40 / 3])


def test_play_round_values_length_checked():
    with pytest.raises(ValueError):
        play_round([0, 0, 0, 0], CFG, values=[PersonalValues()])


def test_batch_agrees_with_scalar(rng):
    values = [PersonalValues(*rng.random(4)) for _ in range(4)]
    contribs = rng.integers(0, 21, size=(300, 4))
    obs, utils = group_utilities(contribs, CFG, values)
    batch = group_outcomes(contribs, CFG)
    for row, o, u, g in zip(contribs, obs, utils, batch.gini):
        ref = play_round(row, CFG, values=values)
        np.testing.assert_allclose(o, ref.observations, atol=1e-12)
        np.testing.assert_allclose(u, ref.utilities, atol=1e-12)
        assert g == pytest.approx(gini(ref.payoffs), abs=1e-12)


def test_homogeneous_utilities_and_best_response():
    v = PersonalValues(co=0.8)
    for x in (0, 7, 20):
        u = homogeneous_utilities(v, x, CFG)
        ref = [play_round([a, x, x, x], CFG, values=[v] * 4).utilities[0] for a in range(21)]
        np.testing.assert_allclose(u, ref, atol=1e-12)
    assert all(best_response(PersonalValues(si=1), x, CFG) == 0 for x in range(21))
    with pytest.raises(ValueError):
        homogeneous_utilities(v, 21, CFG)
