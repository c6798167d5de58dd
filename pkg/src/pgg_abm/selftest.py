"""Quick runtime property checks behind ``pgg-abm selftest``."""

from __future__ import annotations

import itertools
from typing import Callable, NamedTuple

import numpy as np

from .nnet import Network, NetworkConfig, forward, gradient
from .pgg import ScenarioConfig, max_payoff, payoff, payoff_from_average
from .values import DEFAULT_LAMBDA, PersonalValues, UtilityInputs, gini, proportion, utility


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def check_utility_bounds(rng, n=20000) -> CheckResult:
    worst_lo, worst_hi = np.inf, -np.inf
    for _ in range(n):
        v = PersonalValues(*rng.random(4))
        b = utility(v, UtilityInputs(*rng.random(3)))
        worst_lo, worst_hi = min(worst_lo, b.total), max(worst_hi, b.total)
    ok = worst_lo >= -3 * DEFAULT_LAMBDA and worst_hi <= 1.0
    return CheckResult("utility bounds", ok, f"total in [{worst_lo:.3f}, {worst_hi:.3f}] over {n} samples")


def check_proportion_symmetry(rng, n=20000) -> CheckResult:
    pairs = rng.random((n, 2))
    bad = sum(proportion(a, b) != proportion(b, a) for a, b in pairs)
    return CheckResult("proportion symmetry", bad == 0, f"{bad} asymmetric pairs of {n}")


def check_gini(rng, n=1000) -> CheckResult:
    worst = 0.0
    for _ in range(n):
        x = rng.random(rng.integers(1, 30)) * 50
        ref = np.abs(x[:, None] - x[None, :]).sum() / (2 * x.size ** 2 * x.mean())
        worst = max(worst, abs(gini(x) - ref))
    return CheckResult("gini vs pairwise", worst < 1e-12, f"max deviation {worst:.2e}")


def check_payoff_identities(rng) -> CheckResult:
    cfg = ScenarioConfig()
    worst = 0.0
    monotone = True
    for c in itertools.product(range(0, 21, 2), repeat=cfg.group_size):
        p = payoff(c[0], c, cfg)
        worst = max(worst, abs(p - payoff_from_average(c[0], sum(c[1:]) / 3, cfg)))
        if c[0] < 20:
            monotone &= payoff(c[0] + 2, (c[0] + 2,) + c[1:], cfg) < p
    ok = worst < 1e-9 and monotone and max_payoff(cfg) == 41
    return CheckResult("payoff identities", ok, f"form gap {worst:.1e}, dominance {monotone}, max {max_payoff(cfg)}")


def check_gradients(rng, n=100) -> CheckResult:
    worst = 0.0
    h = 1e-5
    for k in range(n):
        net = Network.initialize(NetworkConfig(input_dim=3, hidden_units=8, rng_seed=k))
        x = rng.uniform(-1, 1, 3)
        y = rng.uniform(-1, 1)
        g = gradient(net, x, y)
        for p, gp in zip(net.parameters()[:3], g.parameters()[:3]):
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + h
                up = (forward(net, x) - y) ** 2
                p[idx] = old - h
                dn = (forward(net, x) - y) ** 2
                p[idx] = old
                num = (up - dn) / (2 * h)
                worst = max(worst, abs(num - gp[idx]) / max(1.0, abs(num), abs(gp[idx])))
    return CheckResult("gradient check", worst < 1e-4, f"max relative error {worst:.2e}")


CHECKS: list = [
    check_utility_bounds,
    check_proportion_symmetry,
    check_gini,
    check_payoff_identities,
    check_gradients,
]


def run_checks(seed: int = 0, checks: list[Callable] | None = None) -> list:
    rng = np.random.default_rng(seed)
    return [check(rng) for check in (checks or CHECKS)]
