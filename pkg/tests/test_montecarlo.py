import itertools

import numpy as np
import pytest

from adoptmatch import kernels
from adoptmatch.equilibrium import Side, solve_equilibrium
from adoptmatch.gen import generate_instance
from adoptmatch.model import Agent, Instance, Regime, StrategyProfile
from adoptmatch.montecarlo import (
    cs_order_utility,
    horizon,
    simulate_cs_with_order,
    simulate_utility,
)
from adoptmatch.utilities import utilities

RUNS = 100_000


def test_single_pair_no_discount(backend):
    inst = Instance(np.array([[1.0]]), np.array([[1.0]]), 0.0, 0.0, 0.02, 0.02, 0.5)
    est = simulate_utility(inst, StrategyProfile.full(1, 1), Regime.FS, Agent.child(0), RUNS, seed=1)
    assert est.agrees(0.48)
    assert est.truncation_horizon == 1


@pytest.mark.parametrize("regime", list(Regime))
def test_equilibrium_2x2(backend, regime):
    inst = generate_instance(2, 2, 0.0, 5)
    res = solve_equilibrium(inst, regime, Side.FAMILY_OPTIMAL)
    for agent in inst.agents():
        est = simulate_utility(inst, res.profile, regime, agent, RUNS, seed=3)
        assert est.agrees(res.utilities.of(agent)), (agent, est, res.utilities.of(agent))


@pytest.mark.parametrize("regime", list(Regime))
def test_dense_profile_3x3(regime):
    # many mutual pairs, so FS and CS mechanics genuinely differ
    inst = generate_instance(3, 3, 0.25, 9, delta_C=0.8, delta_F=0.8, kappa_C=0.05, kappa_F=0.05, p=0.4)
    s = StrategyProfile.full(3, 3)
    u = utilities(inst, s, regime)
    for agent in inst.agents():
        est = simulate_utility(inst, s, regime, agent, RUNS, seed=11)
        assert est.agrees(u.of(agent)), (agent, est, u.of(agent))


def test_empty_correspondence_exact_zero():
    inst = generate_instance(2, 2, 0.0, 0)
    s = StrategyProfile(np.ones((2, 2), bool), np.zeros((2, 2), bool))
    for agent in inst.agents():
        est = simulate_utility(inst, s, Regime.CS, agent, 1000, seed=0)
        assert est.mean == 0.0 and est.stderr == 0.0


def test_deterministic_given_seed():
    inst = generate_instance(2, 2, 0.0, 5)
    s = StrategyProfile.full(2, 2)
    a = simulate_utility(inst, s, Regime.FS, Agent.family(1), 25_000, seed=42)
    b = simulate_utility(inst, s, Regime.FS, Agent.family(1), 25_000, seed=42)
    c = simulate_utility(inst, s, Regime.FS, Agent.family(1), 25_000, seed=43)
    assert a == b and a != c


def test_horizon_bound():
    T, bound = horizon(0.99, 1.0, 0.02)
    assert bound < 1e-4
    assert 0.99 ** (T - 1) * (1.0 + 0.02 / 0.01) >= 1e-4
    assert horizon(0.0, 1.0, 0.5) == (1, 0.0)


def test_runs_validated():
    inst = generate_instance(1, 1, 0.0, 0)
    with pytest.raises(ValueError):
        simulate_utility(inst, StrategyProfile.full(1, 1), Regime.FS, Agent.child(0), 0)


# -- processing order -------------------------------------------------------------


def single_child(values, delta=0.9, kappa=0.05, p=0.5):
    m = len(values)
    inst = Instance(np.array([values]), np.ones((m, 1)), delta, delta, kappa, kappa, p)
    return inst, StrategyProfile.full(1, m)


def test_decreasing_order_matches_default(backend):
    inst, s = single_child([1.0, 0.6, 0.3])
    a = simulate_cs_with_order(inst, s, 0, [0, 1, 2], RUNS, seed=5)
    b = simulate_utility(inst, s, Regime.CS, Agent.child(0), RUNS, seed=5)
    assert a == b


def test_exact_order_oracle_matches_balance_equation():
    inst, s = single_child([1.0, 0.6, 0.3])
    assert cs_order_utility(inst, s, 0, [0, 1, 2]) == pytest.approx(
        utilities(inst, s, Regime.CS).u_child[0], abs=1e-14
    )


@pytest.mark.parametrize("m", [2, 3, 4])
def test_decreasing_order_optimal_exact(m):
    rng = np.random.default_rng(m)
    for _ in range(20):
        vals = np.sort(rng.random(m))[::-1]
        inst, s = single_child(list(vals), delta=rng.choice([0.0, 0.5, 0.95]), kappa=0.02)
        best = cs_order_utility(inst, s, 0, list(range(m)))
        for perm in itertools.permutations(range(m)):
            assert cs_order_utility(inst, s, 0, perm) <= best + 1e-15


def test_wrong_order_simulated_worse():
    inst, s = single_child([1.0, 0.5, 0.1], kappa=0.01)
    good = simulate_cs_with_order(inst, s, 0, [0, 1, 2], RUNS, seed=8)
    bad = simulate_cs_with_order(inst, s, 0, [2, 1, 0], RUNS, seed=9)
    gap = good.mean - bad.mean
    assert gap > 3 * np.hypot(good.stderr, bad.stderr)
    assert bad.agrees(cs_order_utility(inst, s, 0, [2, 1, 0]))


def test_single_family_orders_identical():
    inst, s = single_child([1.0])
    assert simulate_cs_with_order(inst, s, 0, [0], 5000, seed=1) == simulate_utility(
        inst, s, Regime.CS, Agent.child(0), 5000, seed=1
    )


@pytest.mark.parametrize("order", [[0, 1], [0, 0, 1], [0, 1, 2, 3], [0, 5, 1]])
def test_invalid_order_rejected(order):
    inst, s = single_child([1.0, 0.6, 0.3])
    with pytest.raises(ValueError):
        simulate_cs_with_order(inst, s, 0, order, 10)


def test_backends_share_distribution():
    inst = generate_instance(2, 2, 0.0, 5)
    s = StrategyProfile.full(2, 2)
    prev = kernels.backend_name()
    try:
        est = {}
        for name in kernels.BACKENDS:
            kernels.use_backend(name)
            est[name] = simulate_utility(inst, s, Regime.FS, Agent.family(0), RUNS, seed=2)
    finally:
        kernels.use_backend(prev)
    a, b = est["numba"], est["numpy"]
    assert abs(a.mean - b.mean) <= 4 * np.hypot(a.stderr, b.stderr)
