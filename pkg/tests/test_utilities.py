import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adoptmatch.model import Agent, Instance, Regime, StrategyProfile
from adoptmatch.utilities import (
    UtilityVector,
    balance_residuals,
    better_count,
    beta,
    utilities,
    welfare,
)

from conftest import instance_and_profile


def one_by_one(delta_C, p=0.5, kappa=0.02):
    return Instance(np.array([[1.0]]), np.array([[1.0]]), delta_C, 0.0, kappa, kappa, p)


def three_family_child(p=0.5):
    inst = Instance(
        np.array([[1.0, 0.8, 0.6]]), np.array([[1.0], [1.0], [1.0]]), 0.9, 0.9, 0.02, 0.02, p
    )
    return inst, StrategyProfile.full(1, 3)


def test_better_count_examples():
    inst, s = three_family_child()
    assert better_count(inst, s, 0, 0) == 0
    assert better_count(inst, s, 0, 2) == 2
    empty = StrategyProfile.empty(1, 3)
    assert all(better_count(inst, empty, 0, f) == 0 for f in range(3))


def test_better_count_counts_only_mutual():
    inst, s = three_family_child()
    s = s.with_row(Agent.family(0), [False])
    assert better_count(inst, s, 0, 2) == 1


def test_better_count_index_errors():
    inst, s = three_family_child()
    with pytest.raises(IndexError):
        better_count(inst, s, 1, 0)
    with pytest.raises(IndexError):
        beta(inst, s, 0, 3)


def test_beta_examples():
    inst, s = three_family_child(p=0.5)
    assert beta(inst, s, 0, 0) == 1.0
    assert beta(inst, s, 0, 2) == 0.25
    inst9, s9 = three_family_child(p=0.9)
    assert abs(beta(inst9, s9, 0, 1) - 0.1) <= 1e-15


@pytest.mark.parametrize("regime", list(Regime))
def test_single_pair_no_discount(regime):
    u = utilities(one_by_one(0.0), StrategyProfile.full(1, 1), regime)
    assert u.u_child[0] == pytest.approx(0.48, abs=1e-15)


def test_single_pair_discounted():
    inst = one_by_one(0.99)
    u = utilities(inst, StrategyProfile.full(1, 1), Regime.FS).u_child[0]
    assert u == pytest.approx(0.48 / 0.505, abs=1e-14)
    # damped fixed-point iteration of the balance equation as an independent oracle
    z = 0.0
    for _ in range(20_000):
        rhs = 0.99 * z + (0.5 * (1.0 - 0.99 * z) - 0.02)
        z = 0.5 * z + 0.5 * rhs
    assert u == pytest.approx(z, abs=1e-12)


def test_empty_profile_zero_utilities():
    inst, _ = three_family_child()
    u = utilities(inst, StrategyProfile.empty(1, 3), Regime.FS)
    assert np.all(u.u_child == 0) and np.all(u.u_family == 0)


def test_hand_computed_fs_vs_cs():
    # child with three mutual families, p=0.5, delta=0.9, kappa=0.02, n=1
    inst, s = three_family_child()
    b = np.array([1.0, 0.5, 0.25])
    v = np.array([1.0, 0.8, 0.6])
    den = 1 - 0.9 + 0.9 * 0.5 * b.sum()
    fs = np.sum(b * 0.5 * v - 0.02) / den
    cs = np.sum(b * (0.5 * v - 0.02)) / den
    assert utilities(inst, s, Regime.FS).u_child[0] == pytest.approx(fs, abs=1e-14)
    assert utilities(inst, s, Regime.CS).u_child[0] == pytest.approx(cs, abs=1e-14)
    assert cs > fs


@given(instance_and_profile(), st.sampled_from(list(Regime)))
def test_balance_residuals(case, regime):
    inst, s = case
    u = utilities(inst, s, regime)
    assert np.max(balance_residuals(inst, s, regime, u), initial=0.0) < 1e-12


@given(instance_and_profile())
def test_at_most_one_mutual_family_fs_equals_cs(case):
    inst, s = case
    # thin the profile so each child keeps at most one mutual family
    ci = s.child_interest.copy()
    mutual = s.mutual()
    for c in range(inst.n):
        keep = np.flatnonzero(mutual[c])[:1]
        ci[c] &= ~mutual[c]
        ci[c, keep] = True
    t = StrategyProfile(ci, s.family_interest)
    assert np.all(t.mutual().sum(axis=1) <= 1)
    a = utilities(inst, t, Regime.FS).as_vector()
    b = utilities(inst, t, Regime.CS).as_vector()
    assert np.max(np.abs(a - b), initial=0.0) <= 1e-12


@given(instance_and_profile(kappa_zero=True))
def test_zero_cost_regimes_agree(case):
    inst, s = case
    a = utilities(inst, s, Regime.FS).as_vector()
    b = utilities(inst, s, Regime.CS).as_vector()
    assert np.max(np.abs(a - b), initial=0.0) <= 1e-12


@given(instance_and_profile())
def test_cs_weakly_better_at_same_profile(case):
    # per-term numerators dominate and denominators coincide
    inst, s = case
    a = utilities(inst, s, Regime.FS).as_vector()
    b = utilities(inst, s, Regime.CS).as_vector()
    assert np.all(a <= b + 1e-12)


@given(instance_and_profile(max_n=3, max_m=3), st.sampled_from(list(Regime)))
def test_adding_worst_family_sign_rule(case, regime):
    inst, s = case
    mutual = s.mutual()
    for c in range(inst.n):
        if not mutual[c].any():
            continue
        floor = inst.v_child[c, mutual[c]].min()
        lower = [f for f in inst.child_order[c] if inst.v_child[c, f] < floor]
        if not lower:
            continue
        f = lower[0]
        ci, fi = s.child_interest.copy(), s.family_interest.copy()
        ci[c, f] = fi[f, c] = True
        t = StrategyProfile(ci, fi)
        old = utilities(inst, s, regime).u_child[c]
        new = utilities(inst, t, regime).u_child[c]
        b, d = beta(inst, t, c, f), inst.delta_C
        if regime is Regime.FS:
            term = b * inst.p * (inst.v_child[c, f] - d * new) - inst.kappa_C
        else:
            term = b * (inst.p * (inst.v_child[c, f] - d * new) - inst.kappa_C)
        if abs(term) > 1e-12:
            assert np.sign(new - old) == np.sign(term)


def test_welfare_examples():
    inst2 = Instance(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[1.0, 0.0], [0.0, 1.0]]), 0.5, 0.5, 0.1, 0.1, 0.5)
    w = welfare(inst2, UtilityVector(np.array([0.5, 0.5]), np.array([0.3, 0.3])))
    assert w.as_tuple() == pytest.approx((0.5, 0.3, 0.4))
    w0 = welfare(inst2, UtilityVector(np.zeros(2), np.zeros(2)))
    assert w0.as_tuple() == (0.0, 0.0, 0.0)
    inst13 = Instance(np.array([[1.0, 0.5, 0.0]]), np.ones((3, 1)), 0.5, 0.5, 0.1, 0.1, 0.5)
    w13 = welfare(inst13, UtilityVector(np.array([0.8]), np.full(3, 0.2)))
    assert w13.avg_overall == pytest.approx(0.35)


def test_welfare_dimension_mismatch():
    inst, _ = three_family_child()
    with pytest.raises(ValueError):
        welfare(inst, UtilityVector(np.zeros(2), np.zeros(3)))
