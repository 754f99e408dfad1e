"""Threshold strategies, induced profiles and best responses."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _arrays, kernels
from .model import Agent, Instance, Regime, StrategyProfile
from .utilities import agent_utility, utilities

DEFAULT_SUBSET_LIMIT = 15


@dataclass(frozen=True)
class ThresholdProfile:
    y_child: np.ndarray
    y_family: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y_child", np.asarray(self.y_child, dtype=np.float64))
        object.__setattr__(self, "y_family", np.asarray(self.y_family, dtype=np.float64))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.y_child, self.y_family])

    @classmethod
    def from_vector(cls, y, n: int) -> "ThresholdProfile":
        y = np.asarray(y, dtype=np.float64)
        return cls(y[:n].copy(), y[n:].copy())

    def leq_c(self, other: "ThresholdProfile", tol: float = 0.0) -> bool:
        """Child-side order: children weakly lower, families weakly higher."""
        return bool(
            np.all(self.y_child <= other.y_child + tol) and np.all(self.y_family >= other.y_family - tol)
        )

    def to_dict(self) -> dict:
        return {"y_child": self.y_child.tolist(), "y_family": self.y_family.tolist()}


class BestResponse(NamedTuple):
    interest: np.ndarray
    utility: float
    method: str  # prefix-scan | subset-enumeration | fs-ts-fixed-point


class EquilibriumCheck(NamedTuple):
    ok: bool
    gap: float
    agent: Optional[Agent]


# -- induced profiles --------------------------------------------------------


def _induce(inst: Instance, y: ThresholdProfile, regime: Regime) -> StrategyProfile:
    if y.y_child.shape != (inst.n,) or y.y_family.shape != (inst.m,):
        raise ValueError("threshold profile does not match instance dimensions")
    vc, vf = _arrays.values(inst)
    prm = _arrays.params(inst)
    if _arrays.is_cs(regime):
        sc, sf = kernels.K.induce_cs(vc, vf, y.y_child, y.y_family, prm)
    else:
        sc, sf = kernels.K.induce_fs(vc, vf, _arrays.child_order(inst), y.y_child, y.y_family, prm)
    return StrategyProfile(np.asarray(sc, bool), np.asarray(sf, bool))


def induce_cs_profile(inst: Instance, y: ThresholdProfile) -> StrategyProfile:
    return _induce(inst, y, Regime.CS)


def induce_fs_profile(inst: Instance, y: ThresholdProfile) -> StrategyProfile:
    """FS threshold profile built by scanning each child's families best-first.

    The running beta for a family only depends on strictly better families
    already found mutual, so one ordered pass per child suffices.
    """
    return _induce(inst, y, Regime.FS)


def induce_profile(inst: Instance, y: ThresholdProfile, regime: Regime) -> StrategyProfile:
    return _induce(inst, y, Regime(regime))


def threshold_violations(inst: Instance, s: StrategyProfile, y: ThresholdProfile, regime: Regime):
    """Agents whose interest vector in ``s`` is not the threshold rule at ``y``.

    Checked by direct substitution into the indicator definitions, with beta
    evaluated at ``s`` itself for FS.
    """
    regime = Regime(regime)
    p = inst.p
    q = 1.0 - p
    mutual = s.mutual()
    bad = []
    betas = np.ones((inst.n, inst.m))
    if regime is Regime.FS:
        for c in range(inst.n):
            for f in range(inst.m):
                b = np.count_nonzero(mutual[c] & (inst.v_child[c] > inst.v_child[c, f]))
                betas[c, f] = _arrays.power(q, b)
    for c in range(inst.n):
        want = betas[c] * p * (inst.v_child[c] - inst.delta_C * y.y_child[c]) >= inst.kappa_C
        if not np.array_equal(want, s.child_interest[c]):
            bad.append(Agent.child(c))
    for f in range(inst.m):
        want = betas[:, f] * p * (inst.v_family[f] - inst.delta_F * y.y_family[f]) >= inst.kappa_F
        if not np.array_equal(want, s.family_interest[f]):
            bad.append(Agent.family(f))
    return bad


# -- best responses ----------------------------------------------------------


def _ratio(num, den_beta, n, delta, p):
    return (num / n) / (1.0 - delta + delta * p * den_beta / n)


def _family_betas(inst: Instance, s: StrategyProfile, f: int) -> np.ndarray:
    # beta_cf does not depend on s_f: it only counts families c prefers to f
    mutual = s.mutual()
    better = mutual & (inst.v_child > inst.v_child[:, [f]])
    q = 1.0 - inst.p
    return np.array([_arrays.power(q, k) for k in better.sum(axis=1)])


def _child_best_response(inst: Instance, s: StrategyProfile, c: int, regime: Regime) -> BestResponse:
    p, q = inst.p, 1.0 - inst.p
    d, k = inst.delta_C, inst.kappa_C
    order = inst.child_order[c]
    cand = [f for f in order if s.family_interest[f, c]]
    best_k, best_u = 0, 0.0
    num = den = 0.0
    b = 1.0
    for j, f in enumerate(cand):
        v = inst.v_child[c, f]
        if regime is Regime.FS:
            num += b * p * v - k
        else:
            num += b * (p * v - k)
        den += b
        b *= q
        u = _ratio(num, den, inst.n, d, p)
        if u > best_u:
            best_k, best_u = j + 1, u
    row = np.zeros(inst.m, bool)
    row[cand[:best_k]] = True
    return BestResponse(row, float(best_u), "prefix-scan")


def _family_cs_best_response(inst: Instance, s: StrategyProfile, f: int) -> BestResponse:
    p = inst.p
    d, k = inst.delta_F, inst.kappa_F
    betas = _family_betas(inst, s, f)
    cand = [c for c in np.argsort(-inst.v_family[f], kind="stable") if s.child_interest[c, f]]
    best_k, best_u = 0, 0.0
    num = den = 0.0
    for j, c in enumerate(cand):
        num += betas[c] * (p * inst.v_family[f, c] - k)
        den += betas[c]
        u = _ratio(num, den, inst.n, d, p)
        if u > best_u:
            best_k, best_u = j + 1, u
    row = np.zeros(inst.n, bool)
    row[cand[:best_k]] = True
    return BestResponse(row, float(best_u), "prefix-scan")


def _family_fs_best_response(inst: Instance, s: StrategyProfile, f: int, subset_limit: int) -> BestResponse:
    p = inst.p
    d, k = inst.delta_F, inst.kappa_F
    n = inst.n
    betas = _family_betas(inst, s, f)
    cand = np.array(
        [c for c in np.argsort(-inst.v_family[f], kind="stable") if s.child_interest[c, f]], dtype=np.int64
    )
    a = betas[cand] * p * inst.v_family[f, cand] - k
    b = betas[cand]
    row = np.zeros(n, bool)

    if len(cand) <= subset_limit:
        # size-major, then lexicographic over best-first candidates: first maximum wins ties
        best_u, best_sel = 0.0, ()
        for r in range(1, len(cand) + 1):
            combos = np.array(list(itertools.combinations(range(len(cand)), r)), dtype=np.int64)
            u = _ratio(a[combos].sum(axis=1), b[combos].sum(axis=1), n, d, p)
            i = int(np.argmax(u))
            if u[i] > best_u:
                best_u, best_sel = float(u[i]), tuple(combos[i])
        row[cand[list(best_sel)]] = True
        return BestResponse(row, best_u, "subset-enumeration")

    # Dinkelbach iteration: the FS threshold rule at the current utility is the
    # maximiser of num - lam * den, and lam increases until the set is stable
    lam = 0.0
    sel = None
    for _ in range(4 * len(cand) + 10):
        new = b * p * (inst.v_family[f, cand] - d * lam) >= k
        if sel is not None and np.array_equal(new, sel):
            break
        sel = new
        lam = _ratio(a[sel].sum(), b[sel].sum(), n, d, p) if sel.any() else 0.0
    if lam < 0.0:
        sel = np.zeros(len(cand), bool)
        lam = 0.0
    row[cand[sel]] = True
    return BestResponse(row, float(lam), "fs-ts-fixed-point")


def best_response(
    inst: Instance,
    s: StrategyProfile,
    agent: Agent,
    regime: Regime,
    subset_limit: int = DEFAULT_SUBSET_LIMIT,
) -> BestResponse:
    """Utility-maximising interest vector for ``agent`` against the rest of ``s``.

    Children (both regimes) and CS families have value-threshold best
    responses, found by scanning prefixes of the counterpart-interested
    agents. FS families need not; for those all subsets are enumerated when
    at most ``subset_limit`` children are interested, else the FS threshold
    rule is iterated to its fixed point.
    """
    regime = Regime(regime)
    if agent.is_child:
        return _child_best_response(inst, s, agent.index, regime)
    if regime is Regime.CS:
        return _family_cs_best_response(inst, s, agent.index)
    return _family_fs_best_response(inst, s, agent.index, subset_limit)


def best_response_bruteforce(inst: Instance, s: StrategyProfile, agent: Agent, regime: Regime) -> BestResponse:
    """Exhaustive oracle: evaluates all 2^k interest rows with the full utility solver."""
    k = inst.m if agent.is_child else inst.n
    if k > 20:
        raise ValueError("brute force limited to 20 counterparts")
    best_u, best_row = -np.inf, None
    for bits in itertools.product((False, True), repeat=k):
        row = np.array(bits, bool)
        u = agent_utility(inst, s.with_row(agent, row), agent, regime)
        if u > best_u:
            best_u, best_row = u, row
    return BestResponse(best_row, float(best_u), "brute-force")


def is_equilibrium(inst: Instance, s: StrategyProfile, regime: Regime, tol: float = 1e-8, **kw) -> EquilibriumCheck:
    """Nash check: nobody gains more than ``tol`` by deviating."""
    u = utilities(inst, s, regime)
    worst, who = -np.inf, None
    for agent in inst.agents():
        gap = best_response(inst, s, agent, regime, **kw).utility - u.of(agent)
        if gap > worst:
            worst, who = gap, agent
    ok = worst <= tol
    return EquilibriumCheck(bool(ok), float(max(worst, 0.0)), None if ok else who)
