"""Step-by-step simulation of the search process for one tagged agent.

Each step one child type is drawn uniformly. Matched counterparts are
replaced instantly, so only the tagged agent's own history matters and
episodes end when it matches. Payoffs at step t carry the factor delta^t on
both value and cost. Episodes are truncated at a horizon chosen so that the
discarded tail is below ``BIAS_TARGET``.

Runs are split into fixed-size chunks, each with its own stream spawned from
``np.random.SeedSequence(seed)``, so the estimate depends only on the seed
and the run count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .model import Agent, Instance, Regime, StrategyProfile

BIAS_TARGET = 1e-4
CHUNK = 10_000


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    stderr: float
    runs: int
    truncation_horizon: int
    truncation_bias_bound: float

    def agrees(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean - target) <= sigmas * self.stderr + self.truncation_bias_bound


def horizon(delta: float, vbar: float, max_cost: float, target: float = BIAS_TARGET):
    """Smallest T with delta^T * (vbar + max_cost / (1 - delta)) < target, and that bound."""
    scale = vbar + max_cost / (1.0 - delta)
    if scale < target:
        return 1, 0.0
    if delta == 0.0:
        return 1, 0.0
    T = max(1, math.ceil(math.log(target / scale) / math.log(delta)))
    while delta**T * scale >= target:
        T += 1
    while T > 1 and delta ** (T - 1) * scale < target:
        T -= 1
    return T, delta**T * scale


def _chunks(runs: int, seed):
    sizes = [CHUNK] * (runs // CHUNK)
    if runs % CHUNK:
        sizes.append(runs % CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    return zip(sizes, seqs)


def _aggregate(kernel, runs, seed, T, bound, *args) -> SimEstimate:
    if runs < 1:
        raise ValueError("runs must be at least 1")
    total = total_sq = 0.0
    for size, ss in _chunks(runs, seed):
        rng = np.random.Generator(np.random.PCG64(ss))
        a, b = kernel(rng, size, T, *args)
        total += a
        total_sq += b
    mean = total / runs
    if runs > 1:
        var = max(total_sq - runs * mean * mean, 0.0) / (runs - 1)
        se = math.sqrt(var / runs)
    else:
        se = 0.0
    return SimEstimate(float(mean), float(se), int(runs), int(T), float(bound))


def _child_run(inst: Instance, c: int, fams: np.ndarray, cs: bool, runs: int, seed) -> SimEstimate:
    vals = np.ascontiguousarray(inst.v_child[c, fams], dtype=np.float64)
    T, bound = horizon(inst.delta_C, inst.v_bar, inst.kappa_C * len(fams))
    return _aggregate(
        kernels.K.sim_child, runs, seed, T, bound,
        inst.n, c, vals, cs, inst.p, inst.kappa_C, inst.delta_C,
    )


def simulate_utility(
    inst: Instance, s: StrategyProfile, regime: Regime, agent: Agent, runs: int, seed: int = 0
) -> SimEstimate:
    """Monte Carlo estimate of ``agent``'s expected discounted utility under fixed ``s``."""
    cs = Regime(regime) is Regime.CS
    mutual = s.mutual()
    if agent.is_child:
        c = agent.index
        fams = np.array([f for f in inst.child_order[c] if mutual[c, f]], dtype=np.int64)
        return _child_run(inst, c, fams, cs, runs, seed)
    f = agent.index
    col = np.ascontiguousarray(mutual[:, f], dtype=np.uint8)
    better = np.ascontiguousarray(
        (mutual & (inst.v_child > inst.v_child[:, [f]])).sum(axis=1), dtype=np.int64
    )
    vals = np.ascontiguousarray(inst.v_family[f], dtype=np.float64)
    T, bound = horizon(inst.delta_F, inst.v_bar, inst.kappa_F)
    return _aggregate(
        kernels.K.sim_family, runs, seed, T, bound,
        inst.n, col, better, vals, cs, inst.p, inst.kappa_F, inst.delta_F,
    )


def simulate_cs_with_order(
    inst: Instance, s: StrategyProfile, c: int, order: Sequence[int], runs: int, seed: int = 0
) -> SimEstimate:
    """CS child simulation where the caseworker walks ``order`` instead of decreasing value."""
    mutual = set(np.flatnonzero(s.mutual()[c]).tolist())
    order = [int(f) for f in order]
    if len(order) != len(set(order)) or set(order) != mutual:
        raise ValueError(f"order {order} is not a permutation of child {c}'s mutual families {sorted(mutual)}")
    return _child_run(inst, c, np.array(order, dtype=np.int64), True, runs, seed)


def cs_order_utility(inst: Instance, s: StrategyProfile, c: int, order: Sequence[int]) -> float:
    """Exact CS child utility when mutual families are investigated in ``order``.

    Solves u = delta*u + (1/n) sum_j q^j (p (v_j - delta*u) - kappa) with q = 1 - p.
    """
    q = 1.0 - inst.p
    num, reach = 0.0, 1.0
    for f in order:
        num += reach * (inst.p * inst.v_child[c, f] - inst.kappa_C)
        reach *= q
    d = inst.delta_C
    return (num / inst.n) / (1.0 - d + d * (1.0 - reach) / inst.n)
