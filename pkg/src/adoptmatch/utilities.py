"""Expected utilities of a fixed strategy profile under FS and CS.

For a fixed profile every agent's balance equation is linear in its own
utility, so each utility is obtained in closed form rather than by iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _arrays, kernels
from .model import Agent, Instance, Regime, StrategyProfile


@dataclass(frozen=True)
class UtilityVector:
    u_child: np.ndarray
    u_family: np.ndarray

    def of(self, agent: Agent) -> float:
        if agent.is_child:
            return float(self.u_child[agent.index])
        return float(self.u_family[agent.index])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.u_child, self.u_family])

    def to_dict(self) -> dict:
        return {"u_child": self.u_child.tolist(), "u_family": self.u_family.tolist()}


@dataclass(frozen=True)
class WelfareReport:
    avg_child: float
    avg_family: float
    avg_overall: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.avg_child, self.avg_family, self.avg_overall)


def _check_index(inst: Instance, c: int, f: int) -> None:
    if not (0 <= c < inst.n and 0 <= f < inst.m):
        raise IndexError(f"pair ({c}, {f}) out of range for a {inst.n}x{inst.m} instance")


def better_count(inst: Instance, s: StrategyProfile, c: int, f: int) -> int:
    """Number of families mutually interested in ``c`` that ``c`` strictly prefers to ``f``."""
    _check_index(inst, c, f)
    mutual = s.mutual()[c]
    return int(np.count_nonzero(mutual & (inst.v_child[c] > inst.v_child[c, f])))


def beta(inst: Instance, s: StrategyProfile, c: int, f: int) -> float:
    """Probability that no family ``c`` prefers to ``f`` matches with ``c`` in one step."""
    return _arrays.power(1.0 - inst.p, better_count(inst, s, c, f))


def utilities(inst: Instance, s: StrategyProfile, regime: Regime) -> UtilityVector:
    vc, vf = _arrays.values(inst)
    sc, sf = _arrays.profile_arrays(s)
    uc, uf = kernels.K.utilities(
        vc, vf, _arrays.child_order(inst), sc, sf, _arrays.params(inst), _arrays.is_cs(regime)
    )
    return UtilityVector(np.asarray(uc), np.asarray(uf))


def agent_utility(inst: Instance, s: StrategyProfile, agent: Agent, regime: Regime) -> float:
    return utilities(inst, s, regime).of(agent)


def balance_rhs(inst: Instance, s: StrategyProfile, regime: Regime, agent: Agent, z: float) -> float:
    """Right-hand side of ``agent``'s balance equation evaluated at own utility ``z``.

    Written directly from the per-pair definition (one term per mutual
    partner), independently of the vectorised kernels.
    """
    regime = Regime(regime)
    p = inst.p
    mutual = s.mutual()
    if agent.is_child:
        c = agent.index
        d, k = inst.delta_C, inst.kappa_C
        terms = [(beta(inst, s, c, f), inst.v_child[c, f]) for f in np.flatnonzero(mutual[c])]
    else:
        f = agent.index
        d, k = inst.delta_F, inst.kappa_F
        terms = [(beta(inst, s, c, f), inst.v_family[f, c]) for c in np.flatnonzero(mutual[:, f])]
    total = 0.0
    for b, v in terms:
        if regime is Regime.FS:
            total += b * p * (v - d * z) - k
        else:
            total += b * (p * (v - d * z) - k)
    return d * z + total / inst.n


def balance_residuals(inst: Instance, s: StrategyProfile, regime: Regime, u: UtilityVector) -> np.ndarray:
    """|u_i - RHS_i(u_i)| for every agent, children first."""
    return np.array(
        [abs(u.of(a) - balance_rhs(inst, s, regime, a, u.of(a))) for a in inst.agents()]
    )


def welfare(inst: Instance, u: UtilityVector) -> WelfareReport:
    n, m = inst.n, inst.m
    if u.u_child.shape != (n,) or u.u_family.shape != (m,):
        raise ValueError("utility vector does not match instance dimensions")
    avg_c = float(np.mean(u.u_child))
    avg_f = float(np.mean(u.u_family))
    return WelfareReport(avg_c, avg_f, (n * avg_c + m * avg_f) / (n + m))
