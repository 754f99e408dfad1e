"""Extremal equilibria via monotone iteration on threshold profiles.

The T-map sends a threshold profile to the right-hand sides of the balance
equations at the profile it induces. It is monotone for the child-side order
(children up, families down), so iterating from the bottom of
``[0, v_bar]^(n+m)`` reaches the family-optimal equilibrium and from the top
the child-optimal one.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _arrays, kernels
from .model import Instance, MatchingCorrespondence, Regime, StrategyProfile, matching_correspondence
from .strategies import EquilibriumCheck, ThresholdProfile, induce_profile, is_equilibrium
from .utilities import UtilityVector, utilities

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-10
DEFAULT_MAX_ITER = 1_000_000
VERIFY_TOL = 1e-8


class Side(str, enum.Enum):
    CHILD_OPTIMAL = "co"
    FAMILY_OPTIMAL = "fo"


@dataclass
class EquilibriumResult:
    regime: Regime
    side: Side
    thresholds: ThresholdProfile
    profile: StrategyProfile
    utilities: UtilityVector
    iterations: int
    converged: bool
    iterate: ThresholdProfile  # last T-iterate before polishing
    check: Optional[EquilibriumCheck] = None
    epsilon: float = DEFAULT_EPSILON
    trace: Optional[list] = field(default=None, repr=False)

    @property
    def correspondence(self) -> MatchingCorrespondence:
        return matching_correspondence(self.profile)

    @property
    def label(self) -> str:
        return f"{self.side.value}-{self.regime.value}E"

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "side": self.side.value,
            "iterations": self.iterations,
            "converged": self.converged,
            "epsilon": self.epsilon,
            "max_gap": None if self.check is None else self.check.gap,
            "thresholds": self.thresholds.to_dict(),
            "utilities": self.utilities.to_dict(),
            "pairs": [list(pr) for pr in self.correspondence],
            "profile": self.profile.to_dict(),
        }


def t_map(inst: Instance, y: ThresholdProfile, regime: Regime) -> ThresholdProfile:
    vc, vf = _arrays.values(inst)
    tc, tf = kernels.K.t_map(
        vc,
        vf,
        _arrays.child_order(inst),
        np.ascontiguousarray(y.y_child),
        np.ascontiguousarray(y.y_family),
        _arrays.params(inst),
        _arrays.is_cs(regime),
    )
    return ThresholdProfile(np.asarray(tc), np.asarray(tf))


def start_point(inst: Instance, side: Side) -> ThresholdProfile:
    """Bottom (family-optimal) or top (child-optimal) of the threshold lattice."""
    vbar = max(inst.v_bar, 0.0)
    lo_c, hi_f = np.zeros(inst.n), np.full(inst.m, vbar)
    if Side(side) is Side.FAMILY_OPTIMAL:
        return ThresholdProfile(lo_c, hi_f)
    return ThresholdProfile(np.full(inst.n, vbar), np.zeros(inst.m))


def _run(inst, regime, y, eps, max_iter, trace):
    if trace is None:
        vc, vf = _arrays.values(inst)
        yc, yf, k, met = kernels.K.iterate(
            vc,
            vf,
            _arrays.child_order(inst),
            y.y_child.copy(),
            y.y_family.copy(),
            _arrays.params(inst),
            _arrays.is_cs(regime),
            float(eps),
            int(max_iter),
        )
        return ThresholdProfile(np.asarray(yc), np.asarray(yf)), int(k), bool(met)
    k = 0
    while k < max_iter:
        nxt = t_map(inst, y, regime)
        k += 1
        trace.append(nxt)
        gap = np.max(np.abs(nxt.as_vector() - y.as_vector()), initial=0.0)
        y = nxt
        if gap <= eps:
            return y, k, True
    return y, k, False


def _polish(inst, regime, y, rounds=10):
    """Alternate induce / exact utilities until the profile reproduces itself."""
    s = induce_profile(inst, y, regime)
    u = utilities(inst, s, regime)
    for _ in range(rounds):
        y_exact = ThresholdProfile(u.u_child, u.u_family)
        s_next = induce_profile(inst, y_exact, regime)
        if s_next == s:
            return s, u, True
        s = s_next
        u = utilities(inst, s, regime)
    return s, u, False


def solve_equilibrium(
    inst: Instance,
    regime: Regime,
    side: Side,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
    keep_trace: bool = False,
    verify_tol: float = VERIFY_TOL,
    _retry: bool = True,
) -> EquilibriumResult:
    """Child- or family-optimal equilibrium of one regime.

    Iterates the T-map from the matching lattice extreme until no threshold
    moves by more than ``epsilon``, then replaces the iterate by the exact
    utilities of the induced profile and checks the Nash property at
    ``verify_tol``. A failed check triggers one rerun at ``epsilon / 100``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    regime, side = Regime(regime), Side(side)
    trace = [start_point(inst, side)] if keep_trace else None
    y, iters, met = _run(inst, regime, start_point(inst, side), epsilon, max_iter, trace)
    s, u, stable = _polish(inst, regime, y)
    check = is_equilibrium(inst, s, regime, tol=verify_tol) if met else None
    ok = met and stable and check.ok
    if met and not ok and _retry:
        log.info("%s-%s: verification failed at eps=%g, retrying", side.value, regime.value, epsilon)
        res = solve_equilibrium(
            inst, regime, side, epsilon / 100, max_iter, keep_trace, verify_tol, _retry=False
        )
        res.iterations += iters
        return res
    if not ok:
        log.warning("%s-%s did not converge (iterations=%d)", side.value, regime.value, iters)
    return EquilibriumResult(
        regime=regime,
        side=side,
        thresholds=ThresholdProfile(u.u_child.copy(), u.u_family.copy()),
        profile=s,
        utilities=u,
        iterations=iters,
        converged=bool(ok),
        iterate=y,
        check=check,
        epsilon=epsilon,
        trace=trace,
    )


def solve_all(inst: Instance, epsilon: float = DEFAULT_EPSILON, **kw) -> dict:
    """All four extremal equilibria keyed by (regime, side)."""
    return {
        (r, sd): solve_equilibrium(inst, r, sd, epsilon, **kw)
        for r in (Regime.CS, Regime.FS)
        for sd in (Side.CHILD_OPTIMAL, Side.FAMILY_OPTIMAL)
    }
