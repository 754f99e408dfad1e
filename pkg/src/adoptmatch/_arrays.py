"""Conversions between domain objects and the raw kernel arrays."""

import numpy as np

from .model import Instance, Regime, StrategyProfile


def params(inst: Instance) -> np.ndarray:
    return np.array([inst.delta_C, inst.delta_F, inst.kappa_C, inst.kappa_F, inst.p])


def child_order(inst: Instance) -> np.ndarray:
    return inst.child_order


def profile_arrays(s: StrategyProfile):
    return (
        np.ascontiguousarray(s.child_interest, dtype=np.uint8),
        np.ascontiguousarray(s.family_interest, dtype=np.uint8),
    )


def values(inst: Instance):
    return np.ascontiguousarray(inst.v_child), np.ascontiguousarray(inst.v_family)


def is_cs(regime) -> bool:
    return Regime(regime) is Regime.CS


def power(q: float, k: int) -> float:
    """q**k by repeated multiplication, bit-identical to the kernels' running product."""
    out = 1.0
    for _ in range(int(k)):
        out *= q
    return out
