"""Random instances and the hand-built instances from the analysis.

Random valuations mix a common quality with an idiosyncratic draw and are
min-max normalised per agent. The RNG is numpy's PCG64 via
``np.random.default_rng(seed)``; draws happen in a fixed order (child
qualities, family qualities, child idiosyncratic matrix, family idiosyncratic
matrix) and never depend on ``lam``, so one seed gives the same underlying
draws for every mixing weight.
"""

from __future__ import annotations

import numpy as np

from .model import Instance

BASE_CASE = dict(delta_C=0.99, delta_F=0.99, kappa_C=0.02, kappa_F=0.02, p=0.5)


def _normalise(rows: np.ndarray) -> np.ndarray:
    lo = rows.min(axis=1, keepdims=True)
    hi = rows.max(axis=1, keepdims=True)
    if rows.shape[1] == 1:
        return (rows > 0).astype(np.float64)
    return (rows - lo) / (hi - lo)


def _has_ties(rows: np.ndarray) -> np.ndarray:
    srt = np.sort(rows, axis=1)
    return np.any(srt[:, 1:] == srt[:, :-1], axis=1)


def _tie_positions(row: np.ndarray) -> np.ndarray:
    _, inv, counts = np.unique(row, return_inverse=True, return_counts=True)
    return np.flatnonzero(counts[inv] > 1)


def generate_instance(
    n: int,
    m: int,
    lam: float,
    seed: int,
    delta_C: float = BASE_CASE["delta_C"],
    delta_F: float = BASE_CASE["delta_F"],
    kappa_C: float = BASE_CASE["kappa_C"],
    kappa_F: float = BASE_CASE["kappa_F"],
    p: float = BASE_CASE["p"],
) -> Instance:
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    q_child = rng.random(n)
    q_family = rng.random(m)
    hat_child = rng.random((n, m))
    hat_family = rng.random((m, n))

    # qualities must be distinct when they decide the ranking on their own
    if lam > 0:
        for q in (q_family, q_child):
            while len(np.unique(q)) < len(q):
                dup = _tie_positions(q)
                q[dup[1:]] = rng.random(len(dup) - 1)

    def mix(quality, hat):
        for _ in range(100):
            raw = lam * quality[None, :] + (1.0 - lam) * hat
            v = _normalise(raw)
            bad = np.flatnonzero(_has_ties(v))
            if bad.size == 0 or v.shape[1] == 1:
                return v
            for i in bad:
                dup = _tie_positions(v[i])
                hat[i, dup[1:]] = rng.random(len(dup) - 1)
        raise RuntimeError("could not break valuation ties")

    v_child = mix(q_family, hat_child)
    v_family = mix(q_child, hat_family)
    return Instance(v_child, v_family, delta_C, delta_F, kappa_C, kappa_F, p)


PAPER_INSTANCES = ("prop7", "prop8", "prop9", "prop-families-worse")

_DEFAULTS = {
    "prop7": dict(p=0.5, kappa_C=0.1, kappa_F=0.1, delta_C=0.9, delta_F=0.9),
    "prop8": dict(eps=0.1, p=0.9, kappa_C=0.1, kappa_F=0.1, delta_C=0.05, delta_F=0.99),
    "prop9": dict(eps=0.1, p=0.9, kappa_C=0.1, kappa_F=0.1, delta_C=0.9, delta_F=0.9),
    "prop-families-worse": dict(eps=0.1, p=0.5, kappa_C=0.01, kappa_F=0.1, delta_C=0.1, delta_F=0.5),
}


def paper_defaults(name: str) -> dict:
    if name not in _DEFAULTS:
        raise KeyError(f"unknown instance {name!r}; choose from {PAPER_INSTANCES}")
    return dict(_DEFAULTS[name])


def paper_instance(name: str, **params) -> Instance:
    """Small hand-built instances exhibiting the qualitative results.

    ``prop7``
        2x2, two equilibria in both regimes (children's and families' top
        choices are crossed; the off-diagonal values sit exactly at kappa/p).
    ``prop8``
        2x2 where the low child is matched in FS but left unmatched in CS;
        needs ``p * (1 - p) < kappa_F``.
    ``prop9``
        2x2 where an FS family's best response is not value-upward-closed.
    ``prop-families-worse``
        1x3 where a family is strictly worse off in CS than in FS.

    Keyword arguments override the defaults in ``paper_defaults(name)``.
    """
    kw = paper_defaults(name)
    unknown = set(params) - set(kw)
    if unknown:
        raise TypeError(f"unexpected parameters for {name}: {sorted(unknown)}")
    kw.update(params)
    eps = kw.pop("eps", None)
    p, kC, kF = kw["p"], kw["kappa_C"], kw["kappa_F"]
    if name == "prop7":
        vc = [[1.0, kC / p], [kC / p, 1.0]]
        vf = [[kF / p, 1.0], [1.0, kF / p]]
    elif name == "prop8":
        vc = [[1.0, 1.0 - eps], [1.0, 1.0 - eps]]
        vf = [[1.0, 0.0], [1.0, kF / p + eps]]
    elif name == "prop9":
        vc = [[1.0, 1.0 - eps], [1.0, 1.0 - eps]]
        vf = [[1.0, 1.0 - eps], [1.0, 1.0 - eps]]
    else:
        vc = [[1.0, 1.0 - eps, 1.0 - 2 * eps]]
        vf = [[1.0], [kF / p], [1.0]]
    return Instance(np.array(vc), np.array(vf), **kw)
