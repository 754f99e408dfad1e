"""Numba-compiled kernels.

Array conventions shared with ``_kernels_numpy``:

* ``vc`` is n x m (child values), ``vf`` is m x n (family values).
* ``order[c]`` lists families by decreasing ``vc[c]``.
* ``prm`` packs ``(delta_C, delta_F, kappa_C, kappa_F, p)``.
* Profiles are uint8 matrices ``sc`` (n x m) and ``sf`` (m x n).
"""

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def induce_cs(vc, vf, yc, yf, prm):
    dC, dF, kC, kF, p = prm[0], prm[1], prm[2], prm[3], prm[4]
    n, m = vc.shape
    sc = np.zeros((n, m), np.uint8)
    sf = np.zeros((m, n), np.uint8)
    for c in range(n):
        for f in range(m):
            if p * (vc[c, f] - dC * yc[c]) >= kC:
                sc[c, f] = 1
            if p * (vf[f, c] - dF * yf[f]) >= kF:
                sf[f, c] = 1
    return sc, sf


@njit(cache=True)
def induce_fs(vc, vf, order, yc, yf, prm):
    # decreasing-value scan per child; beta only depends on better mutual families
    dC, dF, kC, kF, p = prm[0], prm[1], prm[2], prm[3], prm[4]
    q = 1.0 - p
    n, m = vc.shape
    sc = np.zeros((n, m), np.uint8)
    sf = np.zeros((m, n), np.uint8)
    for c in range(n):
        beta = 1.0
        for j in range(m):
            f = order[c, j]
            bp = beta * p
            fam = bp * (vf[f, c] - dF * yf[f]) >= kF
            ch = bp * (vc[c, f] - dC * yc[c]) >= kC
            if fam:
                sf[f, c] = 1
            if ch:
                sc[c, f] = 1
            if fam and ch:
                beta *= q
    return sc, sf


@njit(cache=True)
def utilities(vc, vf, order, sc, sf, prm, cs):
    dC, dF, kC, kF, p = prm[0], prm[1], prm[2], prm[3], prm[4]
    q = 1.0 - p
    n, m = vc.shape
    uc = np.zeros(n)
    num_f = np.zeros(m)
    den_f = np.zeros(m)
    for c in range(n):
        beta = 1.0
        num = 0.0
        den = 0.0
        for j in range(m):
            f = order[c, j]
            if sc[c, f] and sf[f, c]:
                if cs:
                    num += beta * (p * vc[c, f] - kC)
                    num_f[f] += beta * (p * vf[f, c] - kF)
                else:
                    num += beta * p * vc[c, f] - kC
                    num_f[f] += beta * p * vf[f, c] - kF
                den += beta
                den_f[f] += beta
                beta *= q
        uc[c] = (num / n) / (1.0 - dC + dC * p * den / n)
    uf = np.zeros(m)
    for f in range(m):
        uf[f] = (num_f[f] / n) / (1.0 - dF + dF * p * den_f[f] / n)
    return uc, uf


@njit(cache=True)
def t_map(vc, vf, order, yc, yf, prm, cs):
    dC, dF, kC, kF, p = prm[0], prm[1], prm[2], prm[3], prm[4]
    q = 1.0 - p
    n, m = vc.shape
    if cs:
        sc, sf = induce_cs(vc, vf, yc, yf, prm)
    else:
        sc, sf = induce_fs(vc, vf, order, yc, yf, prm)
    tc = np.zeros(n)
    tf = np.zeros(m)
    for c in range(n):
        beta = 1.0
        for j in range(m):
            f = order[c, j]
            if sc[c, f] and sf[f, c]:
                if cs:
                    tc[c] += beta * max(p * (vc[c, f] - dC * yc[c]) - kC, 0.0)
                    tf[f] += beta * max(p * (vf[f, c] - dF * yf[f]) - kF, 0.0)
                else:
                    tc[c] += max(beta * p * (vc[c, f] - dC * yc[c]) - kC, 0.0)
                    tf[f] += max(beta * p * (vf[f, c] - dF * yf[f]) - kF, 0.0)
                beta *= q
    for c in range(n):
        tc[c] = dC * yc[c] + tc[c] / n
    for f in range(m):
        tf[f] = dF * yf[f] + tf[f] / n
    return tc, tf


@njit(cache=True)
def iterate(vc, vf, order, yc, yf, prm, cs, eps, max_iter):
    """Apply the T-map until every coordinate moves by at most ``eps``."""
    k = 0
    while k < max_iter:
        tc, tf = t_map(vc, vf, order, yc, yf, prm, cs)
        k += 1
        gap = 0.0
        for i in range(tc.shape[0]):
            gap = max(gap, abs(tc[i] - yc[i]))
        for i in range(tf.shape[0]):
            gap = max(gap, abs(tf[i] - yf[i]))
        yc, yf = tc, tf
        if gap <= eps:
            return yc, yf, k, True
    return yc, yf, k, False


# -- Monte Carlo -------------------------------------------------------------


@njit(cache=True)
def sim_child(rng, runs, horizon, n, c, vals, cs, p, kappa, delta):
    """Discounted payoffs of a tagged child walking ``vals`` (its mutual families)."""
    k = vals.shape[0]
    total = 0.0
    total_sq = 0.0
    for _ in range(runs):
        pay = 0.0
        disc = 1.0
        if k > 0:
            for _t in range(horizon):
                if rng.integers(0, n) == c:
                    if cs:
                        matched = False
                        for j in range(k):
                            pay -= disc * kappa
                            if rng.random() < p:
                                pay += disc * vals[j]
                                matched = True
                                break
                        if matched:
                            break
                    else:
                        pay -= disc * kappa * k
                        best = -1
                        for j in range(k):
                            if rng.random() < p and best < 0:
                                best = j
                        if best >= 0:
                            pay += disc * vals[best]
                            break
                disc *= delta
        total += pay
        total_sq += pay * pay
    return total, total_sq


@njit(cache=True)
def sim_family(rng, runs, horizon, n, mutual, better, vals, cs, p, kappa, delta):
    """Discounted payoffs of a tagged family.

    ``mutual[c]`` flags children in M_f, ``better[c]`` counts mutual families
    that child ``c`` prefers to this one, ``vals[c]`` is the family's value.
    """
    any_mutual = False
    for c in range(n):
        if mutual[c]:
            any_mutual = True
    total = 0.0
    total_sq = 0.0
    for _ in range(runs):
        pay = 0.0
        disc = 1.0
        if any_mutual:
            for _t in range(horizon):
                c = rng.integers(0, n)
                if mutual[c]:
                    if cs:
                        reached = True
                        for _i in range(better[c]):
                            if rng.random() < p:
                                reached = False
                                break
                        if reached:
                            pay -= disc * kappa
                            if rng.random() < p:
                                pay += disc * vals[c]
                                break
                    else:
                        pay -= disc * kappa
                        beaten = False
                        for _i in range(better[c]):
                            if rng.random() < p:
                                beaten = True
                        own = rng.random() < p
                        if own and not beaten:
                            pay += disc * vals[c]
                            break
                disc *= delta
        total += pay
        total_sq += pay * pay
    return total, total_sq
