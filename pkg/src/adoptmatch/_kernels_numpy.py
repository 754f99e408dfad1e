"""Pure-numpy kernels, same signatures as ``_kernels_numba``.

Loops over preference rank are kept (the FS scan is inherently sequential in
rank); everything else is vectorised over agents or simulation runs.
"""

import numpy as np

NAME = "numpy"


def _powers(q, k):
    # exact repeated products, matching the scalar kernels bit for bit
    out = np.empty(k + 1)
    acc = 1.0
    for i in range(k + 1):
        out[i] = acc
        acc *= q
    return out


def _betas(order, mutual, q):
    """beta[c, f] = q ** (number of mutual families child c prefers to f)."""
    ms = np.take_along_axis(mutual, order, axis=1).astype(np.int64)
    better = np.cumsum(ms, axis=1) - ms
    beta = np.empty(mutual.shape)
    np.put_along_axis(beta, order, _powers(q, mutual.shape[1])[better], axis=1)
    return beta


def induce_cs(vc, vf, yc, yf, prm):
    dC, dF, kC, kF, p = prm
    sc = p * (vc - dC * yc[:, None]) >= kC
    sf = p * (vf - dF * yf[:, None]) >= kF
    return sc.astype(np.uint8), sf.astype(np.uint8)


def induce_fs(vc, vf, order, yc, yf, prm):
    dC, dF, kC, kF, p = prm
    q = 1.0 - p
    n, m = vc.shape
    rows = np.arange(n)
    vc_s = np.take_along_axis(vc, order, axis=1)
    vf_s = np.take_along_axis(vf.T, order, axis=1)
    yf_s = yf[order]
    sc = np.zeros((n, m), np.uint8)
    sf = np.zeros((m, n), np.uint8)
    beta = np.ones(n)
    for j in range(m):
        bp = beta * p
        fam = bp * (vf_s[:, j] - dF * yf_s[:, j]) >= kF
        ch = bp * (vc_s[:, j] - dC * yc) >= kC
        fj = order[:, j]
        sc[rows, fj] = ch
        sf[fj, rows] = fam
        beta = np.where(fam & ch, beta * q, beta)
    return sc, sf


def utilities(vc, vf, order, sc, sf, prm, cs):
    dC, dF, kC, kF, p = prm
    n, m = vc.shape
    mutual = (sc.astype(bool) & sf.T.astype(bool))
    beta = _betas(order, mutual, 1.0 - p)
    if cs:
        tc = beta * (p * vc - kC)
        tf = beta * (p * vf.T - kF)
    else:
        tc = beta * p * vc - kC
        tf = beta * p * vf.T - kF
    w = np.where(mutual, beta, 0.0)
    num_c = np.where(mutual, tc, 0.0).sum(axis=1)
    num_f = np.where(mutual, tf, 0.0).sum(axis=0)
    uc = (num_c / n) / (1.0 - dC + dC * p * w.sum(axis=1) / n)
    uf = (num_f / n) / (1.0 - dF + dF * p * w.sum(axis=0) / n)
    return uc, uf


def t_map(vc, vf, order, yc, yf, prm, cs):
    dC, dF, kC, kF, p = prm
    n, m = vc.shape
    if cs:
        sc, sf = induce_cs(vc, vf, yc, yf, prm)
    else:
        sc, sf = induce_fs(vc, vf, order, yc, yf, prm)
    mutual = sc.astype(bool) & sf.T.astype(bool)
    beta = _betas(order, mutual, 1.0 - p)
    diff_c = vc - dC * yc[:, None]
    diff_f = vf.T - dF * yf[None, :]
    if cs:
        tc = beta * np.maximum(p * diff_c - kC, 0.0)
        tf = beta * np.maximum(p * diff_f - kF, 0.0)
    else:
        tc = np.maximum(beta * p * diff_c - kC, 0.0)
        tf = np.maximum(beta * p * diff_f - kF, 0.0)
    tc = dC * yc + np.where(mutual, tc, 0.0).sum(axis=1) / n
    tf = dF * yf + np.where(mutual, tf, 0.0).sum(axis=0) / n
    return tc, tf


def iterate(vc, vf, order, yc, yf, prm, cs, eps, max_iter):
    k = 0
    while k < max_iter:
        tc, tf = t_map(vc, vf, order, yc, yf, prm, cs)
        k += 1
        gap = max(np.abs(tc - yc).max(initial=0.0), np.abs(tf - yf).max(initial=0.0))
        yc, yf = tc, tf
        if gap <= eps:
            return yc, yf, k, True
    return yc, yf, k, False


# -- Monte Carlo (vectorised over runs) -------------------------------------


def sim_child(rng, runs, horizon, n, c, vals, cs, p, kappa, delta):
    k = vals.shape[0]
    pay = np.zeros(runs)
    if k == 0:
        return 0.0, 0.0
    alive = np.ones(runs, bool)
    disc = 1.0
    for _ in range(horizon):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        act = idx[rng.integers(0, n, size=idx.size) == c]
        if act.size:
            succ = rng.random((act.size, k)) < p
            hit = succ.any(axis=1)
            first = np.argmax(succ, axis=1)
            if cs:
                # investigations up to and including the first success
                steps = np.where(hit, first + 1, k)
                pay[act] -= disc * kappa * steps
            else:
                pay[act] -= disc * kappa * k
            won = act[hit]
            pay[won] += disc * vals[first[hit]]
            alive[won] = False
        disc *= delta
    return float(pay.sum()), float((pay * pay).sum())


def sim_family(rng, runs, horizon, n, mutual, better, vals, cs, p, kappa, delta):
    pay = np.zeros(runs)
    if not np.any(mutual):
        return 0.0, 0.0
    mutual = np.asarray(mutual, bool)
    alive = np.ones(runs, bool)
    disc = 1.0
    for _ in range(horizon):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        cs_drawn = rng.integers(0, n, size=idx.size)
        sel = mutual[cs_drawn]
        act = idx[sel]
        child = cs_drawn[sel]
        if act.size:
            b = better[child]
            # at least one of the b better mutual families succeeds
            beaten = rng.random(act.size) < 1.0 - (1.0 - p) ** b
            own = rng.random(act.size) < p
            if cs:
                reached = ~beaten
                pay[act[reached]] -= disc * kappa
                won = reached & own
            else:
                pay[act] -= disc * kappa
                won = own & ~beaten
            pay[act[won]] += disc * vals[child[won]]
            alive[act[won]] = False
        disc *= delta
    return float(pay.sum()), float((pay * pay).sum())
