"""Welfare comparisons between FS and CS equilibria, and the static marriage market."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .equilibrium import DEFAULT_EPSILON, EquilibriumResult, Side, solve_equilibrium
from .model import Agent, Instance, Regime, matching_correspondence
from .utilities import UtilityVector

PARETO_TOL = 1e-9


class Relation(str, enum.Enum):
    LEFT = "left-dominates"
    RIGHT = "right-dominates"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class ParetoVerdict:
    relation: Relation
    left_better: tuple  # agents strictly better off under left
    left_worse: tuple


def _agents(u: UtilityVector):
    return [Agent.child(c) for c in range(len(u.u_child))] + [
        Agent.family(f) for f in range(len(u.u_family))
    ]


def pareto_compare(u_left: UtilityVector, u_right: UtilityVector, tol: float = PARETO_TOL) -> ParetoVerdict:
    """Componentwise comparison; differences within ``tol`` count as equal."""
    if u_left.u_child.shape != u_right.u_child.shape or u_left.u_family.shape != u_right.u_family.shape:
        raise ValueError("utility vectors have different dimensions")
    diff = u_left.as_vector() - u_right.as_vector()
    agents = _agents(u_left)
    better = tuple(a for a, d in zip(agents, diff) if d > tol)
    worse = tuple(a for a, d in zip(agents, diff) if d < -tol)
    if better and worse:
        rel = Relation.INCOMPARABLE
    elif better:
        rel = Relation.LEFT
    elif worse:
        rel = Relation.RIGHT
    else:
        rel = Relation.EQUAL
    return ParetoVerdict(rel, better, worse)


@dataclass
class Theorem1Check:
    violation: bool
    fs_better: tuple
    fs_worse: tuple
    detail: Optional[dict] = None


def check_theorem1(inst: Instance, fse: EquilibriumResult, cse: EquilibriumResult, tol: float = PARETO_TOL):
    """Someone strictly better off in the FS equilibrium implies someone strictly worse off.

    A violation carries the full state of both equilibria in ``detail``.
    """
    if fse.regime is not Regime.FS or cse.regime is not Regime.CS:
        raise ValueError("expected an FS equilibrium and a CS equilibrium")
    v = pareto_compare(fse.utilities, cse.utilities, tol)
    violation = bool(v.left_better) and not v.left_worse
    detail = None
    if violation:
        detail = {"instance": inst.to_dict(), "fse": fse.to_dict(), "cse": cse.to_dict()}
    return Theorem1Check(violation, v.left_better, v.left_worse, detail)


def same_matches_violations(fse: EquilibriumResult, cse: EquilibriumResult, tol: float = PARETO_TOL):
    """Children whose FS partners are all CS partners yet who do strictly better in FS."""
    mf, mc = fse.correspondence, cse.correspondence
    out = []
    for c in range(len(fse.utilities.u_child)):
        if mf.of_child(c) <= mc.of_child(c) and fse.utilities.u_child[c] > cse.utilities.u_child[c] + tol:
            out.append(Agent.child(c))
    return out


def additional_match_violations(fse: EquilibriumResult, cse: EquilibriumResult, tol: float = 0.0):
    """Pairs mutual in FS but not in CS where neither side is strictly worse off in FS."""
    mf, mc = fse.correspondence, cse.correspondence
    uf, uc = fse.utilities, cse.utilities
    out = []
    for c, f in sorted(mf.pairs - mc.pairs):
        child_worse = uf.u_child[c] < uc.u_child[c] - tol
        family_worse = uf.u_family[f] < uc.u_family[f] - tol
        if not (child_worse or family_worse):
            out.append((c, f))
    return out


def popular_agents(inst: Instance, co_fse: EquilibriumResult, fo_fse: EquilibriumResult):
    """Children that are the top choice of every family mutual with them in the
    child-optimal FS equilibrium, and families that are the top choice of every
    child mutual with them in the family-optimal one."""
    top_child = np.argmax(inst.v_family, axis=1)  # per family
    top_family = np.argmax(inst.v_child, axis=1)  # per child
    mco, mfo = co_fse.correspondence, fo_fse.correspondence
    children = [c for c in range(inst.n) if all(top_child[f] == c for f in mco.of_child(c))]
    families = [f for f in range(inst.m) if all(top_family[c] == f for c in mfo.of_family(f))]
    return children, families


# -- induced marriage market -----------------------------------------------


@dataclass(frozen=True)
class MarriageMarket:
    child_prefs: tuple  # child_prefs[c] = acceptable families, best first
    family_prefs: tuple

    @property
    def n(self) -> int:
        return len(self.child_prefs)

    @property
    def m(self) -> int:
        return len(self.family_prefs)

    def child_rank(self, c: int, f: int) -> Optional[int]:
        try:
            return self.child_prefs[c].index(f)
        except ValueError:
            return None

    def family_rank(self, f: int, c: int) -> Optional[int]:
        try:
            return self.family_prefs[f].index(c)
        except ValueError:
            return None


@dataclass(frozen=True)
class StableMatching:
    pairs: frozenset
    child_partner: tuple = field(compare=False)
    family_partner: tuple = field(compare=False)

    @classmethod
    def from_pairs(cls, pairs, n: int, m: int) -> "StableMatching":
        cp, fp = [None] * n, [None] * m
        for c, f in pairs:
            if cp[c] is not None or fp[f] is not None:
                raise ValueError("not a one-to-one matching")
            cp[c], fp[f] = f, c
        return cls(frozenset(pairs), tuple(cp), tuple(fp))


def induced_marriage_market(inst: Instance) -> MarriageMarket:
    """Strict rankings by value, truncated where ``p * v < kappa``."""
    p = inst.p
    child = tuple(
        tuple(int(f) for f in inst.child_order[c] if p * inst.v_child[c, f] >= inst.kappa_C)
        for c in range(inst.n)
    )
    fam_order = np.argsort(-inst.v_family, axis=1, kind="stable")
    family = tuple(
        tuple(int(c) for c in fam_order[f] if p * inst.v_family[f, c] >= inst.kappa_F)
        for f in range(inst.m)
    )
    return MarriageMarket(child, family)


def deferred_acceptance(mm: MarriageMarket, proposer: str = "child") -> StableMatching:
    if proposer not in ("child", "family"):
        raise ValueError("proposer must be 'child' or 'family'")
    if proposer == "child":
        props, accept = mm.child_prefs, mm.family_prefs
    else:
        props, accept = mm.family_prefs, mm.child_prefs
    rank = [{a: r for r, a in enumerate(lst)} for lst in accept]
    held = [None] * len(accept)
    nxt = [0] * len(props)
    free = list(range(len(props)))[::-1]
    while free:
        i = free.pop()
        if nxt[i] >= len(props[i]):
            continue
        j = props[i][nxt[i]]
        nxt[i] += 1
        r = rank[j].get(i)
        if r is None:
            free.append(i)
            continue
        cur = held[j]
        if cur is None:
            held[j] = i
        elif r < rank[j][cur]:
            held[j] = i
            free.append(cur)
        else:
            free.append(i)
    if proposer == "child":
        pairs = [(c, f) for f, c in enumerate(held) if c is not None]
    else:
        pairs = [(c, f) for c, f in enumerate(held) if f is not None]
    return StableMatching.from_pairs(pairs, mm.n, mm.m)


def blocking_pairs(mm: MarriageMarket, matching: StableMatching):
    """Blocking pairs plus individually irrational assignments (as ``(c, None)`` / ``(None, f)``)."""
    out = []
    for c, f in matching.pairs:
        if mm.child_rank(c, f) is None:
            out.append((c, None))
        if mm.family_rank(f, c) is None:
            out.append((None, f))
    unmatched = max(mm.n, mm.m)  # rank of being single, or of an unacceptable partner

    def crank(c, f):
        r = None if f is None else mm.child_rank(c, f)
        return unmatched if r is None else r

    def frank(f, c):
        r = None if c is None else mm.family_rank(f, c)
        return unmatched if r is None else r

    for c in range(mm.n):
        for f in mm.child_prefs[c]:
            rf = mm.family_rank(f, c)
            if rf is None or matching.child_partner[c] == f:
                continue
            if crank(c, f) < crank(c, matching.child_partner[c]) and rf < frank(f, matching.family_partner[f]):
                out.append((c, f))
    return out


def is_stable(mm: MarriageMarket, matching: StableMatching) -> bool:
    return not blocking_pairs(mm, matching)


def stable_matchings(mm: MarriageMarket):
    """(child-optimal, family-optimal) stable matchings, each verified by a blocking-pair scan."""
    co = deferred_acceptance(mm, "child")
    fo = deferred_acceptance(mm, "family")
    for sm in (co, fo):
        if not is_stable(mm, sm):
            raise AssertionError(f"deferred acceptance produced an unstable matching {sorted(sm.pairs)}")
    return co, fo


def all_matchings(n: int, m: int):
    """Every partial one-to-one matching between n children and m families."""
    for k in range(min(n, m) + 1):
        for cs in itertools.combinations(range(n), k):
            for fs in itertools.permutations(range(m), k):
                yield StableMatching.from_pairs(list(zip(cs, fs)), n, m)


# -- large-delta limit -----------------------------------------------------


@dataclass
class DeltaLimitRow:
    delta: float
    correspondences: dict  # (regime, side) -> frozenset of pairs
    all_matchings: bool
    coincides: bool


@dataclass
class DeltaLimitReport:
    rows: list
    stable_co: frozenset
    stable_fo: frozenset

    @property
    def exhibited_delta(self) -> Optional[float]:
        """Smallest grid value from which coincidence holds at every larger grid value."""
        best = None
        for row in sorted(self.rows, key=lambda r: r.delta, reverse=True):
            if not row.coincides:
                break
            best = row.delta
        return best


def delta_limit_check(
    inst: Instance, delta_grid: Sequence[float], epsilon: float = DEFAULT_EPSILON, **kw
) -> DeltaLimitReport:
    """Compare extremal FS/CS equilibrium correspondences with the stable matchings
    of the induced marriage market, with both discount factors set to each grid value."""
    mm = induced_marriage_market(inst)
    co, fo = stable_matchings(mm)
    target = {co.pairs, fo.pairs}
    rows = []
    for d in delta_grid:
        sub = inst.replace(delta=float(d))
        corr = {}
        for regime in (Regime.FS, Regime.CS):
            for side in (Side.CHILD_OPTIMAL, Side.FAMILY_OPTIMAL):
                res = solve_equilibrium(sub, regime, side, epsilon, **kw)
                corr[(regime, side)] = res.correspondence
        all_match = all(c.is_matching() for c in corr.values())
        coincides = all_match and all(
            {corr[(r, Side.CHILD_OPTIMAL)].pairs, corr[(r, Side.FAMILY_OPTIMAL)].pairs} == target
            and corr[(r, Side.CHILD_OPTIMAL)].pairs == co.pairs
            and corr[(r, Side.FAMILY_OPTIMAL)].pairs == fo.pairs
            for r in (Regime.FS, Regime.CS)
        )
        rows.append(
            DeltaLimitRow(float(d), {k: v.pairs for k, v in corr.items()}, all_match, coincides)
        )
    return DeltaLimitReport(rows, co.pairs, fo.pairs)


def correspondence_of(result: EquilibriumResult) -> frozenset:
    return matching_correspondence(result.profile).pairs
