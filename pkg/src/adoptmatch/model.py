"""Core domain types for the adoption search game.

Indices are 0-based: child type ``c`` is row ``c`` of ``v_child`` and column
``c`` of ``v_family``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np


class Regime(str, enum.Enum):
    """Search technology: family-driven (FS) or caseworker-driven (CS)."""

    FS = "FS"
    CS = "CS"


class Agent(NamedTuple):
    kind: str  # "child" | "family"
    index: int

    @classmethod
    def child(cls, index: int) -> "Agent":
        return cls("child", int(index))

    @classmethod
    def family(cls, index: int) -> "Agent":
        return cls("family", int(index))

    @property
    def is_child(self) -> bool:
        return self.kind == "child"

    def __str__(self) -> str:
        return f"{self.kind[0]}{self.index}"


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    """One adoption game: valuations plus discounting, costs and success probability.

    ``v_child[c, f]`` is child ``c``'s value for family ``f``;
    ``v_family[f, c]`` is family ``f``'s value for child ``c``.
    """

    v_child: np.ndarray
    v_family: np.ndarray
    delta_C: float
    delta_F: float
    kappa_C: float
    kappa_F: float
    p: float

    def __post_init__(self):
        vc = _frozen(self.v_child, np.float64)
        vf = _frozen(self.v_family, np.float64)
        if vc.ndim != 2 or vf.ndim != 2:
            raise ValueError("valuation matrices must be 2-dimensional")
        if vf.shape != (vc.shape[1], vc.shape[0]):
            raise ValueError(
                f"v_family has shape {vf.shape}, expected {(vc.shape[1], vc.shape[0])}"
            )
        object.__setattr__(self, "v_child", vc)
        object.__setattr__(self, "v_family", vf)
        for name in ("delta_C", "delta_F", "kappa_C", "kappa_F", "p"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.v_child.shape[0]

    @property
    def m(self) -> int:
        return self.v_child.shape[1]

    @property
    def v_bar(self) -> float:
        """Largest valuation on either side."""
        return float(max(self.v_child.max(), self.v_family.max()))

    @cached_property
    def child_order(self) -> np.ndarray:
        """child_order[c] lists families by decreasing value to child ``c``."""
        order = np.argsort(-self.v_child, axis=1, kind="stable").astype(np.int64)
        order.setflags(write=False)
        return order

    def agents(self):
        return [Agent.child(c) for c in range(self.n)] + [Agent.family(f) for f in range(self.m)]

    def replace(self, **changes) -> "Instance":
        kw = dict(
            v_child=self.v_child,
            v_family=self.v_family,
            delta_C=self.delta_C,
            delta_F=self.delta_F,
            kappa_C=self.kappa_C,
            kappa_F=self.kappa_F,
            p=self.p,
        )
        if "delta" in changes:
            kw["delta_C"] = kw["delta_F"] = changes.pop("delta")
        if "kappa" in changes:
            kw["kappa_C"] = kw["kappa_F"] = changes.pop("kappa")
        kw.update(changes)
        return Instance(**kw)

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "v_child": self.v_child.tolist(),
            "v_family": self.v_family.tolist(),
            "delta_C": self.delta_C,
            "delta_F": self.delta_F,
            "kappa_C": self.kappa_C,
            "kappa_F": self.kappa_F,
            "p": self.p,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        unknown = set(d) - set(_JSON_FIELDS)
        if unknown:
            raise ValueError(f"unknown instance fields: {sorted(unknown)}")
        missing = set(_JSON_FIELDS) - set(d)
        if missing:
            raise ValueError(f"missing instance fields: {sorted(missing)}")
        inst = cls(
            v_child=d["v_child"],
            v_family=d["v_family"],
            delta_C=d["delta_C"],
            delta_F=d["delta_F"],
            kappa_C=d["kappa_C"],
            kappa_F=d["kappa_F"],
            p=d["p"],
        )
        if (inst.n, inst.m) != (d["n"], d["m"]):
            raise ValueError(f"declared size ({d['n']}, {d['m']}) != matrix size ({inst.n}, {inst.m})")
        return inst

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Instance":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


_JSON_FIELDS = ("n", "m", "v_child", "v_family", "delta_C", "delta_F", "kappa_C", "kappa_F", "p")


@dataclass(frozen=True)
class StrategyProfile:
    """Interest indicators: ``child_interest[c, f]`` and ``family_interest[f, c]``."""

    child_interest: np.ndarray
    family_interest: np.ndarray

    def __post_init__(self):
        sc = _frozen(self.child_interest, bool)
        sf = _frozen(self.family_interest, bool)
        if sc.ndim != 2 or sf.shape != (sc.shape[1], sc.shape[0]):
            raise ValueError(f"incompatible interest shapes {sc.shape} and {sf.shape}")
        object.__setattr__(self, "child_interest", sc)
        object.__setattr__(self, "family_interest", sf)

    @classmethod
    def empty(cls, n: int, m: int) -> "StrategyProfile":
        return cls(np.zeros((n, m), bool), np.zeros((m, n), bool))

    @classmethod
    def full(cls, n: int, m: int) -> "StrategyProfile":
        return cls(np.ones((n, m), bool), np.ones((m, n), bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.child_interest.shape

    def mutual(self) -> np.ndarray:
        """n x m boolean matrix of mutually interested pairs."""
        return self.child_interest & self.family_interest.T

    def row(self, agent: Agent) -> np.ndarray:
        if agent.is_child:
            return self.child_interest[agent.index]
        return self.family_interest[agent.index]

    def with_row(self, agent: Agent, row) -> "StrategyProfile":
        """Copy of the profile with one agent's interest vector replaced."""
        sc = self.child_interest.copy()
        sf = self.family_interest.copy()
        if agent.is_child:
            sc[agent.index] = row
        else:
            sf[agent.index] = row
        return StrategyProfile(sc, sf)

    def __eq__(self, other):
        if not isinstance(other, StrategyProfile):
            return NotImplemented
        return np.array_equal(self.child_interest, other.child_interest) and np.array_equal(
            self.family_interest, other.family_interest
        )

    def __hash__(self):
        return hash((self.child_interest.tobytes(), self.family_interest.tobytes()))

    def to_dict(self) -> dict:
        return {
            "child_interest": self.child_interest.astype(int).tolist(),
            "family_interest": self.family_interest.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StrategyProfile":
        unknown = set(d) - {"child_interest", "family_interest"}
        if unknown:
            raise ValueError(f"unknown profile fields: {sorted(unknown)}")
        return cls(np.asarray(d["child_interest"], bool), np.asarray(d["family_interest"], bool))


@dataclass(frozen=True)
class MatchingCorrespondence:
    """Set of mutually interested (child, family) pairs."""

    pairs: frozenset
    n: int
    m: int
    _by_child: tuple = field(repr=False, compare=False, default=())
    _by_family: tuple = field(repr=False, compare=False, default=())

    def of_child(self, c: int) -> frozenset:
        """M_c(s): families mutually interested with child ``c``."""
        return self._by_child[c]

    def of_family(self, f: int) -> frozenset:
        """M_f(s): children mutually interested with family ``f``."""
        return self._by_family[f]

    def is_matching(self) -> bool:
        """True when every agent has at most one mutual partner."""
        return all(len(x) <= 1 for x in self._by_child) and all(len(x) <= 1 for x in self._by_family)

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        return tuple(pair) in self.pairs

    def __iter__(self):
        return iter(sorted(self.pairs))


def matching_correspondence(s: StrategyProfile) -> MatchingCorrespondence:
    mutual = s.mutual()
    n, m = mutual.shape
    cs, fs = np.nonzero(mutual)
    pairs = frozenset(zip(cs.tolist(), fs.tolist()))
    by_child = tuple(frozenset(np.flatnonzero(mutual[c]).tolist()) for c in range(n))
    by_family = tuple(frozenset(np.flatnonzero(mutual[:, f]).tolist()) for f in range(m))
    return MatchingCorrespondence(pairs, n, m, by_child, by_family)


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_instance(inst: Instance) -> ValidationReport:
    """Check the model assumptions; violations are returned, never raised."""
    out = []
    if inst.n < 1:
        out.append("n must be positive")
    if inst.m < 1:
        out.append("m must be positive")
    for name, mat in (("child", inst.v_child), ("family", inst.v_family)):
        if not np.all(np.isfinite(mat)):
            out.append(f"non-finite valuation ({name})")
        for i, row in enumerate(mat):
            if len(np.unique(row)) != len(row):
                out.append(f"row-strictness {name} {i}")
    for name in ("delta_C", "delta_F"):
        d = getattr(inst, name)
        if not (0.0 <= d < 1.0):
            out.append(f"{name} out of [0,1)")
    if not (0.0 < inst.p < 1.0):
        out.append("p out of (0,1)")
    for name in ("kappa_C", "kappa_F"):
        k = getattr(inst, name)
        if not (k >= 0.0 and math.isfinite(k)):
            out.append(f"{name} must be non-negative")
    return ValidationReport(out)
