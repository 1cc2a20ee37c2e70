"""Ultimately periodic traces and exact LTL evaluation over them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .formulas import (
    And,
    Atom,
    Always,
    Eventually,
    FalseFormula,
    Formula,
    Iff,
    Implies,
    Next,
    Not,
    Or,
    Release,
    TrueFormula,
    Until,
    ATOM_NAME,
)

Valuation = frozenset[str]


@dataclass(frozen=True)
class LassoTrace:
    """Finite prefix plus repeated loop; denotes the trace prefix . loop^omega."""

    prefix: tuple[Valuation, ...]
    loop: tuple[Valuation, ...]

    def __post_init__(self):
        if not self.loop:
            raise ValueError("loop must be non-empty")
        for step in (*self.prefix, *self.loop):
            for name in step:
                if not ATOM_NAME.match(name):
                    raise ValueError(f"invalid atom name in trace: {name!r}")

    @classmethod
    def make(
        cls, prefix: Iterable[Iterable[str]], loop: Iterable[Iterable[str]]
    ) -> "LassoTrace":
        return cls(
            tuple(frozenset(step) for step in prefix),
            tuple(frozenset(step) for step in loop),
        )

    def to_json(self) -> dict:
        return {
            "prefix": [sorted(step) for step in self.prefix],
            "loop": [sorted(step) for step in self.loop],
        }

    @classmethod
    def from_json(cls, data: dict) -> "LassoTrace":
        return cls.make(data["prefix"], data["loop"])


def evaluate_trace(f: Formula, trace: LassoTrace) -> bool:
    """Decide whether the infinite trace satisfies f (standard LTL semantics).

    Exact: positions up to |prefix| + |loop| with loop-back cover every
    distinct future, so temporal operators are decided by bounded scans.
    """
    pre = len(trace.prefix)
    steps = trace.prefix + trace.loop
    n = len(steps)

    def succ(i: int) -> int:
        return i + 1 if i + 1 < n else pre

    def reachable(i: int) -> range:
        return range(i, n) if i < pre else range(pre, n)

    memo: dict[tuple[Formula, int], bool] = {}

    def ev(g: Formula, i: int) -> bool:
        key = (g, i)
        if key in memo:
            return memo[key]
        if isinstance(g, Atom):
            r = g.name in steps[i]
        elif isinstance(g, TrueFormula):
            r = True
        elif isinstance(g, FalseFormula):
            r = False
        elif isinstance(g, Not):
            r = not ev(g.child, i)
        elif isinstance(g, And):
            r = ev(g.left, i) and ev(g.right, i)
        elif isinstance(g, Or):
            r = ev(g.left, i) or ev(g.right, i)
        elif isinstance(g, Implies):
            r = (not ev(g.left, i)) or ev(g.right, i)
        elif isinstance(g, Iff):
            r = ev(g.left, i) == ev(g.right, i)
        elif isinstance(g, Next):
            r = ev(g.child, succ(i))
        elif isinstance(g, Always):
            r = all(ev(g.child, j) for j in reachable(i))
        elif isinstance(g, Eventually):
            r = any(ev(g.child, j) for j in reachable(i))
        elif isinstance(g, Until):
            r = _scan_until(g, i)
        elif isinstance(g, Release):
            r = _scan_release(g, i)
        else:
            raise TypeError(f"unknown node: {g!r}")
        memo[key] = r
        return r

    def _scan_until(g: Until, i: int) -> bool:
        pos, visited = i, set()
        while pos not in visited:
            visited.add(pos)
            if ev(g.right, pos):
                return True
            if not ev(g.left, pos):
                return False
            pos = succ(pos)
        return False

    def _scan_release(g: Release, i: int) -> bool:
        pos, visited = i, set()
        while pos not in visited:
            visited.add(pos)
            if not ev(g.right, pos):
                return False
            if ev(g.left, pos):
                return True
            pos = succ(pos)
        return True  # right held on every reachable position

    return ev(f, 0)
