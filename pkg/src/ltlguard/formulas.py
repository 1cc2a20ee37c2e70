"""LTL formula AST and structural operations.

Formulas are immutable trees built from atoms, boolean connectives and the
temporal operators X (next), F (eventually), G (always) and U (until).
``Release`` is the internal dual of ``Until``: negation normal form needs it,
but it is not part of the surface grammar and the parser never produces it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

ATOM_NAME = re.compile(r"[a-z][a-z0-9_]*\Z")
RESERVED_WORDS = frozenset({"true", "false"})


@dataclass(frozen=True)
class Formula:
    """Base class for all formula nodes. Immutable and hashable."""


@dataclass(frozen=True)
class Atom(Formula):
    name: str

    def __post_init__(self):
        if not ATOM_NAME.match(self.name) or self.name in RESERVED_WORDS:
            raise ValueError(f"invalid atom name: {self.name!r}")


@dataclass(frozen=True)
class TrueFormula(Formula):
    pass


@dataclass(frozen=True)
class FalseFormula(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class Next(Formula):
    child: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    child: Formula


@dataclass(frozen=True)
class Always(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    """Dual of Until; internal to NNF and the consistency checker."""

    left: Formula
    right: Formula


UNARY_KINDS = (Not, Next, Eventually, Always)
BINARY_KINDS = (And, Or, Implies, Iff, Until, Release)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, UNARY_KINDS):
        return (f.child,)
    if isinstance(f, BINARY_KINDS):
        return (f.left, f.right)
    return ()


def subformulas(f: Formula) -> list[Formula]:
    """All distinct subformulas of f in pre-order (f itself first)."""
    seen: set[Formula] = set()
    out: list[Formula] = []

    def walk(g: Formula) -> None:
        if g in seen:
            return
        seen.add(g)
        out.append(g)
        for c in children(g):
            walk(c)

    walk(f)
    return out


def atoms(f: Formula) -> list[str]:
    """Atom names in order of first occurrence (pre-order, left to right)."""
    seen: set[str] = set()
    out: list[str] = []

    def walk(g: Formula) -> None:
        if isinstance(g, Atom):
            if g.name not in seen:
                seen.add(g.name)
                out.append(g.name)
            return
        for c in children(g):
            walk(c)

    walk(f)
    return out


def rename_atoms(f: Formula, mapping: dict[str, str]) -> Formula:
    """Substitute atom names. The mapping must cover every atom of f and map
    to valid atom names."""
    present = atoms(f)
    missing = [a for a in present if a not in mapping]
    if missing:
        raise ValueError(f"mapping misses atoms: {missing}")
    for a in present:
        target = mapping[a]
        if not ATOM_NAME.match(target) or target in RESERVED_WORDS:
            raise ValueError(f"invalid target atom name: {target!r}")

    def walk(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(mapping[g.name])
        if isinstance(g, UNARY_KINDS):
            return type(g)(walk(g.child))
        if isinstance(g, BINARY_KINDS):
            return type(g)(walk(g.left), walk(g.right))
        return g

    return walk(f)


def canonical_template(f: Formula) -> tuple[Formula, dict[str, str]]:
    """Rename atoms to atom_1, atom_2, ... in first-occurrence order.

    Returns the templated formula and the renaming map (original -> placeholder).
    Two formulas agree modulo atom renaming iff their templates are equal.
    """
    mapping = {a: f"atom_{i}" for i, a in enumerate(atoms(f), start=1)}
    if not mapping:
        return f, {}
    return rename_atoms(f, mapping), mapping


def is_nnf(f: Formula) -> bool:
    """True iff negation appears only on atoms and Implies/Iff are eliminated."""
    if isinstance(f, Not):
        return isinstance(f.child, Atom)
    if isinstance(f, (Implies, Iff)):
        return False
    return all(is_nnf(c) for c in children(f))


def to_nnf(f: Formula) -> Formula:
    """Negation normal form: push negations to atoms, eliminate Implies/Iff.

    F and G stay native (they are duals of each other); the dual of Until
    is expressed with Release.
    """
    if isinstance(f, (Atom, TrueFormula, FalseFormula)):
        return f
    if isinstance(f, Not):
        g = f.child
        if isinstance(g, Atom):
            return f
        if isinstance(g, TrueFormula):
            return FalseFormula()
        if isinstance(g, FalseFormula):
            return TrueFormula()
        if isinstance(g, Not):
            return to_nnf(g.child)
        if isinstance(g, And):
            return Or(to_nnf(Not(g.left)), to_nnf(Not(g.right)))
        if isinstance(g, Or):
            return And(to_nnf(Not(g.left)), to_nnf(Not(g.right)))
        if isinstance(g, Implies):
            return And(to_nnf(g.left), to_nnf(Not(g.right)))
        if isinstance(g, Iff):
            return Or(
                And(to_nnf(g.left), to_nnf(Not(g.right))),
                And(to_nnf(Not(g.left)), to_nnf(g.right)),
            )
        if isinstance(g, Next):
            return Next(to_nnf(Not(g.child)))
        if isinstance(g, Eventually):
            return Always(to_nnf(Not(g.child)))
        if isinstance(g, Always):
            return Eventually(to_nnf(Not(g.child)))
        if isinstance(g, Until):
            return Release(to_nnf(Not(g.left)), to_nnf(Not(g.right)))
        if isinstance(g, Release):
            return Until(to_nnf(Not(g.left)), to_nnf(Not(g.right)))
        raise TypeError(f"unknown node: {g!r}")
    if isinstance(f, Implies):
        return Or(to_nnf(Not(f.left)), to_nnf(f.right))
    if isinstance(f, Iff):
        return Or(
            And(to_nnf(f.left), to_nnf(f.right)),
            And(to_nnf(Not(f.left)), to_nnf(Not(f.right))),
        )
    if isinstance(f, UNARY_KINDS):
        return type(f)(to_nnf(f.child))
    if isinstance(f, BINARY_KINDS):
        return type(f)(to_nnf(f.left), to_nnf(f.right))
    raise TypeError(f"unknown node: {f!r}")


def closure(f: Formula) -> frozenset[Formula]:
    """Fischer-Ladner closure of an NNF formula.

    All subformulas plus the Next-unfolding of every temporal member
    (Until, Release, Always, Eventually); closed under subformula.
    """
    if not is_nnf(f):
        raise ValueError("closure requires a formula in negation normal form")
    subs = set(subformulas(f))
    unfoldings = {
        Next(g) for g in subs if isinstance(g, (Until, Release, Always, Eventually))
    }
    return frozenset(subs | unfoldings)
