"""Shared test utilities: a random formula generator and an independent
lasso-enumeration oracle.

The oracle never touches the tableau in ltlguard.consistency: it evaluates
formulas over explicitly enumerated ultimately periodic traces using a
signature DP (truth values of all subformulas at the next position), so it
can exhaustively search every lasso within a prefix/loop bound.
"""

from __future__ import annotations

import itertools
import random

from ltlguard.formulas import (
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
    atoms,
    children,
)
from ltlguard.traces import LassoTrace

UNARY_OPS = (Not, Next, Eventually, Always)
BINARY_OPS = (And, Or, Implies, Iff, Until)


def random_formula(
    rng: random.Random,
    max_depth: int = 4,
    atom_names: tuple[str, ...] = ("p", "q", "r"),
    allow_constants: bool = True,
) -> Formula:
    if max_depth == 0 or rng.random() < 0.3:
        roll = rng.random()
        if allow_constants and roll < 0.1:
            return TrueFormula() if rng.random() < 0.5 else FalseFormula()
        return Atom(rng.choice(atom_names))
    if rng.random() < 0.45:
        op = rng.choice(UNARY_OPS)
        return op(random_formula(rng, max_depth - 1, atom_names, allow_constants))
    op = rng.choice(BINARY_OPS)
    return op(
        random_formula(rng, max_depth - 1, atom_names, allow_constants),
        random_formula(rng, max_depth - 1, atom_names, allow_constants),
    )


def random_lasso(
    rng: random.Random,
    atom_names: tuple[str, ...] = ("p", "q", "r"),
    max_prefix: int = 4,
    max_loop: int = 4,
) -> LassoTrace:
    def step():
        return frozenset(a for a in atom_names if rng.random() < 0.5)

    prefix = tuple(step() for _ in range(rng.randint(0, max_prefix)))
    loop = tuple(step() for _ in range(rng.randint(1, max_loop)))
    return LassoTrace(prefix, loop)


def _ordered_subformulas(f: Formula) -> list[Formula]:
    """Children before parents (evaluation order)."""
    seen: set[Formula] = set()
    out: list[Formula] = []

    def walk(g: Formula) -> None:
        if g in seen:
            return
        seen.add(g)
        for c in children(g):
            walk(c)
        out.append(g)

    walk(f)
    return out


def _loop_table(subs: list[Formula], loop: tuple[frozenset, ...]) -> dict:
    """Truth of every subformula at every loop position, for a trace that is
    the loop repeated forever. Bottom-up; each operator gets a cyclic scan."""
    n = len(loop)
    table: dict[Formula, tuple[bool, ...]] = {}
    for g in subs:
        if isinstance(g, Atom):
            row = tuple(g.name in loop[i] for i in range(n))
        elif isinstance(g, TrueFormula):
            row = (True,) * n
        elif isinstance(g, FalseFormula):
            row = (False,) * n
        elif isinstance(g, Not):
            row = tuple(not v for v in table[g.child])
        elif isinstance(g, And):
            row = tuple(a and b for a, b in zip(table[g.left], table[g.right]))
        elif isinstance(g, Or):
            row = tuple(a or b for a, b in zip(table[g.left], table[g.right]))
        elif isinstance(g, Implies):
            row = tuple((not a) or b for a, b in zip(table[g.left], table[g.right]))
        elif isinstance(g, Iff):
            row = tuple(a == b for a, b in zip(table[g.left], table[g.right]))
        elif isinstance(g, Next):
            row = tuple(table[g.child][(i + 1) % n] for i in range(n))
        elif isinstance(g, Eventually):
            anywhere = any(table[g.child])
            row = (anywhere,) * n
        elif isinstance(g, Always):
            everywhere = all(table[g.child])
            row = (everywhere,) * n
        elif isinstance(g, Until):
            left, right = table[g.left], table[g.right]
            vals = []
            for i in range(n):
                outcome = False
                for step in range(n):
                    j = (i + step) % n
                    if right[j]:
                        outcome = True
                        break
                    if not left[j]:
                        break
                vals.append(outcome)
            row = tuple(vals)
        elif isinstance(g, Release):
            left, right = table[g.left], table[g.right]
            vals = []
            for i in range(n):
                outcome = True
                for step in range(n):
                    j = (i + step) % n
                    if not right[j]:
                        outcome = False
                        break
                    if left[j]:
                        break
                vals.append(outcome)
            row = tuple(vals)
        else:
            raise TypeError(f"unknown node: {g!r}")
        table[g] = row
    return table


def _step_signature(
    subs: list[Formula], valuation: frozenset, nxt: dict[Formula, bool]
) -> dict[Formula, bool]:
    """Truth of every subformula at a position, given the valuation there and
    all truths at the successor position (LTL expansion laws)."""
    cur: dict[Formula, bool] = {}
    for g in subs:
        if isinstance(g, Atom):
            v = g.name in valuation
        elif isinstance(g, TrueFormula):
            v = True
        elif isinstance(g, FalseFormula):
            v = False
        elif isinstance(g, Not):
            v = not cur[g.child]
        elif isinstance(g, And):
            v = cur[g.left] and cur[g.right]
        elif isinstance(g, Or):
            v = cur[g.left] or cur[g.right]
        elif isinstance(g, Implies):
            v = (not cur[g.left]) or cur[g.right]
        elif isinstance(g, Iff):
            v = cur[g.left] == cur[g.right]
        elif isinstance(g, Next):
            v = nxt[g.child]
        elif isinstance(g, Eventually):
            v = cur[g.child] or nxt[g]
        elif isinstance(g, Always):
            v = cur[g.child] and nxt[g]
        elif isinstance(g, Until):
            v = cur[g.right] or (cur[g.left] and nxt[g])
        elif isinstance(g, Release):
            v = cur[g.right] and (cur[g.left] or nxt[g])
        else:
            raise TypeError(f"unknown node: {g!r}")
        cur[g] = v
    return cur


def lasso_holds(f: Formula, trace: LassoTrace) -> bool:
    """Independent evaluator: loop table plus backward prefix folding."""
    subs = _ordered_subformulas(f)
    table = _loop_table(subs, trace.loop)
    sig = {g: table[g][0] for g in subs}
    for valuation in reversed(trace.prefix):
        sig = _step_signature(subs, valuation, sig)
    return sig[f]


def satisfying_lasso(
    f: Formula,
    max_prefix: int = 4,
    max_loop: int = 4,
    atom_names: tuple[str, ...] | None = None,
) -> LassoTrace | None:
    """Exhaustive search over every lasso with |prefix| <= max_prefix and
    1 <= |loop| <= max_loop; returns a satisfying one or None.

    Signatures dedupe the prefix search: truth at the front position depends
    only on the front valuation and the successor signature, so one witness
    per signature suffices.
    """
    names = tuple(atom_names) if atom_names is not None else tuple(atoms(f))
    valuations = [
        frozenset(c) for c in itertools.chain.from_iterable(
            itertools.combinations(names, r) for r in range(len(names) + 1)
        )
    ]
    subs = _ordered_subformulas(f)

    seen_sigs: set[tuple] = set()
    frontier: list[tuple[dict, tuple, tuple]] = []  # (signature, prefix, loop)
    for length in range(1, max_loop + 1):
        for loop in itertools.product(valuations, repeat=length):
            table = _loop_table(subs, loop)
            if table[f][0]:
                return LassoTrace((), loop)
            sig = {g: table[g][0] for g in subs}
            key = tuple(sig[g] for g in subs)
            if key not in seen_sigs:
                seen_sigs.add(key)
                frontier.append((sig, (), loop))

    for _ in range(max_prefix):
        new_frontier = []
        for valuation in valuations:
            for sig, prefix, loop in frontier:
                sig2 = _step_signature(subs, valuation, sig)
                new_prefix = (valuation,) + prefix
                if sig2[f]:
                    return LassoTrace(new_prefix, loop)
                key = tuple(sig2[g] for g in subs)
                if key not in seen_sigs:
                    seen_sigs.add(key)
                    new_frontier.append((sig2, new_prefix, loop))
        frontier = new_frontier
        if not frontier:
            break
    return None
