"""LTL satisfiability over infinite traces, lasso models and unsat cores.

The decision procedure is a tableau: the input formula is brought to
negation normal form, states are locally consistent subsets of its closure,
transitions discharge Next-obligations, and emptiness is checked with one
fairness condition per eventuality (generalized-Buechi acceptance). A Sat
answer always carries a lasso model that is re-verified with
``evaluate_trace`` before it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .formulas import (
    And,
    Atom,
    Always,
    Eventually,
    FalseFormula,
    Formula,
    Next,
    Not,
    Or,
    Release,
    TrueFormula,
    Until,
    to_nnf,
)
from .traces import LassoTrace, evaluate_trace

DEFAULT_STATE_CAP = 200_000


class ResourceLimit(Exception):
    """State count exceeded the cap; the formula is too large, not unsat."""


@dataclass(frozen=True)
class NamedFormula:
    id: str
    formula: Formula
    origin: str = ""


@dataclass(frozen=True)
class Sat:
    model: LassoTrace

    @property
    def verdict(self) -> str:
        return "sat"


@dataclass(frozen=True)
class Unsat:
    core: tuple[str, ...] = ()

    @property
    def verdict(self) -> str:
        return "unsat"


SatOutcome = Sat | Unsat

State = frozenset  # of Formula


def _complement(literal: Formula) -> Formula:
    if isinstance(literal, Not):
        return literal.child
    return Not(literal)


def _canonical_order(items) -> list[Formula]:
    # Set iteration order varies with hash randomization; sort so that state
    # exploration (and therefore extracted models) is identical across runs.
    return sorted(items, key=repr)


def _saturations(obligations: frozenset, memo: dict) -> tuple[State, ...]:
    """All locally consistent saturated extensions of the obligation set."""
    if obligations in memo:
        return memo[obligations]
    results: list[State] = []
    seen: set[State] = set()

    def expand(todo: list[Formula], done: set[Formula]) -> None:
        while todo:
            g = todo.pop()
            if g in done:
                continue
            if isinstance(g, FalseFormula):
                return
            if isinstance(g, Atom) or (isinstance(g, Not) and isinstance(g.child, Atom)):
                if _complement(g) in done:
                    return
                done.add(g)
            elif isinstance(g, TrueFormula):
                done.add(g)
            elif isinstance(g, And):
                done.add(g)
                todo.append(g.left)
                todo.append(g.right)
            elif isinstance(g, Next):
                done.add(g)
            elif isinstance(g, Or):
                done.add(g)
                expand(todo + [g.left], set(done))
                expand(todo + [g.right], set(done))
                return
            elif isinstance(g, Until):
                done.add(g)
                expand(todo + [g.right], set(done))
                expand(todo + [g.left, Next(g)], set(done))
                return
            elif isinstance(g, Release):
                done.add(g)
                expand(todo + [g.right, g.left], set(done))
                expand(todo + [g.right, Next(g)], set(done))
                return
            elif isinstance(g, Eventually):
                done.add(g)
                expand(todo + [g.child], set(done))
                expand(todo + [Next(g)], set(done))
                return
            elif isinstance(g, Always):
                done.add(g)
                todo.append(g.child)
                todo.append(Next(g))
            else:
                raise TypeError(f"non-NNF node in tableau: {g!r}")
        state = frozenset(done)
        if state not in seen:
            seen.add(state)
            results.append(state)

    expand(_canonical_order(obligations), set())
    out = tuple(results)
    memo[obligations] = out
    return out


def _next_obligations(state: State) -> frozenset:
    return frozenset(g.child for g in state if isinstance(g, Next))


def _eventualities(state_graph_states: Iterator[State]) -> list[tuple[Formula, Formula]]:
    pairs: dict[Formula, Formula] = {}
    for state in state_graph_states:
        for g in state:
            if isinstance(g, Until):
                pairs[g] = g.right
            elif isinstance(g, Eventually):
                pairs[g] = g.child
    return sorted(pairs.items(), key=lambda kv: repr(kv[0]))


@dataclass
class _Tableau:
    initial: tuple[State, ...]
    graph: dict[State, tuple[State, ...]] = field(default_factory=dict)


def _build_tableau(g: Formula, state_cap: int) -> _Tableau:
    memo: dict = {}
    initial = _saturations(frozenset([g]), memo)
    graph: dict[State, tuple[State, ...]] = {}
    frontier = list(initial)
    while frontier:
        state = frontier.pop()
        if state in graph:
            continue
        succs = _saturations(_next_obligations(state), memo)
        graph[state] = succs
        if len(graph) > state_cap:
            raise ResourceLimit(
                f"tableau exceeded {state_cap} states; raise the cap to proceed"
            )
        frontier.extend(s for s in succs if s not in graph)
    return _Tableau(initial=initial, graph=graph)


def _sccs(graph: dict[State, tuple[State, ...]]) -> list[list[State]]:
    """Tarjan's algorithm, iterative. Returns SCCs in discovery order."""
    index: dict[State, int] = {}
    low: dict[State, int] = {}
    on_stack: set[State] = set()
    stack: list[State] = []
    out: list[list[State]] = []
    counter = 0

    for root in graph:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            node, child_i = work[-1]
            if child_i == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            succs = graph[node]
            for k in range(child_i, len(succs)):
                nxt = succs[k]
                if nxt not in index:
                    work[-1] = (node, k + 1)
                    work.append((nxt, 0))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp.append(member)
                    if member == node:
                        break
                out.append(comp)
    return out


def _bfs_path(
    graph: dict[State, tuple[State, ...]],
    sources: Sequence[State],
    targets: set[State],
    within: set[State] | None = None,
    min_steps: int = 0,
) -> list[State] | None:
    """Shortest path from any source to any target; optionally restricted to
    `within` and forced to take at least `min_steps` edges."""
    from collections import deque

    queue = deque((s, (s,)) for s in sources)
    visited = set()
    while queue:
        node, path = queue.popleft()
        if node in targets and len(path) - 1 >= min_steps:
            return list(path)
        if (node, len(path) > 1) in visited:
            continue
        visited.add((node, len(path) > 1))
        for nxt in graph[node]:
            if within is not None and nxt not in within:
                continue
            queue.append((nxt, path + (nxt,)))
    return None


def _state_valuation(state: State) -> frozenset[str]:
    return frozenset(g.name for g in state if isinstance(g, Atom))


def _extract_lasso(
    tableau: _Tableau,
    scc: list[State],
    eventualities: list[tuple[Formula, Formula]],
) -> LassoTrace:
    members = set(scc)
    entry_path = _bfs_path(tableau.graph, tableau.initial, members)
    assert entry_path is not None
    anchor = entry_path[-1]

    reps: list[State] = []
    for ev, target in eventualities:
        candidates = [s for s in scc if ev not in s or target in s]
        if not candidates:
            raise RuntimeError("accepting SCC lost a fairness witness")
        # prefer a representative already chosen or the anchor
        pick = anchor if anchor in candidates else candidates[0]
        if pick not in reps and pick != anchor:
            reps.append(pick)

    loop_states: list[State] = [anchor]
    current = anchor
    for rep in reps:
        leg = _bfs_path(tableau.graph, [current], {rep}, within=members)
        assert leg is not None
        loop_states.extend(leg[1:])
        current = rep
    back = _bfs_path(
        tableau.graph, [current], {anchor}, within=members, min_steps=1
    )
    assert back is not None
    loop_states.extend(back[1:-1])  # drop the repeated anchor

    prefix = tuple(_state_valuation(s) for s in entry_path[:-1])
    loop = tuple(_state_valuation(s) for s in loop_states)
    return LassoTrace(prefix, loop)


def check_sat(f: Formula, state_cap: int = DEFAULT_STATE_CAP) -> SatOutcome:
    """Decide satisfiability; Sat carries a verified lasso model."""
    g = to_nnf(f)
    tableau = _build_tableau(g, state_cap)
    if not tableau.initial:
        return Unsat()
    eventualities = _eventualities(iter(tableau.graph))

    # every graph state is reachable from an initial state by construction
    for scc in _sccs(tableau.graph):
        non_trivial = len(scc) > 1 or scc[0] in tableau.graph[scc[0]]
        if not non_trivial:
            continue
        ok = True
        for ev, target in eventualities:
            if not any(ev not in s or target in s for s in scc):
                ok = False
                break
        if not ok:
            continue
        model = _extract_lasso(tableau, scc, eventualities)
        if not evaluate_trace(f, model):
            raise RuntimeError("internal error: extracted model failed verification")
        return Sat(model)
    return Unsat()


def join(reqs: Sequence[NamedFormula], mode: str = "conjunction") -> Formula:
    """Left-fold conjunction of the formulas in input order."""
    if mode != "conjunction":
        raise ValueError(f"unsupported join mode: {mode!r}")
    if not reqs:
        raise ValueError("cannot join an empty requirement list")
    result = reqs[0].formula
    for r in reqs[1:]:
        result = And(result, r.formula)
    return result


def minimize_core(
    reqs: Sequence[NamedFormula], state_cap: int = DEFAULT_STATE_CAP
) -> list[str]:
    """Deletion-based minimal unsatisfiable subset, processed in input order.

    Every proper subset of the returned core is satisfiable. Requires the
    conjunction of the inputs to be unsatisfiable.
    """
    if isinstance(check_sat(join(reqs), state_cap), Sat):
        raise ValueError("minimize_core requires an unsatisfiable input set")
    kept = list(reqs)
    for r in list(reqs):
        trial = [x for x in kept if x.id != r.id]
        if trial and isinstance(check_sat(join(trial), state_cap), Unsat):
            kept = trial
    return [r.id for r in kept]


def check_set(
    reqs: Sequence[NamedFormula], state_cap: int = DEFAULT_STATE_CAP
) -> SatOutcome:
    """Check the conjunction of named requirements; Unsat carries a minimal core."""
    ids = [r.id for r in reqs]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate requirement ids: {ids}")
    outcome = check_sat(join(reqs), state_cap)
    if isinstance(outcome, Sat):
        return outcome
    return Unsat(tuple(minimize_core(reqs, state_cap)))


def equivalent(a: Formula, b: Formula, state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """Semantic equivalence: both difference directions are unsatisfiable."""
    if isinstance(check_sat(And(a, Not(b)), state_cap), Sat):
        return False
    return isinstance(check_sat(And(b, Not(a)), state_cap), Unsat)
