"""Grammar-constrained generation and the parse/repair loop.

``constrained_generate`` filters a step-wise backend's token distribution
through the mask store so the emitted text is always a parseable formula;
``repair_loop`` covers full-text backends by feeding parser diagnostics back
into the prompt.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .backends import Backend, CompletionParams, END_OF_OUTPUT, Prompt
from .formulas import Formula
from .masking import MaskStore
from .prompts import SENTINEL, repair_block
from .recognizer import START, Classification, classify, completion, feed
from .syntax import ParseDiagnostic, parse


class DeadEnd(Exception):
    """No vocabulary token can extend the current prefix toward a formula."""

    def __init__(self, prefix: bytes):
        super().__init__(f"no unmasked token extends prefix {prefix!r}")
        self.prefix = prefix


@dataclass(frozen=True)
class NotLtl:
    """Marker result: the backend produced the not-an-LTL-requirement sentinel."""


NOT_LTL = NotLtl()


def _best(candidates: list[tuple[int, float]]) -> tuple[int, float]:
    return max(candidates, key=lambda pair: (pair[1], -pair[0]))


def _probe_sentinel(backend: Backend, prompt: Prompt, vocab) -> bool:
    """Greedy unconstrained lookahead: does the backend want to emit the
    sentinel? Aborts as soon as the output stops matching it."""
    target = SENTINEL.encode()
    buf = b""
    while len(buf) < len(target):
        dist = backend.next_token_distribution(prompt, buf)
        top, _ = _best(dist)
        if top == END_OF_OUTPUT:
            return False
        buf += vocab.tokens[top]
        if not (target.startswith(buf) or buf.startswith(target)):
            return False
    return buf.startswith(target)


def constrained_generate(
    backend: Backend,
    prompt: Prompt,
    mask_store: MaskStore,
    *,
    max_tokens: int = 64,
    temperature: float = 0.0,
    seed: int = 0,
) -> str | NotLtl:
    """Greedy (or seeded-sampling) decoding under the grammar mask.

    The returned string always parses. When the backend wants to stop at a
    non-accepting state, or the token budget runs out, the shortest accepting
    completion is steered instead. Raises DeadEnd when no token can extend a
    non-accepting prefix.
    """
    if not backend.capability.step_wise:
        raise ValueError("constrained_generate requires a step-wise backend")
    vocab = mask_store.vocabulary
    if _probe_sentinel(backend, prompt, vocab):
        return NOT_LTL

    rng = random.Random(seed) if temperature > 0 else None
    state = START
    out = b""
    steps = 0
    hard_cap = max_tokens + 64
    while True:
        accepting = classify(state) is Classification.ACCEPTING
        if steps >= max_tokens and accepting:
            break
        if steps >= hard_cap:
            raise DeadEnd(out)
        dist = backend.next_token_distribution(prompt, out)
        allowed = [
            (tid, score)
            for tid, score in dist
            if (tid == END_OF_OUTPUT and accepting)
            or (tid != END_OF_OUTPUT and mask_store.allows(state, tid))
        ]
        if not allowed:
            raise DeadEnd(out)
        backend_top, _ = _best(dist)
        force_completion = steps >= max_tokens or (
            backend_top == END_OF_OUTPUT and not accepting
        )
        if force_completion:
            choice = min(
                (pair for pair in allowed if pair[0] != END_OF_OUTPUT),
                key=lambda pair: (
                    len(completion(feed(state, vocab.tokens[pair[0]])) or b""),
                    -pair[1],
                    pair[0],
                ),
            )[0]
        elif rng is not None:
            weights = [math.exp(score / temperature) for _, score in allowed]
            choice = rng.choices([tid for tid, _ in allowed], weights=weights)[0]
        else:
            choice = _best(allowed)[0]
        if choice == END_OF_OUTPUT:
            break
        out += vocab.tokens[choice]
        state = feed(state, vocab.tokens[choice])
        steps += 1
    return out.decode("utf-8")


@dataclass(frozen=True)
class RepairAttempt:
    candidate: str
    diagnostic: ParseDiagnostic


@dataclass(frozen=True)
class RepairFailure:
    attempts: tuple[RepairAttempt, ...]


def repair_with_history(
    backend: Backend,
    prompt: Prompt,
    candidate: str,
    max_rounds: int,
    params: CompletionParams | None = None,
) -> tuple[Formula | None, tuple[RepairAttempt, ...]]:
    """Like repair_loop but also returns the failed attempts; on success their
    count equals the number of repair queries that were needed."""
    if max_rounds < 0:
        raise ValueError("max_rounds must be >= 0")
    attempts: list[RepairAttempt] = []
    current = candidate
    working_prompt = prompt
    for round_no in range(max_rounds + 1):
        result = parse(current)
        if isinstance(result, Formula):
            return result, tuple(attempts)
        attempts.append(RepairAttempt(current, result))
        if round_no == max_rounds:
            break
        working_prompt = working_prompt.with_user_suffix(
            repair_block(current, result)
        )
        current = backend.complete(working_prompt, params).strip()
    return None, tuple(attempts)


def repair_loop(
    backend: Backend,
    prompt: Prompt,
    candidate: str,
    max_rounds: int,
    params: CompletionParams | None = None,
) -> Formula | RepairFailure:
    """Parse the candidate; on failure, feed the diagnostic back to the
    backend as a repair instruction, up to max_rounds times."""
    formula, attempts = repair_with_history(
        backend, prompt, candidate, max_rounds, params
    )
    if formula is not None:
        return formula
    return RepairFailure(attempts)
