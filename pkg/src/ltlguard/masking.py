"""Vocabulary masks: which tokens may extend a recognizer state.

A mask bit is set for token t at state s iff feeding t's bytes from s leaves
the recognizer alive (Accepting or ValidPrefix). Masks for states inside the
build budget are precomputed; anything beyond is computed lazily and
memoized, never approximated.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from typing import Mapping

from .recognizer import START, Classification, RecognizerState, classify, feed
from .syntax import GRAMMAR_TEXT


@dataclass(frozen=True)
class Vocabulary:
    tokens: Mapping[int, bytes]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("vocabulary must be non-empty")
        for tid, data in self.tokens.items():
            if not isinstance(tid, int):
                raise ValueError(f"token id must be an int: {tid!r}")
            if not data:
                raise ValueError(f"token {tid} has empty bytes")

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.tokens))

    def digest(self) -> str:
        h = hashlib.sha256()
        for tid in self.ids:
            h.update(f"{tid}:".encode())
            h.update(self.tokens[tid])
            h.update(b"\x00")
        return h.hexdigest()


def grammar_digest() -> str:
    return hashlib.sha256(GRAMMAR_TEXT.encode()).hexdigest()


class MaskStore:
    """State -> bitset over vocabulary token ids. Thread-safe lazy lookups."""

    def __init__(self, vocabulary: Vocabulary):
        self.vocabulary = vocabulary
        self._ids = vocabulary.ids
        self._bit = {tid: i for i, tid in enumerate(self._ids)}
        self._masks: dict[RecognizerState, int] = {}
        self._lock = threading.Lock()

    def _compute(self, state: RecognizerState) -> int:
        mask = 0
        for tid in self._ids:
            nxt = feed(state, self.vocabulary.tokens[tid])
            if classify(nxt) is not Classification.INVALID:
                mask |= 1 << self._bit[tid]
        return mask

    def mask(self, state: RecognizerState) -> int:
        got = self._masks.get(state)
        if got is not None:
            return got
        value = self._compute(state)
        with self._lock:
            return self._masks.setdefault(state, value)

    def allows(self, state: RecognizerState, token_id: int) -> bool:
        return bool(self.mask(state) >> self._bit[token_id] & 1)

    def allowed_ids(self, state: RecognizerState) -> tuple[int, ...]:
        mask = self.mask(state)
        return tuple(tid for tid in self._ids if mask >> self._bit[tid] & 1)

    @property
    def precomputed_states(self) -> int:
        return len(self._masks)


def build_mask_store(vocabulary: Vocabulary, state_budget: int = 4096) -> MaskStore:
    """Precompute masks for states reachable by token applications, breadth
    first from the start state, up to the budget. Budget exhaustion degrades
    to lazy computation."""
    store = MaskStore(vocabulary)
    frontier = [START]
    seen = {START}
    while frontier and len(store._masks) < state_budget:
        state = frontier.pop(0)
        store.mask(state)
        for tid in store._ids:
            nxt = feed(state, vocabulary.tokens[tid])
            if classify(nxt) is Classification.INVALID or nxt in seen:
                continue
            seen.add(nxt)
            frontier.append(nxt)
    return store


_CACHE_MAGIC = "ltlguard-mask-cache"
_CACHE_VERSION = 1


def save_mask_store(store: MaskStore, path) -> None:
    payload = {
        "magic": _CACHE_MAGIC,
        "version": _CACHE_VERSION,
        "grammar": grammar_digest(),
        "vocabulary": store.vocabulary.digest(),
        "masks": [
            [s.mode, s.depth, s.partial, m]
            for s, m in sorted(
                store._masks.items(), key=lambda kv: (kv[0].depth, kv[0].mode, kv[0].partial)
            )
            if s.alive
        ],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(payload, sort_keys=True).encode())


def load_mask_store(path, vocabulary: Vocabulary) -> MaskStore:
    with open(path, "rb") as fh:
        payload = json.loads(fh.read().decode())
    if payload.get("magic") != _CACHE_MAGIC or payload.get("version") != _CACHE_VERSION:
        raise ValueError("unrecognized mask cache file")
    if payload["grammar"] != grammar_digest():
        raise ValueError("mask cache was built for a different grammar")
    if payload["vocabulary"] != vocabulary.digest():
        raise ValueError("mask cache was built for a different vocabulary")
    store = MaskStore(vocabulary)
    for mode, depth, partial, mask in payload["masks"]:
        store._masks[RecognizerState(mode, depth, partial)] = mask
    return store
