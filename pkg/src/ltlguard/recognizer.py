"""Incremental byte-level recognizer for the prefix language of LTL text.

A state tracks whether an operand or an operator is expected, the open
parenthesis depth, and any partially read lexeme (an atom in progress or the
first bytes of ``->`` / ``<->``). A prefix is classified ValidPrefix iff some
suffix completes it to a parseable formula, Accepting iff it parses as-is,
and Invalid otherwise; Invalid is absorbing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Classification(enum.Enum):
    ACCEPTING = "accepting"
    VALID_PREFIX = "valid_prefix"
    INVALID = "invalid"


@dataclass(frozen=True)
class RecognizerState:
    mode: str = "operand"  # "operand" | "operator": what the grammar expects next
    depth: int = 0
    partial: str = ""  # "" | "word" | "-" | "<" | "<-"
    alive: bool = True


START = RecognizerState()
INVALID = RecognizerState(alive=False)

_WHITESPACE = frozenset(b" \t\r\n\x0b\x0c")
_WORD_START = frozenset(range(ord("a"), ord("z") + 1))
_WORD_CONT = _WORD_START | frozenset(range(ord("0"), ord("9") + 1)) | {ord("_")}
_UNARY_OPS = frozenset(b"!GFX")
_BINARY_SINGLE = frozenset(b"U&|")


def feed_byte(state: RecognizerState, byte: int) -> RecognizerState:
    if not state.alive:
        return INVALID
    if state.partial == "-":
        if byte == ord(">"):
            return RecognizerState("operand", state.depth, "")
        return INVALID
    if state.partial == "<":
        if byte == ord("-"):
            return RecognizerState(state.mode, state.depth, "<-")
        return INVALID
    if state.partial == "<-":
        if byte == ord(">"):
            return RecognizerState("operand", state.depth, "")
        return INVALID
    if state.partial == "word":
        if byte in _WORD_CONT:
            return state
        # the word lexeme ends here; mode was already flipped to operator
        return feed_byte(RecognizerState("operator", state.depth, ""), byte)

    # token boundary
    if byte in _WHITESPACE:
        return state
    if byte in _WORD_START:
        if state.mode != "operand":
            return INVALID
        return RecognizerState("operator", state.depth, "word")
    if byte in _UNARY_OPS:
        if state.mode != "operand":
            return INVALID
        return state
    if byte == ord("("):
        if state.mode != "operand":
            return INVALID
        return RecognizerState("operand", state.depth + 1, "")
    if byte == ord(")"):
        if state.mode != "operator" or state.depth == 0:
            return INVALID
        return RecognizerState("operator", state.depth - 1, "")
    if byte in _BINARY_SINGLE:
        if state.mode != "operator":
            return INVALID
        return RecognizerState("operand", state.depth, "")
    if byte == ord("-"):
        if state.mode != "operator":
            return INVALID
        return RecognizerState(state.mode, state.depth, "-")
    if byte == ord("<"):
        if state.mode != "operator":
            return INVALID
        return RecognizerState(state.mode, state.depth, "<")
    return INVALID


def feed(state: RecognizerState, data: bytes | str) -> RecognizerState:
    if isinstance(data, str):
        data = data.encode("utf-8")
    for b in data:
        state = feed_byte(state, b)
        if not state.alive:
            return INVALID
    return state


def classify(state: RecognizerState) -> Classification:
    if not state.alive:
        return Classification.INVALID
    if state.depth == 0 and state.partial in ("", "word") and state.mode == "operator":
        return Classification.ACCEPTING
    return Classification.VALID_PREFIX


def completion(state: RecognizerState) -> bytes | None:
    """A shortest suffix taking the state to Accepting, or None if Invalid."""
    if not state.alive:
        return None
    out = b""
    mode = state.mode
    if state.partial == "-":
        out += b">"
        mode = "operand"
    elif state.partial == "<":
        out += b"->"
        mode = "operand"
    elif state.partial == "<-":
        out += b">"
        mode = "operand"
    elif state.partial == "word":
        mode = "operator"
    if mode == "operand":
        out += b"p"
    out += b")" * state.depth
    return out
