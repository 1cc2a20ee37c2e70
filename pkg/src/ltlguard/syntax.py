"""Concrete LTL syntax: lexer, parser, diagnostics and printer.

Grammar (tightest binding first): unary ``! G F X``, then ``U``
(right-associative), ``&`` (left), ``|`` (left), ``->`` (right),
``<->`` (left, loosest). Atoms match ``[a-z][a-z0-9_]*``; ``true`` and
``false`` are reserved words. Whitespace is insignificant.

This text syntax is the wire format for every JSON field named ``ltl``.
"""

from __future__ import annotations

from dataclasses import dataclass

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
)

GRAMMAR_TEXT = """\
formula := iff
iff     := implies ('<->' implies)*
implies := or ('->' implies)?
or      := and ('|' and)*
and     := until ('&' until)*
until   := unary ('U' until)?
unary   := ('!' | 'G' | 'F' | 'X') unary | primary
primary := atom | 'true' | 'false' | '(' formula ')'
atom    := [a-z][a-z0-9_]*
Operator binding, tightest first: ! G F X, then U (right-associative),
& (left), | (left), -> (right), <-> (left)."""


@dataclass(frozen=True)
class ParseDiagnostic:
    """Location and description of the first error in an input string."""

    offset: int  # byte offset into the UTF-8 encoding of the input
    expected: str
    found: str
    message: str


class ParseError(Exception):
    def __init__(self, diagnostic: ParseDiagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int  # character index


_SINGLE = {
    "(": "lparen",
    ")": "rparen",
    "!": "not",
    "&": "and",
    "|": "or",
    "G": "always",
    "F": "eventually",
    "X": "next",
    "U": "until",
}

_WORD_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz0123456789_")


def _byte_offset(text: str, idx: int) -> int:
    return len(text[:idx].encode("utf-8"))


class _LexError(Exception):
    def __init__(self, diagnostic: ParseDiagnostic):
        self.diagnostic = diagnostic


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _SINGLE:
            tokens.append(_Token(_SINGLE[c], c, i))
            i += 1
            continue
        if c == "-":
            if text.startswith("->", i):
                tokens.append(_Token("implies", "->", i))
                i += 2
                continue
            raise _LexError(
                ParseDiagnostic(
                    _byte_offset(text, i),
                    "'->'",
                    text[i : i + 2] or c,
                    f"lexical error at offset {_byte_offset(text, i)}: "
                    f"expected '->', found {text[i:i + 2]!r}",
                )
            )
        if c == "<":
            if text.startswith("<->", i):
                tokens.append(_Token("iff", "<->", i))
                i += 3
                continue
            raise _LexError(
                ParseDiagnostic(
                    _byte_offset(text, i),
                    "'<->'",
                    text[i : i + 3] or c,
                    f"lexical error at offset {_byte_offset(text, i)}: "
                    f"expected '<->', found {text[i:i + 3]!r}",
                )
            )
        if "a" <= c <= "z":
            j = i + 1
            while j < n and text[j] in _WORD_CHARS:
                j += 1
            word = text[i:j]
            if word == "true":
                tokens.append(_Token("true", word, i))
            elif word == "false":
                tokens.append(_Token("false", word, i))
            else:
                tokens.append(_Token("atom", word, i))
            i = j
            continue
        if c.isupper():
            raise _LexError(
                ParseDiagnostic(
                    _byte_offset(text, i),
                    "a lowercase atom or an operator",
                    c,
                    f"lexical error at offset {_byte_offset(text, i)}: "
                    f"uppercase {c!r} is not allowed; atoms are lowercase and the "
                    f"only capital operators are G, F, X, U",
                )
            )
        raise _LexError(
            ParseDiagnostic(
                _byte_offset(text, i),
                "an atom, operator, or parenthesis",
                c,
                f"lexical error at offset {_byte_offset(text, i)}: "
                f"illegal character {c!r}",
            )
        )
    tokens.append(_Token("eof", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, tokens: list[_Token]):
        self.text = text
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str) -> ParseDiagnostic:
        tok = self.peek()
        found = tok.text if tok.kind != "eof" else "end of input"
        off = _byte_offset(self.text, tok.pos)
        return ParseDiagnostic(
            off,
            expected,
            found,
            f"syntax error at offset {off}: expected {expected}, found {found}",
        )

    def parse_formula(self) -> Formula:
        return self.parse_iff()

    def parse_iff(self) -> Formula:
        left = self.parse_implies()
        while self.peek().kind == "iff":
            self.advance()
            left = Iff(left, self.parse_implies())
        return left

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.peek().kind == "implies":
            self.advance()
            return Implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        left = self.parse_and()
        while self.peek().kind == "or":
            self.advance()
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Formula:
        left = self.parse_until()
        while self.peek().kind == "and":
            self.advance()
            left = And(left, self.parse_until())
        return left

    def parse_until(self) -> Formula:
        left = self.parse_unary()
        if self.peek().kind == "until":
            self.advance()
            return Until(left, self.parse_until())
        return left

    def parse_unary(self) -> Formula:
        kind = self.peek().kind
        if kind == "not":
            self.advance()
            return Not(self.parse_unary())
        if kind == "always":
            self.advance()
            return Always(self.parse_unary())
        if kind == "eventually":
            self.advance()
            return Eventually(self.parse_unary())
        if kind == "next":
            self.advance()
            return Next(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "atom":
            self.advance()
            return Atom(tok.text)
        if tok.kind == "true":
            self.advance()
            return TrueFormula()
        if tok.kind == "false":
            self.advance()
            return FalseFormula()
        if tok.kind == "lparen":
            self.advance()
            inner = self.parse_formula()
            if self.peek().kind != "rparen":
                raise ParseError(self.fail("')'"))
            self.advance()
            return inner
        raise ParseError(self.fail("formula"))


def parse(text: str) -> Formula | ParseDiagnostic:
    """Parse LTL text; return the AST or a diagnostic for the first error."""
    try:
        tokens = _lex(text)
    except _LexError as e:
        return e.diagnostic
    if tokens[0].kind == "eof":
        off = _byte_offset(text, len(text))
        return ParseDiagnostic(
            off, "formula", "end of input", "empty input: expected formula"
        )
    parser = _Parser(text, tokens)
    try:
        formula = parser.parse_formula()
    except ParseError as e:
        return e.diagnostic
    if parser.peek().kind != "eof":
        return parser.fail("operator or end of input")
    return formula


def parse_strict(text: str) -> Formula:
    """Like parse() but raises ParseError instead of returning a diagnostic."""
    result = parse(text)
    if isinstance(result, ParseDiagnostic):
        raise ParseError(result)
    return result


# Precedence levels for printing; higher binds tighter.
_LEVEL_IFF = 0
_LEVEL_IMPLIES = 1
_LEVEL_OR = 2
_LEVEL_AND = 3
_LEVEL_UNTIL = 4
_LEVEL_UNARY = 5


def _level(f: Formula) -> int:
    if isinstance(f, Iff):
        return _LEVEL_IFF
    if isinstance(f, Implies):
        return _LEVEL_IMPLIES
    if isinstance(f, Or):
        return _LEVEL_OR
    if isinstance(f, And):
        return _LEVEL_AND
    if isinstance(f, (Until, Release)):
        return _LEVEL_UNTIL
    return _LEVEL_UNARY


_BINARY_SYMBOL = {And: "&", Or: "|", Implies: "->", Iff: "<->", Until: "U", Release: "R"}
_RIGHT_ASSOC = (Implies, Until, Release)


def formula_to_text(f: Formula) -> str:
    """Render with minimal parentheses; parse(formula_to_text(f)) == f.

    Release has no surface syntax; it renders as ``R`` for debugging and the
    round trip holds only for parser-expressible formulas.
    """
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, TrueFormula):
        return "true"
    if isinstance(f, FalseFormula):
        return "false"
    if isinstance(f, Not):
        return "!" + _wrap(f.child, _LEVEL_UNARY)
    if isinstance(f, Always):
        return "G " + _wrap(f.child, _LEVEL_UNARY)
    if isinstance(f, Eventually):
        return "F " + _wrap(f.child, _LEVEL_UNARY)
    if isinstance(f, Next):
        return "X " + _wrap(f.child, _LEVEL_UNARY)
    sym = _BINARY_SYMBOL[type(f)]
    lvl = _level(f)
    if isinstance(f, _RIGHT_ASSOC):
        left = _wrap(f.left, lvl + 1)
        right = _wrap(f.right, lvl)
    else:
        left = _wrap(f.left, lvl)
        right = _wrap(f.right, lvl + 1)
    return f"{left} {sym} {right}"


def _wrap(f: Formula, min_level: int) -> str:
    text = formula_to_text(f)
    if _level(f) < min_level:
        return f"({text})"
    return text
