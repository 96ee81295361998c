"""Modal/temporal formula AST, concrete-syntax parser, and printer.

Connectives, ASCII only: ~  &  |  ->  <->, the modal prefixes box/dia
(or [i] / <i> for an indexed modality), and the temporal next operator X.
Precedence, tightest first: unary prefixes, &, |, -> (right associative),
<-> (left associative).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping

KEYWORDS = frozenset({"box", "dia", "X", "true", "false"})

# Identifiers the toolchain claims for itself: the accessibility relations
# R / R_<index>, the temporal successor function S, and Skolem symbols.
_RESERVED_EXACT = frozenset({"R", "S"})
_RESERVED_PREFIXES = ("R_", "sk")


class ParseError(ValueError):
    """Syntax error carrying a 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class Formula:
    """Base class for modal formula nodes; instances are immutable."""

    def __str__(self) -> str:
        return print_modal(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
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
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Box(Formula):
    child: Formula
    index: str | None = None


@dataclass(frozen=True)
class Dia(Formula):
    child: Formula
    index: str | None = None


@dataclass(frozen=True)
class Next(Formula):
    child: Formula


@dataclass(frozen=True)
class Macro:
    """A named formula template; zero-parameter macros are plain abbreviations."""

    params: tuple[str, ...]
    body: Formula


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Atom, Top, Bottom)):
        return ()
    if isinstance(f, (Not, Box, Dia, Next)):
        return (f.child,)
    return (f.left, f.right)


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    for c in children(f):
        yield from subformulas(c)


def atoms(f: Formula) -> frozenset[str]:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Atom))


def modal_indices(f: Formula) -> frozenset[str | None]:
    """Indices of all Box/Dia operators in f; None stands for the default modality."""
    return frozenset(g.index for g in subformulas(f) if isinstance(g, (Box, Dia)))


def contains_next(f: Formula) -> bool:
    return any(isinstance(g, Next) for g in subformulas(f))


def contains_indexed(f: Formula) -> bool:
    return any(i is not None for i in modal_indices(f))


def substitute(f: Formula, mapping: Mapping[str, Formula]) -> Formula:
    """Replace atoms by formulas, simultaneously."""
    if isinstance(f, Atom):
        return mapping.get(f.name, f)
    if isinstance(f, (Top, Bottom)):
        return f
    if isinstance(f, Not):
        return Not(substitute(f.child, mapping))
    if isinstance(f, Box):
        return Box(substitute(f.child, mapping), f.index)
    if isinstance(f, Dia):
        return Dia(substitute(f.child, mapping), f.index)
    if isinstance(f, Next):
        return Next(substitute(f.child, mapping))
    return type(f)(substitute(f.left, mapping), substitute(f.right, mapping))


# ---------------------------------------------------------------------------
# tokenizer

@dataclass(frozen=True)
class _Token:
    kind: str  # "ident" | "kw" | "sym" | "eof"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<iff><->)"
    r"|(?P<imp>->)"
    r"|(?P<sym>[~&|()\[\]<>,])"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
)


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unknown token {text[i]!r}", line, col)
        lexeme = m.group(0)
        group = m.lastgroup
        if group != "ws":
            if group == "ident":
                kind = "kw" if lexeme in KEYWORDS else "ident"
            else:
                kind = "sym"
            tokens.append(_Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        i = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, tokens: list[_Token], macros: Mapping[str, Macro]):
        self.tokens = tokens
        self.pos = 0
        self.macros = macros

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def at_sym(self, text: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.text == text

    def expect_sym(self, text: str) -> None:
        t = self.take()
        if t.kind != "sym" or t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r}" if t.kind != "eof"
                             else f"expected {text!r}, found end of input", t.line, t.col)

    def parse(self) -> Formula:
        f = self.formula()
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(f"unexpected {t.text!r} after formula", t.line, t.col)
        return f

    def formula(self) -> Formula:
        left = self.imp()
        while self.at_sym("<->"):
            self.take()
            left = Iff(left, self.imp())
        return left

    def imp(self) -> Formula:
        left = self.disj()
        if self.at_sym("->"):
            self.take()
            return Imp(left, self.imp())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.at_sym("|"):
            self.take()
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.at_sym("&"):
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        t = self.peek()
        if t.kind == "sym" and t.text == "~":
            self.take()
            return Not(self.unary())
        if t.kind == "kw" and t.text == "box":
            self.take()
            return Box(self.unary())
        if t.kind == "kw" and t.text == "dia":
            self.take()
            return Dia(self.unary())
        if t.kind == "kw" and t.text == "X":
            self.take()
            return Next(self.unary())
        if t.kind == "sym" and t.text == "[":
            self.take()
            index = self.index_ident()
            self.expect_sym("]")
            return Box(self.unary(), index)
        if t.kind == "sym" and t.text == "<":
            self.take()
            index = self.index_ident()
            self.expect_sym(">")
            return Dia(self.unary(), index)
        return self.atom()

    def index_ident(self) -> str:
        t = self.take()
        if t.kind != "ident":
            raise ParseError("expected a modality index", t.line, t.col)
        _check_ident(t.text, t.line, t.col)
        return t.text

    def atom(self) -> Formula:
        t = self.take()
        if t.kind == "kw" and t.text == "true":
            return Top()
        if t.kind == "kw" and t.text == "false":
            return Bottom()
        if t.kind == "ident":
            if self.at_sym("("):
                if t.text not in self.macros:
                    raise ParseError(f"unknown macro {t.text!r}", t.line, t.col)
                return self.macro_app(t)
            if t.text in self.macros:
                macro = self.macros[t.text]
                if macro.params:
                    raise ParseError(f"macro {t.text!r} expects "
                                     f"{len(macro.params)} argument(s)", t.line, t.col)
                return macro.body
            _check_ident(t.text, t.line, t.col)
            return Atom(t.text)
        if t.kind == "sym" and t.text == "(":
            f = self.formula()
            self.expect_sym(")")
            return f
        if t.kind == "eof":
            raise ParseError("unexpected end of input", t.line, t.col)
        raise ParseError(f"expected a formula, found {t.text!r}", t.line, t.col)

    def macro_app(self, name_tok: _Token) -> Formula:
        macro = self.macros[name_tok.text]
        self.expect_sym("(")
        args = [self.formula()]
        while self.at_sym(","):
            self.take()
            args.append(self.formula())
        self.expect_sym(")")
        if len(args) != len(macro.params):
            raise ParseError(
                f"macro {name_tok.text!r} expects {len(macro.params)} argument(s), "
                f"got {len(args)}", name_tok.line, name_tok.col)
        return substitute(macro.body, dict(zip(macro.params, args)))


def _check_ident(name: str, line: int, col: int) -> None:
    if name in _RESERVED_EXACT or name.startswith(_RESERVED_PREFIXES):
        raise ParseError(f"reserved identifier {name!r}", line, col)


def parse_modal(text: str) -> Formula:
    """Parse a formula in the concrete syntax; raises ParseError with position."""
    return _Parser(_tokenize(text), {}).parse()


def parse_with_macros(text: str, macros: Mapping[str, Macro]) -> Formula:
    """Parse with macro applications allowed: name(arg, ...) or a bare name."""
    return _Parser(_tokenize(text), macros).parse()


# ---------------------------------------------------------------------------
# printer

# Precedence levels; a child below its context's required level gets parentheses.
_IFF, _IMP, _OR, _AND, _UNARY, _ATOM = 1, 2, 3, 4, 5, 6


def print_modal(f: Formula) -> str:
    """Render with minimal parentheses; parse_modal(print_modal(f)) == f."""
    return _fmt(f, _IFF)


def _fmt(f: Formula, min_level: int) -> str:
    text, level = _fmt_node(f)
    if level < min_level:
        return "(" + text + ")"
    return text


def _fmt_node(f: Formula) -> tuple[str, int]:
    if isinstance(f, Atom):
        return f.name, _ATOM
    if isinstance(f, Top):
        return "true", _ATOM
    if isinstance(f, Bottom):
        return "false", _ATOM
    if isinstance(f, Not):
        return "~" + _fmt(f.child, _UNARY), _UNARY
    if isinstance(f, Box):
        prefix = "box " if f.index is None else f"[{f.index}]"
        return prefix + _fmt(f.child, _UNARY), _UNARY
    if isinstance(f, Dia):
        prefix = "dia " if f.index is None else f"<{f.index}>"
        return prefix + _fmt(f.child, _UNARY), _UNARY
    if isinstance(f, Next):
        return "X " + _fmt(f.child, _UNARY), _UNARY
    if isinstance(f, And):
        return f"{_fmt(f.left, _AND)} & {_fmt(f.right, _UNARY)}", _AND
    if isinstance(f, Or):
        return f"{_fmt(f.left, _OR)} | {_fmt(f.right, _AND)}", _OR
    if isinstance(f, Imp):
        return f"{_fmt(f.left, _OR)} -> {_fmt(f.right, _IMP)}", _IMP
    if isinstance(f, Iff):
        return f"{_fmt(f.left, _IFF)} <-> {_fmt(f.right, _IMP)}", _IFF
    raise TypeError(f"not a formula node: {f!r}")
