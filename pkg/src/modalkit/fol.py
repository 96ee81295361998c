"""First-order terms and formulas (no equality), finite structures, evaluation,
and a TPTP FOF emitter."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple["Term", ...]


Term = Var | Const | Func


def term_str(t: Term) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    return f"{t.name}({', '.join(term_str(a) for a in t.args)})"


def term_vars(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, Func):
        for a in t.args:
            yield from term_vars(a)


def term_size(t: Term) -> int:
    if isinstance(t, Func):
        return 1 + sum(term_size(a) for a in t.args)
    return 1


class FolFormula:
    """Base class for first-order formula nodes; instances are immutable."""

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Pred(FolFormula):
    name: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Top(FolFormula):
    pass


@dataclass(frozen=True)
class Bottom(FolFormula):
    pass


@dataclass(frozen=True)
class Not(FolFormula):
    child: FolFormula


@dataclass(frozen=True)
class And(FolFormula):
    left: FolFormula
    right: FolFormula


@dataclass(frozen=True)
class Or(FolFormula):
    left: FolFormula
    right: FolFormula


@dataclass(frozen=True)
class Imp(FolFormula):
    left: FolFormula
    right: FolFormula


@dataclass(frozen=True)
class Iff(FolFormula):
    left: FolFormula
    right: FolFormula


@dataclass(frozen=True)
class Forall(FolFormula):
    var: str
    body: FolFormula


@dataclass(frozen=True)
class Exists(FolFormula):
    var: str
    body: FolFormula


def conjoin(formulas: list[FolFormula]) -> FolFormula:
    """Right-nested conjunction; Top for the empty list."""
    if not formulas:
        return Top()
    out = formulas[-1]
    for f in reversed(formulas[:-1]):
        out = And(f, out)
    return out


def free_vars(f: FolFormula) -> frozenset[str]:
    if isinstance(f, Pred):
        return frozenset(v for t in f.args for v in term_vars(t))
    if isinstance(f, (Top, Bottom)):
        return frozenset()
    if isinstance(f, Not):
        return free_vars(f.child)
    if isinstance(f, (Forall, Exists)):
        return free_vars(f.body) - {f.var}
    return free_vars(f.left) | free_vars(f.right)


def to_text(f: FolFormula) -> str:
    """Plain ASCII rendering, fully parenthesized at binary connectives."""
    if isinstance(f, Pred):
        if not f.args:
            return f.name
        return f"{f.name}({', '.join(term_str(a) for a in f.args)})"
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Not):
        return "~" + _text_atomic(f.child)
    if isinstance(f, And):
        return f"({to_text(f.left)} & {to_text(f.right)})"
    if isinstance(f, Or):
        return f"({to_text(f.left)} | {to_text(f.right)})"
    if isinstance(f, Imp):
        return f"({to_text(f.left)} -> {to_text(f.right)})"
    if isinstance(f, Iff):
        return f"({to_text(f.left)} <-> {to_text(f.right)})"
    if isinstance(f, Forall):
        return f"all {f.var} {_text_atomic(f.body)}"
    if isinstance(f, Exists):
        return f"exists {f.var} {_text_atomic(f.body)}"
    raise TypeError(f"not a first-order node: {f!r}")


def _text_atomic(f: FolFormula) -> str:
    text = to_text(f)
    if isinstance(f, (Pred, Top, Bottom, Not)) or text.startswith("("):
        return text
    return "(" + text + ")"


# ---------------------------------------------------------------------------
# finite structures

@dataclass(frozen=True)
class FiniteStructure:
    """A structure over domain {0..size-1}: boolean tables for predicates and
    total value tables for functions (constants are 0-ary functions)."""

    size: int
    predicates: Mapping[str, frozenset[tuple[int, ...]]] = field(default_factory=dict)
    functions: Mapping[str, Mapping[tuple[int, ...], int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("structure needs a nonempty domain")
        preds = {name: frozenset(tuple(row) for row in rows)
                 for name, rows in self.predicates.items()}
        funcs = {name: dict(table) for name, table in self.functions.items()}
        for name, rows in preds.items():
            for row in rows:
                if any(not (0 <= x < self.size) for x in row):
                    raise ValueError(f"predicate {name} row {row} out of range")
        for name, table in funcs.items():
            arity = None
            for args, value in table.items():
                if arity is None:
                    arity = len(args)
                if len(args) != arity:
                    raise ValueError(f"function {name} has mixed arities")
                if any(not (0 <= x < self.size) for x in args) or not (0 <= value < self.size):
                    raise ValueError(f"function {name} entry {args}->{value} out of range")
            if arity is not None and len(table) != self.size ** arity:
                raise ValueError(f"function {name} table is not total")
        object.__setattr__(self, "predicates", preds)
        object.__setattr__(self, "functions", funcs)


def eval_term(t: Term, structure: FiniteStructure,
              assignment: Mapping[str, int]) -> int:
    if isinstance(t, Var):
        if t.name not in assignment:
            raise ValueError(f"unbound variable {t.name}")
        return assignment[t.name]
    if isinstance(t, Const):
        if t.name not in structure.functions:
            raise ValueError(f"uninterpreted constant {t.name}")
        return structure.functions[t.name][()]
    if t.name not in structure.functions:
        raise ValueError(f"uninterpreted function {t.name}")
    args = tuple(eval_term(a, structure, assignment) for a in t.args)
    return structure.functions[t.name][args]


def eval_fol(f: FolFormula, structure: FiniteStructure,
             assignment: Mapping[str, int] | None = None) -> bool:
    """Tarskian truth in a finite structure under a variable assignment."""
    a = assignment or {}
    if isinstance(f, Pred):
        row = tuple(eval_term(t, structure, a) for t in f.args)
        return row in structure.predicates.get(f.name, frozenset())
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Not):
        return not eval_fol(f.child, structure, a)
    if isinstance(f, And):
        return eval_fol(f.left, structure, a) and eval_fol(f.right, structure, a)
    if isinstance(f, Or):
        return eval_fol(f.left, structure, a) or eval_fol(f.right, structure, a)
    if isinstance(f, Imp):
        return (not eval_fol(f.left, structure, a)) or eval_fol(f.right, structure, a)
    if isinstance(f, Iff):
        return eval_fol(f.left, structure, a) == eval_fol(f.right, structure, a)
    if isinstance(f, Forall):
        return all(eval_fol(f.body, structure, {**a, f.var: d})
                   for d in range(structure.size))
    if isinstance(f, Exists):
        return any(eval_fol(f.body, structure, {**a, f.var: d})
                   for d in range(structure.size))
    raise TypeError(f"not a first-order node: {f!r}")


# ---------------------------------------------------------------------------
# TPTP FOF output

_LOWER_WORD = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_UPPER_WORD = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")


def _functor(name: str) -> str:
    if _LOWER_WORD.match(name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


class _VarNames:
    """Maps our variable names to distinct TPTP upper words."""

    def __init__(self):
        self.map: dict[str, str] = {}
        self.used: set[str] = set()

    def get(self, name: str) -> str:
        if name in self.map:
            return self.map[name]
        candidate = name if _UPPER_WORD.match(name) else "V_" + re.sub(r"\W", "_", name)
        while candidate in self.used:
            candidate += "x"
        self.map[name] = candidate
        self.used.add(candidate)
        return candidate


def to_tptp(f: FolFormula) -> str:
    """The formula part of a TPTP FOF line."""
    return _tptp(f, _VarNames())


def _tptp_term(t: Term, names: _VarNames) -> str:
    if isinstance(t, Var):
        return names.get(t.name)
    if isinstance(t, Const):
        return _functor(t.name)
    return f"{_functor(t.name)}({','.join(_tptp_term(a, names) for a in t.args)})"


def _tptp(f: FolFormula, names: _VarNames) -> str:
    if isinstance(f, Pred):
        if not f.args:
            return _functor(f.name)
        return f"{_functor(f.name)}({','.join(_tptp_term(t, names) for t in f.args)})"
    if isinstance(f, Top):
        return "$true"
    if isinstance(f, Bottom):
        return "$false"
    if isinstance(f, Not):
        return "~ " + _tptp_paren(f.child, names)
    if isinstance(f, And):
        return f"{_tptp_paren(f.left, names)} & {_tptp_paren(f.right, names)}"
    if isinstance(f, Or):
        return f"{_tptp_paren(f.left, names)} | {_tptp_paren(f.right, names)}"
    if isinstance(f, Imp):
        return f"{_tptp_paren(f.left, names)} => {_tptp_paren(f.right, names)}"
    if isinstance(f, Iff):
        return f"{_tptp_paren(f.left, names)} <=> {_tptp_paren(f.right, names)}"
    if isinstance(f, Forall):
        return f"! [{names.get(f.var)}] : {_tptp_paren(f.body, names)}"
    if isinstance(f, Exists):
        return f"? [{names.get(f.var)}] : {_tptp_paren(f.body, names)}"
    raise TypeError(f"not a first-order node: {f!r}")


def _tptp_paren(f: FolFormula, names: _VarNames) -> str:
    if isinstance(f, (Pred, Top, Bottom)):
        return _tptp(f, names)
    return "(" + _tptp(f, names) + ")"


def fof_line(name: str, role: str, f: FolFormula) -> str:
    """One fof(...) line; role is normally "axiom" or "conjecture"."""
    if role not in ("axiom", "conjecture", "hypothesis", "negated_conjecture"):
        raise ValueError(f"unsupported TPTP role {role!r}")
    return f"fof({_functor(name)}, {role}, {to_tptp(f)})."
