"""Clausal form machinery: negation normal form, Skolemization, CNF with an
optional definitional mode, and flattening for the finite model finder.

Skolem symbols, definitional predicates, and function-graph predicates all use
the reserved "sk" prefix, which the formula parser refuses in user input.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

from . import fol
from .fol import Const, FiniteStructure, FolFormula, Func, Term, Var

GRAPH_PREFIX = "sk_graph_"


class GenSym:
    """Per-pipeline source of fresh symbol names; counters are per prefix.

    Not shared between concurrently running pipelines; each pipeline instance
    owns its own GenSym.
    """

    def __init__(self):
        self._counters: dict[str, int] = {}

    def fresh(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0)
        self._counters[prefix] = n + 1
        return f"{prefix}{n}"


def is_graph_pred(name: str) -> bool:
    return name.startswith(GRAPH_PREFIX)


def graph_pred_name(func: str) -> str:
    return GRAPH_PREFIX + func


def graph_pred_func(name: str) -> str:
    return name[len(GRAPH_PREFIX):]


@dataclass(frozen=True)
class Literal:
    positive: bool
    pred: str
    args: tuple[Term, ...] = ()

    def negate(self) -> "Literal":
        return Literal(not self.positive, self.pred, self.args)

    def __str__(self) -> str:
        body = fol.to_text(fol.Pred(self.pred, self.args))
        return body if self.positive else "~" + body


class Clause:
    """An implicitly universally quantified disjunction of literals.

    Duplicate literals are removed at construction; derived quantities used by
    the prover (weight, predicate signature) are precomputed.
    """

    __slots__ = ("literals", "weight", "_signature", "_key")

    def __init__(self, literals: Iterable[Literal]):
        seen: dict[Literal, None] = {}
        for lit in literals:
            seen.setdefault(lit, None)
        lits = tuple(seen)
        object.__setattr__(self, "literals", lits)
        weight = 0
        for lit in lits:
            weight += 1
            stack = list(lit.args)
            while stack:
                t = stack.pop()
                weight += 1
                if type(t) is Func:
                    stack.extend(t.args)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "_signature", None)
        object.__setattr__(self, "_key", None)

    def __setattr__(self, name, value):
        raise AttributeError("Clause is immutable")

    @property
    def signature(self) -> frozenset[tuple[bool, str]]:
        sig = self._signature
        if sig is None:
            sig = frozenset((l.positive, l.pred) for l in self.literals)
            object.__setattr__(self, "_signature", sig)
        return sig

    def __eq__(self, other) -> bool:
        return isinstance(other, Clause) and self.literals == other.literals

    def __hash__(self) -> int:
        return hash(self.literals)

    def __len__(self) -> int:
        return len(self.literals)

    def __str__(self) -> str:
        if not self.literals:
            return "<empty>"
        return " | ".join(str(l) for l in self.literals)

    def __repr__(self) -> str:
        return f"Clause({self})"

    def is_empty(self) -> bool:
        return not self.literals

    def is_tautology(self) -> bool:
        pos = {(l.pred, l.args) for l in self.literals if l.positive}
        return any((l.pred, l.args) in pos for l in self.literals if not l.positive)

    def variables(self) -> tuple[str, ...]:
        out: dict[str, None] = {}
        for lit in self.literals:
            for t in lit.args:
                for v in fol.term_vars(t):
                    out.setdefault(v, None)
        return tuple(out)


def subst_term(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Const):
        return t
    return Func(t.name, tuple(subst_term(a, mapping) for a in t.args))


def subst_literal(lit: Literal, mapping: Mapping[str, Term]) -> Literal:
    return Literal(lit.positive, lit.pred,
                   tuple(subst_term(a, mapping) for a in lit.args))


def subst_formula(f: FolFormula, mapping: Mapping[str, Term]) -> FolFormula:
    """Substitute terms for free variables; binders shadow as usual."""
    if isinstance(f, fol.Pred):
        return fol.Pred(f.name, tuple(subst_term(t, mapping) for t in f.args))
    if isinstance(f, (fol.Top, fol.Bottom)):
        return f
    if isinstance(f, fol.Not):
        return fol.Not(subst_formula(f.child, mapping))
    if isinstance(f, (fol.Forall, fol.Exists)):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        return type(f)(f.var, subst_formula(f.body, inner))
    return type(f)(subst_formula(f.left, mapping), subst_formula(f.right, mapping))


# ---------------------------------------------------------------------------
# negation normal form

def to_nnf(f: FolFormula) -> FolFormula:
    """Implication-free form with negation only on atoms; true/false are
    simplified away except when the whole formula collapses to one."""
    return _nnf(f, True)


def _mk_and(a: FolFormula, b: FolFormula) -> FolFormula:
    if isinstance(a, fol.Bottom) or isinstance(b, fol.Bottom):
        return fol.Bottom()
    if isinstance(a, fol.Top):
        return b
    if isinstance(b, fol.Top):
        return a
    return fol.And(a, b)


def _mk_or(a: FolFormula, b: FolFormula) -> FolFormula:
    if isinstance(a, fol.Top) or isinstance(b, fol.Top):
        return fol.Top()
    if isinstance(a, fol.Bottom):
        return b
    if isinstance(b, fol.Bottom):
        return a
    return fol.Or(a, b)


def _mk_quant(kind, var: str, body: FolFormula) -> FolFormula:
    if isinstance(body, (fol.Top, fol.Bottom)):
        return body
    return kind(var, body)


def _nnf(f: FolFormula, positive: bool) -> FolFormula:
    if isinstance(f, fol.Pred):
        return f if positive else fol.Not(f)
    if isinstance(f, fol.Top):
        return fol.Top() if positive else fol.Bottom()
    if isinstance(f, fol.Bottom):
        return fol.Bottom() if positive else fol.Top()
    if isinstance(f, fol.Not):
        return _nnf(f.child, not positive)
    if isinstance(f, fol.And):
        a, b = _nnf(f.left, positive), _nnf(f.right, positive)
        return _mk_and(a, b) if positive else _mk_or(a, b)
    if isinstance(f, fol.Or):
        a, b = _nnf(f.left, positive), _nnf(f.right, positive)
        return _mk_or(a, b) if positive else _mk_and(a, b)
    if isinstance(f, fol.Imp):
        a, b = _nnf(f.left, not positive), _nnf(f.right, positive)
        return _mk_or(a, b) if positive else _mk_and(a, b)
    if isinstance(f, fol.Iff):
        if positive:
            return _mk_and(_mk_or(_nnf(f.left, False), _nnf(f.right, True)),
                           _mk_or(_nnf(f.right, False), _nnf(f.left, True)))
        return _mk_or(_mk_and(_nnf(f.left, True), _nnf(f.right, False)),
                      _mk_and(_nnf(f.right, True), _nnf(f.left, False)))
    if isinstance(f, fol.Forall):
        kind = fol.Forall if positive else fol.Exists
        return _mk_quant(kind, f.var, _nnf(f.body, positive))
    if isinstance(f, fol.Exists):
        kind = fol.Exists if positive else fol.Forall
        return _mk_quant(kind, f.var, _nnf(f.body, positive))
    raise TypeError(f"not a first-order node: {f!r}")


def standardize(f: FolFormula, gensym: GenSym) -> FolFormula:
    """Rename every bound variable to a fresh one."""

    def walk(f: FolFormula, env: dict[str, Term]) -> FolFormula:
        if isinstance(f, fol.Pred):
            return fol.Pred(f.name, tuple(subst_term(t, env) for t in f.args))
        if isinstance(f, (fol.Top, fol.Bottom)):
            return f
        if isinstance(f, fol.Not):
            return fol.Not(walk(f.child, env))
        if isinstance(f, (fol.Forall, fol.Exists)):
            fresh = gensym.fresh("V")
            return type(f)(fresh, walk(f.body, {**env, f.var: Var(fresh)}))
        return type(f)(walk(f.left, env), walk(f.right, env))

    return walk(f, {})


def skolemize(f: FolFormula, gensym: GenSym) -> FolFormula:
    """Replace existentials in an NNF, standardized-apart formula by Skolem
    terms over the enclosing universal variables."""

    def walk(f: FolFormula, universals: tuple[str, ...]) -> FolFormula:
        if isinstance(f, (fol.Pred, fol.Top, fol.Bottom, fol.Not)):
            return f
        if isinstance(f, fol.Forall):
            return fol.Forall(f.var, walk(f.body, universals + (f.var,)))
        if isinstance(f, fol.Exists):
            name = gensym.fresh("sk")
            term: Term = (Const(name) if not universals
                          else Func(name, tuple(Var(u) for u in universals)))
            return walk(subst_formula(f.body, {f.var: term}), universals)
        return type(f)(walk(f.left, universals), walk(f.right, universals))

    return walk(f, ())


def _drop_universals(f: FolFormula) -> FolFormula:
    if isinstance(f, fol.Forall):
        return _drop_universals(f.body)
    if isinstance(f, (fol.And, fol.Or)):
        return type(f)(_drop_universals(f.left), _drop_universals(f.right))
    return f


def _as_literal(f: FolFormula) -> Literal:
    if isinstance(f, fol.Pred):
        return Literal(True, f.name, f.args)
    if isinstance(f, fol.Not) and isinstance(f.child, fol.Pred):
        return Literal(False, f.child.name, f.child.args)
    raise ValueError(f"matrix is not in negation normal form at {f!r}")


def _plain_cnf(f: FolFormula) -> list[list[Literal]]:
    if isinstance(f, fol.Top):
        return []
    if isinstance(f, fol.Bottom):
        return [[]]
    if isinstance(f, fol.And):
        return _plain_cnf(f.left) + _plain_cnf(f.right)
    if isinstance(f, fol.Or):
        left, right = _plain_cnf(f.left), _plain_cnf(f.right)
        return [a + b for a in left for b in right]
    return [[_as_literal(f)]]


def _def_cnf(f: FolFormula, gensym: GenSym) -> list[list[Literal]]:
    """Structure-preserving CNF: conjunctions nested under disjunctions are
    named by fresh predicates over their free variables."""
    rows: list[list[Literal]] = []

    def disjuncts(f: FolFormula) -> list[Literal]:
        if isinstance(f, fol.Or):
            return disjuncts(f.left) + disjuncts(f.right)
        if isinstance(f, fol.And):
            params = tuple(Var(v) for v in sorted(fol.free_vars(f)))
            name = gensym.fresh("sk_def")
            head = Literal(True, name, params)
            define(head, f)
            return [head]
        return [_as_literal(f)]

    def define(head: Literal, f: FolFormula) -> None:
        if isinstance(f, fol.And):
            define(head, f.left)
            define(head, f.right)
        else:
            rows.append([head.negate()] + disjuncts(f))

    def conj(f: FolFormula) -> None:
        if isinstance(f, fol.And):
            conj(f.left)
            conj(f.right)
        elif isinstance(f, fol.Top):
            pass
        elif isinstance(f, fol.Bottom):
            rows.append([])
        else:
            rows.append(disjuncts(f))

    conj(f)
    return rows


def rename_clause(clause: Clause, gensym: GenSym, prefix: str = "V") -> Clause:
    mapping = {v: Var(gensym.fresh(prefix)) for v in clause.variables()}
    return Clause(subst_literal(l, mapping) for l in clause.literals)


def clausify(f: FolFormula, *, definitional: bool = False,
             gensym: GenSym | None = None) -> list[Clause]:
    """NNF, standardize apart, Skolemize, drop universals, distribute.

    The plain distribution is the default; the definitional switch keeps the
    output linear on biconditional-heavy inputs.  Output clauses share no
    variable names and contain no tautologies or exact duplicates.
    """
    g = gensym or GenSym()
    nnf = to_nnf(f)
    if isinstance(nnf, fol.Top):
        return []
    if isinstance(nnf, fol.Bottom):
        return [Clause([])]
    matrix = _drop_universals(skolemize(standardize(nnf, g), g))
    rows = _def_cnf(matrix, g) if definitional else _plain_cnf(matrix)
    out: list[Clause] = []
    seen: set[Clause] = set()
    for row in rows:
        c = Clause(row)
        if c.is_tautology() or c in seen:
            continue
        seen.add(c)
        out.append(rename_clause(c, g))
    return out


# ---------------------------------------------------------------------------
# flattening for the grounder

def flatten_clause(clause: Clause) -> Clause:
    """Remove function terms from literal arguments.

    Each distinct function term f(x...) is replaced by a fresh variable y and
    a negative function-graph literal meaning f(x...) = y; constants count as
    0-ary functions.  A clause whose literal arguments are all variables is
    returned unchanged.
    """
    used = set(clause.variables())
    counter = 0

    def fresh_var() -> Var:
        nonlocal counter
        while f"F{counter}" in used:
            counter += 1
        name = f"F{counter}"
        counter += 1
        return Var(name)

    extracted: dict[tuple[str, tuple[Term, ...]], Var] = {}
    graph_lits: list[Literal] = []

    def flat(t: Term) -> Term:
        if isinstance(t, Var):
            return t
        args = tuple(flat(a) for a in t.args) if isinstance(t, Func) else ()
        key = (t.name, args)
        if key not in extracted:
            v = fresh_var()
            extracted[key] = v
            graph_lits.append(Literal(False, graph_pred_name(t.name), args + (v,)))
        return extracted[key]

    new_lits = [Literal(l.positive, l.pred, tuple(flat(a) for a in l.args))
                for l in clause.literals]
    if not graph_lits:
        return clause
    return Clause(graph_lits + new_lits)


def flatten(clauses: Sequence[Clause]) -> list[Clause]:
    return [flatten_clause(c) for c in clauses]


# ---------------------------------------------------------------------------
# evaluating clause sets in finite structures

def literal_true(lit: Literal, structure: FiniteStructure,
                 assignment: Mapping[str, int]) -> bool:
    if is_graph_pred(lit.pred):
        func = graph_pred_func(lit.pred)
        if func not in structure.functions:
            raise ValueError(f"uninterpreted function {func}")
        values = [fol.eval_term(t, structure, assignment) for t in lit.args]
        truth = structure.functions[func][tuple(values[:-1])] == values[-1]
    else:
        row = tuple(fol.eval_term(t, structure, assignment) for t in lit.args)
        truth = row in structure.predicates.get(lit.pred, frozenset())
    return truth == lit.positive


def clause_true(clause: Clause, structure: FiniteStructure) -> bool:
    """Truth of the universal closure of a clause."""
    variables = clause.variables()
    for values in product(range(structure.size), repeat=len(variables)):
        assignment = dict(zip(variables, values))
        if not any(literal_true(l, structure, assignment) for l in clause.literals):
            return False
    return True


def clauses_satisfied(clauses: Iterable[Clause], structure: FiniteStructure) -> bool:
    return all(clause_true(c, structure) for c in clauses)


def collect_signature(clauses: Iterable[Clause]) -> tuple[dict[str, int], dict[str, int]]:
    """(predicate arities, function arities) for a clause set; graph literals
    contribute their function symbol.  Raises on inconsistent arities."""
    preds: dict[str, int] = {}
    funcs: dict[str, int] = {}

    def see_term(t: Term) -> None:
        if isinstance(t, Var):
            return
        arity = len(t.args) if isinstance(t, Func) else 0
        old = funcs.setdefault(t.name, arity)
        if old != arity:
            raise ValueError(f"function {t.name} used with arities {old} and {arity}")
        if isinstance(t, Func):
            for a in t.args:
                see_term(a)

    for clause in clauses:
        for lit in clause.literals:
            if is_graph_pred(lit.pred):
                fname = graph_pred_func(lit.pred)
                arity = len(lit.args) - 1
                old = funcs.setdefault(fname, arity)
                if old != arity:
                    raise ValueError(
                        f"function {fname} used with arities {old} and {arity}")
            else:
                old = preds.setdefault(lit.pred, len(lit.args))
                if old != len(lit.args):
                    raise ValueError(
                        f"predicate {lit.pred} used with arities {old} and {len(lit.args)}")
            for t in lit.args:
                if is_graph_pred(lit.pred) and isinstance(t, Var):
                    continue
                see_term(t)
    return preds, funcs
