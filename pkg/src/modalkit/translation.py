"""The relational translation: modal systems, frame axioms, translation of
modal and next-time temporal formulas into first-order logic, and assembly of
proof/countermodel clause sets."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import fol
from .clausal import Clause, GenSym, clausify
from .formulas import (Atom, Bottom, Box, Dia, Formula, Iff, Imp, Next, Not,
                       Or, Top, And, contains_indexed, contains_next,
                       modal_indices)
from .fol import Const, Exists, Forall, FolFormula, Func, Pred, Var
from .kripke import SCHEMA_CHECKS, KripkeModel

SCHEMA_ORDER = "DTB45"
W0 = "w0"

# The fifteen distinct normal systems over D/T/B/4/5 by their canonical names
# and defining schema sets.
CANONICAL_SYSTEMS: Mapping[frozenset[str], str] = {
    frozenset(): "K",
    frozenset("D"): "KD",
    frozenset("T"): "KT",
    frozenset("B"): "KB",
    frozenset("4"): "K4",
    frozenset("5"): "K5",
    frozenset("D4"): "KD4",
    frozenset("D5"): "KD5",
    frozenset("DB"): "KDB",
    frozenset("45"): "K45",
    frozenset("D45"): "KD45",
    frozenset("B4"): "KB4",
    frozenset("TB"): "KTB",
    frozenset("T4"): "S4",
    frozenset("T5"): "S5",
}

_ALIASES = {"S4": "KT4", "S5": "KT5", "B": "KTB", "T": "KT", "D": "KD"}


@dataclass(frozen=True)
class ModalSystem:
    """A normal modal system given by frame-condition schemas, optionally
    overridden per modality index."""

    name: str
    schemas: frozenset[str]
    overrides: Mapping[str | None, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        for s in self.schemas:
            if s not in SCHEMA_ORDER:
                raise ValueError(f"unknown schema {s!r}")
        object.__setattr__(self, "overrides",
                           {k: frozenset(v) for k, v in self.overrides.items()})
        for ss in self.overrides.values():
            for s in ss:
                if s not in SCHEMA_ORDER:
                    raise ValueError(f"unknown schema {s!r}")

    def schemas_for(self, index: str | None) -> frozenset[str]:
        return self.overrides.get(index, self.schemas)


def _parse_schema_letters(text: str) -> frozenset[str]:
    out = set()
    for ch in text:
        if ch not in SCHEMA_ORDER:
            raise ValueError(f"unknown schema letter {ch!r} in {text!r}")
        out.add(ch)
    return frozenset(out)


def _canonical_name(schemas: frozenset[str]) -> str:
    if schemas in CANONICAL_SYSTEMS:
        return CANONICAL_SYSTEMS[schemas]
    return "K" + "".join(s for s in SCHEMA_ORDER if s in schemas)


def system_from_schemas(letters: str) -> ModalSystem:
    """Build a system directly from schema letters, e.g. "D45"."""
    schemas = _parse_schema_letters(letters)
    return ModalSystem(_canonical_name(schemas), schemas)


def system_from_name(name: str) -> ModalSystem:
    """Resolve a system name: K, KD45, S4, S5, and the usual aliases."""
    text = name.strip()
    resolved = _ALIASES.get(text, text)
    if not re.fullmatch(r"K[DTB45]*", resolved):
        raise ValueError(f"unknown modal system {name!r}")
    return system_from_schemas(resolved[1:])


def relation_name(index: str | None) -> str:
    return "R" if index is None else f"R_{index}"


def _schema_axiom(schema: str, rel: str) -> FolFormula:
    X, Y, Z = Var("X"), Var("Y"), Var("Z")
    if schema == "D":
        return Forall("X", Exists("Y", Pred(rel, (X, Y))))
    if schema == "T":
        return Forall("X", Pred(rel, (X, X)))
    if schema == "B":
        return Forall("X", Forall("Y", fol.Imp(Pred(rel, (X, Y)), Pred(rel, (Y, X)))))
    if schema == "4":
        return Forall("X", Forall("Y", Forall("Z", fol.Imp(
            fol.And(Pred(rel, (X, Y)), Pred(rel, (Y, Z))), Pred(rel, (X, Z))))))
    if schema == "5":
        return Forall("X", Forall("Y", Forall("Z", fol.Imp(
            fol.And(Pred(rel, (X, Y)), Pred(rel, (X, Z))), Pred(rel, (Y, Z))))))
    raise ValueError(f"unknown schema {schema!r}")


def frame_axioms(system: ModalSystem,
                 indices: Sequence[str | None] = (None,)) -> list[FolFormula]:
    """First-order frame conditions, instantiated per modality index used."""
    out = []
    for index in indices:
        rel = relation_name(index)
        for schema in SCHEMA_ORDER:
            if schema in system.schemas_for(index):
                out.append(_schema_axiom(schema, rel))
    return out


def _sorted_indices(goal: Formula) -> tuple[str | None, ...]:
    indices = modal_indices(goal)
    return tuple(sorted(indices, key=lambda i: (i is not None, i or "")))


def translate(goal: Formula, world: fol.Term,
              gensym: GenSym | None = None) -> FolFormula:
    """The standard relational translation of a modal formula at a world term.

    Every box/dia introduces a fresh universally/existentially bound world
    variable.  Temporal X is rejected here; see translate_temporal.
    """
    return _translate(goal, world, gensym or GenSym(), temporal=False)


def translate_temporal(goal: Formula, world: fol.Term,
                       gensym: GenSym | None = None) -> FolFormula:
    """Relational translation where X w is read as the successor term S(w)."""
    return _translate(goal, world, gensym or GenSym(), temporal=True)


def _translate(f: Formula, w: fol.Term, g: GenSym, temporal: bool) -> FolFormula:
    if isinstance(f, Atom):
        return Pred(f.name, (w,))
    if isinstance(f, Top):
        return fol.Top()
    if isinstance(f, Bottom):
        return fol.Bottom()
    if isinstance(f, Not):
        return fol.Not(_translate(f.child, w, g, temporal))
    if isinstance(f, And):
        return fol.And(_translate(f.left, w, g, temporal),
                       _translate(f.right, w, g, temporal))
    if isinstance(f, Or):
        return fol.Or(_translate(f.left, w, g, temporal),
                      _translate(f.right, w, g, temporal))
    if isinstance(f, Imp):
        return fol.Imp(_translate(f.left, w, g, temporal),
                       _translate(f.right, w, g, temporal))
    if isinstance(f, Iff):
        return fol.Iff(_translate(f.left, w, g, temporal),
                       _translate(f.right, w, g, temporal))
    if isinstance(f, Box):
        v = g.fresh("W")
        return Forall(v, fol.Imp(Pred(relation_name(f.index), (w, Var(v))),
                                 _translate(f.child, Var(v), g, temporal)))
    if isinstance(f, Dia):
        v = g.fresh("W")
        return Exists(v, fol.And(Pred(relation_name(f.index), (w, Var(v))),
                                 _translate(f.child, Var(v), g, temporal)))
    if isinstance(f, Next):
        if not temporal:
            raise ValueError("temporal operator X is not part of a pure "
                             "modal-system problem")
        return _translate(f.child, Func("S", (w,)), g, temporal)
    raise TypeError(f"not a formula node: {f!r}")


@dataclass(frozen=True)
class TranslationProblem:
    """A validity question translated to first-order logic.

    refutation_clauses come from the negated validity formula and feed the
    resolution prover; countermodel_clauses assert the goal's negation at the
    designated constant w0 and feed the finite model finder.  For temporal
    problems the two clause sets coincide.
    """

    goal: Formula
    system: ModalSystem
    validity_formula: FolFormula
    refutation_clauses: tuple[Clause, ...]
    countermodel_clauses: tuple[Clause, ...]
    indices: tuple[str | None, ...]
    temporal: bool = False


def split_goal(goal: Formula) -> list[tuple[str | None, Formula]]:
    """A top-level biconditional is decided as its two implications."""
    if isinstance(goal, Iff):
        return [("ltr", Imp(goal.left, goal.right)),
                ("rtl", Imp(goal.right, goal.left))]
    return [(None, goal)]


def assemble(goal: Formula, system: ModalSystem) -> TranslationProblem:
    """Build the validity formula and both clause sets for a modal goal."""
    if contains_next(goal):
        raise ValueError("temporal operator X is not part of a pure "
                         "modal-system problem")
    indices = _sorted_indices(goal)
    axioms = frame_axioms(system, indices)

    g = GenSym()
    w = g.fresh("W")
    closed = Forall(w, _translate(goal, Var(w), g, temporal=False))
    validity = fol.Imp(fol.conjoin(axioms), closed) if axioms else closed
    refutation = tuple(clausify(fol.Not(validity), gensym=GenSym()))

    g2 = GenSym()
    negated = _translate(Not(goal), Const(W0), g2, temporal=False)
    counter = fol.And(fol.conjoin(axioms), negated) if axioms else negated
    countermodel = tuple(clausify(counter, gensym=GenSym()))

    return TranslationProblem(goal, system, validity, refutation, countermodel,
                              indices)


LTL_SYSTEM = ModalSystem("LTL", frozenset({"T", "4"}))


def ltl_assemble(goal: Formula) -> TranslationProblem:
    """Satisfiability problem for the next-time temporal fragment.

    The reachability relation R is reflexive and transitive and contains every
    successor step R(x, S(x)).  Refuting the clause set shows the goal
    unsatisfiable; a finite model yields a candidate ultimately periodic word.
    """
    if contains_indexed(goal):
        raise ValueError("indexed modalities are not part of the temporal fragment")
    axioms = frame_axioms(LTL_SYSTEM, (None,))
    axioms.append(Forall("X", Pred("R", (Var("X"), Func("S", (Var("X"),))))))
    g = GenSym()
    translated = translate_temporal(goal, Const(W0), g)
    sat_formula = fol.And(fol.conjoin(axioms), translated)
    clauses = tuple(clausify(sat_formula, gensym=GenSym()))
    validity = fol.Imp(fol.conjoin(axioms), fol.Not(translated))
    return TranslationProblem(goal, LTL_SYSTEM, validity, clauses, clauses,
                              (None,), temporal=True)


def s5_to_s4(goal: Formula) -> Formula:
    """The satisfiability-preserving S5-to-S4 wrapper: dia box goal."""
    if contains_indexed(goal) or contains_next(goal):
        raise ValueError("the S5-to-S4 reduction applies to single-modality "
                         "formulas only")
    return Dia(Box(goal))


def frame_ok(model: KripkeModel, system: ModalSystem) -> bool:
    """Do the model's relations satisfy the system's schemas per index?"""
    for index, pairs in model.accessibility.items():
        for schema in system.schemas_for(index):
            if not SCHEMA_CHECKS[schema](pairs, model.n_worlds):
                return False
    return True
