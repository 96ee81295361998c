"""Pointed Kripke structures, the modal satisfaction relation, evaluation of
next-time temporal formulas on ultimately periodic words, and the model text
format."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import fol
from .formulas import (And, Atom, Bottom, Box, Dia, Formula, Iff, Imp, Next,
                       Not, Or, Top)

Pair = tuple[int, int]


@dataclass(frozen=True)
class KripkeModel:
    """Worlds are 0..n_worlds-1; accessibility maps a modality index (None for
    the default one) to a set of world pairs; successor, when present, is the
    total next-state function used by the temporal fragment."""

    n_worlds: int
    accessibility: Mapping[str | None, frozenset[Pair]]
    valuation: Mapping[str, frozenset[int]]
    real_world: int = 0
    successor: tuple[int, ...] | None = None

    def __post_init__(self):
        n = self.n_worlds
        if n < 1:
            raise ValueError("a Kripke model needs at least one world")
        if not (0 <= self.real_world < n):
            raise ValueError(f"real world {self.real_world} out of range")
        acc = {k: frozenset((int(i), int(j)) for i, j in v)
               for k, v in self.accessibility.items()}
        for k, pairs in acc.items():
            for i, j in pairs:
                if not (0 <= i < n and 0 <= j < n):
                    raise ValueError(f"edge ({i},{j}) out of range for index {k!r}")
        val = {a: frozenset(int(w) for w in ws) for a, ws in self.valuation.items()}
        for a, ws in val.items():
            if any(not (0 <= w < n) for w in ws):
                raise ValueError(f"valuation of {a!r} out of range")
        succ = self.successor
        if succ is not None:
            succ = tuple(int(x) for x in succ)
            if len(succ) != n or any(not (0 <= x < n) for x in succ):
                raise ValueError("successor must be a total function on worlds")
        object.__setattr__(self, "accessibility", acc)
        object.__setattr__(self, "valuation", val)
        object.__setattr__(self, "successor", succ)


def eval_modal(f: Formula, model: KripkeModel, world: int) -> bool:
    """Truth of f at a world; raises ValueError on a missing relation index
    or on a temporal operator."""
    if isinstance(f, Atom):
        return world in model.valuation.get(f.name, frozenset())
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Not):
        return not eval_modal(f.child, model, world)
    if isinstance(f, And):
        return eval_modal(f.left, model, world) and eval_modal(f.right, model, world)
    if isinstance(f, Or):
        return eval_modal(f.left, model, world) or eval_modal(f.right, model, world)
    if isinstance(f, Imp):
        return (not eval_modal(f.left, model, world)) or eval_modal(f.right, model, world)
    if isinstance(f, Iff):
        return eval_modal(f.left, model, world) == eval_modal(f.right, model, world)
    if isinstance(f, (Box, Dia)):
        if f.index not in model.accessibility:
            raise ValueError(f"model has no relation for modality index {f.index!r}")
        succs = [v for (u, v) in model.accessibility[f.index] if u == world]
        if isinstance(f, Box):
            return all(eval_modal(f.child, model, v) for v in succs)
        return any(eval_modal(f.child, model, v) for v in succs)
    if isinstance(f, Next):
        raise ValueError("temporal operator X has no Kripke-relation reading here; "
                         "use eval_ltl_lasso")
    raise TypeError(f"not a formula node: {f!r}")


# ---------------------------------------------------------------------------
# ultimately periodic words

def eval_ltl_lasso(f: Formula, prefix: Sequence[Iterable[str]],
                   loop: Sequence[Iterable[str]]) -> bool:
    """Truth at position 0 of the infinite word prefix + loop + loop + ...

    box/dia quantify over all/some positions >= the current one; X steps one
    position.  Positions past the prefix are reduced modulo the loop length,
    which makes the check exact for this fragment.
    """
    if not loop:
        raise ValueError("lasso loop must be nonempty")
    word = [frozenset(s) for s in list(prefix) + list(loop)]
    p, l = len(prefix), len(loop)

    def norm(i: int) -> int:
        return i if i < p else p + (i - p) % l

    def positions_from(i: int) -> range:
        # normalized positions reachable at or after i; past the prefix the
        # loop repeats, so every loop position stays reachable
        return range(i, p + l) if i < p else range(p, p + l)

    def val(f: Formula, i: int) -> bool:
        i = norm(i)
        if isinstance(f, Atom):
            return f.name in word[i]
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Not):
            return not val(f.child, i)
        if isinstance(f, And):
            return val(f.left, i) and val(f.right, i)
        if isinstance(f, Or):
            return val(f.left, i) or val(f.right, i)
        if isinstance(f, Imp):
            return (not val(f.left, i)) or val(f.right, i)
        if isinstance(f, Iff):
            return val(f.left, i) == val(f.right, i)
        if isinstance(f, Next):
            return val(f.child, i + 1)
        if isinstance(f, (Box, Dia)):
            if f.index is not None:
                raise ValueError("indexed modalities have no meaning on words")
            if isinstance(f, Box):
                return all(val(f.child, j) for j in positions_from(i))
            return any(val(f.child, j) for j in positions_from(i))
        raise TypeError(f"not a formula node: {f!r}")

    return val(f, 0)


# ---------------------------------------------------------------------------
# frame properties

def is_reflexive(pairs: frozenset[Pair], n: int) -> bool:
    return all((w, w) in pairs for w in range(n))


def is_serial(pairs: frozenset[Pair], n: int) -> bool:
    sources = {i for i, _ in pairs}
    return all(w in sources for w in range(n))


def is_symmetric(pairs: frozenset[Pair], n: int) -> bool:
    return all((j, i) in pairs for i, j in pairs)


def is_transitive(pairs: frozenset[Pair], n: int) -> bool:
    return all((i, l) in pairs for i, j in pairs for k, l in pairs if j == k)


def is_euclidean(pairs: frozenset[Pair], n: int) -> bool:
    by_source: dict[int, list[int]] = {}
    for i, j in pairs:
        by_source.setdefault(i, []).append(j)
    return all((j, k) in pairs
               for succs in by_source.values() for j in succs for k in succs)


SCHEMA_CHECKS = {
    "D": is_serial,
    "T": is_reflexive,
    "B": is_symmetric,
    "4": is_transitive,
    "5": is_euclidean,
}


# ---------------------------------------------------------------------------
# model text format

def format_model(model: KripkeModel) -> str:
    """Text format: a "worlds n real w" header, then R/V/S lines."""
    lines = [f"worlds {model.n_worlds} real {model.real_world}"]
    for index in sorted(model.accessibility, key=lambda k: (k is not None, k or "")):
        tag = "R" if index is None else f"R_{index}"
        for i, j in sorted(model.accessibility[index]):
            lines.append(f"{tag} {i} {j}")
    for atom in sorted(model.valuation):
        for w in sorted(model.valuation[atom]):
            lines.append(f"V {atom} {w}")
    if model.successor is not None:
        for i, j in enumerate(model.successor):
            lines.append(f"S {i} {j}")
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> KripkeModel:
    """Inverse of format_model; tolerates blank lines and # comments."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty model text")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "worlds" or head[2] != "real":
        raise ValueError(f"bad model header: {lines[0]!r}")
    n, real = int(head[1]), int(head[3])
    acc: dict[str | None, set[Pair]] = {None: set()}
    val: dict[str, set[int]] = {}
    succ: dict[int, int] = {}
    for ln in lines[1:]:
        parts = ln.split()
        tag = parts[0]
        if tag == "R" or tag.startswith("R_"):
            if len(parts) != 3:
                raise ValueError(f"bad relation line: {ln!r}")
            index = None if tag == "R" else tag[2:]
            acc.setdefault(index, set()).add((int(parts[1]), int(parts[2])))
        elif tag == "V":
            if len(parts) != 3:
                raise ValueError(f"bad valuation line: {ln!r}")
            val.setdefault(parts[1], set()).add(int(parts[2]))
        elif tag == "S":
            if len(parts) != 3:
                raise ValueError(f"bad successor line: {ln!r}")
            succ[int(parts[1])] = int(parts[2])
        else:
            raise ValueError(f"bad model line: {ln!r}")
    successor: tuple[int, ...] | None = None
    if succ:
        if sorted(succ) != list(range(n)):
            raise ValueError("successor lines must cover every world exactly once")
        successor = tuple(succ[i] for i in range(n))
    return KripkeModel(
        n_worlds=n,
        accessibility={k: frozenset(v) for k, v in acc.items()},
        valuation={a: frozenset(ws) for a, ws in val.items()},
        real_world=real,
        successor=successor,
    )


def to_structure(model: KripkeModel) -> fol.FiniteStructure:
    """The first-order structure matching the relational reading of the model."""
    predicates: dict[str, frozenset[tuple[int, ...]]] = {}
    for index, pairs in model.accessibility.items():
        name = "R" if index is None else f"R_{index}"
        predicates[name] = frozenset(pairs)
    for atom, worlds in model.valuation.items():
        predicates[atom] = frozenset((w,) for w in worlds)
    functions: dict[str, dict[tuple[int, ...], int]] = {}
    if model.successor is not None:
        functions["S"] = {(i,): j for i, j in enumerate(model.successor)}
    return fol.FiniteStructure(model.n_worlds, predicates, functions)
