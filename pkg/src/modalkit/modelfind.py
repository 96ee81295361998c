"""Finite model search by grounding to propositional logic.

Clauses are flattened so every function symbol occurs only through its graph
predicate, then instantiated over a domain {0..n-1}.  Each predicate cell
becomes one propositional variable; each function cell gets one variable per
candidate value plus exactly-one constraints.  A small iterative DPLL solver
with unit propagation and the pure-literal rule searches the grounding; domain
sizes are tried in increasing order, so the first model found is smallest.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .clausal import (Clause, clauses_satisfied, collect_signature, flatten,
                      graph_pred_func, is_graph_pred)
from .fol import FiniteStructure, Var

# cell descriptors used in decode maps
PredCell = tuple  # ("pred", name, args)
FuncCell = tuple  # ("func", name, args, value)

CANCELLED = object()


@dataclass
class PropCnf:
    """A propositional grounding: variables are 1..num_vars, clauses are lists
    of nonzero signed integers, and decode_map says which cell each variable
    stands for."""

    num_vars: int
    clauses: list[list[int]]
    decode_map: dict[int, tuple]
    size: int


def ground(flat_clauses: Sequence[Clause], n: int) -> PropCnf:
    """Instantiate flattened clauses over the domain {0..n-1}."""
    if n < 1:
        raise ValueError("domain size must be at least 1")
    preds, funcs = collect_signature(flat_clauses)

    var_of: dict[tuple, int] = {}
    decode: dict[int, tuple] = {}

    def new_var(cell: tuple) -> int:
        idx = len(var_of) + 1
        var_of[cell] = idx
        decode[idx] = cell
        return idx

    for name in sorted(preds):
        for args in product(range(n), repeat=preds[name]):
            new_var(("pred", name, args))
    for name in sorted(funcs):
        for args in product(range(n), repeat=funcs[name]):
            for value in range(n):
                new_var(("func", name, args, value))

    clauses: list[list[int]] = []

    for clause in flat_clauses:
        variables = clause.variables()
        for assignment in product(range(n), repeat=len(variables)):
            env = dict(zip(variables, assignment))
            lits: list[int] = []
            tautology = False
            for lit in clause.literals:
                values = tuple(env[a.name] for a in lit.args)
                if is_graph_pred(lit.pred):
                    cell = ("func", graph_pred_func(lit.pred),
                            values[:-1], values[-1])
                else:
                    cell = ("pred", lit.pred, values)
                v = var_of[cell]
                signed = v if lit.positive else -v
                if -signed in lits:
                    tautology = True
                    break
                if signed not in lits:
                    lits.append(signed)
            if not tautology:
                clauses.append(lits)

    for name in sorted(funcs):
        for args in product(range(n), repeat=funcs[name]):
            cell_vars = [var_of[("func", name, args, value)]
                         for value in range(n)]
            clauses.append(list(cell_vars))
            for a, b in combinations(cell_vars, 2):
                clauses.append([-a, -b])

    return PropCnf(len(var_of), clauses, decode, n)


def to_dimacs(cnf: PropCnf) -> str:
    lines = [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    for clause in cnf.clauses:
        lines.append(" ".join(str(l) for l in clause) + " 0")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------- dpll

class _Solver:
    """Iterative DPLL with a trail.  Counters track per-clause satisfaction
    and unassigned width, plus live occurrence counts for the pure rule."""

    DECISION, FORCED, FLIPPED = 0, 1, 2

    def __init__(self, cnf: PropCnf):
        self.clauses = [list(c) for c in cnf.clauses]
        self.nvars = cnf.num_vars
        self.assign: list[int] = [0] * (self.nvars + 1)
        self.occ: list[list[tuple[int, int]]] = [[] for _ in range(self.nvars + 1)]
        self.true_count = [0] * len(self.clauses)
        self.unassigned = [len(c) for c in self.clauses]
        self.pos_live = [0] * (self.nvars + 1)
        self.neg_live = [0] * (self.nvars + 1)
        for ci, clause in enumerate(self.clauses):
            for lit in clause:
                v, sign = abs(lit), (1 if lit > 0 else -1)
                self.occ[v].append((ci, sign))
                if sign > 0:
                    self.pos_live[v] += 1
                else:
                    self.neg_live[v] += 1
        self.num_sat = 0
        self.trail: list[tuple[int, int]] = []
        self.units: list[int] = [c[0] for c in self.clauses if len(c) == 1]
        self.failed = any(len(c) == 0 for c in self.clauses)

    def _set(self, var: int, value: int, kind: int) -> bool:
        """Assign and update counters; returns False on conflict."""
        self.assign[var] = value
        self.trail.append((var, kind))
        ok = True
        for ci, sign in self.occ[var]:
            self.unassigned[ci] -= 1
            if sign == value:
                self.true_count[ci] += 1
                if self.true_count[ci] == 1:
                    self.num_sat += 1
                    for lit in self.clauses[ci]:
                        if lit > 0:
                            self.pos_live[lit] -= 1
                        else:
                            self.neg_live[-lit] -= 1
            elif self.true_count[ci] == 0:
                if self.unassigned[ci] == 0:
                    ok = False
                elif self.unassigned[ci] == 1:
                    for lit in self.clauses[ci]:
                        if self.assign[abs(lit)] == 0:
                            self.units.append(lit)
                            break
        return ok

    def _unset(self, var: int) -> None:
        value = self.assign[var]
        self.assign[var] = 0
        for ci, sign in self.occ[var]:
            self.unassigned[ci] += 1
            if sign == value:
                self.true_count[ci] -= 1
                if self.true_count[ci] == 0:
                    self.num_sat -= 1
                    for lit in self.clauses[ci]:
                        if lit > 0:
                            self.pos_live[lit] += 1
                        else:
                            self.neg_live[-lit] += 1

    def _backtrack(self) -> bool:
        """Undo up to the most recent unflipped decision and flip it."""
        self.units.clear()
        while self.trail:
            var, kind = self.trail.pop()
            value = self.assign[var]
            self._unset(var)
            if kind == self.DECISION:
                return self._propagate_from(var, -value, self.FLIPPED)
        return False

    def _propagate_from(self, var: int, value: int, kind: int) -> bool:
        if not self._set(var, value, kind):
            return False
        while self.units:
            lit = self.units.pop()
            v, val = abs(lit), (1 if lit > 0 else -1)
            if self.assign[v] == val:
                continue
            if self.assign[v] == -val:
                return False
            if not self._set(v, val, self.FORCED):
                return False
        return True

    def _pick_pure(self) -> tuple[int, int] | None:
        for v in range(1, self.nvars + 1):
            if self.assign[v] == 0:
                if self.neg_live[v] == 0:
                    return (v, 1) if self.pos_live[v] else (v, -1)
                if self.pos_live[v] == 0:
                    return v, -1
        return None

    def _pick_branch(self) -> int | None:
        for v in range(1, self.nvars + 1):
            if self.assign[v] == 0:
                return v
        return None

    def run(self, quantum: int = 2000) -> Iterator[None]:
        """Search generator; yields every `quantum` assignments so a driver can
        interleave or abandon the search.  Returns the model as a dict, or
        None when unsatisfiable."""
        if self.failed:
            return None
        counter = 0
        # establish initial units before any decision
        pending = list(self.units)
        self.units.clear()
        for lit in pending:
            v, val = abs(lit), (1 if lit > 0 else -1)
            if self.assign[v] == val:
                continue
            if self.assign[v] == -val or not self._propagate_from(v, val, self.FORCED):
                if not self._backtrack():
                    return None
        while True:
            counter += 1
            if counter % quantum == 0:
                yield None
            if self.num_sat == len(self.clauses):
                return {v: self.assign[v] > 0 for v in range(1, self.nvars + 1)}
            move = self._pick_pure()
            kind = self.FORCED
            if move is None:
                var = self._pick_branch()
                if var is None:
                    # every variable assigned without conflict
                    return {v: self.assign[v] > 0 for v in range(1, self.nvars + 1)}
                move, kind = (var, 1), self.DECISION
            if not self._propagate_from(move[0], move[1], kind):
                while not self._backtrack():
                    if not self.trail:
                        return None
                    # _backtrack flips; a False return with a nonempty trail
                    # means the flip itself conflicted, so back up again
            continue


def dpll_steps(cnf: PropCnf, quantum: int = 2000) -> Iterator[None]:
    """Stepwise solving: yields every `quantum` assignments; the StopIteration
    value is the assignment dict or None."""
    return _Solver(cnf).run(quantum)


def _drive(gen: Iterator[None]):
    """Run a solver generator to completion, returning its result."""
    try:
        while True:
            next(gen)
    except StopIteration as stop:
        return stop.value


def dpll(cnf: PropCnf, cancel: Callable[[], bool] | None = None,
         quantum: int = 2000):
    """Solve a grounding.  Returns an assignment dict, None when
    unsatisfiable, or the CANCELLED sentinel."""
    gen = _Solver(cnf).run(quantum)
    try:
        while True:
            next(gen)
            if cancel is not None and cancel():
                return CANCELLED
    except StopIteration as stop:
        return stop.value


def decode(assignment: Mapping[int, bool], decode_map: Mapping[int, tuple],
           n: int) -> FiniteStructure:
    """Turn a propositional assignment back into a finite structure."""
    predicates: dict[str, set[tuple[int, ...]]] = {}
    chosen: dict[tuple[str, tuple[int, ...]], list[int]] = {}
    func_names: set[str] = set()
    for var, cell in decode_map.items():
        if cell[0] == "pred":
            _, name, args = cell
            predicates.setdefault(name, set())
            if assignment.get(var):
                predicates[name].add(args)
        else:
            _, name, args, value = cell
            func_names.add(name)
            chosen.setdefault((name, args), [])
            if assignment.get(var):
                chosen[(name, args)].append(value)
    functions: dict[str, dict[tuple[int, ...], int]] = {name: {} for name in func_names}
    for (name, args), values in chosen.items():
        if len(values) != 1:
            raise RuntimeError(
                f"cell {name}{args} decoded to {len(values)} values")
        functions[name][args] = values[0]
    return FiniteStructure(n, {k: frozenset(v) for k, v in predicates.items()},
                           functions)


# ------------------------------------------------------------ size iteration

@dataclass(frozen=True)
class Model:
    structure: FiniteStructure
    size: int


@dataclass(frozen=True)
class NoModelUpTo:
    n_max: int


@dataclass(frozen=True)
class Cancelled:
    at_size: int


FinderOutcome = Model | NoModelUpTo | Cancelled


def _check_model(clauses: Sequence[Clause], structure: FiniteStructure) -> None:
    bad = [c for c in clauses if not clauses_satisfied([c], structure)]
    if bad:
        raise RuntimeError(
            "decoded structure fails verification against: "
            + "; ".join(str(c) for c in bad))


def find_smallest_model_steps(clauses: Sequence[Clause], n_max: int = 6, *,
                              quantum: int = 2000) -> Iterator[int]:
    """Try domain sizes 1..n_max in order.  Yields the size currently being
    searched (once per solver quantum) and returns a FinderOutcome.  Every
    candidate is verified against the original, unflattened clauses."""
    flat = flatten(clauses)
    for n in range(1, n_max + 1):
        cnf = ground(flat, n)
        gen = _Solver(cnf).run(quantum)
        while True:
            try:
                next(gen)
            except StopIteration as stop:
                result = stop.value
                break
            yield n
        if result is not None:
            structure = decode(result, cnf.decode_map, n)
            _check_model(clauses, structure)
            return Model(structure, n)
    return NoModelUpTo(n_max)


def find_smallest_model(clauses: Sequence[Clause], n_max: int = 6, *,
                        cancel: Callable[[], bool] | None = None) -> FinderOutcome:
    gen = find_smallest_model_steps(clauses, n_max)
    current = 0
    try:
        while True:
            current = next(gen)
            if cancel is not None and cancel():
                return Cancelled(current)
    except StopIteration as stop:
        return stop.value
