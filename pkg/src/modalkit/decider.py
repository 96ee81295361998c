"""Race a refutation prover against a smallest-countermodel search.

A validity question splits a top-level biconditional into its two directions.
Each direction runs the resolution prover on the negated validity translation
and the finite model finder on the frame axioms plus the negated goal, either
interleaved in one thread (deterministic, the default) or on two threads.  The
first definitive outcome wins: a refutation proves the direction, a verified
model disproves the whole goal.  Every countermodel is replayed through the
Kripke evaluator and the frame checks before it is reported, and every proof
can be replayed step by step.
"""
from __future__ import annotations

import logging
import queue
import threading
import time
from dataclasses import dataclass
from typing import Iterator, Sequence

from .clausal import clauses_satisfied, flatten
from .fol import FiniteStructure
from .formulas import Formula, atoms as formula_atoms
from .kripke import KripkeModel, eval_ltl_lasso, eval_modal, format_model
from .modelfind import (CANCELLED, Cancelled, Model, NoModelUpTo, decode,
                        dpll_steps, find_smallest_model,
                        find_smallest_model_steps, ground)
from .prover import (ProofObject, Refutation, ResourceOut, Saturated,
                     SaturationLimits, format_proof, saturate,
                     saturation_steps)
from .translation import (ModalSystem, TranslationProblem, assemble, frame_ok,
                          ltl_assemble, relation_name, split_goal)

log = logging.getLogger(__name__)

MIN_WAIT = 0.01


@dataclass(frozen=True)
class Timings:
    prover_seconds: float
    finder_seconds: float
    sizes_tried: tuple[int, ...]


@dataclass
class Valid:
    """All directions refuted; proofs is a tuple of (direction label, proof)
    where the label is None for a goal that was not split."""

    proofs: tuple[tuple[str | None, ProofObject], ...]
    timings: Timings


@dataclass
class Invalid:
    model: KripkeModel
    size: int
    direction: str | None
    timings: Timings


@dataclass
class Unknown:
    """Neither engine reached a definitive answer; details pairs each
    direction label with a short reason."""

    details: tuple[tuple[str | None, str], ...]
    timings: Timings


@dataclass(frozen=True)
class LassoWord:
    """An ultimately periodic word: valuations for the prefix positions, then
    for the loop that repeats forever."""

    prefix: tuple[frozenset[str], ...]
    loop: tuple[frozenset[str], ...]


@dataclass
class Satisfiable:
    word: LassoWord
    structure: FiniteStructure
    timings: Timings


@dataclass
class Unsatisfiable:
    proof: ProofObject
    timings: Timings


Verdict = Valid | Invalid | Unknown
LtlVerdict = Satisfiable | Unsatisfiable | Unknown


# ----------------------------------------------------------- model extraction

def to_kripke(structure: FiniteStructure, problem: TranslationProblem) -> KripkeModel:
    """Read a Kripke model off a first-order structure for the problem's
    relation and atom symbols."""
    accessibility = {}
    for index in problem.indices:
        rel = relation_name(index)
        accessibility[index] = structure.predicates.get(rel, frozenset())
    if problem.temporal:
        accessibility.setdefault(None, structure.predicates.get("R", frozenset()))
    valuation = {}
    for name in sorted(formula_atoms(problem.goal)):
        cells = structure.predicates.get(name, frozenset())
        valuation[name] = frozenset(w for (w,) in cells)
    real = structure.functions.get("w0", {}).get((), 0)
    successor = None
    if problem.temporal:
        table = structure.functions["S"]
        successor = tuple(table[(i,)] for i in range(structure.size))
    return KripkeModel(structure.size, accessibility, valuation, real, successor)


def _revalidate(goal: Formula, model: KripkeModel, system: ModalSystem) -> None:
    if eval_modal(goal, model, model.real_world):
        raise RuntimeError("countermodel fails to falsify the goal")
    if not frame_ok(model, system):
        raise RuntimeError("countermodel violates the system's frame conditions")


def _prover_reason(outcome) -> str:
    if outcome is None:
        return "refutation search ran out of time"
    if isinstance(outcome, Saturated):
        return "refutation search saturated without finding a proof"
    return f"refutation search gave up ({outcome.report.reason})"


def _finder_reason(outcome, n_max: int) -> str:
    if outcome is None:
        return "model search ran out of time"
    if isinstance(outcome, NoModelUpTo):
        return f"no model with at most {n_max} worlds"
    return f"model search stopped at size {outcome.at_size}"


def _sizes_reached(outcome, last_size: int, n_max: int) -> int:
    if isinstance(outcome, Model):
        return outcome.size
    if isinstance(outcome, NoModelUpTo):
        return n_max
    if isinstance(outcome, Cancelled):
        return outcome.at_size
    return last_size


# ------------------------------------------------------------------ the races

def _race_interleaved(problem: TranslationProblem, deadline: float, n_max: int,
                      limits: SaturationLimits, subsumption: bool):
    """Round-robin the two engines; each gets one quantum per turn."""
    prover_gen = saturation_steps(problem.refutation_clauses, limits,
                                  subsumption=subsumption)
    finder_gen = find_smallest_model_steps(problem.countermodel_clauses, n_max)
    prover_out = finder_out = None
    prover_done = finder_done = False
    pt = ft = 0.0
    last_size = 0
    while True:
        if time.monotonic() > deadline:
            break
        if not prover_done:
            t0 = time.perf_counter()
            try:
                next(prover_gen)
            except StopIteration as stop:
                prover_out, prover_done = stop.value, True
            pt += time.perf_counter() - t0
            if isinstance(prover_out, Refutation):
                sizes = tuple(range(1, _sizes_reached(finder_out, last_size, n_max) + 1))
                return ("proof", prover_out.proof), pt, ft, sizes
        if not finder_done:
            t0 = time.perf_counter()
            try:
                last_size = next(finder_gen)
            except StopIteration as stop:
                finder_out, finder_done = stop.value, True
            ft += time.perf_counter() - t0
            if isinstance(finder_out, Model):
                sizes = tuple(range(1, finder_out.size + 1))
                return ("model", finder_out), pt, ft, sizes
        if prover_done and finder_done:
            break
    reason = f"{_prover_reason(prover_out)}; {_finder_reason(finder_out, n_max)}"
    sizes = tuple(range(1, _sizes_reached(finder_out, last_size, n_max) + 1))
    return ("unknown", reason), pt, ft, sizes


def _race_threads(problem: TranslationProblem, deadline: float, n_max: int,
                  limits: SaturationLimits, subsumption: bool):
    """Run the engines on two threads; cancel the loser cooperatively."""
    stop = threading.Event()
    results: queue.Queue = queue.Queue()
    start = time.perf_counter()

    def prover_job():
        t0 = time.perf_counter()
        out = saturate(problem.refutation_clauses, limits,
                       subsumption=subsumption, cancel=stop.is_set)
        results.put(("prover", out, time.perf_counter() - t0))

    def finder_job():
        t0 = time.perf_counter()
        out = find_smallest_model(problem.countermodel_clauses, n_max,
                                  cancel=stop.is_set)
        results.put(("finder", out, time.perf_counter() - t0))

    threads = [threading.Thread(target=prover_job, daemon=True),
               threading.Thread(target=finder_job, daemon=True)]
    for t in threads:
        t.start()

    prover_out = finder_out = None
    pt = ft = 0.0
    pending = 2
    definitive = None
    while pending:
        timeout = deadline - time.monotonic()
        if timeout <= 0:
            stop.set()
        try:
            who, out, secs = results.get(timeout=max(timeout, MIN_WAIT))
        except queue.Empty:
            stop.set()
            continue
        pending -= 1
        if who == "prover":
            prover_out, pt = out, secs
            if isinstance(out, Refutation):
                definitive = ("proof", out.proof)
        else:
            finder_out, ft = out, secs
            if isinstance(out, Model):
                definitive = ("model", out)
        if definitive is not None:
            stop.set()
            break
    elapsed = time.perf_counter() - start
    if prover_out is None:
        pt = elapsed
    if finder_out is None:
        ft = elapsed
    sizes = tuple(range(1, _sizes_reached(finder_out, 0, n_max) + 1))
    if definitive is not None:
        return definitive, pt, ft, sizes
    reason = f"{_prover_reason(prover_out)}; {_finder_reason(finder_out, n_max)}"
    return ("unknown", reason), pt, ft, sizes


# --------------------------------------------------------------- modal decide

def decide(goal: Formula, system: ModalSystem, *, budget: float = 60.0,
           n_max: int = 6, prover_limits: SaturationLimits | None = None,
           subsumption: bool = True, mode: str = "interleave") -> Verdict:
    """Decide validity of a modal formula in a system.

    Splits a top-level biconditional, then races prover and model finder per
    direction.  The budget is shared across directions; each unfinished
    direction gets an even share of what remains.
    """
    if mode not in ("interleave", "threads"):
        raise ValueError(f"unknown race mode {mode!r}")
    if budget <= 0:
        raise ValueError("budget must be positive")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    race = _race_interleaved if mode == "interleave" else _race_threads

    directions = split_goal(goal)
    overall = time.monotonic() + budget
    proofs: list[tuple[str | None, ProofObject]] = []
    unknowns: list[tuple[str | None, str]] = []
    pt_total = ft_total = 0.0
    all_sizes: set[int] = set()

    for k, (label, sub) in enumerate(directions):
        problem = assemble(sub, system)
        now = time.monotonic()
        share = max((overall - now) / (len(directions) - k), MIN_WAIT)
        deadline = min(overall, now + share)
        limits = prover_limits or SaturationLimits(max_seconds=budget)
        result, pt, ft, sizes = race(problem, deadline, n_max, limits, subsumption)
        pt_total += pt
        ft_total += ft
        all_sizes.update(sizes)
        timings = Timings(pt_total, ft_total, tuple(sorted(all_sizes)))
        if result[0] == "model":
            found = result[1]
            model = to_kripke(found.structure, problem)
            _revalidate(sub, model, system)
            return Invalid(model, found.size, label, timings)
        if result[0] == "proof":
            proofs.append((label, result[1]))
        else:
            unknowns.append((label, result[1]))

    timings = Timings(pt_total, ft_total, tuple(sorted(all_sizes)))
    if unknowns:
        return Unknown(tuple(unknowns), timings)
    return Valid(tuple(proofs), timings)


# ------------------------------------------------------------ temporal decide

def extract_lasso(structure: FiniteStructure, atom_names: Sequence[str]) -> LassoWord:
    """Follow the successor function from the start world to its first repeat
    and read the valuations off along the way."""
    start = structure.functions.get("w0", {}).get((), 0)
    table = structure.functions["S"]
    seen: dict[int, int] = {}
    seq: list[int] = []
    cur = start
    while cur not in seen:
        seen[cur] = len(seq)
        seq.append(cur)
        cur = table[(cur,)]
    p = seen[cur]

    def vals(w: int) -> frozenset[str]:
        return frozenset(a for a in atom_names
                         if (w,) in structure.predicates.get(a, frozenset()))

    return LassoWord(tuple(vals(w) for w in seq[:p]),
                     tuple(vals(w) for w in seq[p:]))


def _lasso_candidates(problem: TranslationProblem, goal: Formula, n_max: int,
                      quantum: int = 2000) -> Iterator[int]:
    """Enumerate structures of growing size; reject any whose unrolled word
    fails the exact check, blocking that assignment and searching on.  Returns
    (word, structure) or None."""
    original = problem.countermodel_clauses
    flat = flatten(original)
    names = sorted(formula_atoms(goal))
    for n in range(1, n_max + 1):
        cnf = ground(flat, n)
        while True:
            gen = dpll_steps(cnf, quantum)
            while True:
                try:
                    next(gen)
                except StopIteration as stop:
                    result = stop.value
                    break
                yield n
            if result is None:
                break
            structure = decode(result, cnf.decode_map, n)
            if not clauses_satisfied(original, structure):
                raise RuntimeError("decoded structure fails clause verification")
            word = extract_lasso(structure, names)
            if eval_ltl_lasso(goal, word.prefix, word.loop):
                return word, structure
            log.info("size-%d model rejected by the exact word check", n)
            cnf.clauses.append([-v if value else v
                                for v, value in sorted(result.items())])
    return None


def ltl_decide(goal: Formula, *, budget: float = 60.0, n_max: int = 6,
               prover_limits: SaturationLimits | None = None,
               subsumption: bool = True) -> LtlVerdict:
    """Satisfiability for the next-time temporal fragment: an ultimately
    periodic word, or a refutation showing there is none."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    problem = ltl_assemble(goal)
    deadline = time.monotonic() + budget
    limits = prover_limits or SaturationLimits(max_seconds=budget)
    prover_gen = saturation_steps(problem.refutation_clauses, limits,
                                  subsumption=subsumption)
    word_gen = _lasso_candidates(problem, goal, n_max)
    prover_out = found = None
    prover_done = search_done = False
    pt = ft = 0.0
    last_size = 0
    while True:
        if time.monotonic() > deadline:
            break
        if not prover_done:
            t0 = time.perf_counter()
            try:
                next(prover_gen)
            except StopIteration as stop:
                prover_out, prover_done = stop.value, True
            pt += time.perf_counter() - t0
            if isinstance(prover_out, Refutation):
                sizes = tuple(range(1, last_size + 1))
                return Unsatisfiable(prover_out.proof, Timings(pt, ft, sizes))
        if not search_done:
            t0 = time.perf_counter()
            try:
                last_size = next(word_gen)
            except StopIteration as stop:
                found, search_done = stop.value, True
            ft += time.perf_counter() - t0
            if found is not None:
                word, structure = found
                sizes = tuple(range(1, structure.size + 1))
                return Satisfiable(word, structure, Timings(pt, ft, sizes))
        if prover_done and search_done:
            break
    if search_done and found is None:
        finder_reason = f"no ultimately periodic witness within {n_max} worlds"
    else:
        finder_reason = "witness search ran out of time"
    reason = f"{_prover_reason(prover_out)}; {finder_reason}"
    sizes = tuple(range(1, last_size + 1))
    return Unknown(((None, reason),), Timings(pt, ft, sizes))


# ------------------------------------------------------------------ reporting

def _timings_line(t: Timings) -> str:
    if t.sizes_tried:
        sizes = f"sizes tried 1..{t.sizes_tried[-1]}"
    else:
        sizes = "no sizes tried"
    return (f"timings: prover {t.prover_seconds:.2f}s, "
            f"finder {t.finder_seconds:.2f}s, {sizes}")


def _word_str(word: LassoWord) -> str:
    def seg(vals: tuple[frozenset[str], ...]) -> str:
        return " ".join("{" + ",".join(sorted(v)) + "}" for v in vals)

    prefix = seg(word.prefix)
    return f"prefix [{prefix}] loop [{seg(word.loop)}]"


def format_verdict(goal: Formula, system: ModalSystem, verdict: Verdict) -> str:
    lines = [f"formula: {goal}", f"system: {system.name}"]
    if isinstance(verdict, Valid):
        lines.append("result: valid")
        lines.append(_timings_line(verdict.timings))
        for label, proof in verdict.proofs:
            header = "proof" if label is None else f"proof ({label})"
            lines.append(f"{header}:")
            lines.append(format_proof(proof))
    elif isinstance(verdict, Invalid):
        lines.append("result: invalid")
        lines.append(_timings_line(verdict.timings))
        where = "" if verdict.direction is None else f" (direction {verdict.direction})"
        lines.append(f"countermodel with {verdict.size} worlds{where}:")
        lines.append(format_model(verdict.model))
    else:
        lines.append("result: unknown")
        lines.append(_timings_line(verdict.timings))
        for label, reason in verdict.details:
            prefix = "" if label is None else f"{label}: "
            lines.append(f"  {prefix}{reason}")
    return "\n".join(lines)


def format_ltl_verdict(goal: Formula, verdict: LtlVerdict) -> str:
    lines = [f"formula: {goal}", "fragment: next-time temporal"]
    if isinstance(verdict, Satisfiable):
        lines.append("result: satisfiable")
        lines.append(_timings_line(verdict.timings))
        lines.append(f"witness: {_word_str(verdict.word)}")
    elif isinstance(verdict, Unsatisfiable):
        lines.append("result: unsatisfiable")
        lines.append(_timings_line(verdict.timings))
        lines.append("proof:")
        lines.append(format_proof(verdict.proof))
    else:
        lines.append("result: unknown")
        lines.append(_timings_line(verdict.timings))
        for label, reason in verdict.details:
            lines.append(f"  {reason}")
    return "\n".join(lines)
