"""Binary resolution with factoring and subsumption over first-order clauses.

The saturation loop is the classic given-clause procedure: clauses wait in a
passive queue ordered by weight (FIFO among equals), the lightest is selected,
moved to the usable set, and resolved against every usable clause through a
literal index keyed by sign and predicate.  Proofs are recorded step by step
and can be replayed independently of the search.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .clausal import Clause, Literal, subst_literal
from .fol import Func, Term, Var, term_str

Subst = dict[str, Term]


# ---------------------------------------------------------------- unification

def _walk(t: Term, subst: Subst) -> Term:
    while isinstance(t, Var) and t.name in subst:
        t = subst[t.name]
    return t


def _occurs(name: str, t: Term, subst: Subst) -> bool:
    t = _walk(t, subst)
    if isinstance(t, Var):
        return t.name == name
    if isinstance(t, Func):
        return any(_occurs(name, a, subst) for a in t.args)
    return False


def _unify_into(x: Term, y: Term, s: Subst) -> bool:
    """Extend s (mutated in place) to unify x and y; on failure s is junk."""
    x, y = _walk(x, s), _walk(y, s)
    if isinstance(x, Var):
        if isinstance(y, Var) and x.name == y.name:
            return True
        if _occurs(x.name, y, s):
            return False
        s[x.name] = y
        return True
    if isinstance(y, Var):
        if _occurs(y.name, x, s):
            return False
        s[y.name] = x
        return True
    if isinstance(x, Func) and isinstance(y, Func):
        if x.name != y.name or len(x.args) != len(y.args):
            return False
        return all(_unify_into(xa, ya, s) for xa, ya in zip(x.args, y.args))
    # constants compare by equality
    return x == y


def unify_terms(a: Term, b: Term, subst: Subst | None = None) -> Subst | None:
    """Most general unifier of two terms, or None.  The result is triangular;
    use resolve_term or resolved_subst to read bindings out fully."""
    s = dict(subst) if subst else {}
    return s if _unify_into(a, b, s) else None


def unify_tuples(xs: Sequence[Term], ys: Sequence[Term],
                 subst: Subst | None = None) -> Subst | None:
    if len(xs) != len(ys):
        return None
    s = dict(subst) if subst else {}
    for x, y in zip(xs, ys):
        if not _unify_into(x, y, s):
            return None
    return s


def _top_compatible(xs: Sequence[Term], ys: Sequence[Term]) -> bool:
    """Cheap pre-unification filter on the outermost symbols."""
    for x, y in zip(xs, ys):
        if isinstance(x, Var) or isinstance(y, Var):
            continue
        if isinstance(x, Func):
            if not isinstance(y, Func) or x.name != y.name or len(x.args) != len(y.args):
                return False
        elif isinstance(y, Func) or x != y:
            return False
    return True


def resolve_term(t: Term, subst: Subst) -> Term:
    t = _walk(t, subst)
    if isinstance(t, Func):
        return Func(t.name, tuple(resolve_term(a, subst) for a in t.args))
    return t


def resolved_subst(subst: Subst) -> Subst:
    """Flatten a triangular substitution into an idempotent one."""
    return {v: resolve_term(t, subst) for v, t in subst.items()}


# ------------------------------------------------------------- clause algebra

def _rename_prefix(clause: Clause, prefix: str) -> Clause:
    mapping = {v: Var(f"{prefix}{i}") for i, v in enumerate(clause.variables())}
    if not mapping:
        return clause
    return Clause([subst_literal(l, mapping) for l in clause.literals])


def _masked(t: Term) -> str:
    if isinstance(t, Var):
        return "*"
    if isinstance(t, Func):
        return f"{t.name}({','.join(_masked(a) for a in t.args)})"
    return t.name


def _literal_sort_key(lit: Literal):
    masked = ",".join(_masked(a) for a in lit.args)
    return (lit.pred, len(lit.args), not lit.positive, masked)


def canonical(clause: Clause) -> Clause:
    """Sort literals by a variable-masked key and rename variables to V0.. in
    order of first occurrence.  Deterministic, so replayed inferences compare
    equal to recorded ones."""
    lits = sorted(clause.literals, key=_literal_sort_key)
    order: list[str] = []
    seen: set[str] = set()

    def visit(t: Term) -> None:
        if isinstance(t, Var):
            if t.name not in seen:
                seen.add(t.name)
                order.append(t.name)
        elif isinstance(t, Func):
            for a in t.args:
                visit(a)

    for lit in lits:
        for a in lit.args:
            visit(a)
    mapping = {v: Var(f"V{i}") for i, v in enumerate(order)}
    return Clause([subst_literal(l, mapping) for l in lits])


def resolve_at(c1: Clause, c2: Clause, i: int, j: int) -> tuple[Clause, Subst] | None:
    """Resolve literal i of c1 against literal j of c2.  The premises are
    renamed apart to L* and R* variables; the returned substitution is over
    those names, fully resolved."""
    r1 = _rename_prefix(c1, "L")
    r2 = _rename_prefix(c2, "R")
    l1, l2 = r1.literals[i], r2.literals[j]
    if l1.positive == l2.positive or l1.pred != l2.pred:
        return None
    s = unify_tuples(l1.args, l2.args)
    if s is None:
        return None
    sr = resolved_subst(s)
    lits = [subst_literal(l, sr) for k, l in enumerate(r1.literals) if k != i]
    lits += [subst_literal(l, sr) for k, l in enumerate(r2.literals) if k != j]
    return Clause(lits), sr


def resolvents_with_info(c1: Clause, c2: Clause) -> list[tuple[Clause, int, int, Subst]]:
    out = []
    for i, l1 in enumerate(c1.literals):
        for j, l2 in enumerate(c2.literals):
            if l1.positive != l2.positive and l1.pred == l2.pred:
                res = resolve_at(c1, c2, i, j)
                if res is not None:
                    out.append((res[0], i, j, res[1]))
    return out


def resolvents(c1: Clause, c2: Clause) -> list[Clause]:
    return [r for r, _, _, _ in resolvents_with_info(c1, c2)]


def factor_at(clause: Clause, i: int, j: int) -> tuple[Clause, Subst] | None:
    """Unify same-sign literals i and j; the instance collapses them."""
    l1, l2 = clause.literals[i], clause.literals[j]
    if l1.positive != l2.positive or l1.pred != l2.pred:
        return None
    s = unify_tuples(l1.args, l2.args)
    if s is None:
        return None
    sr = resolved_subst(s)
    lits = [subst_literal(l, sr) for k, l in enumerate(clause.literals) if k != j]
    return Clause(lits), sr


def factors_with_info(clause: Clause) -> list[tuple[Clause, int, int, Subst]]:
    out = []
    n = len(clause.literals)
    for i in range(n):
        for j in range(i + 1, n):
            res = factor_at(clause, i, j)
            if res is not None:
                out.append((res[0], i, j, res[1]))
    return out


def factors(clause: Clause) -> list[Clause]:
    return [f for f, _, _, _ in factors_with_info(clause)]


# ---------------------------------------------------------------- subsumption

def _subsumption_match(c_lits: tuple[Literal, ...],
                       d_lits: tuple[Literal, ...]) -> bool:
    nc = len(c_lits)
    nd = len(d_lits)
    used = [False] * nd
    bind: dict[str, Term] = {}
    trail: list[str] = []

    def match(pat: Term, tgt: Term) -> bool:
        if type(pat) is Var:
            bound = bind.get(pat.name)
            if bound is None:
                bind[pat.name] = tgt
                trail.append(pat.name)
                return True
            return bound == tgt
        if type(pat) is Func:
            if type(tgt) is not Func or tgt.name != pat.name \
                    or len(tgt.args) != len(pat.args):
                return False
            for a, b in zip(pat.args, tgt.args):
                if not match(a, b):
                    return False
            return True
        return pat == tgt

    def step(k: int) -> bool:
        if k == nc:
            return True
        lc = c_lits[k]
        pos, pred, cargs = lc.positive, lc.pred, lc.args
        na = len(cargs)
        for j in range(nd):
            if used[j]:
                continue
            ld = d_lits[j]
            if ld.positive != pos or ld.pred != pred or len(ld.args) != na:
                continue
            mark = len(trail)
            ok = True
            for a, b in zip(cargs, ld.args):
                if not match(a, b):
                    ok = False
                    break
            if ok:
                used[j] = True
                if step(k + 1):
                    return True
                used[j] = False
            while len(trail) > mark:
                del bind[trail.pop()]
        return False

    return step(0)


def subsumes(c: Clause, d: Clause) -> bool:
    """Theta-subsumption with injective literal matching: some substitution
    maps the literals of c one-to-one onto distinct literals of d."""
    if len(c.literals) > len(d.literals):
        return False
    if not c.signature <= d.signature:
        return False
    if c.weight > d.weight:
        return False
    return _subsumption_match(c.literals, d.literals)


# --------------------------------------------------------------------- proofs

@dataclass
class ProofStep:
    """One line of a derivation.  For resolve steps the premises are (left,
    right) step indices and positions are the literal indices resolved upon;
    for factor steps there is one premise and positions are the two unified
    literal indices.  The unifier is over the L*/R* names used by resolve_at
    (factor substitutions use the clause's own variable names)."""

    index: int
    rule: str
    premises: tuple[int, ...]
    positions: tuple[int, ...]
    unifier: Subst
    clause: Clause


@dataclass
class ProofObject:
    steps: tuple[ProofStep, ...]

    def final(self) -> Clause:
        return self.steps[-1].clause

    def __len__(self) -> int:
        return len(self.steps)


class ReplayError(ValueError):
    pass


def replay(proof: ProofObject) -> bool:
    """Recompute every inference in the proof; raise ReplayError on the first
    mismatch.  Returns True when the last step is the empty clause."""
    derived: dict[int, Clause] = {}
    for step in proof.steps:
        if step.rule == "input":
            got = step.clause
        elif step.rule == "resolve":
            a, b = step.premises
            i, j = step.positions
            res = resolve_at(derived[a], derived[b], i, j)
            if res is None:
                raise ReplayError(f"step {step.index}: literals do not unify")
            got, sigma = canonical(res[0]), res[1]
            if sigma != step.unifier:
                raise ReplayError(f"step {step.index}: unifier mismatch")
        elif step.rule == "factor":
            (a,) = step.premises
            i, j = step.positions
            res = factor_at(derived[a], i, j)
            if res is None:
                raise ReplayError(f"step {step.index}: literals do not unify")
            got, sigma = canonical(res[0]), res[1]
            if sigma != step.unifier:
                raise ReplayError(f"step {step.index}: unifier mismatch")
        else:
            raise ReplayError(f"step {step.index}: unknown rule {step.rule!r}")
        if got != step.clause:
            raise ReplayError(
                f"step {step.index}: expected {step.clause}, derived {got}")
        derived[step.index] = got
    if not proof.steps or not proof.steps[-1].clause.is_empty():
        raise ReplayError("derivation does not end in the empty clause")
    return True


def _subst_str(subst: Subst) -> str:
    inner = ", ".join(f"{v} := {term_str(t)}" for v, t in sorted(subst.items()))
    return "{" + inner + "}"


def format_proof(proof: ProofObject) -> str:
    lines = []
    width = len(str(len(proof.steps)))
    for step in proof.steps:
        head = f"{step.index:>{width}}  "
        if step.rule == "input":
            body = "input"
        elif step.rule == "resolve":
            a, b = step.premises
            i, j = step.positions
            body = f"resolve {a}.{i} with {b}.{j}  {_subst_str(step.unifier)}"
        else:
            (a,) = step.premises
            i, j = step.positions
            body = f"factor {a}.{i},{a}.{j}  {_subst_str(step.unifier)}"
        lines.append(f"{head}{body:<48}  {step.clause}")
    return "\n".join(lines)


# ----------------------------------------------------------------- saturation

@dataclass(frozen=True)
class SaturationLimits:
    max_clauses: int = 100_000
    max_seconds: float = 60.0
    max_weight: int = 100

    def __post_init__(self):
        if self.max_clauses <= 0 or self.max_seconds <= 0 or self.max_weight <= 0:
            raise ValueError("saturation limits must be positive")


@dataclass(frozen=True)
class SaturationReport:
    generated: int
    kept: int
    elapsed: float
    reason: str


@dataclass
class Refutation:
    proof: ProofObject
    report: SaturationReport


@dataclass
class Saturated:
    report: SaturationReport


@dataclass
class ResourceOut:
    report: SaturationReport


SaturationOutcome = Refutation | Saturated | ResourceOut


def _literal_counts(clause: Clause) -> dict[tuple[bool, str], int]:
    counts: dict[tuple[bool, str], int] = {}
    for lit in clause.literals:
        key = (lit.positive, lit.pred)
        counts[key] = counts.get(key, 0) + 1
    return counts


class Saturation:
    """Incremental given-clause engine.  Call step() until it returns an
    outcome; each call performs one given-clause iteration."""

    def __init__(self, clauses: Iterable[Clause],
                 limits: SaturationLimits | None = None, *,
                 subsumption: bool = True,
                 cancel: Callable[[], bool] | None = None):
        self.limits = limits or SaturationLimits()
        self.subsumption = subsumption
        self.cancel = cancel
        self.start = time.monotonic()
        self.steps: list[ProofStep] = []
        self.clauses: dict[int, Clause] = {}
        self.counts: dict[int, dict[tuple[bool, str], int]] = {}
        self.renamed: dict[int, Clause] = {}
        self.alive: set[int] = set()
        self.in_usable: set[int] = set()
        self.indexed: set[int] = set()
        self.passive: list[tuple[int, int, int]] = []
        self.index: dict[tuple[bool, str], list[tuple[int, int]]] = {}
        # ground clauses subsume by exact literal containment, so they are
        # indexed by literal: units directly, wider clauses by first literal,
        # and every kept clause by each literal for the reverse direction
        self.lit_sets: dict[int, frozenset[Literal]] = {}
        self.ground_unit: dict[Literal, int] = {}
        self.ground_multi: dict[Literal, list[int]] = {}
        self.occ: dict[Literal, list[int]] = {}
        self.nonground: list[int] = []
        self.generated = 0
        self.kept = 0
        self.seq = 0
        self.weight_discards = 0
        self.by_form: dict[tuple[Literal, ...], int] = {}
        self.outcome: SaturationOutcome | None = None
        for c in clauses:
            self._add(c, "input", (), (), {})
            if self.outcome is not None:
                break
        # input clauses are usable from the start: a heavy input would
        # otherwise wait behind every lighter derived clause before its
        # literals could pair with a given clause at all
        if self.outcome is None:
            for idx in sorted(self.alive):
                self._index_clause(idx)

    # -- bookkeeping

    def _elapsed(self) -> float:
        return time.monotonic() - self.start

    def _report(self, reason: str) -> SaturationReport:
        return SaturationReport(self.generated, self.kept, self._elapsed(), reason)

    def _extract_proof(self, last: int) -> ProofObject:
        needed: set[int] = set()
        stack = [last]
        while stack:
            k = stack.pop()
            if k in needed:
                continue
            needed.add(k)
            stack.extend(self.steps[k].premises)
        old_order = sorted(needed)
        renum = {old: new for new, old in enumerate(old_order)}
        out = []
        for old in old_order:
            s = self.steps[old]
            out.append(ProofStep(renum[old], s.rule,
                                 tuple(renum[p] for p in s.premises),
                                 s.positions, s.unifier, s.clause))
        return ProofObject(tuple(out))

    def _add(self, raw: Clause, rule: str, premises: tuple[int, ...],
             positions: tuple[int, ...], unifier: Subst) -> None:
        self.generated += 1
        if not raw.literals:
            idx = len(self.steps)
            self.steps.append(ProofStep(idx, rule, premises, positions,
                                        unifier, raw))
            self.outcome = Refutation(self._extract_proof(idx),
                                      self._report("empty_clause"))
            return
        if raw.is_tautology():
            return
        if rule != "input" and raw.weight > self.limits.max_weight:
            self.weight_discards += 1
            return
        can = canonical(raw)
        lits = can.literals
        prior = self.by_form.get(lits)
        alive = self.alive
        if prior is not None and prior in alive:
            return
        new_counts = _literal_counts(can)
        nlits, weight = len(lits), can.weight
        lit_set = frozenset(lits)
        if self.subsumption:
            ground_unit = self.ground_unit
            for lit in lits:
                uid = ground_unit.get(lit)
                if uid is not None and uid in alive:
                    return
            ground_multi = self.ground_multi
            lit_sets = self.lit_sets
            for lit in lits:
                for cid in ground_multi.get(lit, ()):
                    if cid in alive and lit_sets[cid] <= lit_set:
                        return
            clauses, counts = self.clauses, self.counts
            for cid in self.nonground:
                if cid not in alive:
                    continue
                cand = clauses[cid]
                if len(cand.literals) > nlits or cand.weight > weight:
                    continue
                ok = True
                for key, v in counts[cid].items():
                    if new_counts.get(key, 0) < v:
                        ok = False
                        break
                if ok and _subsumption_match(cand.literals, lits):
                    return
        idx = len(self.steps)
        self.steps.append(ProofStep(idx, rule, premises, positions, unifier, can))
        self.clauses[idx] = can
        self.counts[idx] = new_counts
        self.lit_sets[idx] = lit_set
        alive.add(idx)
        self.by_form[lits] = idx
        self.kept += 1
        heappush(self.passive, (weight, self.seq, idx))
        self.seq += 1
        ground = not can.variables()
        occ = self.occ
        for lit in lits:
            occ.setdefault(lit, []).append(idx)
        if ground:
            if nlits == 1:
                self.ground_unit[lits[0]] = idx
            else:
                self.ground_multi.setdefault(lits[0], []).append(idx)
        else:
            self.nonground.append(idx)
        if self.subsumption:
            if ground:
                if nlits == 1:
                    for did in occ.get(lits[0], ()):
                        if did != idx:
                            alive.discard(did)
                else:
                    lit_sets = self.lit_sets
                    for did in occ.get(lits[0], ()):
                        if did != idx and did in alive \
                                and lit_set <= lit_sets[did]:
                            alive.discard(did)
            else:
                clauses, counts = self.clauses, self.counts
                dead = []
                for did in alive:
                    if did == idx:
                        continue
                    cand = clauses[did]
                    if nlits > len(cand.literals) or weight > cand.weight:
                        continue
                    cc = counts[did]
                    ok = True
                    for key, v in new_counts.items():
                        if cc.get(key, 0) < v:
                            ok = False
                            break
                    if ok and _subsumption_match(lits, cand.literals):
                        dead.append(did)
                for did in dead:
                    alive.discard(did)

    def _index_clause(self, idx: int) -> None:
        if idx in self.indexed:
            return
        self.indexed.add(idx)
        for pos, lit in enumerate(self.clauses[idx].literals):
            self.index.setdefault((lit.positive, lit.pred), []).append((idx, pos))

    def _select(self) -> int | None:
        while self.passive:
            _, _, idx = heappop(self.passive)
            if idx in self.alive:
                return idx
        return None

    # -- one given-clause iteration

    def step(self) -> SaturationOutcome | None:
        if self.outcome is not None:
            return self.outcome
        if self.cancel is not None and self.cancel():
            self.outcome = ResourceOut(self._report("cancelled"))
            return self.outcome
        if self._elapsed() > self.limits.max_seconds:
            self.outcome = ResourceOut(self._report("max_seconds"))
            return self.outcome
        if self.kept > self.limits.max_clauses:
            self.outcome = ResourceOut(self._report("max_clauses"))
            return self.outcome
        given = self._select()
        if given is None:
            if self.weight_discards:
                # discarded clauses mean the saturation is not a decision
                self.outcome = ResourceOut(self._report("max_weight"))
            else:
                self.outcome = Saturated(self._report("saturated"))
            return self.outcome
        clause = self.clauses[given]
        self.in_usable.add(given)
        self._index_clause(given)

        for fc, i, j, sigma in factors_with_info(clause):
            self._add(fc, "factor", (given,), (i, j), sigma)
            if self.outcome is not None:
                return self.outcome

        # the given clause is renamed once per iteration, partners once ever;
        # the renaming matches resolve_at, so recorded steps replay exactly
        left = _rename_prefix(clause, "L")
        for i, lit in enumerate(left.literals):
            partners = self.index.get((not lit.positive, lit.pred), ())
            for k in range(len(partners)):
                pid, j = partners[k]
                if pid not in self.alive:
                    continue
                if given not in self.alive:
                    return None
                right = self.renamed.get(pid)
                if right is None:
                    right = _rename_prefix(self.clauses[pid], "R")
                    self.renamed[pid] = right
                other = right.literals[j]
                if len(lit.args) != len(other.args):
                    continue
                if not _top_compatible(lit.args, other.args):
                    continue
                s: Subst = {}
                ok = True
                for x, y in zip(lit.args, other.args):
                    if not _unify_into(x, y, s):
                        ok = False
                        break
                if not ok:
                    continue
                sr = resolved_subst(s)
                lits = [subst_literal(l, sr)
                        for m, l in enumerate(left.literals) if m != i]
                lits += [subst_literal(l, sr)
                         for m, l in enumerate(right.literals) if m != j]
                self._add(Clause(lits), "resolve", (given, pid), (i, j), sr)
                if self.outcome is not None:
                    return self.outcome
        return None


def saturate(clauses: Iterable[Clause],
             limits: SaturationLimits | None = None, *,
             subsumption: bool = True,
             cancel: Callable[[], bool] | None = None) -> SaturationOutcome:
    engine = Saturation(clauses, limits, subsumption=subsumption, cancel=cancel)
    while engine.outcome is None:
        engine.step()
    return engine.outcome


def saturation_steps(clauses: Iterable[Clause],
                     limits: SaturationLimits | None = None, *,
                     subsumption: bool = True) -> Iterator[None]:
    """Generator interface: yields after every given-clause iteration and
    returns the outcome as the StopIteration value."""
    engine = Saturation(clauses, limits, subsumption=subsumption)
    while engine.outcome is None:
        engine.step()
        if engine.outcome is None:
            yield None
    return engine.outcome
