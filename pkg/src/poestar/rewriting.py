"""Call-by-value rewriting.

A rule fires only under a value substitution.  The evaluator contracts the
leftmost-innermost redex; :func:`max_derivation_length` explores every redex
at every step and serves as the oracle for the runtime complexity function.
"""

from __future__ import annotations

import itertools
import statistics
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from .terms import (
    App,
    FunctionSymbol,
    Rule,
    Term,
    Trs,
    Var,
    apply_substitution,
    render,
    replace_at,
)

__all__ = [
    "BudgetExceeded",
    "StuckTerm",
    "Step",
    "Derivation",
    "RcSample",
    "match",
    "match_rule",
    "redexes",
    "successors",
    "step_leftmost_innermost",
    "evaluate",
    "trace_derivation",
    "max_derivation_length",
    "values_of_size",
    "basic_terms",
    "measure_rc",
    "rc_table",
    "growth_slope",
]

DEFAULT_BUDGET = 100_000


class BudgetExceeded(Exception):
    """Raised when a derivation is longer than the budget (or loops)."""

    def __init__(self, message: str, derivation: "Derivation | None" = None):
        super().__init__(message)
        self.derivation = derivation


class StuckTerm(Exception):
    """A normal form that is not a value; impossible for completely defined systems."""

    def __init__(self, term: Term):
        super().__init__(f"stuck at non-value normal form {render(term)}")
        self.term = term


@dataclass(frozen=True)
class Step:
    position: tuple[int, ...]
    rule: int  # 0-based index into trs.rules
    substitution: tuple[tuple[str, Term], ...]
    result: Term

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "rule": self.rule + 1,
            "substitution": {x: render(v) for x, v in self.substitution},
            "result": render(self.result),
        }


@dataclass(frozen=True)
class Derivation:
    start: Term
    steps: tuple[Step, ...] = ()

    def __len__(self):
        return len(self.steps)

    @property
    def end(self) -> Term:
        return self.steps[-1].result if self.steps else self.start

    def terms(self) -> Iterator[Term]:
        yield self.start
        for step in self.steps:
            yield step.result

    def pairs(self) -> Iterator[tuple[Term, Term]]:
        prev = self.start
        for step in self.steps:
            yield prev, step.result
            prev = step.result

    def to_dict(self) -> dict:
        return {"start": render(self.start), "length": len(self.steps), "steps": [s.to_dict() for s in self.steps]}


@dataclass(frozen=True)
class RcSample:
    size: int
    max_steps: int
    witness: Term | None

    def to_dict(self) -> dict:
        return {
            "n": self.size,
            "max_steps": self.max_steps,
            "witness": None if self.witness is None else render(self.witness),
        }


def match(pattern: Term, t: Term, sigma: dict | None = None) -> dict | None:
    sigma = {} if sigma is None else sigma
    if isinstance(pattern, Var):
        bound = sigma.get(pattern.name)
        if bound is None:
            sigma[pattern.name] = t
            return sigma
        return sigma if bound == t else None
    if not isinstance(t, App) or t.symbol != pattern.symbol:
        return None
    for p, a in zip(pattern.args, t.args):
        if match(p, a, sigma) is None:
            return None
    return sigma


def match_rule(rule: Rule, t: Term) -> dict | None:
    """The substitution ``sigma`` with ``lhs sigma = t`` if every binding is a value."""
    sigma = match(rule.lhs, t)
    if sigma is None or not all(v.is_value for v in sigma.values()):
        return None
    return sigma


def _root_step(trs: Trs, t: App):
    for i, rule in trs._by_root.get(t.symbol.name, ()):
        sigma = match_rule(rule, t)
        if sigma is not None:
            return i, sigma
    return None


def _contract(rule: Rule, sigma: dict) -> Term:
    return apply_substitution(rule.rhs, sigma)


def redexes(trs: Trs, t: Term) -> Iterator[tuple[tuple[int, ...], int, dict]]:
    """Every ``(position, rule index, substitution)`` at which a rule fires."""
    stack: list[tuple[tuple[int, ...], Term]] = [((), t)]
    while stack:
        path, u = stack.pop()
        if not isinstance(u, App) or u.is_value:
            continue
        if u.symbol.is_defined:
            for i, rule in trs._by_root.get(u.symbol.name, ()):
                sigma = match_rule(rule, u)
                if sigma is not None:
                    yield path, i, sigma
        args = u.args
        for j in range(len(args) - 1, -1, -1):
            stack.append((path + (j,), args[j]))


def successors(trs: Trs, t: Term) -> list[Term]:
    """Distinct one-step reducts of ``t`` in redex order."""
    out: dict[Term, None] = {}
    for path, i, sigma in redexes(trs, t):
        out.setdefault(replace_at(t, path, _contract(trs.rules[i], sigma)))
    return list(out)


def _find_innermost(trs: Trs, t: Term, path: tuple[int, ...]):
    if not isinstance(t, App) or t.is_value:
        return None
    for j, a in enumerate(t.args):
        found = _find_innermost(trs, a, path + (j,))
        if found is not None:
            return found
    if t.symbol.is_defined:
        hit = _root_step(trs, t)
        if hit is not None:
            return path, hit[0], hit[1]
    return None


def step_leftmost_innermost(trs: Trs, t: Term) -> Step | None:
    """Contract the leftmost-innermost redex; ``None`` if ``t`` is a normal form."""
    found = _find_innermost(trs, t, ())
    if found is None:
        return None
    path, i, sigma = found
    result = replace_at(t, path, _contract(trs.rules[i], sigma))
    binding = tuple(sorted(sigma.items()))
    return Step(path, i, binding, result)


def trace_derivation(trs: Trs, t: Term, budget: int = DEFAULT_BUDGET) -> Derivation:
    """Leftmost-innermost derivation from ``t`` to its normal form, every step recorded."""
    steps: list[Step] = []
    current = t
    while True:
        step = step_leftmost_innermost(trs, current)
        if step is None:
            return Derivation(t, tuple(steps))
        if len(steps) >= budget:
            raise BudgetExceeded(f"no normal form within {budget} steps", Derivation(t, tuple(steps)))
        steps.append(step)
        current = step.result


def evaluate(trs: Trs, t: Term, budget: int = DEFAULT_BUDGET) -> tuple[Term, int]:
    """Normalise ``t``; returns the value and the number of steps."""
    current = t
    count = 0
    while True:
        step = step_leftmost_innermost(trs, current)
        if step is None:
            break
        if count >= budget:
            raise BudgetExceeded(f"no normal form within {budget} steps", trace_derivation_prefix(trs, t, count))
        count += 1
        current = step.result
    if not current.is_value:
        raise StuckTerm(current)
    return current, count


def trace_derivation_prefix(trs: Trs, t: Term, n: int) -> Derivation:
    steps = []
    current = t
    for _ in range(n):
        step = step_leftmost_innermost(trs, current)
        if step is None:
            break
        steps.append(step)
        current = step.result
    return Derivation(t, tuple(steps))


def max_derivation_length(trs: Trs, t: Term, budget: int = DEFAULT_BUDGET, _memo: dict | None = None) -> int:
    """Longest derivation from ``t`` over all redex choices (exhaustive, memoised)."""
    memo = {} if _memo is None else _memo
    if t in memo:
        return memo[t]
    # iterative DFS: frames are [term, successors, next index, best]
    frames = [[t, successors(trs, t), 0, 0]]
    on_path = {t}
    while frames:
        frame = frames[-1]
        term, succ, idx, best = frame
        if idx < len(succ):
            frame[2] += 1
            child = succ[idx]
            if child in memo:
                frame[3] = max(best, 1 + memo[child])
            elif child in on_path:
                raise BudgetExceeded(f"{render(child)} reduces to itself")
            else:
                if len(frames) > budget:
                    raise BudgetExceeded(f"derivation from {render(t)} longer than {budget} steps")
                frames.append([child, successors(trs, child), 0, 0])
                on_path.add(child)
            continue
        frames.pop()
        on_path.discard(term)
        memo[term] = best
        if best > budget:
            raise BudgetExceeded(f"derivation from {render(t)} longer than {budget} steps")
        if frames:
            parent = frames[-1]
            parent[3] = max(parent[3], 1 + best)
    return memo[t]


def _value_key(v: Term) -> tuple[int, str]:
    return (v.size, render(v))


def values_of_size(constructors: tuple[FunctionSymbol, ...], m: int) -> list[Term]:
    """All values of exactly size ``m``, ordered by their text."""
    return list(_values_of_size(tuple(constructors), m))


@lru_cache(maxsize=None)
def _values_of_size(constructors: tuple[FunctionSymbol, ...], m: int) -> tuple[Term, ...]:
    if m < 1:
        return ()
    out = []
    for c in constructors:
        a = c.safe_arity
        if a == 0:
            if m == 1:
                out.append(App(c))
            continue
        for sizes in _compositions(m - 1, a):
            pools = [_values_of_size(constructors, k) for k in sizes]
            for args in itertools.product(*pools):
                out.append(App(c, (), args))
    out.sort(key=_value_key)
    return tuple(out)


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def basic_terms(trs: Trs, n: int) -> Iterator[Term]:
    """Terms ``f(v1,...)`` with ``f`` defined, values as arguments and size at most ``n``.

    Canonical order: symbol declaration order, then total size, then the
    argument values by (size, text).
    """
    cons = trs.constructors
    for f in trs.defined:
        a = f.arity
        if a == 0:
            if n >= 1:
                yield App(f)
            continue
        for total in range(a, n):
            tuples = []
            for sizes in _compositions(total, a):
                pools = [_values_of_size(cons, k) for k in sizes]
                tuples.extend(itertools.product(*pools))
            tuples.sort(key=lambda args: tuple(_value_key(v) for v in args))
            for args in tuples:
                yield App(f, args[: f.normal_arity], args[f.normal_arity:])


def measure_rc(trs: Trs, n: int, budget: int = DEFAULT_BUDGET, _memo: dict | None = None) -> RcSample:
    """Maximal derivation length over basic terms of size at most ``n``."""
    memo = {} if _memo is None else _memo
    best, witness = 0, None
    for s in basic_terms(trs, n):
        steps = max_derivation_length(trs, s, budget, memo)
        if witness is None or steps > best:
            best, witness = steps, s
    return RcSample(n, best, witness)


def rc_table(trs: Trs, max_size: int, budget: int = DEFAULT_BUDGET, min_size: int = 1) -> list[RcSample]:
    memo: dict = {}
    return [measure_rc(trs, n, budget, memo) for n in range(min_size, max_size + 1)]


def growth_slope(samples, log2: bool = True) -> float | None:
    """Least-squares slope of ``log2(max_steps)`` (or ``max_steps``) against ``n``.

    Samples with zero steps are skipped when fitting logarithms.
    """
    import math

    pts = [(s.size, s.max_steps) for s in samples if s.max_steps > 0 or not log2]
    if len(pts) < 2:
        return None
    xs = [float(x) for x, _ in pts]
    ys = [math.log2(y) if log2 else float(y) for _, y in pts]
    return statistics.linear_regression(xs, ys).slope
