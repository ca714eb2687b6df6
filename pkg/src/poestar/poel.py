"""The auxiliary order on terms and sequences, the ``slow`` measure and the
predicative embedding of rewrite steps.

Sequences are plain tuples of terms; a term used where a sequence is expected
stands for the singleton sequence.  Normalised symbols are
:class:`~poestar.terms.FunctionSymbol` instances with ``normalized=True``,
whose arguments are the normal arguments of the base symbol.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .poe import Certificate, Fact, NotGreater, PoeInstance, Precedence, render_item
from .rewriting import Derivation
from .syntax import normalized_symbol
from .terms import (
    App,
    FunctionSymbol,
    Rule,
    Term,
    Trs,
    Var,
    apply_substitution,
    render,
    strict_superterm,
    subterms,
)

__all__ = [
    "GuardExceeded",
    "Guard",
    "PoelInstance",
    "Item",
    "to_seq",
    "concat",
    "pint",
    "in_tn",
    "poel_gt",
    "replay_poel",
    "successors",
    "slow",
    "slow_bound",
    "check_slow_sum",
    "check_slow_bound",
    "default_ell",
    "verify_embedding_step",
    "verify_root_embedding",
    "verify_derivation",
    "EmbeddingReport",
]

Item = Union[Term, tuple]


class GuardExceeded(Exception):
    """Input or search state is beyond the configured size guard."""


@dataclass(frozen=True)
class Guard:
    max_term_size: int = 6
    max_seq_len: int = 4
    max_states: int = 200_000
    max_successors: int = 200_000


@dataclass(frozen=True)
class PoelInstance:
    """Lifted precedence, the length bound ``ell`` and the base signature.

    Symbols available to clause 1 are the base signature and its normalised
    copies; a normalised symbol is only compared with normalised symbols.
    """

    precedence: Precedence
    ell: int
    signature: tuple[FunctionSymbol, ...] = ()

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("ell must be at least 1")
        object.__setattr__(self, "signature", tuple(self.signature))

    def with_ell(self, ell: int) -> "PoelInstance":
        return PoelInstance(self.precedence, ell, self.signature)

    @property
    def universe(self) -> tuple[FunctionSymbol, ...]:
        base = [f for f in self.signature if not f.normalized]
        return tuple(base) + tuple(normalized_symbol(f) for f in base)

    def below(self, f: FunctionSymbol) -> list[FunctionSymbol]:
        return [g for g in self.universe if self.precedence.gt(f, g) and g.arity <= self.ell]


def to_seq(a: Item) -> tuple:
    return a if isinstance(a, tuple) else (a,)


def concat(*parts: Item) -> tuple:
    """Flattened concatenation; terms count as singleton sequences."""
    out: list = []
    for p in parts:
        out.extend(to_seq(p))
    return tuple(out)


def _args(t: App) -> tuple[Term, ...]:
    return t.args


def _build(g: FunctionSymbol, args: Sequence[Term]) -> App:
    k = g.normal_arity
    return App(g, args[:k], args[k:])


def pint(t: Term) -> tuple:
    """Predicative interpretation: values vanish, ``f(n; s)`` becomes ``f^n(n)`` followed by the images of ``s``."""
    if t.is_value:
        return ()
    if not isinstance(t, App):
        raise ValueError(f"predicative interpretation of the variable {render(t)}")
    head = App(normalized_symbol(t.symbol), t.normal, ())
    return concat(head, *(pint(s) for s in t.safe))


def in_tn(t: Term) -> bool:
    """Every normal argument at every position is a value."""
    if t.is_value:
        return True
    if not isinstance(t, App):
        return False
    return all(a.is_value for a in t.normal) and all(in_tn(a) for a in t.safe)


# ---------------------------------------------------------------------------
# deciding the order


def poel_gt(inst: PoelInstance, a: Item, b: Item, _memo: dict | None = None):
    """Decide ``a >ell b``; returns a :class:`Certificate` (order ``"poel"``) or :class:`NotGreater`."""
    memo = {} if _memo is None else _memo
    return _pgt(inst, a, b, memo)


def _pgt(inst, a, b, memo):
    key = (a, b)
    hit = memo.get(key)
    if hit is None:
        hit = _pdecide(inst, a, b, memo)
        memo[key] = hit
    return hit


def _pdecide(inst: PoelInstance, a, b, memo):
    ell = inst.ell
    if isinstance(a, tuple):
        return _multiset_clause(inst, a, to_seq(b), memo)
    if not isinstance(a, App):
        return NotGreater(a, b, None, "a variable is not greater than anything")
    if isinstance(b, tuple):
        if len(b) > ell:
            return NotGreater(a, b, 3, f"sequence of length {len(b)} exceeds {ell}")
        premises = []
        for u in b:
            sub = _pgt(inst, a, u, memo)
            if not sub:
                return NotGreater(a, b, 3, f"item {render(u)} is not smaller", sub)
            premises.append(sub)
        premises.append(Fact("length", len(b), ell))
        return Certificate("poel", 3, a, b, tuple(premises), ell)
    if not isinstance(b, App):
        return NotGreater(a, b, None, "only clauses for applications and sequences apply")
    f, g = a.symbol, b.symbol
    if f == g:
        premises = []
        strict = False
        for s, t in zip(_args(a), _args(b)):
            if s == t:
                premises.append(Fact("equal", s, t))
            elif strict_superterm(s, t):
                premises.append(Fact("strict-subterm", s, t))
                strict = True
            else:
                return NotGreater(a, b, 2, f"{render(t)} is not a subterm of {render(s)}")
        if not strict:
            return NotGreater(a, b, 2, "arguments are equal")
        return Certificate("poel", 2, a, b, tuple(premises), ell)
    if not inst.precedence.gt(f, g):
        return NotGreater(a, b, 1, f"{f} is not above {g}")
    if g.arity > ell:
        return NotGreater(a, b, 1, f"arity of {g} exceeds {ell}")
    premises = [Fact("precedence", f, g)]
    for t in _args(b):
        if not strict_superterm(a, t):
            return NotGreater(a, b, 1, f"{render(t)} is not a proper subterm of {render(a)}")
        premises.append(Fact("strict-subterm", a, t))
    premises.append(Fact("length", g.arity, ell))
    return Certificate("poel", 1, a, b, tuple(premises), ell)


def _block(ts: tuple, p: int, q: int) -> Item:
    return ts[p] if q - p == 1 else ts[p:q]


def _multiset_clause(inst, ss: tuple, ts: tuple, memo):
    """Split ``ts`` into ``len(ss)`` consecutive blocks, each equal to or below its item."""
    k, n = len(ss), len(ts)
    # reach[i][p][strict] = back pointer (q_prev, strict_prev, premise) or None
    reach: list[list[list]] = [[[None, None] for _ in range(n + 1)] for _ in range(k + 1)]
    reach[0][0][0] = ("start",)
    for i in range(k):
        s = ss[i]
        for p in range(n + 1):
            for strict in (0, 1):
                if reach[i][p][strict] is None:
                    continue
                if p < n and ts[p] == s and reach[i + 1][p + 1][strict] is None:
                    reach[i + 1][p + 1][strict] = (p, strict, Fact("equal", s, ts[p]))
                for q in range(p, n + 1):
                    if reach[i + 1][q][1] is not None:
                        continue
                    sub = _pgt(inst, s, _block(ts, p, q), memo)
                    if sub:
                        reach[i + 1][q][1] = (p, strict, sub)
    if reach[k][n][1] is None:
        return NotGreater(ss, ts, 4, "no split of the right-hand sequence decreases componentwise")
    premises = []
    p, strict = n, 1
    for i in range(k, 0, -1):
        prev_p, prev_strict, premise = reach[i][p][strict]
        premises.append(premise)
        p, strict = prev_p, prev_strict
    premises.reverse()
    return Certificate("poel", 4, ss, ts, tuple(premises), inst.ell)


# ---------------------------------------------------------------------------
# replay


def replay_poel(inst: PoelInstance, cert: Certificate, ell: int | None = None) -> bool:
    """Re-check a certificate clause by clause, optionally under a different ``ell``."""
    ell = inst.ell if ell is None else ell
    try:
        _replay(inst.precedence, ell, cert)
    except _Bad:
        return False
    return True


class _Bad(Exception):
    pass


def _require(cond):
    if not cond:
        raise _Bad()


def _replay(prec: Precedence, ell: int, c):
    _require(isinstance(c, Certificate) and c.order == "poel")
    a, b, ps = c.lhs, c.rhs, c.premises
    if c.clause == 1:
        _require(isinstance(a, App) and isinstance(b, App))
        _require(prec.gt(a.symbol, b.symbol) and b.symbol.arity <= ell)
        _require(len(ps) == b.symbol.arity + 2 and ps[0] == Fact("precedence", a.symbol, b.symbol))
        for p, t in zip(ps[1:-1], _args(b)):
            _require(p == Fact("strict-subterm", a, t) and strict_superterm(a, t))
        _require(ps[-1].kind == "length")
    elif c.clause == 2:
        _require(isinstance(a, App) and isinstance(b, App) and a.symbol == b.symbol)
        _require(len(ps) == a.symbol.arity)
        strict = False
        for p, s, t in zip(ps, _args(a), _args(b)):
            _require(isinstance(p, Fact) and p.lhs == s and p.rhs == t)
            if p.kind == "equal":
                _require(s == t)
            else:
                _require(p.kind == "strict-subterm" and strict_superterm(s, t))
                strict = True
        _require(strict)
    elif c.clause == 3:
        _require(isinstance(a, App) and isinstance(b, tuple) and len(b) <= ell)
        _require(len(ps) == len(b) + 1 and ps[-1].kind == "length")
        for p, u in zip(ps, b):
            _require(isinstance(p, Certificate) and p.lhs == a and p.rhs == u)
            _replay(prec, ell, p)
    elif c.clause == 4:
        _require(isinstance(a, tuple) and isinstance(b, tuple) and len(ps) == len(a))
        pieces = []
        strict = False
        for p, s in zip(ps, a):
            _require(p.lhs == s)
            if isinstance(p, Fact):
                _require(p.kind == "equal" and p.rhs == s)
            else:
                _replay(prec, ell, p)
                strict = True
            pieces.append(p.rhs)
        _require(strict and concat(*pieces) == b)
    else:
        raise _Bad()


# ---------------------------------------------------------------------------
# successors and slow


def _check_guard(a: Item, guard: Guard):
    items = to_seq(a)
    if len(items) > guard.max_seq_len:
        raise GuardExceeded(f"sequence of length {len(items)} exceeds the guard {guard.max_seq_len}")
    for t in items:
        if t.size > guard.max_term_size:
            raise GuardExceeded(f"term {render(t)} of size {t.size} exceeds the guard {guard.max_term_size}")


def _strict_subterms(t: App) -> list[Term]:
    seen: dict[Term, None] = {}
    for a in _args(t):
        for u in subterms(a):
            seen.setdefault(u)
    return list(seen)


def _term_successors(inst: PoelInstance, a: Term) -> list[Term]:
    """Terms ``b`` with ``a >ell b`` (clauses 1 and 2)."""
    if not isinstance(a, App):
        return []
    out: dict[Term, None] = {}
    subs = _strict_subterms(a)
    for g in inst.below(a.symbol):
        for args in itertools.product(subs, repeat=g.arity):
            out.setdefault(_build(g, args))
    pools = [[s] + [u for u in subterms(s) if u is not s] for s in _args(a)]
    for args in itertools.product(*pools):
        if any(x is not s for x, s in zip(args, _args(a))):
            out.setdefault(_build(a.symbol, args))
    return list(out)


def successors(inst: PoelInstance, a: Item, guard: Guard = Guard()) -> list:
    """Every ``b`` with ``a >ell b``, terms and sequences, without duplicates."""
    _check_guard(a, guard)
    return _successors(inst, a, guard)


def _successors(inst, a, guard):
    if isinstance(a, tuple):
        options = []
        for s in a:
            options.append([s] + _successors(inst, s, guard))
        count = math.prod(len(o) for o in options)
        if count > guard.max_successors:
            raise GuardExceeded(f"{count} candidate successors exceed the guard")
        out: dict = {}
        for choice in itertools.product(*options):
            if all(x is s for x, s in zip(choice, a)):
                continue
            out.setdefault(concat(*choice))
        return list(out)
    terms = _term_successors(inst, a)
    count = sum(len(terms) ** n for n in range(inst.ell + 1))
    if count + len(terms) > guard.max_successors:
        raise GuardExceeded(f"{count} candidate successors exceed the guard")
    out = dict.fromkeys(terms)
    for n in range(inst.ell + 1):
        for seq in itertools.product(terms, repeat=n):
            out.setdefault(seq)
    return list(out)


class _SlowTable:
    """Memoised longest descending chains.

    Sequences are keyed as multisets: permuting the items of a sequence
    permutes the blocks of every split, so chains transfer.  A clause-4 step
    replacing several items can be split into one-item steps, so only one-item
    replacements are explored, and since adding items never shortens a chain
    an item is only replaced by a longest (length ``ell``) list of its term
    successors.

    With ``exact=False`` a sequence counts as the sum of its items, so a term
    with successors is worth ``1 + ell * max`` over them.  This relies on
    additivity, which :func:`check_slow_sum` verifies with the exact search.
    """

    def __init__(self, inst: PoelInstance, guard: Guard, exact: bool = True):
        self.inst = inst
        self.guard = guard
        self.exact = exact
        self.terms: dict[Term, int] = {}
        self.seqs: dict[tuple, int] = {}
        self.succ: dict[Term, list[tuple]] = {}

    def _key(self, items) -> tuple:
        return tuple(sorted(items, key=id))

    def _bump(self):
        if len(self.terms) + len(self.seqs) > self.guard.max_states:
            raise GuardExceeded(f"slow needs more than {self.guard.max_states} states")

    def replacements(self, t: Term) -> list[tuple]:
        hit = self.succ.get(t)
        if hit is None:
            terms = _term_successors(self.inst, t)
            if terms:
                hit = [tuple(c) for c in itertools.combinations_with_replacement(terms, self.inst.ell)]
            else:
                hit = [()]
            self.succ[t] = hit
        return hit

    def term(self, t: Term) -> int:
        v = self.terms.get(t)
        if v is None:
            self._bump()
            if self.exact:
                v = 1 + max(self.seq(r) for r in self.replacements(t))
            else:
                below = _term_successors(self.inst, t)
                v = 1 + self.inst.ell * max((self.term(u) for u in below), default=0)
            self.terms[t] = v
        return v

    def seq(self, items) -> int:
        if not self.exact:
            return sum(self.term(t) for t in items)
        key = self._key(items)
        v = self.seqs.get(key)
        if v is not None:
            return v
        self._bump()
        if not key:
            v = 0
        elif len(key) == 1:
            v = self.term(key[0])
        else:
            best = 0
            done: set = set()
            for i, x in enumerate(key):
                if x in done:
                    continue
                done.add(x)
                rest = key[:i] + key[i + 1 :]
                for r in self.replacements(x):
                    best = max(best, self.seq(rest + r))
            v = 1 + best
        self.seqs[key] = v
        return v


def slow(
    inst: PoelInstance, a: Item, guard: Guard = Guard(), exact: bool = True, _table: _SlowTable | None = None
) -> int:
    """Length of the longest ``>ell``-descending chain starting at ``a``."""
    _check_guard(a, guard)
    table = _table if _table is not None else _SlowTable(inst, guard, exact)
    return table.seq(to_seq(a))


def slow_bound(inst: PoelInstance, t: App, arg_slows: Iterable[int]) -> int | None:
    """``(ell+1)^((ell+1)^rank * sum)``; ``None`` when astronomically large."""
    ell = inst.ell
    exponent = (ell + 1) ** inst.precedence.rank(t.symbol.name) * sum(arg_slows)
    if exponent * math.log2(ell + 1) > 4096:
        return None
    return (ell + 1) ** exponent


def check_slow_sum(
    inst: PoelInstance, items: Sequence[Term], guard: Guard = Guard(), _table: _SlowTable | None = None
) -> dict:
    """Exact ``slow`` of the sequence against the sum over its items."""
    items = tuple(items)
    table = _table if _table is not None else _SlowTable(inst, guard)
    if not table.exact:
        raise ValueError("additivity can only be checked with the exact search")
    _check_guard(items, guard)
    whole = table.seq(items)
    parts = [table.term(t) for t in items]
    return {
        "sequence": render_item(items),
        "ell": inst.ell,
        "slow": whole,
        "sum": sum(parts),
        "parts": parts,
        "holds": whole == sum(parts),
    }


def check_slow_bound(inst: PoelInstance, t: App, guard: Guard = Guard(), exact: bool = True) -> dict:
    if not isinstance(t, App):
        raise ValueError("slow bound needs an application")
    if t.symbol.arity > inst.ell:
        raise ValueError(f"arity of {t.symbol} exceeds ell = {inst.ell}")
    _check_guard(t, guard)
    table = _SlowTable(inst, guard, exact)
    value = table.term(t)
    arg_slows = [table.term(a) for a in _args(t)]
    bound = slow_bound(inst, t, arg_slows)
    return {
        "term": render(t),
        "ell": inst.ell,
        "exact": exact,
        "rank": inst.precedence.rank(t.symbol.name),
        "slow": value,
        "argument_slows": arg_slows,
        "bound": bound if bound is not None else "huge",
        "holds": bound is None or value <= bound,
    }


# ---------------------------------------------------------------------------
# embedding


def default_ell(trs: Trs) -> int:
    """Large enough for the embedding and for the arity precondition of the slow bound."""
    rhs = max((r.rhs.size for r in trs.rules), default=1)
    arity = max((f.arity for f in trs.signature), default=1)
    return max(1, rhs, arity)


def _max_rhs(trs: Trs) -> int:
    return max(1, max((r.rhs.size for r in trs.rules), default=1))


def _precedence_of(inst) -> Precedence:
    return inst.precedence if isinstance(inst, PoeInstance) else inst


def verify_embedding_step(trs: Trs, inst: PoeInstance | Precedence, s: Term, t: Term, ell: int | None = None):
    """``pint(s) >ell pint(t)`` for one rewrite step ``s -> t`` with ``s`` in Tn.

    ``ell`` defaults to the largest right-hand side.  Returns a certificate, or
    a falsy :class:`NotGreater` that would contradict the embedding.
    """
    if not in_tn(s):
        raise ValueError(f"{render(s)} has a non-value normal argument")
    ell = _max_rhs(trs) if ell is None else ell
    lab = PoelInstance(_precedence_of(inst), ell, trs.signature)
    return poel_gt(lab, pint(s), pint(t))


def verify_root_embedding(rule: Rule, sigma: Mapping[str, Term], inst: PoeInstance | Precedence, signature=()):
    """``pint(l sigma) >|r| pint(r sigma)`` for a value substitution."""
    bad = [x for x, v in sigma.items() if not v.is_value]
    if bad:
        raise ValueError(f"non-value bindings for {', '.join(sorted(bad))}")
    lhs = apply_substitution(rule.lhs, sigma)
    rhs = apply_substitution(rule.rhs, sigma)
    if not lhs.is_ground or not rhs.is_ground:
        raise ValueError("substitution does not cover the rule's variables")
    lab = PoelInstance(_precedence_of(inst), max(1, rule.rhs.size), signature)
    return poel_gt(lab, pint(lhs), pint(rhs))


@dataclass
class EmbeddingReport:
    start: Term
    ell: int
    steps: list[dict] = field(default_factory=list)
    violations: int = 0
    tn_failures: int = 0
    slow_start: int | None = None

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.tn_failures == 0 and (
            self.slow_start is None or len(self.steps) <= self.slow_start
        )

    def to_dict(self) -> dict:
        return {
            "start": render(self.start),
            "ell": self.ell,
            "length": len(self.steps),
            "violations": self.violations,
            "tn_failures": self.tn_failures,
            "slow_start": self.slow_start,
            "ok": self.ok,
            "steps": self.steps,
        }


def verify_derivation(
    trs: Trs,
    inst: PoeInstance | Precedence,
    derivation: Derivation,
    with_slow: bool = False,
    guard: Guard = Guard(),
    certificates: bool = False,
    exact: bool = True,
) -> EmbeddingReport:
    """Check every step of a derivation: Tn is preserved and the interpretation decreases."""
    ell = _max_rhs(trs)
    report = EmbeddingReport(derivation.start, ell)
    if not in_tn(derivation.start):
        raise ValueError(f"{render(derivation.start)} has a non-value normal argument")
    lab = PoelInstance(_precedence_of(inst), ell, trs.signature)
    memo: dict = {}
    for step, (s, t) in zip(derivation.steps, derivation.pairs()):
        tn = in_tn(t)
        res = poel_gt(lab, pint(s), pint(t), memo)
        if not tn:
            report.tn_failures += 1
        if not res:
            report.violations += 1
        entry = {
            "rule": step.rule + 1,
            "from": render_item(pint(s)),
            "to": render_item(pint(t)),
            "in_tn": tn,
            "embedded": bool(res),
            "clause": res.clause if res else None,
        }
        if certificates:
            entry["certificate"] = res.to_dict()
        report.steps.append(entry)
    if with_slow:
        try:
            report.slow_start = slow(lab, pint(derivation.start), guard, exact)
        except GuardExceeded:
            report.slow_start = None
    return report
