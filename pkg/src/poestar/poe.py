"""The path order for ETIME on terms with separated arguments.

``poe_gt(inst, s, t)`` decides ``s >poe t`` for a precedence and returns a
certificate tree recording the clause used at every node.  Certificates are
re-checked by :func:`replay_certificate`, which shares no code with the
decision procedure beyond term utilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .terms import (
    App,
    FunctionSymbol,
    Rule,
    Term,
    Trs,
    Var,
    normal_strict_superterm,
    render,
)

__all__ = [
    "Precedence",
    "Separation",
    "PoeInstance",
    "Fact",
    "Certificate",
    "NotGreater",
    "CompatibilityReport",
    "resplit",
    "poe_gt",
    "check_rule",
    "check_trs",
    "replay_certificate",
    "render_item",
]


@dataclass(frozen=True)
class Precedence:
    """Strict order on symbol names given by a rank map; missing names have rank 0.

    Normalised symbols are only comparable to normalised symbols, with the rank
    of their base symbol.
    """

    ranks: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        ranks = self.ranks.items() if isinstance(self.ranks, Mapping) else self.ranks
        object.__setattr__(self, "ranks", tuple(sorted((str(k), int(v)) for k, v in ranks)))
        object.__setattr__(self, "_lookup", dict(self.ranks))

    def rank(self, f: FunctionSymbol | str) -> int:
        name = f if isinstance(f, str) else f.name
        return self._lookup.get(name, 0)

    def gt(self, f: FunctionSymbol, g: FunctionSymbol) -> bool:
        return f.normalized == g.normalized and self.rank(f.name) > self.rank(g.name)

    @classmethod
    def from_order(cls, names: Sequence[str]) -> "Precedence":
        """Linear order, highest first."""
        n = len(names)
        return cls(tuple((name, n - i) for i, name in enumerate(names)))

    @classmethod
    def from_chains(cls, chains: Iterable[Sequence[str]]) -> "Precedence":
        """Merge chains ``f > g > h`` into ranks by longest descending path."""
        below: dict[str, set[str]] = {}
        for chain in chains:
            for name in chain:
                below.setdefault(name, set())
            for hi, lo in zip(chain, chain[1:]):
                if hi == lo:
                    raise ValueError(f"precedence is not strict: {hi} > {lo}")
                below[hi].add(lo)
        ranks: dict[str, int] = {}
        visiting: set[str] = set()

        def rank(name: str) -> int:
            if name in ranks:
                return ranks[name]
            if name in visiting:
                raise ValueError(f"precedence has a cycle through {name}")
            visiting.add(name)
            r = max((rank(lo) + 1 for lo in below[name]), default=0)
            visiting.discard(name)
            ranks[name] = r
            return r

        for name in sorted(below):
            rank(name)
        return cls(tuple(ranks.items()))

    def pairs(self, names: Iterable[str]) -> list[tuple[str, str]]:
        names = list(names)
        return [(f, g) for f in names for g in names if self.rank(f) > self.rank(g)]

    def chain_text(self, names: Iterable[str]) -> str:
        """Names grouped by rank, highest first, e.g. ``add > Z s``."""
        groups: dict[int, list[str]] = {}
        for name in names:
            groups.setdefault(self.rank(name), []).append(name)
        return " > ".join(" ".join(groups[r]) for r in sorted(groups, reverse=True))


# per defined symbol: the argument positions (in declared order) that are normal
Separation = Mapping[str, tuple[int, ...]]


def _resplit_symbol(f: FunctionSymbol, normal_positions: tuple[int, ...]) -> FunctionSymbol:
    k = len(normal_positions)
    return FunctionSymbol(f.name, f.kind, k, f.arity - k)


def resplit(trs: Trs, separation: Separation) -> Trs:
    """Re-separate the arguments of defined symbols.

    ``separation[f]`` lists the normal positions, indexing ``normal + safe`` of
    the symbol as it is declared in ``trs``.  Normal arguments keep their
    relative order, and so do safe ones.
    """
    masks: dict[str, tuple[int, ...]] = {}
    new_syms: dict[str, FunctionSymbol] = {}
    for f in trs.signature:
        if f.name in separation:
            positions = tuple(sorted(separation[f.name]))
            if f.is_constructor and positions:
                raise ValueError(f"constructor {f.name} cannot have normal arguments")
            if any(p < 0 or p >= f.arity for p in positions):
                raise ValueError(f"bad normal positions {positions} for {f.name}")
            masks[f.name] = positions
            new_syms[f.name] = _resplit_symbol(f, positions)
        else:
            new_syms[f.name] = f

    def convert(t: Term) -> Term:
        if isinstance(t, Var):
            return t
        args = [convert(a) for a in t.args]
        name = t.symbol.name
        sym = new_syms[name]
        if name not in masks:
            return App(sym, args[: sym.normal_arity], args[sym.normal_arity:])
        normal = [args[i] for i in masks[name]]
        safe = [a for i, a in enumerate(args) if i not in masks[name]]
        return App(sym, normal, safe)

    return Trs(
        tuple(new_syms[f.name] for f in trs.signature),
        tuple(Rule(convert(r.lhs), convert(r.rhs)) for r in trs.rules),
    )


def declared_separation(trs: Trs) -> dict[str, tuple[int, ...]]:
    return {f.name: tuple(range(f.normal_arity)) for f in trs.defined}


def render_separation(separation: Separation, trs: Trs) -> dict[str, str]:
    out = {}
    for f in trs.defined:
        if f.name in separation:
            normal = set(separation[f.name])
            out[f.name] = "".join("n" if i in normal else "s" for i in range(f.arity))
    return out


@dataclass(frozen=True)
class PoeInstance:
    """A precedence together with an (optional) argument separation."""

    precedence: Precedence = field(default_factory=Precedence)
    separation: tuple[tuple[str, tuple[int, ...]], ...] | None = None

    def __post_init__(self):
        if self.separation is not None and isinstance(self.separation, Mapping):
            object.__setattr__(
                self, "separation", tuple(sorted((k, tuple(v)) for k, v in self.separation.items()))
            )

    def apply(self, trs: Trs) -> Trs:
        return trs if self.separation is None else resplit(trs, dict(self.separation))

    def to_dict(self, trs: Trs) -> dict:
        sep = dict(self.separation) if self.separation is not None else declared_separation(trs)
        return {
            "precedence": self.precedence.chain_text(f.name for f in trs.signature),
            "ranks": {f.name: self.precedence.rank(f.name) for f in trs.signature},
            "separation": render_separation(sep, trs),
        }


@dataclass(frozen=True)
class Fact:
    """A side condition checked directly rather than by a sub-certificate."""

    kind: str  # equal | precedence | normal-subterm | strict-subterm | length
    lhs: object
    rhs: object

    def to_dict(self) -> dict:
        return {"fact": self.kind, "lhs": render_item(self.lhs), "rhs": render_item(self.rhs)}


@dataclass(frozen=True)
class Certificate:
    order: str  # "poe" or "poel"
    clause: int
    lhs: object
    rhs: object
    premises: tuple[Union["Certificate", Fact], ...] = ()
    ell: int | None = None

    def __bool__(self):
        return True

    def to_dict(self) -> dict:
        out = {
            "order": self.order,
            "clause": self.clause,
            "lhs": render_item(self.lhs),
            "rhs": render_item(self.rhs),
            "premises": [p.to_dict() for p in self.premises],
        }
        if self.ell is not None:
            out["ell"] = self.ell
        return out

    def nodes(self):
        yield self
        for p in self.premises:
            if isinstance(p, Certificate):
                yield from p.nodes()


@dataclass(frozen=True)
class NotGreater:
    """Failed comparison.  ``cause`` points at the sub-comparison that blocked ``clause``."""

    lhs: object
    rhs: object
    clause: int | None
    reason: str
    cause: "NotGreater | None" = None

    def __bool__(self):
        return False

    def deepest(self) -> "NotGreater":
        node = self
        while node.cause is not None:
            node = node.cause
        return node

    def to_dict(self) -> dict:
        chain = []
        node = self
        while node is not None:
            chain.append(
                {"lhs": render_item(node.lhs), "rhs": render_item(node.rhs), "clause": node.clause, "reason": node.reason}
            )
            node = node.cause
        return {"not_greater": chain}


def render_item(x) -> str:
    if isinstance(x, Term):
        return render(x)
    if isinstance(x, FunctionSymbol):
        return str(x)
    if isinstance(x, tuple):
        return "[" + " ".join(render_item(y) for y in x) + "]"
    return str(x)


def poe_gt(inst: PoeInstance | Precedence, s: Term, t: Term, _memo: dict | None = None):
    """Decide ``s >poe t``; returns a :class:`Certificate` or a falsy :class:`NotGreater`.

    Clauses are tried in the order 1, 2, 3 and the first success is kept.
    """
    prec = inst.precedence if isinstance(inst, PoeInstance) else inst
    memo = {} if _memo is None else _memo
    return _gt(prec, s, t, memo)


def _gt(prec: Precedence, s: Term, t: Term, memo: dict):
    key = (s, t)
    hit = memo.get(key)
    if hit is not None:
        return hit
    result = _decide(prec, s, t, memo)
    memo[key] = result
    return result


def _geq(prec, a, b, memo):
    if a == b:
        return Fact("equal", a, b)
    return _gt(prec, a, b, memo)


def _decide(prec: Precedence, s: Term, t: Term, memo: dict):
    if not isinstance(s, App):
        return NotGreater(s, t, None, "a variable is not greater than any term")
    f = s.symbol

    failures: list[NotGreater] = []
    for arg in s.args:
        sub = _geq(prec, arg, t, memo)
        if sub:
            return Certificate("poe", 1, s, t, (sub,))
        failures.append(sub)

    if not f.is_defined:
        best = _pick_failure(failures)
        return NotGreater(s, t, 1, f"no argument of constructor {f} is >= {render(t)}", best)
    if not isinstance(t, App):
        return NotGreater(s, t, 1, f"variable {render(t)} does not occur in {render(s)}")

    g = t.symbol
    if g != f:
        if not prec.gt(f, g):
            return NotGreater(s, t, 2, f"{f} is not above {g} in the precedence", _pick_failure(failures))
        premises: list = [Fact("precedence", f, g)]
        for tj in t.normal:
            if not normal_strict_superterm(s, tj):
                return NotGreater(s, t, 2, f"{render(tj)} is not a subterm of a normal argument of {render(s)}")
            premises.append(Fact("normal-subterm", s, tj))
        for tj in t.safe:
            sub = _gt(prec, s, tj, memo)
            if not sub:
                return NotGreater(s, t, 2, f"safe argument {render(tj)} is not smaller", sub)
            premises.append(sub)
        return Certificate("poe", 2, s, t, tuple(premises))

    premises = []
    strict = False
    for si, ti in zip(s.normal, t.normal):
        sub = _geq(prec, si, ti, memo)
        if not sub:
            return NotGreater(
                s, t, 3, f"normal arguments do not decrease in the product extension: {render(si)} vs {render(ti)}", sub
            )
        strict = strict or isinstance(sub, Certificate)
        premises.append(sub)
    if not strict:
        return NotGreater(s, t, 3, "no normal argument decreases strictly")
    for tj in t.safe:
        sub = _gt(prec, s, tj, memo)
        if not sub:
            return NotGreater(s, t, 3, f"safe argument {render(tj)} is not smaller", sub)
        premises.append(sub)
    return Certificate("poe", 3, s, t, tuple(premises))


def _pick_failure(failures):
    return failures[0] if len(failures) == 1 else None


def check_rule(inst: PoeInstance | Precedence, rule: Rule, _memo: dict | None = None):
    return poe_gt(inst, rule.lhs, rule.rhs, _memo)


@dataclass(frozen=True)
class CompatibilityReport:
    results: tuple = ()
    rules: tuple[Rule, ...] = ()

    @property
    def compatible(self) -> bool:
        return all(self.results)

    @property
    def failed(self) -> list[int]:
        return [i for i, r in enumerate(self.results) if not r]

    def to_dict(self) -> dict:
        return {
            "compatible": self.compatible,
            "rules": [
                {"index": i + 1, "rule": str(rule), "oriented": bool(res), **res.to_dict()}
                for i, (rule, res) in enumerate(zip(self.rules, self.results))
            ],
        }


def check_trs(inst: PoeInstance, trs: Trs, stop_early: bool = False) -> CompatibilityReport:
    """Orient every rule of ``inst.apply(trs)``."""
    trs = inst.apply(trs)
    memo: dict = {}
    results = []
    for rule in trs.rules:
        res = check_rule(inst, rule, memo)
        results.append(res)
        if stop_early and not res:
            break
    return CompatibilityReport(tuple(results), trs.rules[: len(results)])


class ReplayError(Exception):
    def __init__(self, node, message):
        super().__init__(message)
        self.node = node
        self.message = message


def replay_certificate(inst: PoeInstance | Precedence, cert: Certificate, explain: bool = False):
    """Re-check every node of a certificate against the definition of the order.

    Returns ``True``/``False``; with ``explain=True`` returns ``(ok, message)``
    naming the first failing node.
    """
    prec = inst.precedence if isinstance(inst, PoeInstance) else inst
    try:
        _replay(prec, cert)
    except ReplayError as e:
        return (False, f"{e.message} at {render_item(e.node.lhs)} > {render_item(e.node.rhs)}") if explain else False
    return (True, "") if explain else True


def _check_geq_premise(prec, p, a, b, node):
    if isinstance(p, Fact):
        if p.kind != "equal" or p.lhs != a or p.rhs != b or a != b:
            raise ReplayError(node, "bad equality premise")
        return False
    if not isinstance(p, Certificate) or p.lhs != a or p.rhs != b:
        raise ReplayError(node, "premise does not match its obligation")
    _replay(prec, p)
    return True


def _replay(prec: Precedence, node: Certificate):
    if not isinstance(node, Certificate) or node.order != "poe":
        raise ReplayError(node, "not a poe certificate")
    s, t, ps = node.lhs, node.rhs, node.premises
    if not isinstance(s, App):
        raise ReplayError(node, "left-hand side is a variable")
    f = s.symbol
    if node.clause == 1:
        if len(ps) != 1:
            raise ReplayError(node, "clause 1 needs exactly one premise")
        p = ps[0]
        if p.lhs not in s.args:
            raise ReplayError(node, "clause 1 premise is not about an argument")
        _check_geq_premise(prec, p, p.lhs, t, node)
        return
    if not f.is_defined or not isinstance(t, App):
        raise ReplayError(node, f"clause {node.clause} needs a defined root and an application on the right")
    g = t.symbol
    if node.clause == 2:
        if len(ps) != 1 + g.arity:
            raise ReplayError(node, "clause 2 premise count mismatch")
        if not prec.gt(f, g) or ps[0] != Fact("precedence", f, g):
            raise ReplayError(node, f"{f} is not above {g}")
        for p, tj in zip(ps[1 : 1 + g.normal_arity], t.normal):
            if not isinstance(p, Fact) or p.kind != "normal-subterm" or p.rhs != tj or p.lhs != s:
                raise ReplayError(node, "missing normal-subterm premise")
            if not normal_strict_superterm(s, tj):
                raise ReplayError(node, f"{render(tj)} is not below a normal argument")
        for p, tj in zip(ps[1 + g.normal_arity :], t.safe):
            if not isinstance(p, Certificate) or p.lhs != s or p.rhs != tj:
                raise ReplayError(node, "safe premise does not match")
            _replay(prec, p)
        return
    if node.clause == 3:
        if g != f or len(ps) != f.arity:
            raise ReplayError(node, "clause 3 needs equal roots and one premise per argument")
        strict = False
        for p, si, ti in zip(ps, s.normal, t.normal):
            strict = _check_geq_premise(prec, p, si, ti, node) or strict
        if not strict:
            raise ReplayError(node, "no strict decrease among normal arguments")
        for p, tj in zip(ps[f.normal_arity :], t.safe):
            if not isinstance(p, Certificate) or p.lhs != s or p.rhs != tj:
                raise ReplayError(node, "safe premise does not match")
            _replay(prec, p)
        return
    raise ReplayError(node, f"unknown clause {node.clause}")
