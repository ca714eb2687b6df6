"""First-order terms over a signature with normal/safe argument separation.

Terms are hash-consed: structurally equal terms are the same object, so
equality is identity and hashing is O(1) even for very deep values such as
``s(s(...s(Z)...))`` produced by exponential derivations.
"""

from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

__all__ = [
    "CONSTRUCTOR",
    "DEFINED",
    "FunctionSymbol",
    "Term",
    "Var",
    "App",
    "Rule",
    "Trs",
    "Violation",
    "WellFormednessReport",
    "WILDCARD",
    "size",
    "is_value",
    "is_value_substitution",
    "subterms",
    "positions",
    "subterm_at",
    "replace_at",
    "variables",
    "strict_superterm",
    "superterm",
    "normal_strict_superterm",
    "product_extension",
    "apply_substitution",
    "render",
    "check_well_formed",
]

CONSTRUCTOR = "constructor"
DEFINED = "defined"


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    kind: str
    normal_arity: int = 0
    safe_arity: int = 0
    normalized: bool = False

    def __post_init__(self):
        if self.kind not in (CONSTRUCTOR, DEFINED):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.normal_arity < 0 or self.safe_arity < 0:
            raise ValueError(f"negative arity for {self.name}")
        if self.kind == CONSTRUCTOR and self.normal_arity and not self.normalized:
            raise ValueError(f"constructor {self.name} cannot have normal arguments")

    @property
    def arity(self) -> int:
        return self.normal_arity + self.safe_arity

    @property
    def is_constructor(self) -> bool:
        return self.kind == CONSTRUCTOR

    @property
    def is_defined(self) -> bool:
        return self.kind == DEFINED

    def __str__(self):
        return self.name + "^n" if self.normalized else self.name


_intern_lock = threading.Lock()
_var_table: "weakref.WeakValueDictionary[str, Var]" = weakref.WeakValueDictionary()
_app_table: "weakref.WeakValueDictionary[tuple, App]" = weakref.WeakValueDictionary()


class Term:
    """Base class of :class:`Var` and :class:`App`."""

    __slots__ = ()

    def __setattr__(self, name, value):
        raise AttributeError("terms are immutable")

    def __delattr__(self, name):
        raise AttributeError("terms are immutable")

    def __str__(self):
        return render(self)


class Var(Term):
    __slots__ = ("name", "_hash", "__weakref__")

    size = 1
    is_value = False
    is_ground = False

    def __new__(cls, name: str):
        with _intern_lock:
            node = _var_table.get(name)
            if node is None:
                node = object.__new__(cls)
                object.__setattr__(node, "name", name)
                object.__setattr__(node, "_hash", hash(("var", name)))
                _var_table[name] = node
        return node

    def __hash__(self):
        return self._hash

    def __reduce__(self):
        return (Var, (self.name,))

    def __repr__(self):
        return f"Var({self.name!r})"


class App(Term):
    __slots__ = (
        "symbol",
        "normal",
        "safe",
        "size",
        "is_value",
        "is_ground",
        "_hash",
        "__weakref__",
    )

    def __new__(cls, symbol: FunctionSymbol, normal: Sequence[Term] = (), safe: Sequence[Term] = ()):
        normal = tuple(normal)
        safe = tuple(safe)
        if len(normal) != symbol.normal_arity or len(safe) != symbol.safe_arity:
            raise ValueError(
                f"{symbol} expects {symbol.normal_arity} normal and {symbol.safe_arity} safe "
                f"arguments, got {len(normal)} and {len(safe)}"
            )
        for arg in normal + safe:
            if not isinstance(arg, Term):
                raise TypeError(f"argument {arg!r} of {symbol} is not a Term")
        key = (symbol, normal, safe)
        with _intern_lock:
            node = _app_table.get(key)
            if node is None:
                args = normal + safe
                node = object.__new__(cls)
                setter = object.__setattr__
                setter(node, "symbol", symbol)
                setter(node, "normal", normal)
                setter(node, "safe", safe)
                setter(node, "size", 1 + sum(a.size for a in args))
                setter(
                    node,
                    "is_value",
                    symbol.is_constructor and not symbol.normalized and all(a.is_value for a in args),
                )
                setter(node, "is_ground", all(a.is_ground for a in args))
                setter(node, "_hash", hash((symbol, tuple(a._hash for a in args), len(normal))))
                _app_table[key] = node
        return node

    def __hash__(self):
        return self._hash

    def __reduce__(self):
        return (App, (self.symbol, self.normal, self.safe))

    @property
    def args(self) -> tuple[Term, ...]:
        return self.normal + self.safe

    def __repr__(self):
        return f"App({render(self)})"


WILDCARD = Var("_")

Substitution = Mapping[str, Term]


def size(t: Term) -> int:
    """Number of symbol and variable occurrences in ``t``."""
    return t.size


def is_value(t: Term) -> bool:
    return t.is_value


def is_value_substitution(sigma: Substitution) -> bool:
    return all(v.is_value for v in sigma.values())


def subterms(t: Term) -> Iterator[Term]:
    """All subterm occurrences of ``t`` in pre-order, ``t`` first."""
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, App):
            stack.extend(reversed(u.args))


def positions(t: Term) -> Iterator[tuple[tuple[int, ...], Term]]:
    """Pairs ``(path, subterm)``; paths index the flat argument list ``normal + safe``."""
    stack = [((), t)]
    while stack:
        path, u = stack.pop()
        yield path, u
        if isinstance(u, App):
            args = u.args
            for i in range(len(args) - 1, -1, -1):
                stack.append((path + (i,), args[i]))


def subterm_at(t: Term, path: Sequence[int]) -> Term:
    for i in path:
        if not isinstance(t, App):
            raise IndexError(f"position {tuple(path)} does not exist")
        t = t.args[i]
    return t


def replace_at(t: Term, path: Sequence[int], new: Term) -> Term:
    if not path:
        return new
    if not isinstance(t, App):
        raise IndexError(f"position {tuple(path)} does not exist")
    i = path[0]
    args = list(t.args)
    args[i] = replace_at(args[i], path[1:], new)
    k = t.symbol.normal_arity
    return App(t.symbol, args[:k], args[k:])


def variables(t: Term) -> list[str]:
    """Variable names of ``t`` in left-to-right order of first occurrence."""
    seen: dict[str, None] = {}
    for u in subterms(t):
        if isinstance(u, Var):
            seen.setdefault(u.name)
    return list(seen)


def _occurs(t: Term, s: Term) -> bool:
    """``t`` occurs in ``s`` (``s`` itself included)."""
    if s is t:
        return True
    if t.size >= s.size:
        return False
    stack = list(s.args) if isinstance(s, App) else []
    seen = set()
    while stack:
        u = stack.pop()
        if u is t:
            return True
        if u.size <= t.size or id(u) in seen or not isinstance(u, App):
            continue
        seen.add(id(u))
        stack.extend(u.args)
    return False


def superterm(s: Term, t: Term) -> bool:
    """``t`` is a subterm of ``s``, equality included."""
    return _occurs(t, s)


def strict_superterm(s: Term, t: Term) -> bool:
    """``t`` is a proper subterm of ``s``."""
    return s is not t and _occurs(t, s)


def normal_strict_superterm(s: Term, t: Term) -> bool:
    """``t`` occurs in some normal argument of ``s``."""
    if not isinstance(s, App):
        raise TypeError("normal_strict_superterm requires an application")
    return any(_occurs(t, arg) for arg in s.normal)


def product_extension(gt: Callable[[Term, Term], bool], left: Sequence, right: Sequence) -> bool:
    """Componentwise ``=`` or ``gt`` with at least one strict component."""
    if len(left) != len(right):
        raise ValueError(f"product extension on tuples of length {len(left)} and {len(right)}")
    strict = False
    for a, b in zip(left, right):
        if a == b:
            continue
        if not gt(a, b):
            return False
        strict = True
    return strict


def apply_substitution(t: Term, sigma: Substitution) -> Term:
    if t.is_ground:
        return t
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    return App(
        t.symbol,
        [apply_substitution(a, sigma) for a in t.normal],
        [apply_substitution(a, sigma) for a in t.safe],
    )


def render(t: Term) -> str:
    """Canonical text: ``f(n1,...,nk;s1,...,sl)`` for defined symbols, ``c(s1,...)`` for constructors."""
    out: list[str] = []
    stack: list = [t]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
        elif isinstance(item, Var):
            out.append(item.name)
        else:
            sym = item.symbol
            out.append(str(sym))
            if sym.is_defined and not sym.normalized:
                parts: list = ["("]
                parts.extend(_joined(item.normal))
                parts.append(";")
                parts.extend(_joined(item.safe))
                parts.append(")")
            elif item.args:
                parts = ["(", *_joined(item.args), ")"]
            else:
                continue
            stack.extend(reversed(parts))
    return "".join(out)


def _joined(items):
    for i, x in enumerate(items):
        if i:
            yield ","
        yield x


@dataclass(frozen=True)
class Rule:
    lhs: Term
    rhs: Term

    def __str__(self):
        return f"{render(self.lhs)} -> {render(self.rhs)}"


@dataclass(frozen=True)
class Trs:
    """Signature in declaration order plus an ordered rule list."""

    signature: tuple[FunctionSymbol, ...]
    rules: tuple[Rule, ...]
    _by_name: dict = field(init=False, repr=False, compare=False, hash=False)
    _by_root: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "signature", tuple(self.signature))
        object.__setattr__(self, "rules", tuple(self.rules))
        by_name = {}
        for sym in self.signature:
            if sym.name in by_name:
                raise ValueError(f"duplicate symbol {sym.name}")
            by_name[sym.name] = sym
        object.__setattr__(self, "_by_name", by_name)
        by_root: dict[str, list] = {}
        for i, r in enumerate(self.rules):
            if isinstance(r.lhs, App):
                by_root.setdefault(r.lhs.symbol.name, []).append((i, r))
        object.__setattr__(self, "_by_root", by_root)

    def symbol(self, name: str) -> FunctionSymbol:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    @property
    def defined(self) -> tuple[FunctionSymbol, ...]:
        return tuple(f for f in self.signature if f.is_defined)

    @property
    def constructors(self) -> tuple[FunctionSymbol, ...]:
        return tuple(f for f in self.signature if f.is_constructor)

    def rules_for(self, f: FunctionSymbol) -> list[tuple[int, Rule]]:
        return [(i, r) for i, r in self._by_root.get(f.name, ()) if r.lhs.symbol == f]


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    rule: int | None = None
    severity: str = "error"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "rule": self.rule, "severity": self.severity}


@dataclass(frozen=True)
class WellFormednessReport:
    violations: tuple[Violation, ...] = ()

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self):
        return bool(self.violations)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def _is_constructor_term(t: Term) -> bool:
    return all(isinstance(u, Var) or u.symbol.is_constructor for u in subterms(t))


def _overlap(p: Term, q: Term) -> bool:
    if isinstance(p, Var) or isinstance(q, Var):
        return True
    return p.symbol == q.symbol and all(_overlap(a, b) for a, b in zip(p.args, q.args))


def _missing_pattern(rows: list[tuple[Term, ...]], width: int, constructors) -> tuple[Term, ...] | None:
    """An argument vector of patterns matched by no row, or ``None`` when the rows are exhaustive."""
    if width == 0:
        return None if rows else ()
    if not any(isinstance(r[0], App) for r in rows):
        rest = _missing_pattern([r[1:] for r in rows], width - 1, constructors)
        return None if rest is None else (WILDCARD,) + rest
    for c in constructors:
        arity = c.safe_arity
        specialized = []
        for r in rows:
            head = r[0]
            if isinstance(head, Var):
                specialized.append((WILDCARD,) * arity + r[1:])
            elif head.symbol == c:
                specialized.append(head.args + r[1:])
        rest = _missing_pattern(specialized, width - 1 + arity, constructors)
        if rest is not None:
            return (App(c, (), rest[:arity]),) + rest[arity:]
    return None


def check_well_formed(trs: Trs, require_complete: bool = True) -> WellFormednessReport:
    """Constructor-TRS conditions, orthogonality and complete definedness.

    With ``require_complete=False`` missing patterns are reported as warnings.
    """
    out: list[Violation] = []
    known = {f.name: f for f in trs.signature}
    for i, rule in enumerate(trs.rules):
        lhs, rhs = rule.lhs, rule.rhs
        for t in (lhs, rhs):
            for u in subterms(t):
                if isinstance(u, App) and known.get(u.symbol.name) != u.symbol:
                    out.append(Violation("signature", f"rule {i + 1}: symbol {u.symbol} does not match its declaration", i))
                    break
        if not isinstance(lhs, App) or not lhs.symbol.is_defined:
            out.append(Violation("lhs-root", f"rule {i + 1}: left-hand side root must be a defined symbol", i))
            continue
        if not all(_is_constructor_term(a) for a in lhs.args):
            out.append(Violation("constructor-pattern", f"rule {i + 1}: left-hand side arguments must be constructor terms", i))
        lhs_vars = [u.name for u in subterms(lhs) if isinstance(u, Var)]
        if len(lhs_vars) != len(set(lhs_vars)):
            out.append(Violation("linearity", f"rule {i + 1}: left-hand side is not linear", i))
        extra = [x for x in variables(rhs) if x not in set(lhs_vars)]
        if extra:
            out.append(Violation("variables", f"rule {i + 1}: variables {', '.join(extra)} do not occur on the left", i))

    rules = list(enumerate(trs.rules))
    for a in range(len(rules)):
        i, r = rules[a]
        if not isinstance(r.lhs, App):
            continue
        for j, q in rules[a + 1:]:
            if isinstance(q.lhs, App) and _overlap(r.lhs, q.lhs):
                out.append(Violation("orthogonality", f"rules {i + 1} and {j + 1} overlap", j))

    severity = "error" if require_complete else "warning"
    for f in trs.defined:
        rows = [r.lhs.args for _, r in trs.rules_for(f)]
        missing = _missing_pattern(rows, f.arity, trs.constructors)
        if missing is not None:
            witness = render(App(f, missing[: f.normal_arity], missing[f.normal_arity:]))
            out.append(Violation("completely-defined", f"{f.name} is not defined on {witness}", None, severity))
    return WellFormednessReport(tuple(out))
