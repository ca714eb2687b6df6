"""Line-oriented TRS file format.

::

    # comment
    constructor Z 0
    constructor s 1
    defined add 1 1
    rule add(Z; y) -> y
    rule add(s(x); y) -> s(add(x; y))
    precedence add > s

Defined symbols always carry the semicolon, ``f(n1,...,nk; s1,...,sl)``;
constructors are written ``c(b1,...,bl)`` (a leading ``;`` is accepted).
Identifiers that are not declared symbols are variables.  Normalised
symbols, only accepted where ``normalized=True``, are written ``f^n(t1,...)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .poe import PoeInstance, Precedence
from .terms import CONSTRUCTOR, DEFINED, App, FunctionSymbol, Rule, Term, Trs, Var, render

__all__ = ["ParseError", "TrsFile", "parse_trs", "parse_term", "print_trs", "normalized_symbol"]


class ParseError(Exception):
    """Syntax or arity error with a 1-based line and column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z0-9_]+(?:\^n)?)|(?P<punct>->|[(),;>])|(?P<bad>\S))")


def _tokenize(text: str, line: int | None, col0: int = 0):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        if m.group("bad") is not None:
            raise ParseError(f"unexpected character {m.group('bad')!r}", line, col0 + m.start("bad") + 1)
        kind = "ident" if m.group("ident") is not None else "punct"
        start = m.start(kind)
        tokens.append((kind, m.group(kind), col0 + start + 1))
        pos = m.end()
    return tokens


def normalized_symbol(f: FunctionSymbol) -> FunctionSymbol:
    """The fresh symbol whose arguments are exactly the normal arguments of ``f``."""
    return FunctionSymbol(f.name, f.kind, f.normal_arity, 0, normalized=True)


class _TermParser:
    def __init__(self, tokens, symbols: Mapping[str, FunctionSymbol], line, normalized=False):
        self.tokens = tokens
        self.i = 0
        self.symbols = symbols
        self.line = line
        self.normalized = normalized

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("eof", "", None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] == "eof":
            raise ParseError("unexpected end of input" + (f", expected {value!r}" if value else ""), self.line)
        if value is not None and tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1]!r}", self.line, tok[2])
        self.i += 1
        return tok

    def term(self) -> Term:
        kind, name, col = self.take()
        if kind != "ident":
            raise ParseError(f"expected a term, found {name!r}", self.line, col)
        if name.endswith("^n"):
            if not self.normalized:
                raise ParseError(f"normalised symbol {name} not allowed here", self.line, col)
            base = self.symbols.get(name[:-2])
            if base is None:
                raise ParseError(f"unknown symbol {name[:-2]}", self.line, col)
            sym = normalized_symbol(base)
            args = self.arglist(sym, col, flat=True)
            return App(sym, args, ())
        sym = self.symbols.get(name)
        if sym is None:
            if self.peek()[1] == "(":
                raise ParseError(f"unknown function symbol {name}", self.line, col)
            return Var(name)
        if sym.is_defined:
            if self.peek()[1] != "(":
                raise ParseError(f"defined symbol {name} needs an argument list with ';'", self.line, col)
            self.take("(")
            normal = self.terms_until({";"}, sym, col)
            if self.peek()[1] != ";":
                raise ParseError(f"defined symbol {name} needs ';' between normal and safe arguments", self.line, col)
            self.take(";")
            safe = self.terms_until({")"}, sym, col)
            self.take(")")
            if len(normal) != sym.normal_arity or len(safe) != sym.safe_arity:
                raise ParseError(
                    f"{name} declared with {sym.normal_arity} normal and {sym.safe_arity} safe arguments, "
                    f"got {len(normal)} and {len(safe)}",
                    self.line,
                    col,
                )
            return App(sym, normal, safe)
        args = self.arglist(sym, col, flat=False)
        return App(sym, (), args)

    def arglist(self, sym, col, flat):
        if self.peek()[1] != "(":
            args = []
        else:
            self.take("(")
            if not flat and self.peek()[1] == ";":
                self.take(";")
            args = self.terms_until({")"}, sym, col)
            self.take(")")
        if len(args) != sym.arity:
            raise ParseError(f"{sym} takes {sym.arity} arguments, got {len(args)}", self.line, col)
        return args

    def terms_until(self, stops, sym, col):
        out = []
        if self.peek()[1] in stops:
            return out
        while True:
            out.append(self.term())
            nxt = self.peek()[1]
            if nxt == ",":
                self.take(",")
                continue
            if nxt in stops:
                return out
            if nxt == ";":
                raise ParseError(f"unexpected ';' in arguments of {sym}", self.line, self.peek()[2])
            raise ParseError(f"unexpected {nxt!r} in arguments of {sym}", self.line, self.peek()[2])


def parse_term(text: str, symbols, line: int | None = None, normalized: bool = False, col0: int = 0) -> Term:
    """Parse a single term over ``symbols`` (a :class:`Trs` or a name->symbol map)."""
    if isinstance(symbols, Trs):
        symbols = {f.name: f for f in symbols.signature}
    p = _TermParser(_tokenize(text, line, col0), symbols, line, normalized)
    t = p.term()
    if p.peek()[0] != "eof":
        raise ParseError(f"trailing input {p.peek()[1]!r}", line, p.peek()[2])
    return t


@dataclass(frozen=True)
class TrsFile:
    trs: Trs
    instance: PoeInstance | None = None
    precedence_chains: tuple[tuple[str, ...], ...] = ()


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


_IDENT = re.compile(r"[A-Za-z0-9_]+\Z")


def parse_trs(text: str) -> TrsFile:
    symbols: dict[str, FunctionSymbol] = {}
    rule_lines: list[tuple[int, str, int]] = []
    chains: list[tuple[str, ...]] = []
    chain_lines: list[int] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        stripped = line.strip()
        if not stripped:
            continue
        keyword, _, rest = stripped.partition(" ")
        rest = rest.strip()
        if keyword in ("defined", "constructor"):
            parts = rest.split()
            expected = 3 if keyword == "defined" else 2
            if len(parts) != expected:
                raise ParseError(f"'{keyword}' expects {expected} fields", lineno)
            name = parts[0]
            if not _IDENT.match(name):
                raise ParseError(f"bad identifier {name!r}", lineno)
            if name in symbols:
                raise ParseError(f"symbol {name} declared twice", lineno)
            try:
                counts = [int(x) for x in parts[1:]]
            except ValueError:
                raise ParseError(f"arities of {name} must be integers", lineno) from None
            if any(c < 0 for c in counts):
                raise ParseError(f"negative arity for {name}", lineno)
            if keyword == "defined":
                symbols[name] = FunctionSymbol(name, DEFINED, counts[0], counts[1])
            else:
                symbols[name] = FunctionSymbol(name, CONSTRUCTOR, 0, counts[0])
        elif keyword == "rule":
            rule_lines.append((lineno, rest, line.index(rest) if rest else 0))
        elif keyword == "precedence":
            names = [n.strip() for n in rest.split(">")]
            if len(names) < 2 or not all(_IDENT.match(n) for n in names):
                raise ParseError("precedence expects 'f > g [> h ...]'", lineno)
            chains.append(tuple(names))
            chain_lines.append(lineno)
        else:
            raise ParseError(f"unknown declaration {keyword!r}", lineno, line.index(keyword) + 1)

    rules = []
    for lineno, body, col0 in rule_lines:
        if body.count("->") != 1:
            raise ParseError("rule expects exactly one '->'", lineno)
        left, right = body.split("->")
        lhs = parse_term(left, symbols, lineno, col0=col0)
        rhs = parse_term(right, symbols, lineno, col0=col0 + len(left) + 2)
        rules.append(Rule(lhs, rhs))

    for chain, lineno in zip(chains, chain_lines):
        for name in chain:
            if name not in symbols:
                raise ParseError(f"precedence mentions undeclared symbol {name}", lineno)
    instance = None
    if chains:
        try:
            instance = PoeInstance(Precedence.from_chains(chains))
        except ValueError as e:
            raise ParseError(str(e), chain_lines[0]) from None
    return TrsFile(Trs(tuple(symbols.values()), tuple(rules)), instance, tuple(chains))


def print_trs(trs: Trs, chains=()) -> str:
    lines = []
    for f in trs.signature:
        if f.is_defined:
            lines.append(f"defined {f.name} {f.normal_arity} {f.safe_arity}")
        else:
            lines.append(f"constructor {f.name} {f.safe_arity}")
    for rule in trs.rules:
        lines.append(f"rule {render(rule.lhs)} -> {render(rule.rhs)}")
    for chain in chains:
        lines.append("precedence " + " > ".join(chain))
    return "\n".join(lines) + "\n"
