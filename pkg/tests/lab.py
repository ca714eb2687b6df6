"""A small normalised signature for the lab tests."""

import itertools
import random

from poestar.poe import Precedence
from poestar.poel import Guard, PoelInstance, successors, to_seq

ORACLE_GUARD = Guard(max_term_size=8, max_seq_len=16)
from poestar.rewriting import _compositions
from poestar.syntax import normalized_symbol
from poestar.terms import CONSTRUCTOR, DEFINED, App, FunctionSymbol

C = FunctionSymbol("c", CONSTRUCTOR)
S = FunctionSymbol("s", CONSTRUCTOR, 0, 1)
F = FunctionSymbol("f", DEFINED, 1, 0)
G = FunctionSymbol("g", DEFINED, 2, 0)
SIGNATURE = (C, S, F, G)
Cn, Sn, Fn, Gn = (normalized_symbol(x) for x in SIGNATURE)
NORMALIZED = (Cn, Sn, Fn, Gn)
PREC = Precedence({"f": 2, "g": 1})

c = App(C)
cn = App(Cn)


def sc(t):
    return App(S, (), (t,))


def fn(t):
    return App(Fn, (t,))


def gn(a, b):
    return App(Gn, (a, b))


def lab(ell, prec=PREC):
    return PoelInstance(prec, ell, SIGNATURE)


def ground(n, syms):
    """All ground terms of size exactly ``n`` over ``syms``."""
    out = []
    for h in syms:
        if h.arity == 0:
            if n == 1:
                out.append(App(h))
            continue
        for sizes in _compositions(n - 1, h.arity):
            for args in itertools.product(*(ground(k, syms) for k in sizes)):
                out.append(App(h, tuple(args[: h.normal_arity]), tuple(args[h.normal_arity :])))
    return out


def normalized_terms(max_size):
    """Ground terms over the normalised symbols, with base constants allowed as leaves."""
    syms = NORMALIZED + (C,)
    return [t for n in range(1, max_size + 1) for t in ground(n, syms) if t.symbol.normalized]


TINY = normalized_terms(3) + [c, sc(c)]


def slow_oracle(inst, a, memo=None):
    """Longest chain by plain recursion over the full successor sets."""
    memo = {} if memo is None else memo
    key = to_seq(a)
    if key not in memo:
        memo[key] = 1 + max((slow_oracle(inst, b, memo) for b in successors(inst, a, ORACLE_GUARD)), default=-1)
    return memo[key]


def random_item(rng: random.Random, max_len=3):
    if rng.random() < 0.4:
        return rng.choice(TINY)
    return tuple(rng.choice(TINY) for _ in range(rng.randint(0, max_len)))


def random_successor(inst, a, rng: random.Random):
    """Some ``b`` with ``a >ell b``, or ``None`` when ``a`` is minimal."""
    if not isinstance(a, tuple):
        options = successors(inst, a, ORACLE_GUARD)
        return rng.choice(options) if options else None
    movable = [i for i, t in enumerate(a) if successors(inst, t, ORACLE_GUARD)]
    if not movable:
        return None
    chosen = {rng.choice(movable)} | {i for i in movable if rng.random() < 0.3}
    parts = []
    for i, t in enumerate(a):
        parts.append(rng.choice(successors(inst, t, ORACLE_GUARD)) if i in chosen else t)
    return tuple(u for p in parts for u in (p if isinstance(p, tuple) else (p,)))


def random_pair(rng: random.Random, ell: int):
    """A related pair ``a >ell b`` drawn from tiny items."""
    inst = lab(ell)
    while True:
        a = random_item(rng)
        b = random_successor(inst, a, rng)
        if b is not None:
            return a, b


def tiny_terms(ell):
    """Terms small enough for the exhaustive search at this ``ell``."""
    return normalized_terms(3 if ell == 1 else 2) + [c, sc(c)]
