"""Acceptance criteria, one test each.  Every test records a PASS/FAIL line,
printed again in the terminal summary."""

import contextlib
import io
import itertools
import json
import os
import random
import subprocess
import sys
import time

from poestar.cli import load, run
from poestar.inference import infer
from poestar.poe import check_trs, poe_gt, replay_certificate
from poestar.poel import (
    Guard,
    GuardExceeded,
    PoelInstance,
    _SlowTable,
    check_slow_bound,
    check_slow_sum,
    concat,
    in_tn,
    poel_gt,
    replay_poel,
    slow,
    successors,
    verify_embedding_step,
)
from poestar.rewriting import basic_terms, evaluate, growth_slope, max_derivation_length, rc_table, trace_derivation
from poestar.syntax import parse_term

import lab
import strategies

RESULTS: list[str] = []


@contextlib.contextmanager
def criterion(number, title, limit=None):
    start = time.perf_counter()
    detail = {}
    try:
        yield detail
        elapsed = time.perf_counter() - start
        if limit is not None:
            assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"
    except BaseException as e:
        elapsed = time.perf_counter() - start
        line = f"FAIL criterion {number}: {title} ({elapsed:.1f}s) {e}"
        RESULTS.append(line)
        print(line)
        raise
    extra = " ".join(f"{k}={v}" for k, v in detail.items())
    line = f"PASS criterion {number}: {title} ({elapsed:.1f}s) {extra}".rstrip()
    RESULTS.append(line)
    print(line)


def word(letters):
    out = "eps"
    for ch in reversed(letters):
        out = f"{ch}({out})"
    return out


def ones_prefix(t):
    n = 0
    while t.symbol.name == "1":
        t = t.args[0]
        n += 1
    return n, t


def test_criterion_1_example_regression():
    with criterion(1, "add and exp compatible, fac incompatible over the whole space", limit=10) as d:
        for name in ("add", "exp"):
            tf = load(name)
            report = check_trs(tf.instance, tf.trs)
            assert report.compatible, name
            assert all(replay_certificate(tf.instance, c) for c in report.results)
        fac = load("fac")
        result = infer(fac.trs)
        assert result.exhausted
        d["fac_space"] = result.space_size
        buf = io.StringIO()
        assert run(["infer", "fac"], stdout=buf) == 1
        assert "INCOMPATIBLE (exhaustive)" in buf.getvalue()


def test_criterion_2_completeness_gadget():
    with criterion(2, "gadget orients and iterates d 2^|w| times") as d:
        tf = load("gadget_k2")
        trs, prec = tf.trs, tf.instance.precedence
        f2, f1, dd = (trs.symbol(n) for n in ("f2", "f1", "d"))
        assert prec.gt(f2, f1) and prec.gt(f1, dd)
        assert all(prec.gt(dd, c) for c in trs.constructors)
        assert check_trs(tf.instance, trs).compatible
        checked = 0
        for u in ("eps", "0(eps)"):
            base = parse_term(u, trs)
            for n in range(7):
                for w in itertools.product("01", repeat=n):
                    value, _ = evaluate(trs, parse_term(f"f1({word(w)}; {u})", trs))
                    assert ones_prefix(value) == (2 ** n, base), (w, u)
                    checked += 1
        pairs = [w for n in range(6) for w in itertools.product("01", repeat=n)]
        pairs += [tuple("000000"), tuple("101101")]
        for w in pairs:
            value, _ = evaluate(trs, parse_term(f"f2({word(w)}, {word(w)}; eps)", trs))
            assert ones_prefix(value) == (2 ** (2 * len(w)), parse_term("eps", trs)), w
            checked += 1
        d["evaluations"] = checked


def test_criterion_3_exponential_witness():
    with criterion(3, "exp(s^n(Z); Z) takes 2^(n+1) - 1 steps for n <= 12", limit=5) as d:
        trs = load("exp").trs
        for n in range(13):
            t = parse_term(f"exp({'s(' * n}Z{')' * n}; Z)", trs)
            _, steps = evaluate(trs, t)
            assert steps == 2 ** (n + 1) - 1, n
            if n <= 4:
                assert max_derivation_length(trs, t) == steps
        d["steps_at_12"] = steps


def test_criterion_4_growth_rate():
    with criterion(4, "log2 rc slope of exp and linear rc slope of add on [4, 12]") as d:
        exp_table = rc_table(load("exp").trs, 12)
        add_table = rc_table(load("add").trs, 12)
        exp_slope = growth_slope([s for s in exp_table if s.size >= 4])
        add_slope = growth_slope([s for s in add_table if s.size >= 4], log2=False)
        d["exp_log2_slope"] = f"{exp_slope:.4f}"
        d["add_slope"] = f"{add_slope:.4f}"
        assert 0.8 <= exp_slope <= 1.2
        assert 0.4 <= add_slope <= 1.1


def test_criterion_5_embedding():
    with criterion(5, "every traced step from basic terms of size <= 8 embeds", limit=60) as d:
        steps = 0
        for name in ("add", "exp"):
            tf = load(name)
            ell = max(r.rhs.size for r in tf.trs.rules)
            inst = PoelInstance(tf.instance.precedence, ell, tf.trs.signature)
            for t in basic_terms(tf.trs, 8):
                derivation = trace_derivation(tf.trs, t)
                for u, v in derivation.pairs():
                    assert in_tn(u) and in_tn(v)
                    cert = verify_embedding_step(tf.trs, tf.instance, u, v)
                    assert cert, (u, v)
                    assert replay_poel(inst, cert)
                    steps += 1
        d["steps"] = steps
        d["violations"] = 0


def test_criterion_6_slow_lemmas():
    with criterion(6, "slow additivity, the slow bound and strict decrease", limit=120) as d:
        sums = 0
        for ell in (1, 2, 3):
            inst = lab.lab(ell)
            table = _SlowTable(inst, Guard())
            for k in range(5):
                for items in itertools.combinations_with_replacement(lab.tiny_terms(ell), k):
                    report = check_slow_sum(inst, items, _table=table)
                    assert report["holds"], report
                    sums += 1
        bounds = exact = 0
        for ell in (1, 2, 3):
            inst = lab.lab(ell)
            for t in lab.normalized_terms(Guard().max_term_size):
                if t.symbol.arity > ell:
                    continue
                report = check_slow_bound(inst, t, exact=False)
                assert report["holds"], report
                bounds += 1
                if t.size <= 4:
                    try:
                        strict = check_slow_bound(inst, t, Guard(max_states=2000))
                    except GuardExceeded:
                        continue
                    assert strict["holds"] and strict["slow"] == report["slow"], (strict, report)
                    exact += 1
        edges = 0
        for ell in (1, 2, 3):
            inst = lab.lab(ell)
            table = _SlowTable(inst, Guard())
            for t in lab.tiny_terms(ell):
                top = slow(inst, t, _table=table)
                for b in successors(inst, t):
                    assert slow(inst, b, _table=table) < top
                    edges += 1
        d.update(sums=sums, bounds=bounds, exact_bounds=exact, edges=edges)


def test_criterion_7_order_laws():
    with criterion(7, "irreflexivity, ell-monotonicity, context compatibility, replay") as d:
        rng = random.Random(20240517)
        precs = strategies.all_precedences()
        for _ in range(10_000):
            prec = rng.choice(precs)
            t = strategies.random_term(rng, 5)
            assert not poe_gt(prec, t, t)
        replays = 0
        for _ in range(1_000):
            prec = rng.choice(precs)
            s, t = strategies.random_term(rng, 4), strategies.random_term(rng, 3)
            cert = poe_gt(prec, s, t)
            if cert:
                assert replay_certificate(prec, cert)
                replays += 1
        for _ in range(1_000):
            ell = rng.randint(1, 3)
            inst = lab.lab(ell)
            a, b = lab.random_pair(rng, ell)
            cert = poel_gt(inst, a, b)
            assert cert and replay_poel(inst, cert)
            assert replay_poel(inst, cert, ell + 1) and poel_gt(inst.with_ell(ell + 1), a, b)
            c1, c2 = lab.random_item(rng), lab.random_item(rng)
            wider = poel_gt(inst, concat(c1, a, c2), concat(c1, b, c2))
            assert wider and replay_poel(inst, wider)
            replays += 2
        d["replayed"] = replays


BATTERY = [
    ["check", "add"],
    ["check", "exp"],
    ["check", "fac"],
    ["check", "gadget_k2"],
    ["infer", "add"],
    ["infer", "exp"],
    ["infer", "fac"],
    ["infer", "gadget_k2"],
    ["rewrite", "exp", "exp(s(s(s(Z)));Z)"],
    ["trace", "add", "add(s(s(Z));s(Z))"],
    ["rc", "exp", "--max-size", "10"],
    ["embed", "exp", "exp(s(s(Z));Z)", "--certificates"],
    ["slow", "add", "--term", "add^n(s(Z))", "--ell", "2"],
]

RUNNER = """
import io, json, sys
from poestar.cli import run
out = []
for argv in json.loads(sys.argv[1]):
    buf = io.StringIO()
    code = run(["--json", *argv], stdout=buf)
    out.append(buf.getvalue())
sys.stdout.write("".join(out))
"""


def test_criterion_8_determinism():
    with criterion(8, "two runs give byte-identical JSON reports") as d:
        runs = []
        for seed in ("1", "2"):
            env = dict(os.environ, PYTHONHASHSEED=seed)
            proc = subprocess.run(
                [sys.executable, "-c", RUNNER, json.dumps(BATTERY)],
                capture_output=True,
                env=env,
                check=True,
            )
            runs.append(proc.stdout)
        assert runs[0] == runs[1]
        assert len(runs[0]) > 1000
        d["bytes"] = len(runs[0])
