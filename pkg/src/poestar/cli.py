"""Command line interface.

Exit codes: 0 success or compatible, 1 incompatible or violation, 2 usage or
parse error, 3 budget or guard exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .inference import blocking_failure, explain_failure, infer
from .poe import PoeInstance, check_trs, render_item
from .poel import Guard, GuardExceeded, PoelInstance, check_slow_bound, slow, verify_derivation
from .rewriting import BudgetExceeded, StuckTerm, evaluate, growth_slope, rc_table, trace_derivation
from .syntax import ParseError, TrsFile, parse_term, parse_trs
from .terms import App, check_well_formed, render

OK, FAILED, USAGE, BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def load(name: str) -> TrsFile:
    """Parse a TRS file; names of bundled fixtures (``add``, ``exp.trs``) also work."""
    path = Path(name)
    if path.is_file():
        return parse_trs(path.read_text())
    data = resources.files("poestar") / "data"
    for candidate in (name, name + ".trs"):
        res = data / candidate
        if res.is_file():
            return parse_trs(res.read_text())
    raise UsageError(f"no such file or fixture: {name}")


def _instance(tf: TrsFile) -> PoeInstance:
    return tf.instance if tf.instance is not None else PoeInstance()


def _term(tf: TrsFile, text: str, normalized: bool = False):
    t = parse_term(text, tf.trs, normalized=normalized)
    if not normalized and not t.is_ground:
        raise UsageError(f"term {render(t)} is not ground")
    return t


def cmd_check(tf: TrsFile, args) -> tuple[dict, int]:
    wf = check_well_formed(tf.trs)
    inst = _instance(tf)
    report = check_trs(inst, tf.trs)
    out = {
        "well_formed": wf.to_dict(),
        "instance": inst.to_dict(tf.trs),
        **report.to_dict(),
    }
    lines = [f"well-formed: {'yes' if wf.ok else 'no'}"]
    lines += [f"  {v.severity}: {v.message}" for v in wf.violations]
    lines.append(f"precedence: {out['instance']['precedence']}")
    for i, (rule, res) in enumerate(zip(report.rules, report.results), start=1):
        if res:
            lines.append(f"rule {i}: {rule}  oriented (clause {res.clause})")
        else:
            why = blocking_failure(res)
            lines.append(f"rule {i}: {rule}  NOT oriented, clause {why.clause} at {render(why.rhs)}: {why.reason}")
    lines.append("COMPATIBLE" if report.compatible else "INCOMPATIBLE")
    out["text"] = lines
    return out, OK if (wf.ok and report.compatible) else FAILED


def cmd_infer(tf: TrsFile, args) -> tuple[dict, int]:
    result = infer(tf.trs)
    out = result.to_dict(tf.trs)
    if result.exhausted:
        out["explanation"] = explain_failure(tf.trs)
        lines = [f"searched {result.space_size} instances", "INCOMPATIBLE (exhaustive)"]
        for r in out["explanation"]["rules"]:
            lines.append(
                f"rule {r['rule']}: {r['text']}  fails in {r['failed_instances']}/{r['of']} "
                f"(mostly clause {r['dominant_clause']})"
            )
    else:
        shown = out["instance"]
        lines = [
            f"searched {result.space_size} instances, checked {result.checked}",
            f"precedence: {shown['precedence']}",
            "separation: " + " ".join(f"{k}:{v}" for k, v in sorted(shown["separation"].items())),
            "COMPATIBLE",
        ]
    out["text"] = lines
    return out, FAILED if result.exhausted else OK


def cmd_rewrite(tf: TrsFile, args) -> tuple[dict, int]:
    t = _term(tf, args.term)
    value, steps = evaluate(tf.trs, t, args.budget)
    out = {"term": render(t), "value": render(value), "steps": steps}
    out["text"] = [f"{render(value)}", f"steps: {steps}"]
    return out, OK


def cmd_trace(tf: TrsFile, args) -> tuple[dict, int]:
    t = _term(tf, args.term)
    d = trace_derivation(tf.trs, t, args.budget)
    out = d.to_dict()
    lines = [render(t)]
    for step in d.steps:
        lines.append(f"  -> {render(step.result)}    [rule {step.rule + 1} at {list(step.position)}]")
    lines.append(f"steps: {len(d)}")
    out["text"] = lines
    return out, OK


def cmd_rc(tf: TrsFile, args) -> tuple[dict, int]:
    samples = rc_table(tf.trs, args.max_size, args.budget)
    slope = growth_slope([s for s in samples if s.size >= args.fit_from])
    out = {"table": [s.to_dict() for s in samples], "log2_slope": slope, "fit_from": args.fit_from}
    lines = [f"{'n':>3} {'max_steps':>10}  witness"]
    for s in samples:
        lines.append(f"{s.size:>3} {s.max_steps:>10}  {'-' if s.witness is None else render(s.witness)}")
    lines.append("log2 slope: " + ("n/a" if slope is None else f"{slope:.4f}"))
    out["text"] = lines
    return out, OK


def cmd_embed(tf: TrsFile, args) -> tuple[dict, int]:
    t = _term(tf, args.term)
    d = trace_derivation(tf.trs, t, args.budget)
    try:
        report = verify_derivation(
            tf.trs, _instance(tf), d, with_slow=True, certificates=args.certificates, exact=args.exact
        )
    except ValueError as e:
        raise UsageError(str(e)) from None
    out = report.to_dict()
    lines = [f"ell = {report.ell}"]
    for i, st in enumerate(report.steps, start=1):
        mark = "ok" if st["embedded"] and st["in_tn"] else "VIOLATION"
        lines.append(f"step {i} (rule {st['rule']}): {st['from']} > {st['to']}  {mark}")
    if report.slow_start is not None:
        lines.append(f"slow of start: {report.slow_start} >= {len(report.steps)} steps")
    lines.append("EMBEDDED" if report.ok else "VIOLATION")
    out["text"] = lines
    return out, OK if report.ok else FAILED


def cmd_slow(tf: TrsFile, args) -> tuple[dict, int]:
    inst = _instance(tf)
    t = _term(tf, args.term, normalized=True)
    if not t.is_ground:
        raise UsageError(f"term {render(t)} is not ground")
    lab = PoelInstance(inst.precedence, args.ell, tf.trs.signature)
    guard = Guard()
    exact = not args.additive
    value = slow(lab, t, guard, exact)
    out: dict = {"term": render(t), "ell": args.ell, "exact": exact, "slow": value, "bound": None}
    lines = [f"slow = {value}"]
    code = OK
    if isinstance(t, App) and t.symbol.arity <= args.ell and inst.precedence.rank(t.symbol.name) > 0:
        bound = check_slow_bound(lab, t, guard, exact)
        out["bound"] = bound
        lines.append(f"bound = {bound['bound']}  ({'holds' if bound['holds'] else 'FAILS'})")
        code = OK if bound["holds"] else FAILED
    out["text"] = lines
    return out, code


COMMANDS = {
    "check": cmd_check,
    "infer": cmd_infer,
    "rewrite": cmd_rewrite,
    "trace": cmd_trace,
    "rc": cmd_rc,
    "embed": cmd_embed,
    "slow": cmd_slow,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable report")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="accepted and ignored; runs are deterministic")

    p = argparse.ArgumentParser(prog="poestar", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text, parents=[common])
        sp.add_argument("file", help="TRS file or bundled fixture name")
        return sp

    add("check", "well-formedness and compatibility under the file's precedence")
    add("infer", "search for a precedence and argument separation")
    for name, text in (("rewrite", "evaluate a ground term"), ("trace", "print the derivation of a term")):
        sp = add(name, text)
        sp.add_argument("term")
        sp.add_argument("--budget", type=int, default=100_000)
    sp = add("rc", "runtime complexity table")
    sp.add_argument("--max-size", type=int, required=True)
    sp.add_argument("--fit-from", type=int, default=4, help="smallest n used for the slope fit")
    sp.add_argument("--budget", type=int, default=100_000)
    sp = add("embed", "check that every step of a derivation embeds")
    sp.add_argument("term")
    sp.add_argument("--budget", type=int, default=100_000)
    sp.add_argument("--certificates", action="store_true", help="include certificates in the JSON report")
    sp.add_argument("--exact", action="store_true", help="compute slow of the start by exhaustive search")
    sp = add("slow", "slow value of a (normalised) term")
    sp.add_argument("--term", required=True)
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--additive", action="store_true", help="count sequences as the sum of their items")
    return p


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    as_json = getattr(args, "json", False)
    try:
        tf = load(args.file)
        out, code = COMMANDS[args.command](tf, args)
    except (ParseError, UsageError) as e:
        return _error(stdout, stderr, as_json, args.command, USAGE, str(e))
    except (BudgetExceeded, GuardExceeded) as e:
        return _error(stdout, stderr, as_json, args.command, BUDGET, str(e))
    except StuckTerm as e:
        return _error(stdout, stderr, as_json, args.command, FAILED, str(e))
    text = out.pop("text")
    if as_json:
        out["command"] = args.command
        out["exit_code"] = code
        stdout.write(json.dumps(out, sort_keys=True, indent=2, default=render_item) + "\n")
    else:
        stdout.write("\n".join(text) + "\n")
    return code


def _error(stdout, stderr, as_json, command, code, message) -> int:
    if as_json:
        report = {"command": command, "exit_code": code, "error": message}
        stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    else:
        stderr.write(f"error: {message}\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
