"""Search for a precedence and argument separation orienting a TRS.

The space is finite: every subset of argument positions of every defined
symbol may be normal, and precedences are linear orders on the defined
symbols with all constructors at rank 0.  Constructors never occur as the
left root of a clause-2 or clause-3 comparison, so putting them at the bottom
loses no solutions, and since every clause is monotone in the precedence,
linear orders suffice.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator

from .poe import NotGreater, PoeInstance, Precedence, check_trs, poe_gt, render_separation
from .terms import App, FunctionSymbol, Trs

__all__ = [
    "SearchSpace",
    "InferenceResult",
    "infer",
    "brute_force_infer",
    "explain_failure",
    "blocking_failure",
]


class _Total:
    """Relates every pair of distinct names; an upper bound of every precedence."""

    def gt(self, f: FunctionSymbol, g: FunctionSymbol) -> bool:
        return f.normalized == g.normalized and f.name != g.name


TOTAL = _Total()


def _subsets(n: int) -> list[tuple[int, ...]]:
    return [c for k in range(n + 1) for c in itertools.combinations(range(n), k)]


@dataclass(frozen=True)
class SearchSpace:
    """Separations (outer) times linear precedences on defined symbols (inner)."""

    trs: Trs
    max_instances: int | None = None

    @property
    def separation_choices(self) -> list[list[tuple[int, ...]]]:
        return [_subsets(f.arity) for f in self.trs.defined]

    def separations(self) -> Iterator[dict[str, tuple[int, ...]]]:
        names = [f.name for f in self.trs.defined]
        for combo in itertools.product(*self.separation_choices):
            yield dict(zip(names, combo))

    def precedences(self) -> Iterator[Precedence]:
        names = [f.name for f in self.trs.defined]
        for perm in itertools.permutations(names):
            yield Precedence.from_order(perm)

    @property
    def n_separations(self) -> int:
        return math.prod(2 ** f.arity for f in self.trs.defined)

    @property
    def n_precedences(self) -> int:
        return math.factorial(len(self.trs.defined))

    @property
    def size(self) -> int:
        return self.n_separations * self.n_precedences

    def sample(self, rng, k: int) -> list[PoeInstance]:
        seps = list(self.separations())
        names = [f.name for f in self.trs.defined]
        out = []
        for _ in range(k):
            perm = list(names)
            rng.shuffle(perm)
            out.append(PoeInstance(Precedence.from_order(perm), rng.choice(seps)))
        return out


@dataclass
class InferenceResult:
    instance: PoeInstance | None
    space_size: int
    checked: int = 0
    transcript: list[dict] = field(default_factory=list)

    @property
    def exhausted(self) -> bool:
        return self.instance is None

    def to_dict(self, trs: Trs) -> dict:
        return {
            "compatible": self.instance is not None,
            "instance": None if self.instance is None else self.instance.to_dict(trs),
            "space_size": self.space_size,
            "checked": self.checked,
            "transcript": self.transcript,
        }


def _required_pairs(trs: Trs) -> tuple[set[tuple[str, str]], int | None]:
    """Pairs ``f > g`` every orienting precedence must contain.

    Returns also the index of a rule no precedence can orient, if any.
    """
    required: set[tuple[str, str]] = set()
    memo: dict = {}
    for i, rule in enumerate(trs.rules):
        if not poe_gt(TOTAL, rule.lhs, rule.rhs, memo):
            return required, i
        lhs, rhs = rule.lhs, rule.rhs
        if not isinstance(rhs, App) or rhs.symbol == lhs.symbol:
            continue
        # without clause 1 at the root, only clause 2 is left
        if not any(a == rhs or poe_gt(TOTAL, a, rhs, memo) for a in lhs.args):
            required.add((lhs.symbol.name, rhs.symbol.name))
    return required, None


def infer(trs: Trs, record: bool = True) -> InferenceResult:
    """First instance in canonical order under which every rule is oriented."""
    space = SearchSpace(trs)
    result = InferenceResult(None, space.size)
    precedences = list(space.precedences())
    for sep in space.separations():
        candidate = PoeInstance(Precedence(), sep)
        split = candidate.apply(trs)
        required, hopeless = _required_pairs(split)
        shown = render_separation(sep, trs)
        if hopeless is not None:
            if record:
                result.transcript.append(
                    {"separation": shown, "status": "pruned", "reason": f"rule {hopeless + 1} fails under every precedence"}
                )
            continue
        for prec in precedences:
            violated = sorted((f, g) for f, g in required if not prec.rank(f) > prec.rank(g))
            if violated:
                if record:
                    f, g = violated[0]
                    result.transcript.append(
                        {
                            "separation": shown,
                            "precedence": prec.chain_text(x.name for x in trs.defined),
                            "status": "pruned",
                            "reason": f"needs {f} > {g}",
                        }
                    )
                continue
            inst = PoeInstance(prec, sep)
            report = check_trs(inst, trs, stop_early=True)
            result.checked += 1
            if record:
                entry = {
                    "separation": shown,
                    "precedence": prec.chain_text(x.name for x in trs.defined),
                    "status": "compatible" if report.compatible else "failed",
                }
                if not report.compatible:
                    entry["failed_rule"] = report.failed[0] + 1
                result.transcript.append(entry)
            if report.compatible:
                result.instance = inst
                return result
    return result


def brute_force_infer(trs: Trs) -> PoeInstance | None:
    """Unpruned search over all separations and all linear orders of all symbols."""
    names = [f.name for f in trs.signature]
    for sep in SearchSpace(trs).separations():
        for perm in itertools.permutations(names):
            inst = PoeInstance(Precedence.from_order(perm), sep)
            if check_trs(inst, trs, stop_early=True).compatible:
                return inst
    return None


def blocking_failure(failure: NotGreater) -> NotGreater:
    """Deepest failed obligation whose left side has a defined root."""
    node, found = failure, failure
    while node is not None:
        if node.clause is not None and isinstance(node.lhs, App) and node.lhs.symbol.is_defined:
            found = node
        node = node.cause
    return found


def explain_failure(trs: Trs) -> dict:
    """Per rule: how many instances fail it and the clause that blocks it most often.

    Empty ``rules`` when some instance orients the whole system.
    """
    space = SearchSpace(trs)
    if not infer(trs, record=False).exhausted:
        return {"space_size": space.size, "rules": []}
    defined = {f.name: f for f in trs.defined}
    stats = []
    for i, rule in enumerate(trs.rules):
        root = rule.lhs.symbol.name
        stats.append(
            {
                "failed": 0,
                "clauses": Counter(),
                "example": None,
                "root_masks_failing": {m: True for m in _subsets(defined[root].arity)},
            }
        )
    precedences = list(space.precedences())
    for sep in space.separations():
        split = PoeInstance(Precedence(), sep).apply(trs)
        for prec in precedences:
            memo: dict = {}
            for i, rule in enumerate(split.rules):
                res = poe_gt(prec, rule.lhs, rule.rhs, memo)
                st = stats[i]
                root_mask = sep[trs.rules[i].lhs.symbol.name]
                if res:
                    st["root_masks_failing"][root_mask] = False
                    continue
                st["failed"] += 1
                block = blocking_failure(res)
                st["clauses"][block.clause] += 1
                if st["example"] is None:
                    st["example"] = {
                        "separation": render_separation(sep, trs),
                        "precedence": prec.chain_text(f.name for f in trs.defined),
                        "reason": block.reason,
                    }
    rules = []
    for i, st in enumerate(stats):
        if not st["failed"]:
            continue
        clause = min(st["clauses"], key=lambda c: (-st["clauses"][c], c if c is not None else 0))
        rules.append(
            {
                "rule": i + 1,
                "text": str(trs.rules[i]),
                "failed_instances": st["failed"],
                "of": space.size,
                "fails_under_every_root_separation": all(st["root_masks_failing"].values()),
                "dominant_clause": clause,
                "example": st["example"],
            }
        )
    return {"space_size": space.size, "rules": rules}
