"""Reward components and the ladder composites.

Answer-level components take a normalized answer and a list of normalized
golds. Trajectory-level components take only the trajectory (``r_path`` also
reads the gold chain). Every per-call fraction defines 0/0 as 0 so that
skipping tools is never rewarded.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .grammar import Trajectory, normalize_answer
from .graph import VERBS
from .records import GoldRecord


def _check_golds(golds: Sequence[str]) -> None:
    if not golds:
        raise ValueError("empty gold answer list")


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def r_em(answer: str, golds: Sequence[str]) -> float:
    _check_golds(golds)
    return 1.0 if answer in golds else 0.0


def token_f1(answer: str, gold: str) -> float:
    pred, ref = answer.split(), gold.split()
    if not pred or not ref:
        return 0.0
    same = sum((Counter(pred) & Counter(ref)).values())
    if same == 0:
        return 0.0
    precision, recall = same / len(pred), same / len(ref)
    return 2 * precision * recall / (precision + recall)


def r_f1(answer: str, golds: Sequence[str]) -> float:
    _check_golds(golds)
    return max(token_f1(answer, g) for g in golds)


def r_out(answer: str, golds: Sequence[str]) -> float:
    return 0.5 * r_em(answer, golds) + 0.5 * r_f1(answer, golds)


def token_recall(answer: str, gold: str) -> float:
    """Share of gold tokens (as a multiset) present in the answer."""
    ref = gold.split()
    if not ref:
        return 0.0
    return sum((Counter(answer.split()) & Counter(ref)).values()) / len(ref)


def r_ans(answer: str, golds: Sequence[str]) -> float:
    """``r_out`` with exact match swapped for gold-token recall."""
    _check_golds(golds)
    lenient = max(token_recall(answer, g) for g in golds)
    return 0.5 * lenient + 0.5 * r_f1(answer, golds)


def r_valid(traj: Trajectory) -> float:
    calls = traj.calls
    return _ratio(sum(c.parse_ok for c in calls), len(calls))


def r_path(traj: Trajectory, gold: GoldRecord) -> float:
    chain = set(gold.chain_relations)
    return float(any(c.parse_ok and c.relation_arg in chain for c in traj.calls))


_COH_TOKEN = re.compile(r"[^\s(),]+")


def coh_tokens(text: str) -> list[str]:
    return _COH_TOKEN.findall(text.lower())


def lcs_length(a: Sequence, b: Sequence) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def lcs_ratio(a: Sequence, b: Sequence) -> float:
    total = len(a) + len(b)
    return 2 * lcs_length(a, b) / total if total else 0.0


def r_coh(traj: Trajectory) -> float:
    scores = [
        lcs_ratio(coh_tokens(t.think_span), coh_tokens(t.call.raw_text))
        for t in traj.turns
        if t.think_span is not None and t.call is not None
    ]
    return sum(scores) / len(scores) if scores else 0.0


def r_tool_type(traj: Trajectory) -> float:
    return len({c.verb for c in traj.calls if c.parse_ok}) / len(VERBS)


def r_tool_usage(traj: Trajectory) -> float:
    turns = traj.call_turns
    return _ratio(sum(bool(t.response_lines) for t in turns), len(turns))


def line_in_answer(line: str, answer: str) -> bool:
    """A response line counts as quoted when its normalized form occurs in the normalized answer."""
    norm = normalize_answer(line)
    return bool(norm) and norm in answer


def is_productive(response_lines, answer: str) -> bool:
    return bool(response_lines) and any(line_in_answer(x, answer) for x in response_lines)


def r_retrv(traj: Trajectory) -> float:
    turns = traj.call_turns
    answer = traj.answer
    return _ratio(sum(is_productive(t.response_lines, answer) for t in turns), len(turns))


# name -> (scorer, kind); kind tells score() which inputs to pass
COMPONENTS: dict[str, tuple[Callable, str]] = {
    "r_em": (r_em, "answer"),
    "r_f1": (r_f1, "answer"),
    "r_out": (r_out, "answer"),
    "r_ans": (r_ans, "answer"),
    "r_valid": (r_valid, "traj"),
    "r_path": (r_path, "chain"),
    "r_coh": (r_coh, "traj"),
    "r_tool_type": (r_tool_type, "traj"),
    "r_tool_usage": (r_tool_usage, "traj"),
    "r_retrv": (r_retrv, "traj"),
}


@dataclass(frozen=True)
class LadderRung:
    name: str
    weights: tuple[tuple[str, float], ...]

    def __post_init__(self):
        unknown = [c for c, _ in self.weights if c not in COMPONENTS]
        if unknown:
            raise ValueError(f"unknown reward components {unknown}")
        if abs(sum(w for _, w in self.weights) - 1.0) > 1e-12:
            raise ValueError(f"weights of {self.name} must sum to 1")

    @property
    def components(self) -> list[str]:
        return [c for c, _ in self.weights]


_BINARY = (("r_em", 0.5), ("r_f1", 0.5))
_TOOLVERBS = (("r_out", 0.25), ("r_tool_type", 0.50), ("r_tool_usage", 0.25))

# The -SR and ·KL variants differ from their base rung only in trainer settings.
RUNGS: dict[str, LadderRung] = {
    rung.name: rung
    for rung in (
        LadderRung("R-binary", _BINARY),
        LadderRung("R-binary-SR", _BINARY),
        LadderRung("R-stepwise", (("r_out", 0.25), ("r_valid", 0.25), ("r_path", 0.25), ("r_coh", 0.25))),
        LadderRung("R-toolverbs", _TOOLVERBS),
        LadderRung("R-toolverbs·KL", _TOOLVERBS),
        LadderRung("R-selfV", (("r_ans", 0.25), ("r_tool_type", 0.50), ("r_retrv", 0.25))),
    )
}
RUNGS_ASCII = {"R-toolverbs-KL": "R-toolverbs·KL", "R-toolverbs.KL": "R-toolverbs·KL"}


def get_rung(rung: str | LadderRung) -> LadderRung:
    if isinstance(rung, LadderRung):
        return rung
    name = RUNGS_ASCII.get(rung, rung)
    if name not in RUNGS:
        raise KeyError(f"unknown reward rung {rung!r}; known: {', '.join(RUNGS)}")
    return RUNGS[name]


@dataclass(frozen=True)
class RewardBreakdown:
    rung: str
    components: Mapping[str, float]
    total: float

    def weighted(self) -> dict[str, float]:
        """Per-component contributions (weight times value)."""
        weights = dict(get_rung(self.rung).weights)
        return {k: weights[k] * v for k, v in self.components.items()}

    def recompute(self) -> float:
        return weighted_total(get_rung(self.rung), self.components)

    def to_json(self) -> dict:
        return {"rung": self.rung, "components": dict(self.components), "total": self.total}


def weighted_total(rung: LadderRung, components: Mapping[str, float]) -> float:
    total = 0.0
    for name, w in rung.weights:
        total += w * components[name]
    return total


def component_value(name: str, traj: Trajectory, gold: GoldRecord) -> float:
    fn, kind = COMPONENTS[name]
    if kind == "answer":
        return fn(traj.answer, list(gold.normalized))
    if kind == "chain":
        return fn(traj, gold)
    return fn(traj)


def score(rung: str | LadderRung, traj: Trajectory, gold: GoldRecord) -> RewardBreakdown:
    rung = get_rung(rung)
    comps = {name: component_value(name, traj, gold) for name in rung.components}
    return RewardBreakdown(rung.name, comps, weighted_total(rung, comps))


def mean_breakdown(breakdowns: Sequence[RewardBreakdown]) -> RewardBreakdown:
    if not breakdowns:
        raise ValueError("no breakdowns to average")
    rung = get_rung(breakdowns[0].rung)
    if any(b.rung != rung.name for b in breakdowns):
        raise ValueError("cannot average breakdowns from different rungs")
    n = len(breakdowns)
    comps = {c: sum(b.components[c] for b in breakdowns) / n for c in rung.components}
    return RewardBreakdown(rung.name, comps, sum(b.total for b in breakdowns) / n)
