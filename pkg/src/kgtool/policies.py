"""Scripted policies, the gold-path trajectory generator and the distillation filter."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .grammar import MAX_CALLS, MISSING_ANSWER, SEARCH_IN_THINK, ToolCall, Trajectory, Turn, render_transcript
from .graph import KnowledgeGraph
from .metrics import RunReport, aggregate, resolve, score_run
from .records import GoldRecord
from .rewards import LadderRung, RewardBreakdown, get_rung, is_productive

THINK_TEMPLATES = (
    "To answer this I should start from {label} ({entity}) and follow {relation}.",
    "The next hop starts at {label} ({entity}); the relation {relation} should lead toward the answer.",
    "Let me see which relations {label} ({entity}) has, then query {relation}.",
)

POLICIES = ("gold-path", "quote-and-stop", "ritual-single-call", "format-drift", "memory-answer")


class ChainError(ValueError):
    """A gold chain hop does not exist in the graph."""


def _call(verb: str, entity: str, relation: str | None = None) -> ToolCall:
    args = entity if relation is None else f"{entity}, {relation}"
    return ToolCall(f"{verb}({args})", True, verb, entity, relation)


def _turn(g: KnowledgeGraph, call: ToolCall, think: str | None = None, cap: int | None = None) -> Turn:
    res = g.query(call.verb, call.entity_arg, call.relation_arg, cap=cap)
    return Turn(think, call, tuple(res.lines))


def finish(qid: str, turns: Sequence[Turn], answer: str | None, drifted: bool = False) -> Trajectory:
    flags = frozenset({SEARCH_IN_THINK}) if drifted else frozenset()
    traj = Trajectory(question_id=qid, turns=tuple(turns), final_answer_raw=answer, format_flags=flags)
    traj = replace(traj, raw_bytes=len(render_transcript(traj).encode("utf-8")))
    return traj.with_flags()


def gen_gold_trajectory(gold: GoldRecord, g: KnowledgeGraph, template_seed: int = 0) -> Trajectory:
    """Rule-based trajectory built from the gold chain, answered with the first gold answer.

    Each hop gets a templated think span, a relation listing on the hop head and
    an entity fetch along the gold relation. When listing every hop would exceed
    the call budget, listings are kept only for the earliest hops.
    """
    hops = gold.chain
    if not hops:
        raise ChainError(f"{gold.qid}: empty gold chain")
    if len(hops) > MAX_CALLS:
        raise ChainError(f"{gold.qid}: {len(hops)} hops exceed the {MAX_CALLS}-call budget")
    n_listings = min(len(hops), MAX_CALLS - len(hops))
    rng = random.Random(template_seed)
    turns: list[Turn] = []
    for i, hop in enumerate(hops):
        if hop.tail not in g.get_tail_entities(hop.head, hop.relation):
            raise ChainError(f"{gold.qid}: hop {i} ({hop.head}, {hop.relation}, {hop.tail}) not in graph")
        think = rng.choice(THINK_TEMPLATES).format(
            label=g.label_of(hop.head), entity=hop.head, relation=hop.relation
        )
        fetch = _call("get_tail_entities", hop.head, hop.relation)
        if i < n_listings:
            turns.append(_turn(g, _call("get_tail_relations", hop.head), think))
            turns.append(_turn(g, fetch))
        else:
            turns.append(_turn(g, fetch, think))
    return finish(gold.qid, turns, gold.answers[0])


@dataclass(frozen=True)
class ScriptedPolicy:
    name: str
    severity: float = 1.0
    memory: Mapping[str, str] = field(default_factory=dict)
    fallback_answer: str = "unknown"
    template_seed: int = 0

    def __post_init__(self):
        if self.name not in POLICIES:
            raise ValueError(f"unknown policy {self.name!r}; known: {', '.join(POLICIES)}")
        if not 0.0 <= self.severity <= 1.0:
            raise ValueError("severity must lie in [0, 1]")

    def recall(self, qid: str) -> str:
        return self.memory.get(qid, self.fallback_answer)


def _drift(traj: Trajectory, severity: float) -> Trajectory:
    """Move the earliest round(severity * calls) searches inside their think spans."""
    k = math.floor(severity * traj.n_calls + 0.5)
    turns: list[Turn] = []
    moved = 0
    for t in traj.turns:
        if t.call is not None and moved < k:
            inner = f"<search>{t.call.render()}</search>"
            think = f"{t.think_span} {inner}" if t.think_span else inner
            turns.append(Turn(think_span=think))
            moved += 1
        elif turns and turns[-1].call is None and t.think_span is None:
            # a think-only turn absorbs the next bare call, as the parser would
            turns[-1] = replace(t, think_span=turns[-1].think_span)
        else:
            turns.append(t)
    return finish(traj.question_id, turns, traj.final_answer_raw, drifted=moved > 0)


def run_policy(policy: ScriptedPolicy, gold: GoldRecord, g: KnowledgeGraph) -> Trajectory:
    if policy.name == "gold-path":
        return gen_gold_trajectory(gold, g, policy.template_seed)
    if policy.name == "format-drift":
        return _drift(gen_gold_trajectory(gold, g, policy.template_seed), policy.severity)
    if policy.name == "memory-answer":
        return finish(gold.qid, [], policy.recall(gold.qid))

    seed = gold.seed
    if policy.name == "ritual-single-call":
        turn = _turn(g, _call("get_tail_relations", seed), "Let me check.")
        return finish(gold.qid, [turn], policy.recall(gold.qid))

    # quote-and-stop: fetch along the first listed relation and copy the first entity
    rels = g.get_tail_relations(seed)
    if not rels:
        return finish(gold.qid, [_turn(g, _call("get_tail_relations", seed))], "")
    turn = _turn(g, _call("get_tail_entities", seed, rels[0]))
    return finish(gold.qid, [turn], turn.response_lines[0])


def simulate_run(
    policy: ScriptedPolicy,
    golds: Sequence[GoldRecord],
    g: KnowledgeGraph,
    rung: str | LadderRung,
    label: str = "",
) -> tuple[list[Trajectory], RunReport, RewardBreakdown]:
    rung = get_rung(rung)
    trajs = [run_policy(policy, gold, g) for gold in golds]
    by_qid = {gold.qid: gold for gold in golds}
    report = aggregate(score_run(trajs, by_qid, g, rung), label=label or policy.name)
    return trajs, report, report.mean_reward


# -- self-distillation filter ---------------------------------------------------

REJECT_REASONS = ("em-fail", "not-productive", "format-invalid")


@dataclass(frozen=True)
class DistillFilterResult:
    kept: list[Trajectory]
    rejected: list[tuple[Trajectory, str]]

    @property
    def n_input(self) -> int:
        return len(self.kept) + len(self.rejected)

    @property
    def yield_fraction(self) -> float:
        return len(self.kept) / self.n_input if self.n_input else 0.0

    def reason_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(REJECT_REASONS, 0)
        for _, reason in self.rejected:
            counts[reason] += 1
        return counts


def reject_reason(traj: Trajectory, gold: GoldRecord) -> str | None:
    answer = traj.answer
    if answer not in gold.normalized:
        return "em-fail"
    if not any(is_productive(t.response_lines, answer) for t in traj.call_turns):
        return "not-productive"
    if traj.final_answer_raw is None or MISSING_ANSWER in traj.format_flags:
        return "format-invalid"
    return None


def self_distill_filter(trajs: Sequence[Trajectory], golds: Mapping[str, GoldRecord]) -> DistillFilterResult:
    """Keep EM-correct, tool-productive, well-enveloped trajectories."""
    kept: list[Trajectory] = []
    rejected: list[tuple[Trajectory, str]] = []
    for traj in trajs:
        reason = reject_reason(traj, resolve(traj, golds))
        if reason is None:
            kept.append(traj)
        else:
            rejected.append((traj, reason))
    return DistillFilterResult(kept, rejected)
