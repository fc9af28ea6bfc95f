"""Error analysis: edit-distance buckets, gold-relation replay, error splits."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .classify import Category, RETRIEVAL_DEPENDENT, classify
from .grammar import ToolCall, Trajectory, Turn, normalize_answer
from .graph import ENTITY_VERBS, KnowledgeGraph
from .records import GoldRecord


def levenshtein(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute distance."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


class Bucket(str, Enum):
    RELATION_TYPO = "relation-typo-leq1"
    ENTITY_CORRECT_WRONG_RELATION = "entity-correct-wrong-relation"
    WRONG_ENTITY_NEAR_MISS = "wrong-entity-near-miss"
    FORMAT_OR_MISS = "format-or-genuine-miss"

    def __str__(self) -> str:
        return self.value


def first_relation_call(traj: Trajectory) -> ToolCall | None:
    """First parsed call that carries a relation argument."""
    for call in traj.calls:
        if call.parse_ok and call.relation_arg is not None:
            return call
    return None


def bucket_call(call: ToolCall | None, gold: GoldRecord) -> Bucket:
    if call is None:
        return Bucket.FORMAT_OR_MISS
    dists = [levenshtein(call.relation_arg, r) for r in gold.chain_relations]
    best = min(dists) if dists else None
    entity_ok = call.entity_arg in gold.chain_entities
    if best == 1:
        return Bucket.RELATION_TYPO
    if entity_ok and (best is None or best > 1):
        return Bucket.ENTITY_CORRECT_WRONG_RELATION
    if not entity_ok and best is not None and best <= 1:
        return Bucket.WRONG_ENTITY_NEAR_MISS
    return Bucket.FORMAT_OR_MISS


def bucketize(traj: Trajectory, gold: GoldRecord) -> Bucket:
    """Bucket the first relation-bearing call; precedence is typo, entity-correct, near-miss, other."""
    return bucket_call(first_relation_call(traj), gold)


def bucket_table(trajs: Sequence[Trajectory], golds: Mapping[str, GoldRecord]) -> dict[str, int]:
    counts = Counter(bucketize(t, golds[t.question_id]).value for t in trajs)
    return {b.value: counts.get(b.value, 0) for b in Bucket}


def null_bucket_rate(
    trajs: Sequence[Trajectory],
    golds: Mapping[str, GoldRecord],
    g: KnowledgeGraph,
    rng: np.random.Generator,
    samples: int = 20,
    weighting: str = "uniform",
) -> float:
    """Relation-typo rate when each first relation argument is drawn at random from the graph."""
    vocab = g.relations
    if not vocab:
        raise ValueError("graph has no relations")
    if weighting == "uniform":
        probs = None
    elif weighting == "frequency":
        freq = g.relation_frequencies()
        probs = np.array([freq[r] for r in vocab], dtype=float)
        probs /= probs.sum()
    else:
        raise ValueError(f"unknown weighting {weighting!r}")

    hits = total = 0
    for traj in trajs:
        call = first_relation_call(traj)
        if call is None:
            continue
        gold = golds[traj.question_id]
        for idx in rng.choice(len(vocab), size=samples, p=probs):
            fake = replace(call, relation_arg=vocab[idx])
            hits += bucket_call(fake, gold) is Bucket.RELATION_TYPO
            total += 1
    return hits / total if total else 0.0


def enrichment_ratio(observed_rate: float, null_rate: float) -> float:
    if null_rate == 0:
        return float("inf") if observed_rate > 0 else float("nan")
    return observed_rate / null_rate


# -- gold-relation replay ------------------------------------------------------

EXTRACTION_STRATEGIES = ("quote-if-present", "keep-original")


@dataclass(frozen=True)
class ReplayResult:
    trajectory: Trajectory
    reachable_before: bool
    reachable: bool
    answer_before: str
    answer: str
    em_before: int
    em_after: int

    @property
    def em_delta(self) -> int:
        return self.em_after - self.em_before

    def to_json(self) -> dict:
        return {
            "qid": self.trajectory.question_id,
            "reachable_before": self.reachable_before,
            "reachable": self.reachable,
            "answer_before": self.answer_before,
            "answer": self.answer,
            "em_before": self.em_before,
            "em_after": self.em_after,
            "em_delta": self.em_delta,
        }


def _execute(traj: Trajectory, g: KnowledgeGraph, cap: int | None) -> Trajectory:
    turns = []
    for t in traj.turns:
        if t.call is not None and t.call.parse_ok:
            res = g.query(t.call.verb, t.call.entity_arg, t.call.relation_arg, cap=cap)
            t = replace(t, response_lines=tuple(res.lines))
        turns.append(t)
    return replace(traj, turns=tuple(turns))


def _gold_lines(traj: Trajectory, gold: GoldRecord) -> list[str]:
    return [
        line
        for t in traj.call_turns
        for line in (t.response_lines or ())
        if normalize_answer(line) in gold.normalized
    ]


def _extract(traj: Trajectory, gold: GoldRecord, strategy: str) -> str:
    original = traj.final_answer_raw or ""
    if strategy == "keep-original":
        return original
    hits = _gold_lines(traj, gold)
    return hits[0] if hits else original


def substitute_gold_relations(traj: Trajectory, gold: GoldRecord) -> Trajectory:
    """i-th entity-fetch call gets the i-th chain relation, clamped to the last hop."""
    if not gold.chain:
        raise ValueError(f"gold record {gold.qid!r} has an empty chain")
    rels = gold.chain_relations
    hop = 0
    turns: list[Turn] = []
    for t in traj.turns:
        c = t.call
        if c is not None and c.parse_ok and c.verb in ENTITY_VERBS:
            rel = rels[min(hop, len(rels) - 1)]
            hop += 1
            if rel != c.relation_arg:
                new_call = ToolCall(f"{c.verb}({c.entity_arg}, {rel})", True, c.verb, c.entity_arg, rel)
                t = replace(t, call=new_call)
        turns.append(t)
    return replace(traj, turns=tuple(turns))


def oracle_relation_replay(
    traj: Trajectory,
    gold: GoldRecord,
    g: KnowledgeGraph,
    extraction: str = "quote-if-present",
    cap: int | None = None,
) -> ReplayResult:
    """Re-run a trajectory with gold relations injected into every entity fetch.

    The baseline re-executes the unmodified calls and applies the same extraction
    strategy, so the EM delta isolates the relation substitution.
    """
    if extraction not in EXTRACTION_STRATEGIES:
        raise ValueError(f"unknown extraction strategy {extraction!r}")
    baseline = _execute(traj, g, cap)
    replayed = _execute(substitute_gold_relations(traj, gold), g, cap)
    before = _extract(baseline, gold, extraction)
    after = _extract(replayed, gold, extraction)
    return ReplayResult(
        trajectory=replace(replayed, final_answer_raw=after),
        reachable_before=bool(_gold_lines(baseline, gold)),
        reachable=bool(_gold_lines(replayed, gold)),
        answer_before=before,
        answer=after,
        em_before=int(normalize_answer(before) in gold.normalized),
        em_after=int(normalize_answer(after) in gold.normalized),
    )


def is_extraction_failure(traj: Trajectory, gold: GoldRecord) -> bool:
    """The gold answer was returned by some call but not emitted."""
    return bool(_gold_lines(traj, gold))


def split_retrieval_vs_extraction(
    error_trajs: Sequence[Trajectory],
    golds: Mapping[str, GoldRecord],
    g: KnowledgeGraph | None,
) -> tuple[int, int]:
    """(composition failures, extraction failures) over retrieval-dependent errors."""
    composition = extraction = 0
    for traj in error_trajs:
        gold = golds[traj.question_id]
        cat = classify(traj, gold, g)
        if cat not in RETRIEVAL_DEPENDENT:
            raise ValueError(f"{traj.question_id}: category {cat.value} is not retrieval-dependent")
        if is_extraction_failure(traj, gold):
            extraction += 1
        else:
            composition += 1
    return composition, extraction


# -- behavioural diff ------------------------------------------------------------

DIFF_KINDS = ("same-entity-different-relation", "different-entity-same-relation", "both-differ", "identical")


def _first_call_key(traj: Trajectory) -> tuple[str | None, str | None]:
    calls = traj.calls
    if not calls:
        return None, None
    return calls[0].entity_arg, calls[0].relation_arg


def diff_kind(a: Trajectory, b: Trajectory) -> str:
    ea, ra = _first_call_key(a)
    eb, rb = _first_call_key(b)
    if ea == eb and ra == rb:
        return "identical"
    if ea == eb:
        return "same-entity-different-relation"
    if ra == rb:
        return "different-entity-same-relation"
    return "both-differ"


def behavioral_diff(
    run_a: Mapping[str, tuple[Trajectory, Category]],
    run_b: Mapping[str, tuple[Trajectory, Category]],
) -> dict[str, int]:
    """Compare first calls on questions that are kg-incomplete in both runs.

    Runs map qid to (trajectory, category).
    """
    overlap = sorted(set(run_a) & set(run_b))
    if not overlap:
        raise ValueError("runs share no qids")
    hist = dict.fromkeys(DIFF_KINDS, 0)
    for qid in overlap:
        (ta, ca), (tb, cb) = run_a[qid], run_b[qid]
        if ca is Category.KG_INCOMPLETE and cb is Category.KG_INCOMPLETE:
            hist[diff_kind(ta, tb)] += 1
    return hist


# -- denominators ----------------------------------------------------------------


@dataclass(frozen=True)
class ErrorDenominators:
    d3_normalized_errors: int
    d2_retrieval_dependent: int
    d1_strict_em_errors: int

    def as_tuple(self) -> tuple[int, int, int]:
        return self.d3_normalized_errors, self.d2_retrieval_dependent, self.d1_strict_em_errors


def error_denominators(report, strict_em_errors: int) -> ErrorDenominators:
    """Three error bases from a RunReport or a bare category histogram.

    A histogram may be a mapping keyed by category name or a
    (tool-misuse, kg-incomplete, wrong-answer) triple.
    """
    if hasattr(report, "category_histogram"):
        hist = dict(report.category_histogram)
        n, em = report.n, report.em_count
    elif isinstance(report, Mapping):
        hist, n, em = dict(report), None, None
    else:
        tm, kgi, wa = report
        hist, n, em = {"tool-misuse": tm, "kg-incomplete": kgi, "wrong-answer": wa}, None, None

    tm = hist.get(Category.TOOL_MISUSE.value, 0)
    kgi = hist.get(Category.KG_INCOMPLETE.value, 0)
    wa = hist.get(Category.WRONG_ANSWER.value, 0)
    if min(tm, kgi, wa, strict_em_errors) < 0:
        raise ValueError("negative count in error histogram")
    d3 = tm + kgi + wa
    if n is not None:
        if sum(hist.values()) != n:
            raise ValueError("category histogram does not sum to n")
        if n - em != d3 + hist.get(Category.WRONG_NO_TOOL.value, 0):
            raise ValueError("error categories disagree with the EM count")
        if strict_em_errors > n:
            raise ValueError("strict error count exceeds n")
    return ErrorDenominators(d3, d3 - tm, strict_em_errors)
