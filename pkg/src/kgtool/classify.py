"""Seven-category trajectory classification."""

from __future__ import annotations

from enum import Enum

from .grammar import Trajectory, normalize_answer
from .graph import KnowledgeGraph
from .records import GoldRecord
from .rewards import is_productive


class Category(str, Enum):
    CORRECT_VIA_TOOL = "correct-via-tool"
    CORRECT_VIA_MEMORY = "correct-via-memory"
    CORRECT_NO_TOOL = "correct-no-tool"
    WRONG_NO_TOOL = "wrong-no-tool"
    KG_INCOMPLETE = "kg-incomplete"
    TOOL_MISUSE = "tool-misuse"
    WRONG_ANSWER = "wrong-answer"

    def __str__(self) -> str:
        return self.value


CORRECT = frozenset({Category.CORRECT_VIA_TOOL, Category.CORRECT_VIA_MEMORY, Category.CORRECT_NO_TOOL})
ERRORS = frozenset(Category) - CORRECT
RETRIEVAL_DEPENDENT = frozenset({Category.KG_INCOMPLETE, Category.WRONG_ANSWER})


def entity_in_answer(traj: Trajectory) -> bool:
    answer = traj.answer
    return any(is_productive(t.response_lines, answer) for t in traj.call_turns)


def normalized_em(traj: Trajectory, gold: GoldRecord) -> bool:
    return traj.answer in gold.normalized


def strict_em(traj: Trajectory, gold: GoldRecord) -> bool:
    """Surface match after trimming only; no case folding or punctuation removal."""
    if traj.final_answer_raw is None:
        return False
    return traj.final_answer_raw.strip() in {a.strip() for a in gold.answers}


def gold_subgraph_terms(gold: GoldRecord, g: KnowledgeGraph | None) -> set[str]:
    """Normalized surface forms that count as touching the gold sub-graph."""
    terms: set[str] = set()
    for e in gold.chain_entities:
        terms.add(normalize_answer(e))
        if g is not None:
            terms.add(normalize_answer(g.label_of(e)))
    terms.update(normalize_answer(r) for r in gold.chain_relations)
    terms.update(gold.normalized)
    terms.discard("")
    return terms


def classify(traj: Trajectory, gold: GoldRecord, g: KnowledgeGraph | None = None) -> Category:
    turns = traj.call_turns
    if normalized_em(traj, gold):
        if not turns:
            return Category.CORRECT_NO_TOOL
        if entity_in_answer(traj):
            return Category.CORRECT_VIA_TOOL
        return Category.CORRECT_VIA_MEMORY
    if not turns:
        return Category.WRONG_NO_TOOL
    if any(not t.call.parse_ok for t in turns):
        return Category.TOOL_MISUSE
    if traj.final_answer_raw is None:
        # no envelope: nothing was answered from the retrieved content
        return Category.WRONG_ANSWER
    terms = gold_subgraph_terms(gold, g)
    touched = any(
        normalize_answer(line) in terms for t in turns for line in (t.response_lines or ())
    )
    if not touched:
        return Category.KG_INCOMPLETE
    return Category.WRONG_ANSWER
