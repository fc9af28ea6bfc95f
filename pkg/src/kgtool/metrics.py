"""Per-trajectory scoring and aggregate run reports."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .classify import Category, classify, entity_in_answer, normalized_em, strict_em
from .grammar import Trajectory
from .graph import KnowledgeGraph, VERBS
from .records import GoldRecord
from .rewards import LadderRung, RewardBreakdown, get_rung, mean_breakdown, score
from .stats import wilson_ci


class UnresolvedQid(KeyError):
    pass


@dataclass(frozen=True)
class ScoredTrajectory:
    trajectory: Trajectory
    category: Category
    breakdown: RewardBreakdown
    em: bool
    strict_em: bool
    contem: bool

    @property
    def qid(self) -> str:
        return self.trajectory.question_id

    @property
    def cvt(self) -> bool:
        return self.category is Category.CORRECT_VIA_TOOL

    def to_json(self) -> dict:
        return {
            "qid": self.qid,
            "category": self.category.value,
            "breakdown": self.breakdown.to_json(),
            "flags": sorted(self.trajectory.format_flags),
            "n_calls": self.trajectory.n_calls,
            "em": self.em,
            "strict_em": self.strict_em,
            "contem": self.contem,
        }


def contained_em(traj: Trajectory, gold: GoldRecord) -> bool:
    """Some normalized gold answer occurs as a substring of the normalized prediction."""
    answer = traj.answer
    return any(g in answer for g in gold.normalized)


def resolve(traj: Trajectory, golds: Mapping[str, GoldRecord]) -> GoldRecord:
    try:
        return golds[traj.question_id]
    except KeyError:
        raise UnresolvedQid(f"no gold record for qid {traj.question_id!r}") from None


def score_trajectory(
    traj: Trajectory, gold: GoldRecord, g: KnowledgeGraph | None, rung: str | LadderRung
) -> ScoredTrajectory:
    return ScoredTrajectory(
        trajectory=traj,
        category=classify(traj, gold, g),
        breakdown=score(rung, traj, gold),
        em=normalized_em(traj, gold),
        strict_em=strict_em(traj, gold),
        contem=contained_em(traj, gold),
    )


def score_run(
    trajs: Iterable[Trajectory],
    golds: Mapping[str, GoldRecord],
    g: KnowledgeGraph | None,
    rung: str | LadderRung,
) -> list[ScoredTrajectory]:
    rung = get_rung(rung)
    return [score_trajectory(t, resolve(t, golds), g, rung) for t in trajs]


Interval = tuple[float, float]


@dataclass(frozen=True)
class RunReport:
    n: int
    em_count: int
    strict_em_count: int
    contem_count: int
    cvt_count: int
    tools_per_q: float
    category_histogram: Mapping[str, int]
    verb_counts: Mapping[str, int]
    em_ci: Interval
    cvt_ci: Interval
    contem_ci: Interval
    mean_reward: RewardBreakdown
    hard_cvt: tuple[int, int] | None = None
    label: str = ""

    @property
    def em_rate(self) -> float:
        return self.em_count / self.n

    @property
    def contem_rate(self) -> float:
        return self.contem_count / self.n

    @property
    def cvt_rate(self) -> float:
        return self.cvt_count / self.n

    @property
    def n_calls(self) -> int:
        return sum(self.verb_counts.values())

    def verb_share(self, verb: str) -> float:
        return self.verb_counts.get(verb, 0) / self.n_calls if self.n_calls else 0.0

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "em_count": self.em_count,
            "em_rate": self.em_rate,
            "em_ci": list(self.em_ci),
            "strict_em_count": self.strict_em_count,
            "contem_count": self.contem_count,
            "contem_rate": self.contem_rate,
            "contem_ci": list(self.contem_ci),
            "cvt_count": self.cvt_count,
            "cvt_rate": self.cvt_rate,
            "cvt_ci": list(self.cvt_ci),
            "tools_per_q": self.tools_per_q,
            "category_histogram": dict(self.category_histogram),
            "verb_counts": dict(self.verb_counts),
            "mean_reward": self.mean_reward.to_json(),
            "hard_cvt": list(self.hard_cvt) if self.hard_cvt else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunReport":
        mr = obj["mean_reward"]
        return cls(
            n=obj["n"],
            em_count=obj["em_count"],
            strict_em_count=obj["strict_em_count"],
            contem_count=obj["contem_count"],
            cvt_count=obj["cvt_count"],
            tools_per_q=obj["tools_per_q"],
            category_histogram=obj["category_histogram"],
            verb_counts=obj["verb_counts"],
            em_ci=tuple(obj["em_ci"]),
            cvt_ci=tuple(obj["cvt_ci"]),
            contem_ci=tuple(obj["contem_ci"]),
            mean_reward=RewardBreakdown(mr["rung"], mr["components"], mr["total"]),
            hard_cvt=tuple(obj["hard_cvt"]) if obj.get("hard_cvt") else None,
            label=obj.get("label", ""),
        )


def aggregate(scored: Sequence[ScoredTrajectory], hard_qids: Iterable[str] | None = None, label: str = "") -> RunReport:
    n = len(scored)
    if n == 0:
        raise ValueError("cannot report on an empty run")
    hist = Counter(s.category.value for s in scored)
    histogram = {c.value: hist.get(c.value, 0) for c in Category}
    verbs = Counter(c.verb for s in scored for c in s.trajectory.calls if c.parse_ok)
    verb_counts = {v: verbs.get(v, 0) for v in VERBS}
    unparsed = sum(1 for s in scored for c in s.trajectory.calls if not c.parse_ok)
    if unparsed:
        verb_counts["unparsed"] = unparsed
    em = sum(s.em for s in scored)
    cvt = histogram[Category.CORRECT_VIA_TOOL.value]
    contem = sum(s.contem for s in scored)
    hard = None
    if hard_qids is not None:
        subset = set(hard_qids)
        part = [s for s in scored if s.qid in subset]
        hard = (sum(s.cvt for s in part), len(part))
    return RunReport(
        n=n,
        em_count=em,
        strict_em_count=sum(s.strict_em for s in scored),
        contem_count=contem,
        cvt_count=cvt,
        tools_per_q=sum(s.trajectory.n_calls for s in scored) / n,
        category_histogram=histogram,
        verb_counts=verb_counts,
        em_ci=wilson_ci(em, n),
        cvt_ci=wilson_ci(cvt, n),
        contem_ci=wilson_ci(contem, n),
        mean_reward=mean_breakdown([s.breakdown for s in scored]),
        hard_cvt=hard,
        label=label,
    )


def run_report(
    trajs: Sequence[Trajectory],
    golds: Mapping[str, GoldRecord],
    g: KnowledgeGraph | None,
    rung: str | LadderRung,
    hard_qids: Iterable[str] | None = None,
    label: str = "",
) -> RunReport:
    if not trajs:
        raise ValueError("cannot report on an empty run")
    return aggregate(score_run(trajs, golds, g, rung), hard_qids, label)


def cvt_matches(scored: Sequence[ScoredTrajectory]) -> bool:
    """CvT defined directly (EM and entity-in-answer) agrees with the classifier count."""
    direct = sum(1 for s in scored if s.em and s.trajectory.n_calls and entity_in_answer(s.trajectory))
    return direct == sum(s.cvt for s in scored)


def format_table(reports: Sequence[RunReport]) -> str:
    """Text table with the columns Step, EM, CvT count, CvT %, Wilson CI, Tools/Q."""
    header = ("Step", "EM", "CvT count", "CvT %", "Wilson 95% CI", "Tools/Q")
    rows = [header]
    for r in reports:
        lo, hi = r.cvt_ci
        rows.append((
            r.label or "-",
            f"{r.em_rate:.3f}",
            f"{r.cvt_count} / {r.n}",
            f"{100 * r.cvt_rate:.2f}%",
            f"[{100 * lo:.2f}, {100 * hi:.2f}]",
            f"{r.tools_per_q:.2f}",
        ))
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
