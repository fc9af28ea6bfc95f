"""Gold records and the JSON-lines dump formats.

Trajectory dump: ``{"qid": str, "transcript": str}`` per line.
Gold file: ``{"qid", "question", "answers": [str], "chain": [[h, r, t]], "seeds": [str]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .grammar import Trajectory, normalize_answer, parse_transcript, render_transcript
from .graph import Triple


class DataError(ValueError):
    """Malformed input file content; carries the 1-based line number when known."""

    def __init__(self, message: str, line_no: int | None = None, path: str | None = None):
        self.line_no = line_no
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line_no is not None:
            prefix += f"{line_no}:"
        super().__init__(f"{prefix} {message}" if prefix else message)


@dataclass(frozen=True)
class GoldRecord:
    qid: str
    answers: tuple[str, ...]
    chain: tuple[Triple, ...] = ()
    seeds: tuple[str, ...] = ()
    question: str = ""
    normalized: tuple[str, ...] = field(init=False, repr=False)

    def __post_init__(self):
        norm = tuple(normalize_answer(a) for a in self.answers)
        if not norm or not all(norm):
            raise ValueError(f"gold record {self.qid!r} needs non-empty answers after normalization")
        object.__setattr__(self, "normalized", norm)
        object.__setattr__(self, "chain", tuple(t if isinstance(t, Triple) else Triple(*t) for t in self.chain))
        object.__setattr__(self, "answers", tuple(self.answers))
        object.__setattr__(self, "seeds", tuple(self.seeds))

    @property
    def chain_relations(self) -> list[str]:
        return [t.relation for t in self.chain]

    @property
    def chain_entities(self) -> list[str]:
        out: list[str] = []
        for t in self.chain:
            for e in (t.head, t.tail):
                if e not in out:
                    out.append(e)
        return out

    @property
    def seed(self) -> str:
        if self.seeds:
            return self.seeds[0]
        if self.chain:
            return self.chain[0].head
        raise ValueError(f"gold record {self.qid!r} has no seed entity")

    def to_json(self) -> dict:
        return {
            "qid": self.qid,
            "question": self.question,
            "answers": list(self.answers),
            "chain": [[t.head, t.relation, t.tail] for t in self.chain],
            "seeds": list(self.seeds),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GoldRecord":
        return cls(
            qid=str(obj["qid"]),
            answers=tuple(obj["answers"]),
            chain=tuple(Triple(*hop) for hop in obj.get("chain", [])),
            seeds=tuple(obj.get("seeds", [])),
            question=obj.get("question", ""),
        )


def _json_lines(lines: Iterable[str], path: str | None = None) -> Iterator[tuple[int, dict]]:
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON: {exc.msg}", line_no, path) from None
        if not isinstance(obj, dict):
            raise DataError("expected a JSON object", line_no, path)
        yield line_no, obj


def read_golds(lines: Iterable[str], path: str | None = None) -> dict[str, GoldRecord]:
    golds: dict[str, GoldRecord] = {}
    for line_no, obj in _json_lines(lines, path):
        try:
            rec = GoldRecord.from_json(obj)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"bad gold record: {exc}", line_no, path) from None
        golds[rec.qid] = rec
    return golds


def read_trajectories(lines: Iterable[str], path: str | None = None) -> list[Trajectory]:
    out: list[Trajectory] = []
    for line_no, obj in _json_lines(lines, path):
        if "qid" not in obj or not isinstance(obj.get("transcript"), str):
            raise DataError("trajectory rows need 'qid' and string 'transcript'", line_no, path)
        out.append(parse_transcript(obj["transcript"], question_id=str(obj["qid"])))
    return out


def load_golds(path) -> dict[str, GoldRecord]:
    with open(path, encoding="utf-8") as fh:
        return read_golds(fh, str(path))


def load_trajectories(path) -> list[Trajectory]:
    with open(path, encoding="utf-8") as fh:
        return read_trajectories(fh, str(path))


def dumps_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n"


def write_jsonl(path, rows: Iterable[dict]) -> None:
    Path(path).write_text("".join(dumps_line(r) for r in rows), encoding="utf-8")


def trajectory_row(traj: Trajectory) -> dict:
    return {"qid": traj.question_id, "transcript": render_transcript(traj)}


def write_golds(path, golds: Iterable[GoldRecord]) -> None:
    write_jsonl(path, (g.to_json() for g in golds))


def write_trajectories(path, trajs: Iterable[Trajectory]) -> None:
    write_jsonl(path, (trajectory_row(t) for t in trajs))
