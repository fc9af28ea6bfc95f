"""Transcript parsing, call parsing and answer normalization.

Transcripts use flat, non-nested tags::

    <think>...</think><search>verb(args)</search><tool_response>...</tool_response>
    <answer>...</answer>

Parsing is total: anything malformed becomes a flag on the trajectory.
"""

from __future__ import annotations

import re
import string
import unicodedata
from dataclasses import dataclass, field, replace

from .graph import ENTITY_VERBS, RELATION_VERBS, VERBS

MAX_CALLS = 5
DEFAULT_MAX_BYTES = 32_768

MISSING_ANSWER = "missing_answer_envelope"
SEARCH_IN_THINK = "search_inside_think"
UNPARSED_CALL = "unparsed_call"
OVERLONG = "overlong"
DEGENERATE_LOOP = "degenerate_loop"
FLAGS = (MISSING_ANSWER, SEARCH_IN_THINK, UNPARSED_CALL, OVERLONG, DEGENERATE_LOOP)

EMPTY_RESPONSE = "[]"

_ARTICLES = frozenset({"a", "an", "the"})
_ASCII_PUNCT = frozenset(string.punctuation)


def _is_punct(ch: str) -> bool:
    return ch in _ASCII_PUNCT or unicodedata.category(ch).startswith("P")


def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation, drop the words a/an/the, collapse whitespace."""
    text = "".join(ch for ch in text.lower() if not _is_punct(ch))
    return " ".join(tok for tok in text.split() if tok not in _ARTICLES)


@dataclass(frozen=True)
class ToolCall:
    raw_text: str
    parse_ok: bool = False
    verb: str | None = None
    entity_arg: str | None = None
    relation_arg: str | None = None

    @property
    def key(self) -> tuple:
        """Identity used for loop detection."""
        if self.parse_ok:
            return (self.verb, self.entity_arg, self.relation_arg)
        return ("", "".join(self.raw_text.split()))

    def render(self) -> str:
        if not self.parse_ok:
            return self.raw_text
        args = self.entity_arg if self.relation_arg is None else f"{self.entity_arg}, {self.relation_arg}"
        return f"{self.verb}({args})"


_CALL_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$", re.DOTALL)


def _clean_arg(arg: str) -> str:
    arg = arg.strip()
    if len(arg) >= 2 and arg[0] == arg[-1] and arg[0] in "'\"":
        arg = arg[1:-1].strip()
    return arg


def parse_call(text: str) -> ToolCall:
    """Parse ``verb(entity)`` or ``verb(entity, relation)`` against the 4-verb schema."""
    m = _CALL_RE.match(text)
    if not m:
        return ToolCall(text)
    verb, body = m.group(1), m.group(2)
    if verb not in VERBS or "(" in body or ")" in body:
        return ToolCall(text)
    args = [_clean_arg(a) for a in body.split(",")]
    if not all(args):
        return ToolCall(text)
    if verb in RELATION_VERBS and len(args) == 1:
        return ToolCall(text, True, verb, args[0])
    if verb in ENTITY_VERBS and len(args) == 2:
        return ToolCall(text, True, verb, args[0], args[1])
    return ToolCall(text)


@dataclass(frozen=True)
class Turn:
    think_span: str | None = None
    call: ToolCall | None = None
    response_lines: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.response_lines is not None and self.call is None:
            raise ValueError("a response requires a call")


@dataclass(frozen=True)
class Trajectory:
    question_id: str = ""
    turns: tuple[Turn, ...] = ()
    final_answer_raw: str | None = None
    format_flags: frozenset[str] = field(default_factory=frozenset)
    raw_bytes: int | None = None

    @property
    def calls(self) -> list[ToolCall]:
        return [t.call for t in self.turns if t.call is not None]

    @property
    def call_turns(self) -> list[Turn]:
        return [t for t in self.turns if t.call is not None]

    @property
    def n_calls(self) -> int:
        return len(self.calls)

    @property
    def answer(self) -> str:
        """Normalized final answer; empty when the envelope is missing."""
        return normalize_answer(self.final_answer_raw or "")

    def with_flags(self, max_bytes: int | None = DEFAULT_MAX_BYTES) -> "Trajectory":
        return replace(self, format_flags=format_flags(self, max_bytes))


def parse_response(content: str) -> tuple[str, ...]:
    content = content.strip()
    if not content or content == EMPTY_RESPONSE:
        return ()
    return tuple(line.strip() for line in content.splitlines() if line.strip())


_TAGS = ("think", "search", "tool_response", "answer")
_OPEN_RE = re.compile(r"<(think|search|tool_response|answer)>")


def _spans(text: str):
    """Yield (tag, content, inner_search) scanning left to right, first match wins."""
    pos = 0
    while True:
        m = _OPEN_RE.search(text, pos)
        if m is None:
            return
        tag, start = m.group(1), m.end()
        close = text.find(f"</{tag}>", start)
        if close == -1:
            nxt = _OPEN_RE.search(text, start)
            end = nxt.start() if nxt else len(text)
            content, pos = text[start:end], end
            inner_search = False
        else:
            content, pos = text[start:close], close + len(tag) + 3
            inner_search = tag == "think" and "<search>" in content
        yield tag, content, inner_search


def parse_transcript(text: str, question_id: str = "", max_bytes: int | None = DEFAULT_MAX_BYTES) -> Trajectory:
    """Parse a raw transcript. Never raises on string input.

    ``<search>`` spans that appear inside a closed ``<think>`` span are not
    executed calls; they only set the ``search_inside_think`` flag.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    turns: list[Turn] = []
    think: str | None = None
    call: ToolCall | None = None
    resp: tuple[str, ...] | None = None
    answer: str | None = None
    drift = False

    def flush():
        nonlocal think, call, resp
        if think is not None or call is not None:
            turns.append(Turn(think, call, resp))
        think, call, resp = None, None, None

    for tag, content, inner_search in _spans(text):
        if tag == "think":
            flush()
            think = content.strip()
            drift = drift or inner_search
        elif tag == "search":
            if call is not None:
                flush()
            call = parse_call(content.strip())
        elif tag == "tool_response":
            if call is not None and resp is None:
                resp = parse_response(content)
        else:
            answer = content.strip()
    flush()

    traj = Trajectory(
        question_id=question_id,
        turns=tuple(turns),
        final_answer_raw=answer,
        format_flags=frozenset({SEARCH_IN_THINK}) if drift else frozenset(),
        raw_bytes=len(text.encode("utf-8", errors="replace")),
    )
    return traj.with_flags(max_bytes)


def format_flags(traj: Trajectory, max_bytes: int | None = DEFAULT_MAX_BYTES) -> frozenset[str]:
    """Recompute flags. ``search_inside_think`` is only known at parse time and is carried over."""
    flags = set(traj.format_flags & {SEARCH_IN_THINK})
    if traj.final_answer_raw is None:
        flags.add(MISSING_ANSWER)
    calls = traj.calls
    if any(not c.parse_ok for c in calls):
        flags.add(UNPARSED_CALL)
    if max_bytes is not None and traj.raw_bytes is not None and traj.raw_bytes > max_bytes:
        flags.add(OVERLONG)
    run = 1
    for prev, cur in zip(calls, calls[1:]):
        run = run + 1 if prev.key == cur.key else 1
        if run >= 3:
            flags.add(DEGENERATE_LOOP)
            break
    return frozenset(flags)


def render_transcript(traj: Trajectory) -> str:
    """Inverse of :func:`parse_transcript` for well-formed trajectories."""
    parts: list[str] = []
    for turn in traj.turns:
        if turn.think_span is not None:
            parts.append(f"<think>{turn.think_span}</think>")
        if turn.call is not None:
            parts.append(f"<search>{turn.call.render()}</search>")
            if turn.response_lines is not None:
                body = "\n".join(turn.response_lines) if turn.response_lines else EMPTY_RESPONSE
                parts.append(f"<tool_response>\n{body}\n</tool_response>")
    if traj.final_answer_raw is not None:
        parts.append(f"<answer>{traj.final_answer_raw}</answer>")
    return "\n".join(parts)
