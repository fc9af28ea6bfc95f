import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgtool.grammar import (
    DEGENERATE_LOOP,
    MISSING_ANSWER,
    OVERLONG,
    SEARCH_IN_THINK,
    UNPARSED_CALL,
    format_flags,
    normalize_answer,
    parse_call,
    parse_transcript,
    render_transcript,
)
from kgtool.policies import ScriptedPolicy, run_policy
from kgtool.synthetic import synthetic_world


def test_minimal_well_formed():
    t = parse_transcript(
        "<search>get_tail_relations(m.01)</search><tool_response>people.person.religion</tool_response>"
        "<answer>judaism</answer>"
    )
    assert len(t.turns) == 1
    call = t.turns[0].call
    assert call.parse_ok and call.verb == "get_tail_relations" and call.entity_arg == "m.01"
    assert t.turns[0].response_lines == ("people.person.religion",)
    assert t.final_answer_raw == "judaism"
    assert t.format_flags == frozenset()


def test_search_inside_think_is_flagged_not_executed():
    t = parse_transcript("<think>hmm <search>get_tail_relations(m.01)</search> ok</think><answer>x</answer>")
    assert SEARCH_IN_THINK in t.format_flags
    assert t.n_calls == 0


def test_no_tags():
    t = parse_transcript("no tags at all")
    assert t.turns == () and t.format_flags == {MISSING_ANSWER}


def test_last_answer_wins_and_empty_response():
    t = parse_transcript(
        "<answer>first</answer><search>get_tail_entities(m.01, r.x)</search>"
        "<tool_response>[]</tool_response><answer> second </answer>"
    )
    assert t.final_answer_raw == "second"
    assert t.turns[0].response_lines == ()


def test_unclosed_tags_do_not_raise():
    t = parse_transcript("<think>partial <search>get_tail_relations(m.01)<answer>x")
    assert t.n_calls == 1 and t.final_answer_raw == "x"
    assert SEARCH_IN_THINK not in t.format_flags


@pytest.mark.parametrize(
    "text, ok, verb, ent, rel",
    [
        ("get_tail_entities(m.01, people.person.religion)", True, "get_tail_entities", "m.01", "people.person.religion"),
        ("get_tail_entities(m.01)", False, None, None, None),
        ("lookup(m.01)", False, None, None, None),
        ("  get_head_relations( m.07 ) ", True, "get_head_relations", "m.07", None),
        ("get_tail_relations(m.01, r.x)", False, None, None, None),
        ("get_head_entities('m.07', \"film.film.directed_by\")", True, "get_head_entities", "m.07", "film.film.directed_by"),
        ("get_tail_entities(m.01, )", False, None, None, None),
        ("get_tail_relations", False, None, None, None),
    ],
)
def test_parse_call(text, ok, verb, ent, rel):
    c = parse_call(text)
    assert (c.parse_ok, c.verb, c.entity_arg, c.relation_arg) == (ok, verb, ent, rel)
    assert c.raw_text == text


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("The Judaism.", "judaism"),
        ("  William  Wyler ", "william wyler"),
        ("", ""),
        ("Ben-Hur", "benhur"),
        ("a tale of the two cities", "tale of two cities"),
        ("«Ça va»", "ça va"),
    ],
)
def test_normalize_answer(raw, expected):
    assert normalize_answer(raw) == expected


@settings(max_examples=500)
@given(st.text())
def test_normalize_idempotent(x):
    once = normalize_answer(x)
    assert normalize_answer(once) == once


TOKENS = list("<>/ abc()\n,") + [
    "<think>", "</think>", "<search>", "</search>", "<tool_response>", "</tool_response>",
    "<answer>", "</answer>", "get_tail_relations(m.1)", "[]",
]


@settings(max_examples=500)
@given(st.lists(st.sampled_from(TOKENS), max_size=30).map("".join) | st.text())
def test_parse_is_total(text):
    t = parse_transcript(text)
    assert (MISSING_ANSWER in t.format_flags) == (t.final_answer_raw is None)
    for turn in t.turns:
        assert turn.response_lines is None or turn.call is not None


@given(st.binary(max_size=200))
def test_parse_accepts_bytes(data):
    parse_transcript(data)


def _closed_think_has_search(text):
    """Independent check: scan for closed think spans, first-match left to right."""
    import re

    pos, found = 0, False
    tag_re = re.compile(r"<(think|search|tool_response|answer)>")
    while (m := tag_re.search(text, pos)) is not None:
        close = text.find(f"</{m.group(1)}>", m.end())
        if close == -1:
            nxt = tag_re.search(text, m.end())
            pos = nxt.start() if nxt else len(text)
            continue
        if m.group(1) == "think" and "<search>" in text[m.end():close]:
            found = True
        pos = close + len(m.group(1)) + 3
    return found


@settings(max_examples=300)
@given(st.lists(st.sampled_from(["<think>", "</think>", "<search>", "</search>", "x", " ", "<answer>", "</answer>"]), max_size=14))
def test_flag_soundness(parts):
    text = "".join(parts)
    assert (SEARCH_IN_THINK in parse_transcript(text).format_flags) == _closed_think_has_search(text)


def test_format_flags():
    two = parse_transcript(
        "<search>get_tail_relations(m.01)</search><tool_response>r</tool_response>"
        "<search>get_tail_entities(m.01, r)</search><tool_response>x</tool_response><answer>x</answer>"
    )
    assert format_flags(two) == frozenset()
    loop = parse_transcript("<search>get_tail_relations(m.01)</search>" * 3 + "<answer>x</answer>")
    assert format_flags(loop) == {DEGENERATE_LOOP}
    broken = parse_transcript("<search>get_tail_relations(m.01)</search>")
    assert format_flags(broken) == {MISSING_ANSWER}
    bad = parse_transcript("<search>oops</search><answer>x</answer>")
    assert UNPARSED_CALL in bad.format_flags
    long = parse_transcript("<answer>" + "y" * 100 + "</answer>", max_bytes=50)
    assert OVERLONG in long.format_flags


@pytest.mark.parametrize("policy", ["gold-path", "quote-and-stop", "ritual-single-call", "memory-answer", "format-drift"])
def test_render_parse_round_trip(policy):
    g, golds = synthetic_world(40, seed=3)
    pol = ScriptedPolicy(policy, severity=0.5, memory={golds[0].qid: "something"})
    for gold in golds:
        traj = run_policy(pol, gold, g)
        back = parse_transcript(render_transcript(traj), question_id=traj.question_id)
        assert back.turns == traj.turns
        assert back.final_answer_raw == traj.final_answer_raw
        assert back.format_flags == traj.format_flags
