import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgtool.graph import GraphLoadError, KnowledgeGraph, load_graph, two_hop_solvable
from kgtool.synthetic import DEMO_TRIPLES


def brute_tail_relations(triples, e):
    return sorted({r for h, r, t in triples if h == e})


def brute_tail_entities(triples, e, rel):
    return sorted({t for h, r, t in triples if h == e and r == rel})


def test_empty_stream():
    g = load_graph([])
    assert len(g) == 0
    assert g.get_tail_relations("m.01") == []
    assert g.get_head_entities("m.01", "x") == []


def test_g0_counts(g0_rows, g0_alias_rows):
    g = load_graph(g0_rows, g0_alias_rows)
    assert len(g) == len(set(DEMO_TRIPLES)) == 7
    g = load_graph(g0_rows + [g0_rows[2]])
    assert len(g) == 7


def test_comments_and_blank_lines(g0_rows):
    g = load_graph(["# header\n", "\n"] + g0_rows)
    assert len(g) == 7


@pytest.mark.parametrize("row, line", [("m.01\tonly_two\n", 2), ("a\tb\tc\td\n", 2), ("a b\tr\tc\n", 2)])
def test_malformed_row_reports_line(row, line):
    with pytest.raises(GraphLoadError) as exc:
        load_graph(["m.01\tr\tm.02\n", row])
    assert exc.value.line_no == line


def test_duplicate_alias_last_wins(caplog):
    g = load_graph(["m.01\tr\tm.02\n"], ["m.01\tfirst\n", "m.01\tsecond\n"])
    assert g.label_of("m.01") == "second"
    assert g.alias_overrides == 1


def test_verbs_on_g0(g0):
    assert g0.get_tail_relations("m.01") == ["people.person.place_of_birth", "people.person.religion"]
    assert g0.get_tail_relations("m.99") == []
    assert g0.get_tail_relations("m.07") == []
    assert g0.get_head_relations("m.07") == ["film.film.directed_by"]
    assert g0.get_head_relations("m.01") == []
    assert g0.get_head_relations("m.99") == []
    assert g0.get_tail_entities("m.01", "people.person.religion") == ["m.02"]
    assert g0.get_tail_entities("m.01", "film.actor.film") == []
    assert g0.get_tail_entities("m.04", "film.actor.film") == ["m.05"]
    assert g0.get_head_entities("m.07", "film.film.directed_by") == ["m.05", "m.09"]
    assert g0.get_head_entities("m.02", "people.person.religion") == ["m.01"]
    assert g0.get_head_entities("m.02", "film.film.directed_by") == []


def test_label_of(g0):
    assert g0.label_of("m.02") == "judaism"
    assert g0.label_of("m.99") == "m.99"
    assert g0.label_of("m.07") == "william wyler"


def test_rendering_and_truncation(g0):
    assert g0.query("get_head_entities", "m.07", "film.film.directed_by").lines == ["roman holiday", "ben-hur"]
    assert g0.query("get_head_entities", "m.07", "film.film.directed_by", mode="id").lines == ["m.05", "m.09"]
    res = g0.query("get_head_entities", "m.07", "film.film.directed_by", cap=1)
    assert res.lines == ["roman holiday"] and res.truncated
    assert g0.query("get_tail_relations", "m.01").lines == g0.get_tail_relations("m.01")


def test_call_dispatch_errors(g0):
    with pytest.raises(ValueError):
        g0.call("get_tail_entities", "m.01")
    with pytest.raises(ValueError):
        g0.call("lookup", "m.01")


def test_two_hop_solvable(g0):
    assert two_hop_solvable(g0, ["m.01"], ["judaism"], 1)
    assert not two_hop_solvable(g0, ["m.04"], ["william wyler"], 1)
    assert two_hop_solvable(g0, ["m.04"], ["william wyler"], 2)
    assert not two_hop_solvable(g0, ["m.01"], ["nonexistent"], 2)
    # reverse edges count: m.09 -> m.07 <- m.05
    assert two_hop_solvable(g0, ["m.09"], ["Roman Holiday"], 2)
    with pytest.raises(ValueError):
        two_hop_solvable(g0, ["m.01"], ["judaism"], 0)


def random_triples(rng, n_ent, n_rel, n_tri):
    ents = [f"e{i}" for i in range(n_ent)]
    rels = [f"d.t.r{i}" for i in range(n_rel)]
    return [(rng.choice(ents), rng.choice(rels), rng.choice(ents)) for _ in range(n_tri)], ents, rels


def test_matches_enumeration_oracle():
    rng = random.Random(7)
    triples, ents, rels = random_triples(rng, 30, 6, 150)
    g = KnowledgeGraph.from_triples(triples)
    assert len(g) == len(set(triples))
    for e in ents + ["missing"]:
        assert g.get_tail_relations(e) == brute_tail_relations(triples, e)
        assert g.get_head_relations(e) == sorted({r for h, r, t in triples if t == e})
        for r in rels:
            assert g.get_tail_entities(e, r) == brute_tail_entities(triples, e, r)
            assert g.get_head_entities(e, r) == sorted({h for h, rr, t in triples if t == e and rr == r})


triple_lists = st.lists(
    st.tuples(st.sampled_from("abcdefgh"), st.sampled_from(["r.x", "r.y", "r.z"]), st.sampled_from("abcdefgh")),
    max_size=40,
)


@settings(max_examples=200, deadline=None)
@given(triple_lists, st.sampled_from("abcdefghq"), st.sampled_from("abcdefghq"), st.sampled_from(["r.x", "r.y", "r.z", "r.w"]))
def test_direction_symmetry_and_consistency(triples, e1, e2, r):
    g = KnowledgeGraph.from_triples(triples)
    assert (e2 in g.get_tail_entities(e1, r)) == (e1 in g.get_head_entities(e2, r))
    assert (r in g.get_tail_relations(e1)) == bool(g.get_tail_entities(e1, r))
    assert (r in g.get_head_relations(e1)) == bool(g.get_head_entities(e1, r))
    assert g.get_tail_entities(e1, r) == g.get_tail_entities(e1, r)
