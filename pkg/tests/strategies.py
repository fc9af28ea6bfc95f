"""Hypothesis strategies for random trajectories and gold records."""

from hypothesis import strategies as st

from kgtool.grammar import Trajectory, Turn, parse_call
from kgtool.records import GoldRecord

ENTITIES = ["m.01", "m.02", "m.04", "m.05", "m.07", "m.99"]
RELATIONS = ["people.person.religion", "film.actor.film", "film.film.directed_by", "people.person.religions"]
LABELS = ["judaism", "roman holiday", "william wyler", "islam", "people.person.religion", "William Wyler!"]

calls = st.one_of(
    st.builds(lambda v, e: f"{v}({e})", st.sampled_from(["get_tail_relations", "get_head_relations"]), st.sampled_from(ENTITIES)),
    st.builds(lambda v, e, r: f"{v}({e}, {r})", st.sampled_from(["get_tail_entities", "get_head_entities"]),
              st.sampled_from(ENTITIES), st.sampled_from(RELATIONS)),
    st.sampled_from(["lookup(m.01)", "get_tail_entities(m.01)", "???"]),
)

turns = st.builds(
    lambda think, call, resp: Turn(think, parse_call(call), tuple(resp) if resp is not None else None),
    st.one_of(st.none(), st.sampled_from(["let me check", "look up m.01 people.person.religion", ""])),
    calls,
    st.one_of(st.none(), st.lists(st.sampled_from(LABELS), max_size=3)),
)

trajectories = st.builds(
    lambda ts, think_only, ans: Trajectory("q", tuple(ts) + tuple(Turn(x) for x in think_only), ans).with_flags(),
    st.lists(turns, max_size=6),
    st.lists(st.sampled_from(["thinking"]), max_size=1),
    st.one_of(st.none(), st.sampled_from(LABELS + ["", "the judaism", "wyler"])),
)

golds = st.builds(
    lambda answers, hops: GoldRecord("q", tuple(answers), tuple(hops), ("m.01",)),
    st.lists(st.sampled_from(["judaism", "william wyler", "roman holiday"]), min_size=1, max_size=2),
    st.lists(st.tuples(st.sampled_from(ENTITIES[:5]), st.sampled_from(RELATIONS[:3]), st.sampled_from(ENTITIES[:5])), max_size=2),
)
