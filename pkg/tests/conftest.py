import pytest

from kgtool.grammar import Trajectory, Turn, parse_call
from kgtool.records import GoldRecord
from kgtool.synthetic import DEMO_ALIASES, DEMO_TRIPLES, demo_graph


@pytest.fixture
def g0():
    return demo_graph()


@pytest.fixture
def g0_rows():
    return [f"{h}\t{r}\t{t}\n" for h, r, t in DEMO_TRIPLES]


@pytest.fixture
def g0_alias_rows():
    return [f"{e}\t{label}\n" for e, label in DEMO_ALIASES.items()]


@pytest.fixture
def religion_gold():
    return GoldRecord("q1", ("judaism",), (("m.01", "people.person.religion", "m.02"),), ("m.01",))


@pytest.fixture
def wyler_gold():
    return GoldRecord(
        "q2",
        ("william wyler",),
        (("m.04", "film.actor.film", "m.05"), ("m.05", "film.film.directed_by", "m.07")),
        ("m.04",),
    )


def make_traj(*turns, answer=None, qid="q"):
    """turns: (call_text, response_lines or None[, think])."""
    built = []
    for spec in turns:
        call_text, resp = spec[0], spec[1]
        think = spec[2] if len(spec) > 2 else None
        call = parse_call(call_text) if call_text is not None else None
        built.append(Turn(think, call, tuple(resp) if resp is not None else None))
    return Trajectory(question_id=qid, turns=tuple(built), final_answer_raw=answer).with_flags()
