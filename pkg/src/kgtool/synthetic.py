"""Small fixture graphs and random gold sets for tests, demos and simulation."""

from __future__ import annotations

import random
from typing import Iterable

from .graph import KnowledgeGraph, Triple
from .records import GoldRecord

DEMO_TRIPLES = (
    ("m.01", "people.person.religion", "m.02"),
    ("m.01", "people.person.place_of_birth", "m.03"),
    ("m.02", "religion.religion.founders", "m.06"),
    ("m.04", "film.actor.film", "m.05"),
    ("m.05", "film.film.directed_by", "m.07"),
    ("m.04", "people.person.nationality", "m.08"),
    ("m.09", "film.film.directed_by", "m.07"),
)

DEMO_ALIASES = {
    "m.01": "ovadia yosef",
    "m.02": "judaism",
    "m.03": "jerusalem",
    "m.04": "audrey hepburn",
    "m.05": "roman holiday",
    "m.06": "abraham",
    "m.07": "william wyler",
    "m.08": "united kingdom",
    "m.09": "ben-hur",
}

DEMO_GOLDS = (
    GoldRecord("demo-1", ("judaism",), (DEMO_TRIPLES[0],), ("m.01",), "What religion does Ovadia Yosef lead?"),
    GoldRecord(
        "demo-2",
        ("william wyler",),
        (DEMO_TRIPLES[3], DEMO_TRIPLES[4]),
        ("m.04",),
        "Who directed the film starring Audrey Hepburn?",
    ),
    GoldRecord("demo-3", ("jerusalem",), (DEMO_TRIPLES[1],), ("m.01",), "Where was Ovadia Yosef born?"),
    GoldRecord("demo-4", ("united kingdom",), (DEMO_TRIPLES[5],), ("m.04",), "What is Audrey Hepburn's nationality?"),
    GoldRecord("demo-5", ("abraham",), (DEMO_TRIPLES[0], DEMO_TRIPLES[2]), ("m.01",), "Who founded Ovadia Yosef's religion?"),
    GoldRecord("demo-6", ("william wyler",), (DEMO_TRIPLES[6],), ("m.09",), "Who directed Ben-Hur?"),
)

RELATION_VOCAB = (
    "film.actor.film",
    "film.film.directed_by",
    "film.film.genre",
    "location.location.containedby",
    "music.artist.genre",
    "organization.organization.founders",
    "people.person.nationality",
    "people.person.place_of_birth",
    "people.person.religion",
    "people.person.spouse_s",
    "sports.sports_team.arena",
    "book.author.works_written",
)


def demo_graph() -> KnowledgeGraph:
    return KnowledgeGraph.from_triples(DEMO_TRIPLES, DEMO_ALIASES)


def demo_golds() -> list[GoldRecord]:
    return list(DEMO_GOLDS)


def synthetic_world(
    n_questions: int,
    seed: int = 0,
    max_hops: int = 2,
    distractors: int = 3,
    relations: Iterable[str] = RELATION_VOCAB,
    include_demo: bool = False,
) -> tuple[KnowledgeGraph, list[GoldRecord]]:
    """Random forest of gold chains with distractor edges; every chain is executable.

    Entity ids look like ``m.x000123`` with labels ``entity 000123``; labels have a
    fixed width so no label is a substring of another.
    """
    rng = random.Random(seed)
    vocab = list(relations)
    triples: list[tuple[str, str, str]] = list(DEMO_TRIPLES) if include_demo else []
    aliases: dict[str, str] = dict(DEMO_ALIASES) if include_demo else {}
    golds: list[GoldRecord] = list(DEMO_GOLDS) if include_demo else []
    counter = 0

    def new_entity() -> str:
        nonlocal counter
        counter += 1
        eid = f"m.x{counter:06d}"
        aliases[eid] = f"entity {counter:06d}"
        return eid

    for q in range(n_questions):
        hops = rng.randint(1, max_hops)
        seed_entity = head = new_entity()
        chain: list[Triple] = []
        for _ in range(hops):
            rel = rng.choice(vocab)
            tail = new_entity()
            chain.append(Triple(head, rel, tail))
            triples.append((head, rel, tail))
            for _ in range(rng.randint(0, distractors)):
                triples.append((head, rng.choice(vocab), new_entity()))
            head = tail
        golds.append(
            GoldRecord(
                qid=f"syn-{q:05d}",
                answers=(aliases[chain[-1].tail],),
                chain=tuple(chain),
                seeds=(seed_entity,),
                question=f"synthetic {hops}-hop question {q}",
            )
        )
    return KnowledgeGraph.from_triples(triples, aliases), golds
