"""In-memory triple store exposing the four navigation verbs.

Every query fails silently: an unknown entity, an entity without edges in the
requested direction and a relation absent at the entity all return ``[]``.
"""

from __future__ import annotations

import logging
from bisect import insort
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

logger = logging.getLogger(__name__)

RELATION_VERBS = ("get_tail_relations", "get_head_relations")
ENTITY_VERBS = ("get_tail_entities", "get_head_entities")
VERBS = RELATION_VERBS + ENTITY_VERBS

DEFAULT_CAP = 100


class GraphLoadError(ValueError):
    """A triple or alias row could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None, source: str = "triples"):
        self.line_no = line_no
        self.source = source
        where = f"{source} line {line_no}: " if line_no is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Triple:
    head: str
    relation: str
    tail: str

    def __post_init__(self):
        for name in ("head", "relation", "tail"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise ValueError(f"empty {name} in triple")
        for name in ("head", "tail"):
            if any(ch.isspace() for ch in getattr(self, name)):
                raise ValueError(f"entity id contains whitespace: {getattr(self, name)!r}")
        if any(ch in "\t\n\r" for ch in self.relation):
            raise ValueError(f"relation contains a tab or newline: {self.relation!r}")


@dataclass(frozen=True)
class QueryResult:
    """Rendered response lines for one verb call."""

    lines: list[str]
    truncated: bool = False


def _freeze(index: dict[str, dict[str, list[str]]]) -> dict[str, dict[str, tuple[str, ...]]]:
    return {
        node: {rel: tuple(targets) for rel, targets in sorted(by_rel.items())}
        for node, by_rel in index.items()
    }


@dataclass(frozen=True, eq=False)
class KnowledgeGraph:
    """Immutable doubly-indexed triple set.

    ``forward`` maps head -> relation -> sorted tails and ``reverse`` maps
    tail -> relation -> sorted heads. Build instances with :func:`load_graph`
    or :meth:`from_triples`.
    """

    forward: Mapping[str, Mapping[str, tuple[str, ...]]]
    reverse: Mapping[str, Mapping[str, tuple[str, ...]]]
    aliases: Mapping[str, str] = field(default_factory=dict)
    n_triples: int = 0
    alias_overrides: int = 0

    @classmethod
    def from_triples(
        cls,
        triples: Iterable[Triple | tuple[str, str, str]],
        aliases: Mapping[str, str] | Iterable[tuple[str, str]] | None = None,
    ) -> "KnowledgeGraph":
        forward: dict[str, dict[str, list[str]]] = {}
        reverse: dict[str, dict[str, list[str]]] = {}
        seen: set[Triple] = set()
        for t in triples:
            if not isinstance(t, Triple):
                t = Triple(*t)
            if t in seen:
                continue
            seen.add(t)
            insort(forward.setdefault(t.head, {}).setdefault(t.relation, []), t.tail)
            insort(reverse.setdefault(t.tail, {}).setdefault(t.relation, []), t.head)

        alias_map: dict[str, str] = {}
        overrides = 0
        items = aliases.items() if isinstance(aliases, Mapping) else (aliases or ())
        for entity, label in items:
            if entity in alias_map and alias_map[entity] != label:
                overrides += 1
            alias_map[entity] = label
        return cls(_freeze(forward), _freeze(reverse), alias_map, len(seen), overrides)

    def __len__(self) -> int:
        return self.n_triples

    # -- the four verbs -------------------------------------------------

    def get_tail_relations(self, entity: str) -> list[str]:
        return list(self.forward.get(entity, {}))

    def get_head_relations(self, entity: str) -> list[str]:
        return list(self.reverse.get(entity, {}))

    def get_tail_entities(self, entity: str, relation: str) -> list[str]:
        return list(self.forward.get(entity, {}).get(relation, ()))

    def get_head_entities(self, entity: str, relation: str) -> list[str]:
        return list(self.reverse.get(entity, {}).get(relation, ()))

    # -- helpers ----------------------------------------------------------

    def label_of(self, entity: str) -> str:
        return self.aliases.get(entity, entity)

    @property
    def entities(self) -> list[str]:
        return sorted(set(self.forward) | set(self.reverse))

    @property
    def relations(self) -> list[str]:
        rels: set[str] = set()
        for by_rel in self.forward.values():
            rels.update(by_rel)
        return sorted(rels)

    def relation_frequencies(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for by_rel in self.forward.values():
            for rel, tails in by_rel.items():
                counts[rel] = counts.get(rel, 0) + len(tails)
        return dict(sorted(counts.items()))

    def triples(self) -> Iterable[Triple]:
        for head, by_rel in sorted(self.forward.items()):
            for rel, tails in by_rel.items():
                for tail in tails:
                    yield Triple(head, rel, tail)

    def call(self, verb: str, entity: str, relation: str | None = None) -> list[str]:
        """Dispatch a verb by name; raises ``ValueError`` on unknown verb or arity."""
        if verb in RELATION_VERBS:
            if relation is not None:
                raise ValueError(f"{verb} takes one argument")
            return getattr(self, verb)(entity)
        if verb in ENTITY_VERBS:
            if relation is None:
                raise ValueError(f"{verb} takes two arguments")
            return getattr(self, verb)(entity, relation)
        raise ValueError(f"unknown verb {verb!r}")

    def render(self, verb: str, items: list[str], mode: str = "label") -> list[str]:
        """Surface text for a verb's raw results: relations as-is, entities as labels."""
        if verb in RELATION_VERBS or mode == "id":
            return list(items)
        if mode == "both":
            return [f"{self.label_of(e)} ({e})" if e in self.aliases else e for e in items]
        return [self.label_of(e) for e in items]

    def query(
        self,
        verb: str,
        entity: str,
        relation: str | None = None,
        cap: int | None = DEFAULT_CAP,
        mode: str = "label",
    ) -> QueryResult:
        lines = self.render(verb, self.call(verb, entity, relation), mode)
        if cap is not None and len(lines) > cap:
            return QueryResult(lines[:cap], True)
        return QueryResult(lines, False)

    def neighbors(self, entity: str) -> list[str]:
        """Entities one edge away in either direction, any relation."""
        out: set[str] = set()
        for index in (self.forward, self.reverse):
            for targets in index.get(entity, {}).values():
                out.update(targets)
        return sorted(out)


def _rows(source: Iterable[str], n_fields: int, kind: str):
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != n_fields or not all(p.strip() for p in parts):
            raise GraphLoadError(
                f"expected {n_fields} tab-separated fields, got {len(parts)}", line_no, kind
            )
        yield line_no, [p.strip() for p in parts]


def load_graph(
    triples_source: Iterable[str],
    aliases_source: Iterable[str] | None = None,
) -> KnowledgeGraph:
    """Build a graph from TSV line streams (open files or lists of lines)."""

    def triples():
        for line_no, (h, r, t) in _rows(triples_source, 3, "triples"):
            try:
                yield Triple(h, r, t)
            except ValueError as exc:
                raise GraphLoadError(str(exc), line_no) from None

    alias_rows = (
        (e, label) for _, (e, label) in _rows(aliases_source, 2, "aliases")
    ) if aliases_source is not None else None
    g = KnowledgeGraph.from_triples(triples(), alias_rows)
    if g.alias_overrides:
        logger.warning("%d duplicate alias rows; last label wins", g.alias_overrides)
    return g


def load_graph_files(triples_path, aliases_path=None) -> KnowledgeGraph:
    with open(triples_path, encoding="utf-8") as tf:
        if aliases_path is None:
            return load_graph(tf)
        with open(aliases_path, encoding="utf-8") as af:
            return load_graph(tf, af)


def two_hop_solvable(
    g: KnowledgeGraph,
    seeds: list[str],
    gold_labels: list[str],
    max_hops: int = 2,
) -> bool:
    """Bounded BFS from ``seeds`` over both edge directions.

    True iff an entity whose normalized label (or id) matches a normalized gold
    label is reached within ``max_hops`` edges. Seeds themselves are at hop 0
    and do not count as answers.
    """
    from .grammar import normalize_answer

    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    if not seeds:
        raise ValueError("seeds must be non-empty")
    targets = {normalize_answer(x) for x in gold_labels} - {""}
    if not targets:
        return False

    depth = {s: 0 for s in seeds}
    queue = deque(seeds)
    while queue:
        node = queue.popleft()
        if depth[node] == max_hops:
            continue
        for nxt in g.neighbors(node):
            if nxt in depth:
                continue
            depth[nxt] = depth[node] + 1
            if normalize_answer(g.label_of(nxt)) in targets:
                return True
            queue.append(nxt)
    return False
