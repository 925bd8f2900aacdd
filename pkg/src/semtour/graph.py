"""Directed multigraph of entities with typed, metadata-bearing edges.

Parallel edges between the same entity pair are legal; each edge has its
own id and metadata.  Higher-level relations between containers can be
derived from member-level relations via part-of membership edges.
"""

from __future__ import annotations

import hashlib
import json
import threading
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Iterator, Optional

from .dataspace import DataPoint
from .errors import (
    AmbiguousContainer,
    DanglingSource,
    DuplicateId,
    SelfLoopForbidden,
    UnknownEdge,
    UnknownEntity,
    UnknownRelationType,
)

USER_CREATED = "user_created"


class EntityKind(str, Enum):
    NORM = "norm"
    LAW = "law"
    CONCEPT = "concept"
    RULING = "ruling"
    COMMENTARY = "commentary"
    FACT = "fact"
    USER_DEFINED = "user_defined"


class Interpretation(str, Enum):
    GRAMMATICAL = "grammatical"
    TELEOLOGICAL = "teleological"
    SYSTEMATIC = "systematic"
    HISTORICAL = "historical"


@dataclass(frozen=True)
class Entity:
    id: str
    label: str
    kind: EntityKind
    source: str = USER_CREATED  # DataPoint id, or the user_created marker
    attributes: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.label:
            raise ValueError("entity label must be non-empty")

    def attr(self, key: str, default: Optional[str] = None) -> Optional[str]:
        for k, v in self.attributes:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class RelationType:
    id: str
    name: str
    induced_parent: Optional[str] = None
    allow_self_loops: bool = False


@dataclass(frozen=True)
class RelationMetadata:
    provenance: str  # "extractor:<name>", "user", or "induced"
    entries: tuple[tuple[str, str], ...] = ()
    interpretation: Optional[Interpretation] = None

    def __post_init__(self):
        if not self.provenance:
            raise ValueError("provenance must be set")

    def entry(self, key: str, default: Optional[str] = None) -> Optional[str]:
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def content_hash(self) -> str:
        payload = json.dumps(
            {"entries": sorted(self.entries),
             "provenance": self.provenance,
             "interpretation": self.interpretation.value if self.interpretation else None},
            sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Edge:
    id: str
    src: str
    dst: str
    rel: str
    meta: RelationMetadata

    def dedup_key(self) -> tuple[str, str, str, str]:
        return (self.src, self.dst, self.rel, self.meta.content_hash())


# Mapping function: per ordered entity pair, zero or more relations.
MappingFn = Callable[[Entity, Entity], Iterable[tuple[RelationType, RelationMetadata]]]


class KnowledgeGraph:
    """Mutable multigraph container with in/out adjacency indices.

    Build phase is single-writer; once published to sessions all edits go
    through :attr:`write_lock`.
    """

    def __init__(self, graph_id: str = "default"):
        self.id = graph_id
        self.entities: dict[str, Entity] = {}
        self.edges: dict[str, Edge] = {}
        self.relation_types: dict[str, RelationType] = {}
        self.data_points: dict[str, DataPoint] = {}
        self.out_index: dict[str, list[str]] = {}
        self.in_index: dict[str, list[str]] = {}
        self.write_lock = threading.Lock()
        self._edge_seq = 0

    # -- registration --------------------------------------------------------

    def register_relation_type(self, rel: RelationType) -> RelationType:
        existing = self.relation_types.get(rel.id)
        if existing is not None:
            return existing
        self.relation_types[rel.id] = rel
        return rel

    def register_data_point(self, point: DataPoint) -> DataPoint:
        if point.id in self.data_points:
            return self.data_points[point.id]
        self.data_points[point.id] = point
        return point

    def add_entity(self, entity: Entity) -> str:
        if entity.id in self.entities:
            raise DuplicateId(f"entity id {entity.id!r} already present",
                              entity=entity.id)
        if entity.source != USER_CREATED and entity.source not in self.data_points:
            raise DanglingSource(
                f"entity {entity.id!r} references unknown data point {entity.source!r}",
                source=entity.source)
        self.entities[entity.id] = entity
        self.out_index[entity.id] = []
        self.in_index[entity.id] = []
        return entity.id

    def replace_entity(self, entity: Entity) -> None:
        """Swap an entity value in place, keeping its edges (internal use)."""
        if entity.id not in self.entities:
            raise UnknownEntity(f"unknown entity {entity.id!r}", entity=entity.id)
        self.entities[entity.id] = entity

    def add_edge(self, src: str, dst: str, rel: str, meta: RelationMetadata,
                 edge_id: Optional[str] = None) -> str:
        if src not in self.entities:
            raise UnknownEntity(f"unknown src entity {src!r}", entity=src)
        if dst not in self.entities:
            raise UnknownEntity(f"unknown dst entity {dst!r}", entity=dst)
        rel_type = self.relation_types.get(rel)
        if rel_type is None:
            raise UnknownRelationType(f"unknown relation type {rel!r}", relation=rel)
        if src == dst and not rel_type.allow_self_loops:
            raise SelfLoopForbidden(
                f"relation {rel!r} does not allow self-loops", entity=src)
        if edge_id is None:
            edge_id = f"e{self._edge_seq:06d}"
            self._edge_seq += 1
        elif edge_id in self.edges:
            raise DuplicateId(f"edge id {edge_id!r} already present", edge=edge_id)
        edge = Edge(id=edge_id, src=src, dst=dst, rel=rel, meta=meta)
        self.edges[edge_id] = edge
        self.out_index[src].append(edge_id)
        self.in_index[dst].append(edge_id)
        return edge_id

    # -- queries -------------------------------------------------------------

    def get_entity(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownEntity(f"unknown entity {entity_id!r}", entity=entity_id) from None

    def get_edge(self, edge_id: str) -> Edge:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise UnknownEdge(f"unknown edge {edge_id!r}", edge=edge_id) from None

    def get_metadata(self, edge_id: str) -> RelationMetadata:
        return self.get_edge(edge_id).meta

    def out_edges(self, entity_id: str) -> list[Edge]:
        return [self.edges[eid] for eid in self.out_index.get(entity_id, ())]

    def in_edges(self, entity_id: str) -> list[Edge]:
        return [self.edges[eid] for eid in self.in_index.get(entity_id, ())]

    def search_entities(self, query: str) -> list[Entity]:
        """Case-insensitive substring search over labels, then payload text."""
        needle = query.lower()
        hits = [e for e in self.entities.values() if needle in e.label.lower()]
        hit_ids = {e.id for e in hits}
        for e in self.entities.values():
            if e.id in hit_ids or e.source == USER_CREATED:
                continue
            point = self.data_points.get(e.source)
            if point is not None and needle in point.payload.lower():
                hits.append(e)
        return sorted(hits, key=lambda e: e.id)

    # -- construction helpers ------------------------------------------------

    def apply_mapping(self, mapper: MappingFn,
                      pairs: Iterable[tuple[Entity, Entity]]) -> list[str]:
        """Insert every relation the mapper yields for the given ordered pairs.

        Deduplicates on (src, dst, rel, metadata hash) so that re-applying a
        deterministic mapper adds nothing.
        """
        seen = {edge.dedup_key() for edge in self.edges.values()}
        added: list[str] = []
        for u, v in pairs:
            for rel_type, meta in mapper(u, v):
                self.register_relation_type(rel_type)
                key = (u.id, v.id, rel_type.id, meta.content_hash())
                if key in seen:
                    continue
                seen.add(key)
                added.append(self.add_edge(u.id, v.id, rel_type.id, meta))
        return added

    def neighborhood(self, entity_id: str, depth: int,
                     direction: str = "both") -> "KnowledgeGraph":
        """Induced subgraph of entities within ``depth`` directed hops."""
        if entity_id not in self.entities:
            raise UnknownEntity(f"unknown entity {entity_id!r}", entity=entity_id)
        if depth < 1:
            raise ValueError("depth must be >= 1")
        reached = {entity_id}
        frontier = deque([(entity_id, 0)])
        while frontier:
            node, d = frontier.popleft()
            if d >= depth:
                continue
            neighbors: list[str] = []
            if direction in ("out", "both"):
                neighbors += [self.edges[eid].dst for eid in self.out_index[node]]
            if direction in ("in", "both"):
                neighbors += [self.edges[eid].src for eid in self.in_index[node]]
            for nb in neighbors:
                if nb not in reached:
                    reached.add(nb)
                    frontier.append((nb, d + 1))
        return self.induced_subgraph(reached)

    def induced_subgraph(self, entity_ids: Iterable[str]) -> "KnowledgeGraph":
        keep = set(entity_ids)
        sub = KnowledgeGraph()
        sub.relation_types = dict(self.relation_types)
        for eid in sorted(keep):
            entity = self.entities[eid]
            if entity.source != USER_CREATED and entity.source in self.data_points:
                sub.register_data_point(self.data_points[entity.source])
            sub.add_entity(entity)
        for edge in self.edges.values():
            if edge.src in keep and edge.dst in keep:
                sub.add_edge(edge.src, edge.dst, edge.rel, edge.meta, edge_id=edge.id)
        return sub

    def induce_relations(self, membership_rel: str, base_rel: str) -> list[str]:
        """Derive container-level edges from member-level base edges.

        Membership edges run member -> container.  For every base edge
        (u, v) whose containers differ, one edge (U, V) of the induced
        relation type exists, carrying the supporting count and edge ids.
        Idempotent: supported pairs already present are not re-added.
        """
        if membership_rel not in self.relation_types:
            raise UnknownRelationType(f"unknown relation type {membership_rel!r}",
                                      relation=membership_rel)
        if base_rel not in self.relation_types:
            raise UnknownRelationType(f"unknown relation type {base_rel!r}",
                                      relation=base_rel)

        container: dict[str, str] = {}
        for edge in self.edges.values():
            if edge.rel != membership_rel:
                continue
            previous = container.get(edge.src)
            if previous is not None and previous != edge.dst:
                raise AmbiguousContainer(
                    f"entity {edge.src!r} has multiple containers under "
                    f"{membership_rel!r}", entity=edge.src)
            container[edge.src] = edge.dst

        support: dict[tuple[str, str], list[str]] = {}
        for edge_id in sorted(self.edges):
            edge = self.edges[edge_id]
            if edge.rel != base_rel:
                continue
            src_container = container.get(edge.src)
            dst_container = container.get(edge.dst)
            if src_container is None or dst_container is None:
                continue
            if src_container == dst_container:
                continue
            support.setdefault((src_container, dst_container), []).append(edge_id)

        induced_rel_id = f"{base_rel}_induced"
        if induced_rel_id not in self.relation_types:
            base = self.relation_types[base_rel]
            self.register_relation_type(RelationType(
                id=induced_rel_id, name=f"{base.name} (induced)",
                induced_parent=base_rel))

        existing_pairs = {
            (e.src, e.dst) for e in self.edges.values() if e.rel == induced_rel_id
        }
        added: list[str] = []
        for (src_c, dst_c) in sorted(support):
            if (src_c, dst_c) in existing_pairs:
                continue
            edge_ids = support[(src_c, dst_c)]
            meta = RelationMetadata(
                provenance="induced",
                entries=(("count", str(len(edge_ids))),
                         ("support", ",".join(edge_ids))))
            added.append(self.add_edge(src_c, dst_c, induced_rel_id, meta))
        return added

    # -- integrity -----------------------------------------------------------

    def check_integrity(self) -> list[str]:
        """Full-scan index/endpoint consistency check; returns violations."""
        problems: list[str] = []
        indexed = set()
        for key, index in (("out", self.out_index), ("in", self.in_index)):
            for entity_id, edge_ids in index.items():
                for eid in edge_ids:
                    indexed.add(eid)
                    edge = self.edges.get(eid)
                    if edge is None:
                        problems.append(f"{key} index of {entity_id} lists missing edge {eid}")
                        continue
                    endpoint = edge.src if key == "out" else edge.dst
                    if endpoint != entity_id:
                        problems.append(f"edge {eid} misfiled in {key} index of {entity_id}")
        for eid, edge in self.edges.items():
            if edge.src not in self.entities or edge.dst not in self.entities:
                problems.append(f"edge {eid} has dangling endpoint")
            if eid not in indexed:
                problems.append(f"edge {eid} absent from indices")
        return problems
