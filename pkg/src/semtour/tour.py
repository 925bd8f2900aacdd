"""Semantic tours: knowledge-graph subgraphs with one staged scene per member.

A semantic tour owns a member set, a scene per member, and the projection
of all graph edges among members.  Collapsing a tour with a depth-first
walk yields an ordinary linear tour; a path-shaped graph collapses to
exactly the path order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .dataspace import (
    LinearTour,
    Scene,
    Selection,
    StagingConfig,
    ViewKind,
    make_linear_tour,
    stage,
)
from .errors import (
    EmptyTour,
    NoMatches,
    SessionMismatch,
    UnknownDocument,
    UnknownEntity,
)
from .extraction import ATTR_MENTIONED_IN
from .graph import Entity, EntityKind, KnowledgeGraph, USER_CREATED

_DEFAULT_VIEW = {
    EntityKind.NORM: ViewKind.ICICLE,
    EntityKind.LAW: ViewKind.TEXT,
    EntityKind.RULING: ViewKind.TEXT,
    EntityKind.COMMENTARY: ViewKind.TEXT,
    EntityKind.FACT: ViewKind.TEXT,
    EntityKind.CONCEPT: ViewKind.ENTITY_CARD,
    EntityKind.USER_DEFINED: ViewKind.ENTITY_CARD,
}

TourSeed = Union[str, tuple[str, int]]  # entity id, or (document id, group index)


@dataclass(frozen=True)
class TourEdge:
    src: str
    dst: str
    edge_id: str


@dataclass(frozen=True)
class SemanticTour:
    id: str
    graph_id: str
    members: frozenset[str]
    scenes: dict[str, Scene]
    tour_edges: tuple[TourEdge, ...]
    seed: TourSeed

    def seed_entity(self) -> Optional[str]:
        return self.seed if isinstance(self.seed, str) else None

    def adjacency(self) -> dict[str, list[str]]:
        """Undirected neighbor lists, deduplicated and id-sorted."""
        neighbors: dict[str, set[str]] = {m: set() for m in self.members}
        for edge in self.tour_edges:
            neighbors[edge.src].add(edge.dst)
            neighbors[edge.dst].add(edge.src)
        return {m: sorted(nb) for m, nb in neighbors.items()}

    def edges_from(self, entity_id: str) -> list[TourEdge]:
        return [e for e in self.tour_edges if e.src == entity_id]


@dataclass
class ValidationReport:
    foreign_edges: list[TourEdge] = field(default_factory=list)
    missing_members: list[str] = field(default_factory=list)
    members_without_scene: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not (self.foreign_edges or self.missing_members
                    or self.members_without_scene)


def default_scene(entity: Entity) -> Scene:
    """Stage an entity's singleton data-point selection with the default
    view for its kind; user-created entities stage an empty selection."""
    if entity.source == USER_CREATED:
        selection = Selection()
    else:
        selection = Selection(member_ids=frozenset({entity.source}))
    config = StagingConfig(view_kind=_DEFAULT_VIEW[entity.kind])
    return stage(selection, config, scene_id=f"scene:{entity.id}")


def _project_edges(graph: KnowledgeGraph, members: frozenset[str]) -> tuple[TourEdge, ...]:
    projected = []
    for edge_id in sorted(graph.edges):
        edge = graph.edges[edge_id]
        if edge.src in members and edge.dst in members:
            projected.append(TourEdge(src=edge.src, dst=edge.dst, edge_id=edge_id))
    return tuple(projected)


def _build_tour(graph: KnowledgeGraph, tour_id: str, members: frozenset[str],
                seed: TourSeed,
                existing_scenes: Optional[dict[str, Scene]] = None) -> SemanticTour:
    scenes = dict(existing_scenes or {})
    for member in sorted(members):
        if member not in scenes:
            scenes[member] = default_scene(graph.get_entity(member))
    scenes = {m: scenes[m] for m in sorted(members)}
    return SemanticTour(
        id=tour_id, graph_id=graph.id, members=members, scenes=scenes,
        tour_edges=_project_edges(graph, members), seed=seed)


def seed_from_entity(graph: KnowledgeGraph, entity_id: str,
                     radius: int = 1) -> SemanticTour:
    """Tour over the entity's neighborhood (both directions) at the given radius."""
    sub = graph.neighborhood(entity_id, depth=radius, direction="both")
    members = frozenset(sub.entities)
    return _build_tour(graph, f"tour:{entity_id}:r{radius}", members, entity_id)


def matched_entities(graph: KnowledgeGraph, document_id: str) -> list[str]:
    """Entities mentioned in a document: concepts occurring in it and
    targets of its resolved references."""
    matched = []
    for entity in graph.entities.values():
        mentioned = entity.attr(ATTR_MENTIONED_IN, "")
        if mentioned and document_id in mentioned.split(","):
            matched.append(entity.id)
    return sorted(matched)


def seed_from_document(graph: KnowledgeGraph, document_id: str) -> list[SemanticTour]:
    """One tour per connected component of the document's matched entities,
    ordered by decreasing component size."""
    if document_id not in graph.entities and not any(
            p.locator and p.locator.document_id == document_id
            for p in graph.data_points.values()):
        raise UnknownDocument(f"unknown document {document_id!r}",
                              document=document_id)
    matched = matched_entities(graph, document_id)
    if not matched:
        raise NoMatches(f"document {document_id!r} matches no entities",
                        document=document_id)

    matched_set = set(matched)
    neighbors: dict[str, set[str]] = {m: set() for m in matched}
    for edge in graph.edges.values():
        if edge.src in matched_set and edge.dst in matched_set:
            neighbors[edge.src].add(edge.dst)
            neighbors[edge.dst].add(edge.src)

    components: list[list[str]] = []
    unseen = set(matched)
    for start in matched:
        if start not in unseen:
            continue
        stack, component = [start], []
        unseen.discard(start)
        while stack:
            node = stack.pop()
            component.append(node)
            for nb in neighbors[node]:
                if nb in unseen:
                    unseen.discard(nb)
                    stack.append(nb)
        components.append(sorted(component))
    components.sort(key=lambda c: (-len(c), c[0]))

    return [
        _build_tour(graph, f"tour:{document_id}:g{index}",
                    frozenset(component), (document_id, index))
        for index, component in enumerate(components)
    ]


def expand(graph: KnowledgeGraph, tour: SemanticTour, entity_id: str,
           radius: int = 1) -> SemanticTour:
    """Grow the tour by an entity's neighborhood; existing scenes are kept
    and the edge projection is recomputed over the enlarged member set."""
    sub = graph.neighborhood(entity_id, depth=radius, direction="both")
    members = tour.members | frozenset(sub.entities)
    return _build_tour(graph, tour.id, members, tour.seed,
                       existing_scenes=tour.scenes)


def refresh_edges(graph: KnowledgeGraph, tour: SemanticTour) -> SemanticTour:
    """Re-project graph edges among the current members (after graph edits)."""
    return replace(tour, tour_edges=_project_edges(graph, tour.members))


def linearize(tour: SemanticTour, strategy: str = "depth_first",
              session=None) -> LinearTour:
    """Collapse a semantic tour into a linear tour.

    depth_first: DFS from the seed entity over undirected tour edges,
    neighbor tie-break by ascending entity id; members unreachable from
    the seed are appended in ascending id order.  provenance: first-visit
    order from a session's event log over this tour.
    """
    if not tour.members:
        raise EmptyTour("tour has no members", tour=tour.id)

    if strategy == "provenance":
        if session is None or session.tour.id != tour.id:
            raise SessionMismatch("provenance linearization needs a session "
                                  "over this tour", tour=tour.id)
        order = [e for e in session.first_visit_order() if e in tour.members]
    elif strategy == "depth_first":
        adjacency = tour.adjacency()
        start = tour.seed_entity() or min(tour.members)
        if start not in tour.members:
            raise UnknownEntity(f"seed {start!r} not in tour", entity=start)
        order = []
        visited: set[str] = set()

        def _dfs(node: str):
            visited.add(node)
            order.append(node)
            for nb in adjacency[node]:
                if nb not in visited:
                    _dfs(nb)

        _dfs(start)
    else:
        raise ValueError(f"unknown linearization strategy {strategy!r}")

    order += [m for m in sorted(tour.members) if m not in order]
    scenes = [replace(tour.scenes[m], seq_index=None) for m in order]
    return make_linear_tour(scenes, tour_id=f"linear:{tour.id}")


def validate(tour: SemanticTour, graph: KnowledgeGraph) -> ValidationReport:
    """Check the tour against its graph: every tour edge must project an
    existing graph edge with matching endpoints, every member must exist
    and carry a scene."""
    report = ValidationReport()
    for tedge in tour.tour_edges:
        edge = graph.edges.get(tedge.edge_id)
        if edge is None or edge.src != tedge.src or edge.dst != tedge.dst:
            report.foreign_edges.append(tedge)
    for member in sorted(tour.members):
        if member not in graph.entities:
            report.missing_members.append(member)
        if member not in tour.scenes:
            report.members_without_scene.append(member)
    return report
