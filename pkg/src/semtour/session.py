"""Interactive navigation sessions over a semantic tour.

A session is an append-only provenance log plus the state derived from it:
the current entity, visited sets, and semantic paths.  Navigation is a
total partition into three moves:

* step    - along a tour edge leaving the current entity,
* branch  - along a tour edge leaving a visited, non-current entity,
* detour  - jump to an entity not adjacent to any visited entity,
            expanding the tour around it.

Replay reconstructs past states purely from the log and never mutates
the live session.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import threading
import time
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Optional

from .dataspace import DataPoint, Locator, PointKind
from .errors import (
    InvalidProvenance,
    NotAdjacentToCurrent,
    NotInTour,
    RangeOutOfBounds,
    SourceNotVisited,
    SpanOutOfBounds,
    UnknownDocument,
    UnknownEdge,
    UnknownEntity,
    UnknownEvent,
    UseStepOrBranch,
)
from .graph import Entity, EntityKind, KnowledgeGraph, RelationMetadata
from .extraction import REL_PART_OF
from . import tour as tour_mod
from .tour import SemanticTour, TourEdge


class EventKind(str, Enum):
    INIT = "init"
    STEP = "step"
    BRANCH = "branch"
    DETOUR = "detour"
    REPLAY_BEGIN = "replay_begin"
    REPLAY_END = "replay_end"
    ADD_EDGE = "add_edge"
    ADD_ENTITY = "add_entity"
    ANNOTATE_TASK = "annotate_task"


NAV_KINDS = (EventKind.INIT, EventKind.STEP, EventKind.BRANCH, EventKind.DETOUR)


class TaskTag(str, Enum):
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"
    T4 = "T4"
    T5 = "T5"
    T6 = "T6"
    T7 = "T7"
    T8 = "T8"
    T9 = "T9"


TASK_LABELS = {
    TaskTag.T1: "Facts extraction",
    TaskTag.T2: "Counterfactuals",
    TaskTag.T3: "Doctrinalization",
    TaskTag.T4: "Issue identification",
    TaskTag.T5: "Conflict resolution",
    TaskTag.T6: "Norm interpretation",
    TaskTag.T7: "Argument construction",
    TaskTag.T8: "Rule-conclusion",
    TaskTag.T9: "Academic critique",
}


class FocusLevel(IntEnum):
    FOCUSED = 0
    NEAR = 1
    CONTEXT = 2
    BLURRED = 3


@dataclass(frozen=True)
class ProvenanceEvent:
    seq: int
    ts: int  # milliseconds since epoch
    kind: EventKind
    payload: dict

    def to_json(self) -> dict:
        return {"seq": self.seq, "ts": self.ts, "kind": self.kind.value,
                "payload": self.payload}

    @classmethod
    def from_json(cls, obj: dict) -> "ProvenanceEvent":
        return cls(seq=obj["seq"], ts=obj["ts"], kind=EventKind(obj["kind"]),
                   payload=obj.get("payload", {}))


@dataclass
class SemanticPath:
    id: str
    steps: list[str]
    origin: str  # "init", "branch_at:<entity>", or "detour"


@dataclass(frozen=True)
class LensState:
    focus: dict[str, FocusLevel]
    current_outlined: str

    def digest(self) -> str:
        payload = json.dumps(sorted((e, lvl.value) for e, lvl in self.focus.items()))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Aggregate:
    id: str
    member_ids: tuple[str, ...]
    group_key: tuple[Optional[str], str]  # (container entity id, relation type id)
    column: int


@dataclass(frozen=True)
class LayoutModel:
    placements: dict[str, tuple[str, int]]  # entity -> (row path id, column)
    aggregates: tuple[Aggregate, ...]


@dataclass(frozen=True)
class StateSummary:
    session_id: str
    current: str
    lens_digest: str
    path_count: int
    seq: int

    def to_json(self) -> dict:
        return {"session": self.session_id, "current": self.current,
                "lens_digest": self.lens_digest, "path_count": self.path_count,
                "seq": self.seq}


@dataclass(frozen=True)
class Snapshot:
    after_seq: int
    current: Optional[str]
    visited_entities: tuple[str, ...]
    visited_edges: tuple[str, ...]
    paths: tuple[tuple[str, tuple[str, ...], str], ...]

    def to_json(self) -> dict:
        return {"after_seq": self.after_seq, "current": self.current,
                "visited_entities": list(self.visited_entities),
                "visited_edges": list(self.visited_edges),
                "paths": [{"id": p, "steps": list(s), "origin": o}
                          for p, s, o in self.paths]}


class _NavState:
    """Pure reducer over nav events; shared by the live session and replay."""

    def __init__(self):
        self.current: Optional[str] = None
        self.visited_entities: set[str] = set()
        self.visited_edges: set[str] = set()
        self.paths: list[SemanticPath] = []
        self.event_path: dict[int, str] = {}

    def apply(self, event: ProvenanceEvent):
        kind, payload = event.kind, event.payload
        if kind is EventKind.INIT:
            entity = payload["entity"]
            self.current = entity
            self.visited_entities.add(entity)
            self.paths.append(SemanticPath(id="path0", steps=[entity], origin="init"))
            self.event_path[event.seq] = "path0"
        elif kind is EventKind.STEP:
            self.current = payload["dst"]
            self.visited_entities.add(payload["dst"])
            self.visited_edges.add(payload["edge"])
            self.paths[-1].steps.append(payload["dst"])
            self.event_path[event.seq] = self.paths[-1].id
        elif kind is EventKind.BRANCH:
            src, dst = payload["src"], payload["dst"]
            self.current = dst
            self.visited_entities.add(dst)
            self.visited_edges.add(payload["edge"])
            path = SemanticPath(id=f"path{len(self.paths)}", steps=[src, dst],
                                origin=f"branch_at:{src}")
            self.paths.append(path)
            self.event_path[event.seq] = path.id
        elif kind is EventKind.DETOUR:
            entity = payload["entity"]
            self.current = entity
            self.visited_entities.add(entity)
            path = SemanticPath(id=f"path{len(self.paths)}", steps=[entity],
                                origin="detour")
            self.paths.append(path)
            self.event_path[event.seq] = path.id
        # other kinds do not change navigation state

    def snapshot(self, after_seq: int) -> Snapshot:
        return Snapshot(
            after_seq=after_seq,
            current=self.current,
            visited_entities=tuple(sorted(self.visited_entities)),
            visited_edges=tuple(sorted(self.visited_edges)),
            paths=tuple((p.id, tuple(p.steps), p.origin) for p in self.paths))


class NavigationSession:
    """One logical writer; all mutations serialize through ``self.lock``."""

    _ids = itertools.count()

    def __init__(self, graph: KnowledgeGraph, tour: SemanticTour,
                 session_id: Optional[str] = None):
        self.id = session_id or f"session-{next(self._ids)}"
        self.graph = graph
        self.tour = tour
        self.log: list[ProvenanceEvent] = []
        self.task_tags: dict[int, TaskTag] = {}
        self.lock = threading.RLock()
        self._state = _NavState()
        self._last_ts = 0
        self._user_point_seq = 0
        self.subscribers: list = []  # queues fed by the API event stream

    # -- derived state accessors --------------------------------------------

    @property
    def current(self) -> str:
        return self._state.current

    @property
    def visited_entities(self) -> set[str]:
        return self._state.visited_entities

    @property
    def visited_edges(self) -> set[str]:
        return self._state.visited_edges

    @property
    def paths(self) -> list[SemanticPath]:
        return self._state.paths

    def first_visit_order(self) -> list[str]:
        seen: list[str] = []
        for event in self.log:
            if event.kind in NAV_KINDS:
                target = event.payload.get("dst") or event.payload.get("entity")
                if target and target not in seen:
                    seen.append(target)
        return seen

    def state_hash(self) -> str:
        payload = json.dumps(self._state.snapshot(len(self.log) - 1).to_json()["paths"]) \
            + json.dumps([self.current, sorted(self.visited_entities),
                          sorted(self.visited_edges)])
        return hashlib.sha256(payload.encode()).hexdigest()

    def summary(self) -> StateSummary:
        return StateSummary(
            session_id=self.id, current=self.current,
            lens_digest=compute_lens(self).digest(),
            path_count=len(self.paths), seq=len(self.log) - 1)

    # -- event plumbing ------------------------------------------------------

    def _append(self, kind: EventKind, payload: dict) -> ProvenanceEvent:
        now = int(time.time() * 1000)
        self._last_ts = max(self._last_ts, now)
        event = ProvenanceEvent(seq=len(self.log), ts=self._last_ts,
                                kind=kind, payload=payload)
        self.log.append(event)
        self._state.apply(event)
        for queue in self.subscribers:
            queue.put_nowait(event)
        return event

    # -- lifecycle -----------------------------------------------------------

    @classmethod
    def start(cls, graph: KnowledgeGraph, tour: SemanticTour, start_entity: str,
              session_id: Optional[str] = None) -> "NavigationSession":
        if start_entity not in tour.members:
            raise NotInTour(f"entity {start_entity!r} not in tour {tour.id!r}",
                            entity=start_entity)
        session = cls(graph, tour, session_id)
        session._append(EventKind.INIT,
                        {"entity": start_entity, "tour": tour.id})
        return session

    @classmethod
    def restore(cls, graph: KnowledgeGraph, tour: SemanticTour,
                events: list[ProvenanceEvent],
                session_id: Optional[str] = None) -> "NavigationSession":
        """Rebuild a session from a persisted log, re-expanding the tour for
        detours and re-adding user edges/entities missing from the graph."""
        session = cls(graph, tour, session_id)
        for event in events:
            if event.kind is EventKind.DETOUR:
                session.tour = tour_mod.expand(graph, session.tour,
                                               event.payload["entity"], radius=1)
            elif event.kind is EventKind.ADD_EDGE:
                if event.payload["edge"] not in graph.edges:
                    with graph.write_lock:
                        graph.add_edge(event.payload["src"], event.payload["dst"],
                                       event.payload["rel"],
                                       RelationMetadata(provenance="user"),
                                       edge_id=event.payload["edge"])
                session.tour = tour_mod.refresh_edges(graph, session.tour)
            elif event.kind is EventKind.ANNOTATE_TASK:
                session.task_tags[event.payload["event"]] = TaskTag(event.payload["tag"])
            session.log.append(event)
            session._state.apply(event)
            session._last_ts = max(session._last_ts, event.ts)
        return session

    # -- move classification -------------------------------------------------

    def classify_target(self, entity_id: str) -> str:
        """Partition every candidate move: step, branch, or detour."""
        for edge in self.tour.tour_edges:
            if edge.dst == entity_id and edge.src == self.current:
                return "step"
        for edge in self.tour.tour_edges:
            if edge.dst == entity_id and edge.src in self.visited_entities:
                return "branch"
        return "detour"

    def _tour_edge(self, edge_id: str) -> TourEdge:
        for edge in self.tour.tour_edges:
            if edge.edge_id == edge_id:
                return edge
        raise UnknownEdge(f"edge {edge_id!r} is not a tour edge", edge=edge_id)

    # -- navigation ----------------------------------------------------------

    def step(self, edge_id: str) -> StateSummary:
        with self.lock:
            edge = self._tour_edge(edge_id)
            if edge.src != self.current:
                raise NotAdjacentToCurrent(
                    f"edge {edge_id!r} does not leave the current entity",
                    edge=edge_id, current=self.current)
            self._append(EventKind.STEP, {"edge": edge_id, "src": edge.src,
                                          "dst": edge.dst})
            return self.summary()

    def branch(self, edge_id: str) -> StateSummary:
        with self.lock:
            edge = self._tour_edge(edge_id)
            if edge.src == self.current or edge.src not in self.visited_entities:
                raise SourceNotVisited(
                    f"branch needs a visited, non-current source; got {edge.src!r}",
                    edge=edge_id, src=edge.src)
            self._append(EventKind.BRANCH, {"edge": edge_id, "src": edge.src,
                                            "dst": edge.dst})
            return self.summary()

    def detour(self, entity_id: str) -> StateSummary:
        with self.lock:
            self.graph.get_entity(entity_id)
            adjacent = any(
                edge.dst == entity_id and edge.src in self.visited_entities
                for edge in self.tour.tour_edges)
            if adjacent:
                raise UseStepOrBranch(
                    f"entity {entity_id!r} is adjacent to the visited set",
                    entity=entity_id)
            self.tour = tour_mod.expand(self.graph, self.tour, entity_id, radius=1)
            self._append(EventKind.DETOUR, {"entity": entity_id})
            return self.summary()

    # -- replay --------------------------------------------------------------

    def replay(self, from_seq: int, to_seq: int) -> list[Snapshot]:
        """Read-only snapshots after each event in [from_seq, to_seq]."""
        with self.lock:
            if not (0 <= from_seq <= to_seq < len(self.log)):
                raise RangeOutOfBounds(
                    f"replay range [{from_seq}, {to_seq}] outside log of "
                    f"length {len(self.log)}", length=len(self.log))
            self._append(EventKind.REPLAY_BEGIN,
                         {"from": from_seq, "to": to_seq})
            state = _NavState()
            snapshots = []
            for event in self.log:
                if event.seq > to_seq:
                    break
                state.apply(event)
                if event.seq >= from_seq:
                    snapshots.append(state.snapshot(event.seq))
            self._append(EventKind.REPLAY_END, {})
            return snapshots

    # -- edits ---------------------------------------------------------------

    def add_tacit_edge(self, src: str, dst: str, rel: str,
                       meta: RelationMetadata) -> str:
        with self.lock:
            if meta.provenance != "user":
                raise InvalidProvenance(
                    "tacit edges must carry user provenance",
                    provenance=meta.provenance)
            with self.graph.write_lock:
                edge_id = self.graph.add_edge(src, dst, rel, meta)
            if src in self.tour.members and dst in self.tour.members:
                self.tour = tour_mod.refresh_edges(self.graph, self.tour)
            self._append(EventKind.ADD_EDGE,
                         {"edge": edge_id, "src": src, "dst": dst, "rel": rel})
            return edge_id

    def add_entity_from_span(self, document_id: str, span: tuple[int, int]) -> str:
        with self.lock:
            doc_point = self.graph.data_points.get(f"dp:{document_id}:doc")
            if doc_point is None:
                raise UnknownDocument(f"unknown document {document_id!r}",
                                      document=document_id)
            start, end = span
            if not (0 <= start < end <= len(doc_point.payload)):
                raise SpanOutOfBounds(
                    f"span {span} outside document of length {len(doc_point.payload)}",
                    span=list(span))
            self._user_point_seq += 1
            point = DataPoint(
                id=f"dp:{document_id}:{start}:{end}:user:{self.id}:{self._user_point_seq}",
                dataset_id=document_id, kind=PointKind.EXPRESSION,
                payload=doc_point.payload[start:end],
                locator=Locator(document_id, (start, end)), granularity=1)
            entity = Entity(
                id=f"user:{self.id}:{self._user_point_seq}",
                label=point.payload, kind=EntityKind.USER_DEFINED, source=point.id)
            with self.graph.write_lock:
                self.graph.register_data_point(point)
                self.graph.add_entity(entity)
            self._append(EventKind.ADD_ENTITY,
                         {"entity": entity.id, "document": document_id,
                          "span": [start, end]})
            return entity.id

    def annotate_task(self, event_seq: int, tag: TaskTag) -> None:
        with self.lock:
            if not (0 <= event_seq < len(self.log)):
                raise UnknownEvent(f"no event with seq {event_seq}", seq=event_seq)
            self.task_tags[event_seq] = tag
            self._append(EventKind.ANNOTATE_TASK,
                         {"event": event_seq, "tag": tag.value})

    def tag_for_event(self, event_seq: int) -> Optional[TaskTag]:
        if not (0 <= event_seq < len(self.log)):
            raise UnknownEvent(f"no event with seq {event_seq}", seq=event_seq)
        return self.task_tags.get(event_seq)

    def tags_for_path(self, path_id: str) -> list[TaskTag]:
        return [tag for seq, tag in sorted(self.task_tags.items())
                if self._state.event_path.get(seq) == path_id]


# -- lens --------------------------------------------------------------------

def compute_lens(session: NavigationSession) -> LensState:
    """BFS distance over the undirected tour subgraph from the current
    entity: 0 focused, 1 near, 2 context, 3+/unreachable blurred; visited
    entities are never blurred."""
    adjacency = session.tour.adjacency()
    distance: dict[str, int] = {session.current: 0}
    frontier = [session.current]
    while frontier:
        nxt: list[str] = []
        for node in frontier:
            for nb in adjacency.get(node, ()):
                if nb not in distance:
                    distance[nb] = distance[node] + 1
                    nxt.append(nb)
        frontier = nxt

    focus: dict[str, FocusLevel] = {}
    for member in session.tour.members:
        d = distance.get(member)
        level = FocusLevel.BLURRED if d is None or d >= 3 else FocusLevel(d)
        if member in session.visited_entities:
            level = FocusLevel(min(level, FocusLevel.CONTEXT))
        focus[member] = level
    focus[session.current] = FocusLevel.FOCUSED
    return LensState(focus=focus, current_outlined=session.current)


# -- layout ------------------------------------------------------------------

def compute_layout(session: NavigationSession,
                   aggregation_threshold: int = 3) -> LayoutModel:
    """Layered layout: visited entities take (first-visit path, first-visit
    step index); unvisited frontier entities sit one column after their
    nearest visited tour-neighbor and may collapse into aggregates keyed by
    (part_of container, relation type to anchor)."""
    placements: dict[str, tuple[str, int]] = {}
    nav_index = 0
    for event in session.log:
        if event.kind not in NAV_KINDS:
            continue
        target = event.payload.get("dst") or event.payload.get("entity")
        path_id = session._state.event_path[event.seq]
        if target not in placements:
            placements[target] = (path_id, nav_index)
        nav_index += 1

    # frontier: unvisited members adjacent to a visited one
    adjacency = session.tour.adjacency()
    visited_placed = dict(placements)
    anchor_of: dict[str, str] = {}
    for member in sorted(session.tour.members):
        if member in placements:
            continue
        neighbors = [nb for nb in adjacency.get(member, ())
                     if nb in visited_placed]
        if not neighbors:
            continue
        anchor = min(neighbors, key=lambda nb: (visited_placed[nb][1], nb))
        anchor_of[member] = anchor
        placements[member] = (placements[anchor][0], placements[anchor][1] + 1)

    # aggregate unvisited same-column groups by (container, relation type)
    def container_of(entity_id: str) -> Optional[str]:
        for edge in session.graph.out_edges(entity_id):
            if edge.rel == REL_PART_OF.id:
                return edge.dst
        return None

    def relation_to_anchor(entity_id: str, anchor: str) -> str:
        linking = [session.graph.edges[te.edge_id].rel
                   for te in session.tour.tour_edges
                   if {te.src, te.dst} == {entity_id, anchor}]
        return min(linking) if linking else ""

    groups: dict[tuple[int, Optional[str], str], list[str]] = {}
    for member, anchor in sorted(anchor_of.items()):
        column = placements[member][1]
        key = (column, container_of(member), relation_to_anchor(member, anchor))
        groups.setdefault(key, []).append(member)

    aggregates = []
    for (column, container, rel), members in sorted(groups.items(),
                                                    key=lambda kv: str(kv[0])):
        if container is None or len(members) < aggregation_threshold:
            continue
        for member in members:
            placements.pop(member)
        aggregates.append(Aggregate(
            id=f"agg:{container}:{rel}:{column}",
            member_ids=tuple(sorted(members)),
            group_key=(container, rel), column=column))
    return LayoutModel(placements=placements, aggregates=tuple(aggregates))
