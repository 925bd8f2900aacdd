"""HTTP service over graphs, tours and live sessions.

Mutating session calls return a state summary (current entity, lens
digest, path count, log seq); every committed mutation appears exactly
once on the per-session server-sent event stream, in seq order.
"""

from __future__ import annotations

import asyncio
import json
import logging
import queue
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from . import store, tour as tour_mod
from .errors import (
    NoMatches,
    SchemaError,
    SemtourError,
    UnknownDocument,
    UnknownEntity,
    UnknownSession,
)
from .extraction import ExtractorConfig, build_graph
from .graph import Interpretation, KnowledgeGraph, RelationMetadata
from .session import NavigationSession, TaskTag, compute_layout, compute_lens
from .tour import SemanticTour

log = logging.getLogger("semtour.api")

# Closed set of API error codes, mirroring the module error cases.
ERROR_CODES = {
    "HighlightOutsideSelection": 422,
    "AlreadySequenced": 409,
    "UnknownScene": 404,
    "DuplicateId": 409,
    "DanglingSource": 422,
    "UnknownEntity": 404,
    "UnknownEdge": 404,
    "UnknownRelationType": 404,
    "SelfLoopForbidden": 422,
    "AmbiguousContainer": 409,
    "UnknownDocument": 404,
    "NoMatches": 404,
    "EmptyTour": 422,
    "SessionMismatch": 409,
    "NotInTour": 422,
    "NotAdjacentToCurrent": 409,
    "SourceNotVisited": 409,
    "UseStepOrBranch": 409,
    "RangeOutOfBounds": 422,
    "SpanOutOfBounds": 422,
    "UnknownEvent": 404,
    "InvalidProvenance": 422,
    "SchemaError": 422,
    "StoreIOError": 500,
    "UnknownSession": 404,
}


class CorpusBody(BaseModel):
    documents: list[dict]


class BuildBody(BaseModel):
    graph_id: str = "default"
    code_whitelist: list[str] = []
    concept_lexicon: list[list[str]] = []
    co_occurrence_window: str = "sentence"


class SeedBody(BaseModel):
    graph: str = "default"
    entity: Optional[str] = None
    document: Optional[str] = None
    radius: int = 1


class SessionBody(BaseModel):
    tour: str
    start: str


class EdgeRef(BaseModel):
    edge: str


class EntityRef(BaseModel):
    entity: str


class ReplayBody(BaseModel):
    from_seq: int
    to_seq: int


class TacitEdgeBody(BaseModel):
    src: str
    dst: str
    rel: str
    entries: dict[str, str] = {}
    interpretation: Optional[str] = None


class SpanEntityBody(BaseModel):
    document: str
    span: tuple[int, int]


class TaskBody(BaseModel):
    event: int
    tag: str


def _tour_json(tour: SemanticTour) -> dict:
    return store.tour_to_json(tour)


def create_app(corpus_path: Optional[str] = None,
               graph_path: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="semtour")
    state = app.state
    state.documents = {}
    state.graphs: dict[str, KnowledgeGraph] = {}
    state.tours: dict[str, SemanticTour] = {}
    state.sessions: dict[str, NavigationSession] = {}
    state.session_seq = 0

    if corpus_path:
        for doc in store.load_corpus(corpus_path):
            state.documents[doc.id] = doc
    if graph_path:
        data = Path(graph_path).read_bytes()
        graph = store.load_graph(data)
        state.graphs[graph.id] = graph

    @app.exception_handler(SemtourError)
    async def _semtour_error(_request: Request, exc: SemtourError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"status": exc.http_status, "code": exc.code,
                     "message": str(exc), "detail": exc.detail})

    def _graph(graph_id: str) -> KnowledgeGraph:
        graph = state.graphs.get(graph_id)
        if graph is None:
            raise UnknownEntity(f"unknown graph {graph_id!r}", graph=graph_id)
        return graph

    def _session(session_id: str) -> NavigationSession:
        session = state.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"unknown session {session_id!r}",
                                 session=session_id)
        return session

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/corpora", status_code=201)
    async def add_corpus(body: CorpusBody):
        added = []
        for i, raw in enumerate(body.documents):
            doc = store.document_from_json(raw, path=f"documents[{i}]")
            state.documents[doc.id] = doc
            added.append(doc.id)
        return {"documents": added}

    @app.post("/graphs/build", status_code=201)
    async def build(body: BuildBody):
        config = ExtractorConfig(
            code_whitelist=frozenset(body.code_whitelist),
            concept_lexicon=tuple((p, l) for p, l in body.concept_lexicon),
            co_occurrence_window=body.co_occurrence_window)
        corpus = sorted(state.documents.values(), key=lambda d: d.id)
        graph, report = build_graph(corpus, config)
        graph.id = body.graph_id
        state.graphs[graph.id] = graph
        return {"graph": graph.id,
                "entities": len(graph.entities), "edges": len(graph.edges),
                "unresolved_references": len(report.unresolved)}

    @app.get("/graphs/{graph_id}/entities")
    async def search_entities(graph_id: str, q: str = ""):
        graph = _graph(graph_id)
        hits = graph.search_entities(q) if q else sorted(
            graph.entities.values(), key=lambda e: e.id)
        return {"entities": [
            {"id": e.id, "label": e.label, "kind": e.kind.value,
             "source": e.source, "attributes": dict(e.attributes)}
            for e in hits]}

    @app.get("/graphs/{graph_id}/neighborhood")
    async def neighborhood(graph_id: str, entity: str, depth: int = 1,
                           direction: str = "both"):
        sub = _graph(graph_id).neighborhood(entity, depth, direction)
        return store.graph_to_json(sub)

    @app.get("/documents/{document_id}")
    async def get_document(document_id: str):
        doc = state.documents.get(document_id)
        if doc is None:
            raise UnknownDocument(f"unknown document {document_id!r}",
                                  document=document_id)
        def _unit(u):
            return {"id": u.id, "label": u.label, "span": list(u.span),
                    "children": [_unit(c) for c in u.children]}
        return {"id": doc.id, "title": doc.title, "kind": doc.kind.value,
                "text": doc.text, "units": [_unit(u) for u in doc.units]}

    @app.post("/tours/seed", status_code=201)
    async def seed(body: SeedBody):
        graph = _graph(body.graph)
        if body.entity is not None:
            tours = [tour_mod.seed_from_entity(graph, body.entity, body.radius)]
        elif body.document is not None:
            tours = tour_mod.seed_from_document(graph, body.document)
        else:
            raise NoMatches("seed needs an entity or a document")
        for tour in tours:
            state.tours[tour.id] = tour
        return {"tours": [_tour_json(t) for t in tours]}

    @app.get("/tours/{tour_id}")
    async def get_tour(tour_id: str):
        tour = state.tours.get(tour_id)
        if tour is None:
            raise UnknownEntity(f"unknown tour {tour_id!r}", tour=tour_id)
        return _tour_json(tour)

    @app.post("/sessions", status_code=201)
    async def create_session(body: SessionBody):
        tour = state.tours.get(body.tour)
        if tour is None:
            raise UnknownEntity(f"unknown tour {body.tour!r}", tour=body.tour)
        graph = _graph(tour.graph_id)
        state.session_seq += 1
        session = NavigationSession.start(
            graph, tour, body.start, session_id=f"s{state.session_seq}")
        state.sessions[session.id] = session
        return session.summary().to_json()

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        session = _session(session_id)
        return {"summary": session.summary().to_json(),
                "tour": session.tour.id,
                "log": [e.to_json() for e in session.log],
                "paths": [{"id": p.id, "steps": p.steps, "origin": p.origin}
                          for p in session.paths]}

    @app.get("/sessions/{session_id}/classify")
    async def classify(session_id: str, entity: str):
        session = _session(session_id)
        session.graph.get_entity(entity)
        move = session.classify_target(entity)
        edge = None
        if move in ("step", "branch"):
            candidates = [
                e for e in session.tour.tour_edges
                if e.dst == entity and (
                    e.src == session.current if move == "step"
                    else e.src in session.visited_entities and e.src != session.current)]
            edge = min(c.edge_id for c in candidates)
        return {"move": move, "edge": edge}

    @app.post("/sessions/{session_id}/step")
    async def step(session_id: str, body: EdgeRef):
        return _session(session_id).step(body.edge).to_json()

    @app.post("/sessions/{session_id}/branch")
    async def branch(session_id: str, body: EdgeRef):
        return _session(session_id).branch(body.edge).to_json()

    @app.post("/sessions/{session_id}/detour")
    async def detour(session_id: str, body: EntityRef):
        return _session(session_id).detour(body.entity).to_json()

    @app.post("/sessions/{session_id}/navigate")
    async def navigate(session_id: str, body: EntityRef):
        """Classify the target and perform the matching move."""
        session = _session(session_id)
        session.graph.get_entity(body.entity)
        with session.lock:
            move = session.classify_target(body.entity)
            if move == "detour":
                summary = session.detour(body.entity)
            else:
                wanted_src = (lambda s: s == session.current) if move == "step" \
                    else (lambda s: s != session.current and s in session.visited_entities)
                edge_id = min(e.edge_id for e in session.tour.tour_edges
                              if e.dst == body.entity and wanted_src(e.src))
                summary = session.step(edge_id) if move == "step" \
                    else session.branch(edge_id)
        return {"move": move, **summary.to_json()}

    @app.post("/sessions/{session_id}/replay")
    async def replay(session_id: str, body: ReplayBody):
        snapshots = _session(session_id).replay(body.from_seq, body.to_seq)
        return {"snapshots": [s.to_json() for s in snapshots]}

    @app.get("/sessions/{session_id}/lens")
    async def lens(session_id: str):
        session = _session(session_id)
        state_lens = compute_lens(session)
        return {"current": state_lens.current_outlined,
                "digest": state_lens.digest(),
                "focus": {e: lvl.name.lower()
                          for e, lvl in sorted(state_lens.focus.items())}}

    @app.get("/sessions/{session_id}/layout")
    async def layout(session_id: str, threshold: int = 3):
        model = compute_layout(_session(session_id), aggregation_threshold=threshold)
        return {"placements": {e: {"row": row, "column": col}
                               for e, (row, col) in sorted(model.placements.items())},
                "aggregates": [
                    {"id": a.id, "members": list(a.member_ids),
                     "container": a.group_key[0], "relation": a.group_key[1],
                     "column": a.column}
                    for a in model.aggregates]}

    @app.post("/sessions/{session_id}/edges", status_code=201)
    async def add_edge(session_id: str, body: TacitEdgeBody):
        session = _session(session_id)
        meta = RelationMetadata(
            provenance="user",
            entries=tuple(sorted(body.entries.items())),
            interpretation=Interpretation(body.interpretation)
            if body.interpretation else None)
        edge_id = session.add_tacit_edge(body.src, body.dst, body.rel, meta)
        return {"edge": edge_id, **session.summary().to_json()}

    @app.post("/sessions/{session_id}/entities", status_code=201)
    async def add_entity(session_id: str, body: SpanEntityBody):
        session = _session(session_id)
        entity_id = session.add_entity_from_span(body.document, body.span)
        return {"entity": entity_id, **session.summary().to_json()}

    @app.post("/sessions/{session_id}/tasks")
    async def annotate(session_id: str, body: TaskBody):
        session = _session(session_id)
        try:
            tag = TaskTag(body.tag)
        except ValueError:
            raise SchemaError(f"unknown task tag {body.tag!r}", field="tag") from None
        session.annotate_task(body.event, tag)
        return {"event": body.event, "tag": tag.value,
                **session.summary().to_json()}

    @app.get("/sessions/{session_id}/events")
    async def events(session_id: str, request: Request, from_seq: int = 0,
                     max_events: Optional[int] = None):
        """Server-sent stream of committed events, in seq order."""
        session = _session(session_id)
        live: queue.Queue = queue.Queue()
        with session.lock:
            backlog = [e for e in session.log if e.seq >= from_seq]
            session.subscribers.append(live)

        async def _generate():
            sent = 0
            try:
                next_seq = from_seq
                for event in backlog:
                    yield f"data: {json.dumps(event.to_json())}\n\n"
                    next_seq = event.seq + 1
                    sent += 1
                    if max_events is not None and sent >= max_events:
                        return
                while True:
                    if await request.is_disconnected():
                        return
                    try:
                        event = live.get_nowait()
                    except queue.Empty:
                        await asyncio.sleep(0.01)
                        continue
                    if event.seq < next_seq:
                        continue
                    yield f"data: {json.dumps(event.to_json())}\n\n"
                    next_seq = event.seq + 1
                    sent += 1
                    if max_events is not None and sent >= max_events:
                        return
            finally:
                with session.lock:
                    if live in session.subscribers:
                        session.subscribers.remove(live)

        return StreamingResponse(_generate(), media_type="text/event-stream")

    return app
