"""Persistence: corpus ingestion, canonical JSON serialization, DOT export.

All persisted forms are canonical JSON (sorted keys, compact separators,
stable ids) so serialize -> deserialize -> serialize is byte-identical.
Every schema carries a top-level ``schema_version``; loaders reject
unknown versions.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional, Union

from .dataspace import (
    DataPoint,
    Locator,
    PointKind,
    Scene,
    Selection,
    StagingConfig,
    ViewKind,
)
from .errors import SchemaError, StoreIOError
from .extraction import Document, DocumentKind, Unit
from .graph import (
    Edge,
    Entity,
    EntityKind,
    Interpretation,
    KnowledgeGraph,
    RelationMetadata,
    RelationType,
)
from .session import ProvenanceEvent
from .tour import SemanticTour, TourEdge

SCHEMA_VERSION = 1


def canonical_json(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True).encode()


def _field(obj: dict, name: str, kind, path: str):
    if not isinstance(obj, dict) or name not in obj:
        raise SchemaError(f"{path}: missing field {name!r}", path=path, field=name)
    value = obj[name]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"{path}.{name}: expected {kind}, got {type(value).__name__}",
                          path=path, field=name)
    return value


def _check_version(obj: dict, path: str):
    version = _field(obj, "schema_version", int, path)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported schema_version {version}",
                          path=path, field="schema_version")


# -- corpus ------------------------------------------------------------------

def _unit_from_json(obj: dict, path: str) -> Unit:
    span = _field(obj, "span", list, path)
    if len(span) != 2:
        raise SchemaError(f"{path}.span: expected [start, end]", path=path,
                          field="span")
    children = tuple(
        _unit_from_json(child, f"{path}.children[{i}]")
        for i, child in enumerate(obj.get("children", [])))
    return Unit(id=_field(obj, "id", str, path),
                label=_field(obj, "label", str, path),
                span=(span[0], span[1]), children=children)


def document_from_json(obj: dict, path: str = "document") -> Document:
    kind_value = _field(obj, "kind", str, path)
    try:
        kind = DocumentKind(kind_value)
    except ValueError:
        raise SchemaError(f"{path}.kind: unknown document kind {kind_value!r}",
                          path=path, field="kind") from None
    units = tuple(
        _unit_from_json(unit, f"{path}.units[{i}]")
        for i, unit in enumerate(obj.get("units", [])))
    try:
        return Document(id=_field(obj, "id", str, path),
                        title=_field(obj, "title", str, path),
                        kind=kind, text=_field(obj, "text", str, path),
                        units=units)
    except ValueError as exc:
        raise SchemaError(f"{path}.units: {exc}", path=path, field="units") from exc


def load_corpus(manifest_path: Union[str, Path]) -> list[Document]:
    """Load all documents referenced by a corpus manifest."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise StoreIOError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest: invalid JSON: {exc}", field="manifest") from exc

    entries = _field(manifest, "documents", list, "manifest")
    seen_paths = set()
    documents = []
    for i, entry in enumerate(entries):
        rel = _field(entry, "path", str, f"manifest.documents[{i}]")
        if rel in seen_paths:
            raise SchemaError(f"manifest.documents[{i}].path: duplicate {rel!r}",
                              field="path")
        seen_paths.add(rel)
        doc_path = manifest_path.parent / rel
        try:
            obj = json.loads(doc_path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise StoreIOError(f"cannot read document {doc_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{rel}: invalid JSON: {exc}", field=rel) from exc
        documents.append(document_from_json(obj, path=rel))
    return documents


def load_gold_edges(manifest_path: Union[str, Path]) -> list[tuple[str, str, str]]:
    manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    return [tuple(edge) for edge in manifest.get("gold_edges", [])]


# -- data points -------------------------------------------------------------

def _point_to_json(point: DataPoint) -> dict:
    locator = None
    if point.locator is not None:
        locator = {"document": point.locator.document_id,
                   "span": list(point.locator.span),
                   "path": list(point.locator.path)}
    return {"id": point.id, "dataset": point.dataset_id, "kind": point.kind.value,
            "payload": point.payload, "locator": locator,
            "granularity": point.granularity}


def _point_from_json(obj: dict, path: str) -> DataPoint:
    locator = None
    raw = obj.get("locator")
    if raw is not None:
        locator = Locator(document_id=raw["document"],
                          span=tuple(raw["span"]), path=tuple(raw["path"]))
    return DataPoint(id=_field(obj, "id", str, path),
                     dataset_id=_field(obj, "dataset", str, path),
                     kind=PointKind(_field(obj, "kind", str, path)),
                     payload=_field(obj, "payload", str, path),
                     locator=locator,
                     granularity=_field(obj, "granularity", int, path))


# -- knowledge graph ---------------------------------------------------------

def _meta_to_json(meta: RelationMetadata) -> dict:
    return {"provenance": meta.provenance,
            "entries": [list(kv) for kv in sorted(meta.entries)],
            "interpretation": meta.interpretation.value if meta.interpretation else None}


def _meta_from_json(obj: dict, path: str) -> RelationMetadata:
    interp = obj.get("interpretation")
    return RelationMetadata(
        provenance=_field(obj, "provenance", str, path),
        entries=tuple(tuple(kv) for kv in obj.get("entries", [])),
        interpretation=Interpretation(interp) if interp else None)


def graph_to_json(graph: KnowledgeGraph) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": graph.id,
        "data_points": [_point_to_json(graph.data_points[pid])
                        for pid in sorted(graph.data_points)],
        "relation_types": [
            {"id": r.id, "name": r.name, "induced_parent": r.induced_parent,
             "allow_self_loops": r.allow_self_loops}
            for r in sorted(graph.relation_types.values(), key=lambda r: r.id)],
        "entities": [
            {"id": e.id, "label": e.label, "kind": e.kind.value,
             "source": e.source, "attributes": [list(kv) for kv in sorted(e.attributes)]}
            for e in sorted(graph.entities.values(), key=lambda e: e.id)],
        "edges": [
            {"id": e.id, "src": e.src, "dst": e.dst, "rel": e.rel,
             "meta": _meta_to_json(e.meta)}
            for e in sorted(graph.edges.values(), key=lambda e: e.id)],
    }


def save_graph(graph: KnowledgeGraph) -> bytes:
    return canonical_json(graph_to_json(graph))


def load_graph(data: bytes) -> KnowledgeGraph:
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"graph: invalid JSON: {exc}", field="graph") from exc
    _check_version(obj, "graph")
    graph = KnowledgeGraph(graph_id=_field(obj, "id", str, "graph"))
    for i, raw in enumerate(_field(obj, "data_points", list, "graph")):
        graph.register_data_point(_point_from_json(raw, f"graph.data_points[{i}]"))
    for i, raw in enumerate(_field(obj, "relation_types", list, "graph")):
        path = f"graph.relation_types[{i}]"
        graph.register_relation_type(RelationType(
            id=_field(raw, "id", str, path), name=_field(raw, "name", str, path),
            induced_parent=raw.get("induced_parent"),
            allow_self_loops=raw.get("allow_self_loops", False)))
    for i, raw in enumerate(_field(obj, "entities", list, "graph")):
        path = f"graph.entities[{i}]"
        graph.add_entity(Entity(
            id=_field(raw, "id", str, path), label=_field(raw, "label", str, path),
            kind=EntityKind(_field(raw, "kind", str, path)),
            source=_field(raw, "source", str, path),
            attributes=tuple(tuple(kv) for kv in raw.get("attributes", []))))
    max_seq = -1
    for i, raw in enumerate(_field(obj, "edges", list, "graph")):
        path = f"graph.edges[{i}]"
        edge_id = _field(raw, "id", str, path)
        graph.add_edge(_field(raw, "src", str, path), _field(raw, "dst", str, path),
                       _field(raw, "rel", str, path),
                       _meta_from_json(_field(raw, "meta", dict, path), path),
                       edge_id=edge_id)
        if edge_id.startswith("e") and edge_id[1:].isdigit():
            max_seq = max(max_seq, int(edge_id[1:]))
    graph._edge_seq = max_seq + 1
    return graph


# -- scenes and tours --------------------------------------------------------

def scene_to_json(scene: Scene) -> dict:
    staging = scene.staging
    return {"id": scene.id,
            "selection": sorted(scene.selection.member_ids),
            "staging": {"view_kind": staging.view_kind.value,
                        "viewport": list(staging.viewport),
                        "zoom": staging.zoom,
                        "highlights": [list(kv) for kv in staging.highlights],
                        "layout_hints": [list(kv) for kv in sorted(staging.layout_hints)]},
            "seq_index": scene.seq_index}


def scene_from_json(obj: dict, path: str = "scene") -> Scene:
    staging = _field(obj, "staging", dict, path)
    return Scene(
        id=_field(obj, "id", str, path),
        selection=Selection(member_ids=frozenset(_field(obj, "selection", list, path))),
        staging=StagingConfig(
            view_kind=ViewKind(_field(staging, "view_kind", str, path)),
            viewport=tuple(staging.get("viewport", (0.0, 0.0, 1.0, 1.0))),
            zoom=staging.get("zoom", 1.0),
            highlights=tuple(tuple(kv) for kv in staging.get("highlights", [])),
            layout_hints=tuple(tuple(kv) for kv in staging.get("layout_hints", []))),
        seq_index=obj.get("seq_index"))


def tour_to_json(tour: SemanticTour) -> dict:
    seed = tour.seed if isinstance(tour.seed, str) else list(tour.seed)
    return {
        "schema_version": SCHEMA_VERSION,
        "id": tour.id,
        "graph_id": tour.graph_id,
        "members": sorted(tour.members),
        "scenes": {member: scene_to_json(tour.scenes[member])
                   for member in sorted(tour.members)},
        "tour_edges": [[e.src, e.dst, e.edge_id] for e in tour.tour_edges],
        "seed": seed,
    }


def save_tour(tour: SemanticTour) -> bytes:
    return canonical_json(tour_to_json(tour))


def load_tour(data: bytes) -> SemanticTour:
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"tour: invalid JSON: {exc}", field="tour") from exc
    _check_version(obj, "tour")
    seed = obj["seed"]
    if isinstance(seed, list):
        seed = (seed[0], seed[1])
    return SemanticTour(
        id=_field(obj, "id", str, "tour"),
        graph_id=_field(obj, "graph_id", str, "tour"),
        members=frozenset(_field(obj, "members", list, "tour")),
        scenes={member: scene_from_json(raw, f"tour.scenes[{member}]")
                for member, raw in _field(obj, "scenes", dict, "tour").items()},
        tour_edges=tuple(TourEdge(src=e[0], dst=e[1], edge_id=e[2])
                         for e in _field(obj, "tour_edges", list, "tour")),
        seed=seed)


# -- session logs ------------------------------------------------------------

def save_session_log(events: list[ProvenanceEvent]) -> bytes:
    lines = [json.dumps(event.to_json(), sort_keys=True, separators=(",", ":"))
             for event in events]
    return ("\n".join(lines) + "\n").encode() if lines else b""


def load_session_log(data: bytes) -> list[ProvenanceEvent]:
    events = []
    for lineno, line in enumerate(data.decode("utf-8").splitlines()):
        if not line.strip():
            continue
        try:
            events.append(ProvenanceEvent.from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise SchemaError(f"session log line {lineno + 1}: {exc}",
                              field=f"line{lineno + 1}") from exc
    return events


# -- DOT export --------------------------------------------------------------

def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(obj: Union[KnowledgeGraph, SemanticTour],
               graph: Optional[KnowledgeGraph] = None,
               lens=None) -> str:
    """DOT digraph of a graph or a tour; lens focus levels become node
    attributes.  Output ordering is deterministic."""
    lines = ["digraph semtour {"]
    if isinstance(obj, SemanticTour):
        if graph is None:
            raise ValueError("tour export needs the backing graph")
        node_ids = sorted(obj.members)
        edge_rows = [(e.src, e.dst, graph.edges[e.edge_id].rel
                      if e.edge_id in graph.edges else "?")
                     for e in obj.tour_edges]
        entity_of = graph.entities.get
    else:
        node_ids = sorted(obj.entities)
        edge_rows = [(e.src, e.dst, e.rel)
                     for e in sorted(obj.edges.values(), key=lambda e: e.id)]
        entity_of = obj.entities.get

    for node_id in node_ids:
        entity = entity_of(node_id)
        attrs = [f'label="{_dot_escape(entity.label if entity else node_id)}"']
        if entity is not None:
            attrs.append(f'kind="{entity.kind.value}"')
        if lens is not None and node_id in lens.focus:
            attrs.append(f'focus="{lens.focus[node_id].name.lower()}"')
        lines.append(f'  "{_dot_escape(node_id)}" [{", ".join(attrs)}];')
    for src, dst, rel in edge_rows:
        lines.append(f'  "{_dot_escape(src)}" -> "{_dot_escape(dst)}" '
                     f'[label="{_dot_escape(rel)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
