"""Corpus extraction: statute-reference parsing and knowledge-graph assembly.

The reference parser is a hand-written linear-time scanner for explicit
German-style citations:

    ref      = sec_ref | art_ref ;
    sec_ref  = ("§" | "§§") ws num list_tail? detail* (ws code)? ;
    art_ref  = ("Art." | "Artikel") ws num detail* (ws code)? ;
    detail   = ws ("Abs." ws num | "Satz" ws num | "Nr." ws num) ;
    list_tail= ("," ws num)+ ;
    num      = digit+ letter? ;
    code     = uppercase-initial abbreviation from the configured whitelist ;

A citation listing several sections ("§§ 223, 224 StGB") yields one
reference per section; trailing details attach to the last section.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Optional

from .dataspace import DataPoint, Locator, PointKind
from .graph import (
    Entity,
    EntityKind,
    KnowledgeGraph,
    RelationMetadata,
    RelationType,
)

REL_REFERS_TO = RelationType(id="refers_to", name="refers to")
REL_PART_OF = RelationType(id="part_of", name="part of")
REL_CO_OCCURS = RelationType(id="co_occurs", name="co-occurs with")

ATTR_MENTIONED_IN = "mentioned_in"


class DocumentKind(str, Enum):
    STATUTE = "statute"
    RULING = "ruling"
    CASE_DESCRIPTION = "case_description"
    COMMENTARY = "commentary"


_DOC_ENTITY_KIND = {
    DocumentKind.STATUTE: EntityKind.LAW,
    DocumentKind.RULING: EntityKind.RULING,
    DocumentKind.CASE_DESCRIPTION: EntityKind.FACT,
    DocumentKind.COMMENTARY: EntityKind.COMMENTARY,
}

_UNIT_ENTITY_KIND = {
    DocumentKind.STATUTE: EntityKind.NORM,
    DocumentKind.RULING: EntityKind.RULING,
    DocumentKind.CASE_DESCRIPTION: EntityKind.FACT,
    DocumentKind.COMMENTARY: EntityKind.COMMENTARY,
}


@dataclass(frozen=True)
class Unit:
    id: str
    label: str
    span: tuple[int, int]
    children: tuple["Unit", ...] = ()


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    kind: DocumentKind
    text: str
    units: tuple[Unit, ...] = ()

    def __post_init__(self):
        self._check_units(self.units, (0, len(self.text)))

    def _check_units(self, units: tuple[Unit, ...], bounds: tuple[int, int]):
        previous_end = bounds[0]
        for unit in units:
            start, end = unit.span
            if not (bounds[0] <= start < end <= bounds[1]):
                raise ValueError(
                    f"unit {unit.id!r} span {unit.span} outside bounds {bounds}")
            if start < previous_end:
                raise ValueError(f"unit {unit.id!r} overlaps its predecessor")
            previous_end = end
            self._check_units(unit.children, unit.span)

    def walk_units(self) -> Iterator[Unit]:
        def _walk(units):
            for unit in units:
                yield unit
                yield from _walk(unit.children)
        return _walk(self.units)

    def deepest_unit_at(self, pos: int) -> Optional[Unit]:
        best: Optional[Unit] = None
        units = self.units
        while True:
            hit = next((u for u in units if u.span[0] <= pos < u.span[1]), None)
            if hit is None:
                return best
            best, units = hit, hit.children


@dataclass(frozen=True)
class Reference:
    source_span: tuple[int, int]
    code: str
    section: str
    subsection: Optional[str] = None
    sentence: Optional[str] = None
    item: Optional[str] = None
    resolved: Optional[str] = None

    def __post_init__(self):
        if not self.section:
            raise ValueError("reference section must be non-empty")


@dataclass(frozen=True)
class ExtractorConfig:
    code_whitelist: frozenset[str] = frozenset()
    concept_lexicon: tuple[tuple[str, str], ...] = ()  # (pattern, concept label)
    co_occurrence_window: str = "sentence"  # or "unit"

    def __post_init__(self):
        for pattern, _label in self.concept_lexicon:
            if not pattern:
                raise ValueError("lexicon patterns must be non-empty")


@dataclass
class BuildReport:
    unresolved: list[Reference] = field(default_factory=list)


# -- reference scanner -------------------------------------------------------

_SEC_MARKERS = ("§§", "§")
_ART_MARKERS = ("Artikel", "Art.")


def _scan_ws(text: str, pos: int) -> int:
    """One or more spaces; returns -1 if none."""
    start = pos
    while pos < len(text) and text[pos] in " \t":
        pos += 1
    return pos if pos > start else -1


def _scan_num(text: str, pos: int) -> tuple[str, int]:
    start = pos
    while pos < len(text) and text[pos].isdigit():
        pos += 1
    if pos == start:
        return "", -1
    if pos < len(text) and text[pos].isalpha() and (
            pos + 1 == len(text) or not text[pos + 1].isalnum()):
        pos += 1
    return text[start:pos], pos


def _scan_code(text: str, pos: int, whitelist: frozenset[str]) -> tuple[str, int]:
    start = pos
    while pos < len(text) and (text[pos].isalnum() or text[pos] == "-"):
        pos += 1
    token = text[start:pos]
    if token and token[0].isupper() and token in whitelist:
        return token, pos
    return "", -1


_DETAIL_FIELDS = {"Abs.": "subsection", "Satz": "sentence", "Nr.": "item"}


def _parse_one(text: str, pos: int, config: ExtractorConfig
               ) -> tuple[list[Reference], int]:
    """Parse a single citation starting at ``pos`` (a marker position).

    Returns ([], pos+1) when no well-formed citation starts here.
    """
    ref_start = pos
    marker = next((m for m in _SEC_MARKERS + _ART_MARKERS
                   if text.startswith(m, pos)), None)
    if marker is None:
        return [], pos + 1
    cursor = pos + len(marker)
    allow_list = marker == "§§"

    ws_end = _scan_ws(text, cursor)
    if ws_end < 0:
        return [], pos + 1
    num, cursor = _scan_num(text, ws_end)
    if cursor < 0:
        return [], pos + 1
    # each listed section keeps its own span so spans stay non-overlapping
    sections: list[tuple[str, int, int]] = [(num, ref_start, cursor)]
    end = cursor

    if allow_list:
        while cursor < len(text) and text[cursor] == ",":
            ws_end = _scan_ws(text, cursor + 1)
            if ws_end < 0:
                break
            num, nxt = _scan_num(text, ws_end)
            if nxt < 0:
                break
            sections.append((num, ws_end, nxt))
            cursor = end = nxt

    details: dict[str, str] = {}
    while True:
        ws_end = _scan_ws(text, cursor)
        if ws_end < 0:
            break
        keyword = next((k for k in _DETAIL_FIELDS if text.startswith(k, ws_end)), None)
        if keyword is None:
            break
        inner_ws = _scan_ws(text, ws_end + len(keyword))
        if inner_ws < 0:
            break
        num, nxt = _scan_num(text, inner_ws)
        if nxt < 0:
            break
        details[_DETAIL_FIELDS[keyword]] = num
        cursor = end = nxt

    code = ""
    ws_end = _scan_ws(text, cursor)
    if ws_end >= 0:
        candidate, nxt = _scan_code(text, ws_end, config.code_whitelist)
        if nxt >= 0:
            code, end = candidate, nxt

    refs = []
    for i, (section, sec_start, sec_end) in enumerate(sections):
        last = i == len(sections) - 1
        refs.append(Reference(
            source_span=(sec_start, end if last else sec_end),
            code=code, section=section))
    if details:
        refs[-1] = replace(refs[-1], **details)
    return refs, end


def parse_references(document: Document, config: ExtractorConfig) -> list[Reference]:
    """All non-overlapping maximal citation matches, in document order."""
    text = document.text
    refs: list[Reference] = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch == "§" or (ch == "A" and any(
                text.startswith(m, pos) for m in _ART_MARKERS)):
            parsed, pos = _parse_one(text, pos, config)
            refs.extend(parsed)
        else:
            pos += 1
    return refs


# -- entity extraction -------------------------------------------------------

def _section_from_label(label: str) -> Optional[str]:
    for marker in ("§", "Art.", "Artikel"):
        if label.startswith(marker):
            candidate = label[len(marker):].strip()
            num, end = _scan_num(candidate, 0)
            if end == len(candidate) and num:
                return num
    return None


def _concept_occurrences(document: Document, config: ExtractorConfig
                         ) -> list[tuple[str, int, int]]:
    """(label, start, end) for every lexicon hit, in document order."""
    hits: list[tuple[str, int, int]] = []
    for pattern, label in config.concept_lexicon:
        start = 0
        while True:
            idx = document.text.find(pattern, start)
            if idx < 0:
                break
            hits.append((label, idx, idx + len(pattern)))
            start = idx + len(pattern)
    hits.sort(key=lambda h: (h[1], h[2]))
    return hits


def unit_entity_id(document_id: str, unit_id: str) -> str:
    return f"{document_id}/{unit_id}"


def concept_entity_id(label: str) -> str:
    return f"concept:{label}"


def extract_entities(document: Document, config: ExtractorConfig,
                     graph: Optional[KnowledgeGraph] = None) -> list[Entity]:
    """Entities for one document: the document itself, one per structural
    unit, and one concept per deduplicated lexicon hit.

    Each entity's source is a data point registered for its span.  Pass an
    existing ``graph`` to register into; otherwise a throwaway one is used.
    """
    graph = graph if graph is not None else KnowledgeGraph()
    entities: list[Entity] = []

    doc_point = DataPoint(
        id=f"dp:{document.id}:doc",
        dataset_id=document.id,
        kind=PointKind.LAW if document.kind is DocumentKind.STATUTE else PointKind.DOCUMENT,
        payload=document.text,
        locator=Locator(document.id, (0, max(1, len(document.text)))),
        granularity=5)
    graph.register_data_point(doc_point)
    doc_entity = Entity(
        id=document.id, label=document.title,
        kind=_DOC_ENTITY_KIND[document.kind], source=doc_point.id,
        attributes=(("code", document.id),) if document.kind is DocumentKind.STATUTE else ())
    if document.id not in graph.entities:
        graph.add_entity(doc_entity)
        entities.append(doc_entity)

    for unit in document.walk_units():
        point = DataPoint(
            id=f"dp:{document.id}:{unit.id}",
            dataset_id=document.id,
            kind=PointKind.PARAGRAPH,
            payload=document.text[unit.span[0]:unit.span[1]],
            locator=Locator(document.id, unit.span, (unit.id,)),
            granularity=3)
        graph.register_data_point(point)
        attributes: list[tuple[str, str]] = []
        section = _section_from_label(unit.label)
        if document.kind is DocumentKind.STATUTE and section:
            attributes += [("code", document.id), ("section", section)]
        entity = Entity(
            id=unit_entity_id(document.id, unit.id), label=unit.label,
            kind=_UNIT_ENTITY_KIND[document.kind], source=point.id,
            attributes=tuple(attributes))
        graph.add_entity(entity)
        entities.append(entity)

    seen_labels: set[str] = set()
    for label, start, end in _concept_occurrences(document, config):
        eid = concept_entity_id(label)
        if label in seen_labels or eid in graph.entities:
            continue
        seen_labels.add(label)
        point = DataPoint(
            id=f"dp:{document.id}:{start}:{end}:concept",
            dataset_id=document.id,
            kind=PointKind.CONCEPT,
            payload=document.text[start:end],
            locator=Locator(document.id, (start, end)),
            granularity=2)
        graph.register_data_point(point)
        entity = Entity(id=eid, label=label, kind=EntityKind.CONCEPT, source=point.id)
        graph.add_entity(entity)
        entities.append(entity)
    return entities


# -- windows -----------------------------------------------------------------

def _sentence_windows(text: str) -> list[tuple[int, int]]:
    """Split on sentence terminators; abbreviation dots ("Abs.", "Nr.") are
    kept inside a sentence by requiring whitespace + uppercase after the dot.
    """
    windows: list[tuple[int, int]] = []
    start = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "!?\n":
            windows.append((start, i + 1))
            start = i + 1
        elif ch == ".":
            j = i + 1
            while j < len(text) and text[j] == " ":
                j += 1
            is_break = j > i + 1 and j < len(text) and text[j].isupper()
            before = text[start:i + 1]
            for abbrev in ("Abs.", "Nr.", "Art.", "bzw.", "z.", "B."):
                if before.endswith(abbrev):
                    is_break = False
            if is_break or j >= len(text):
                windows.append((start, i + 1))
                start = j
                i = j - 1
        i += 1
    if start < len(text):
        windows.append((start, len(text)))
    return [w for w in windows if w[0] < w[1]]


def _document_windows(document: Document, config: ExtractorConfig
                      ) -> list[tuple[int, int]]:
    if config.co_occurrence_window == "unit":
        spans = [u.span for u in document.walk_units() if not u.children]
        return spans or [(0, len(document.text))]
    return _sentence_windows(document.text)


# -- graph assembly ----------------------------------------------------------

def build_graph(corpus: list[Document], config: ExtractorConfig
                ) -> tuple[KnowledgeGraph, BuildReport]:
    """Assemble the knowledge graph for a corpus.

    Pipeline: extract entities per document, add part_of membership edges
    along the unit trees, resolve explicit references into refers_to edges,
    connect window co-occurrences, then derive container-level relations
    from cross-container references.  Deterministic for a fixed corpus
    order and config.
    """
    graph = KnowledgeGraph()
    for rel in (REL_REFERS_TO, REL_PART_OF, REL_CO_OCCURS):
        graph.register_relation_type(rel)
    report = BuildReport()
    mentions: dict[str, list[str]] = {}

    def mention(entity_id: str, document_id: str):
        docs = mentions.setdefault(entity_id, [])
        if document_id not in docs:
            docs.append(document_id)

    for document in corpus:
        extract_entities(document, config, graph)

    # structural membership
    for document in corpus:
        def _link(units, parent_id):
            for unit in units:
                child_id = unit_entity_id(document.id, unit.id)
                graph.add_edge(child_id, parent_id, REL_PART_OF.id,
                               RelationMetadata(provenance="extractor:structure"))
                _link(unit.children, child_id)
        _link(document.units, document.id)

    # section lookup for reference resolution
    by_code_section: dict[tuple[str, str], str] = {}
    for entity in graph.entities.values():
        code, section = entity.attr("code"), entity.attr("section")
        if code and section:
            by_code_section[(code, section)] = entity.id

    for document in corpus:
        default_code = document.id if document.kind is DocumentKind.STATUTE else ""
        for ref in parse_references(document, config):
            code = ref.code or default_code
            target = by_code_section.get((code, ref.section))
            if target is None:
                report.unresolved.append(ref)
                continue
            anchor = document.deepest_unit_at(ref.source_span[0])
            src = unit_entity_id(document.id, anchor.id) if anchor else document.id
            if src == target:
                report.unresolved.append(ref)
                continue
            entries = [("code", code), ("section", ref.section),
                       ("span", f"{ref.source_span[0]}-{ref.source_span[1]}")]
            for key, value in (("subsection", ref.subsection),
                               ("sentence", ref.sentence), ("item", ref.item)):
                if value:
                    entries.append((key, value))
            graph.add_edge(src, target, REL_REFERS_TO.id, RelationMetadata(
                provenance="extractor:references", entries=tuple(entries)))
            mention(target, document.id)

    # window co-occurrence: concepts in a window plus the deepest enclosing unit
    for document in corpus:
        occurrences = _concept_occurrences(document, config)
        for win_start, win_end in _document_windows(document, config):
            members: list[str] = []
            for label, start, _end in occurrences:
                if win_start <= start < win_end:
                    eid = concept_entity_id(label)
                    if eid not in members:
                        members.append(eid)
                    mention(eid, document.id)
            if members:
                anchor = document.deepest_unit_at(win_start)
                if anchor is not None:
                    members.append(unit_entity_id(document.id, anchor.id))
            for i, a in enumerate(sorted(set(members))):
                for b in sorted(set(members))[i + 1:]:
                    key_meta = RelationMetadata(
                        provenance="extractor:co_occurrence",
                        entries=(("document", document.id),
                                 ("window", f"{win_start}-{win_end}")))
                    graph.add_edge(a, b, REL_CO_OCCURS.id, key_meta)

    graph.induce_relations(REL_PART_OF.id, REL_REFERS_TO.id)

    for entity_id, docs in mentions.items():
        entity = graph.entities[entity_id]
        attrs = tuple(kv for kv in entity.attributes if kv[0] != ATTR_MENTIONED_IN)
        graph.replace_entity(replace(
            entity, attributes=attrs + ((ATTR_MENTIONED_IN, ",".join(docs)),)))

    return graph, report
