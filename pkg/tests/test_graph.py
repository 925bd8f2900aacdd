from __future__ import annotations

import random
from collections import deque

import pytest

from conftest import REL, make_random_graph
from semtour import store
from semtour.dataspace import DataPoint, PointKind
from semtour.errors import (
    AmbiguousContainer,
    DanglingSource,
    DuplicateId,
    SelfLoopForbidden,
    UnknownEdge,
    UnknownEntity,
    UnknownRelationType,
)
from semtour.graph import (
    Entity,
    EntityKind,
    KnowledgeGraph,
    RelationMetadata,
    RelationType,
)


def _graph_with(n):
    g = KnowledgeGraph()
    g.register_relation_type(REL)
    for i in range(n):
        g.add_entity(Entity(id=f"n{i:03d}", label=f"node {i}",
                            kind=EntityKind.CONCEPT))
    return g


class TestEntities:
    def test_user_created_entity_searchable_by_label(self):
        g = _graph_with(0)
        g.add_entity(Entity(id="c1", label="Verletzung", kind=EntityKind.CONCEPT))
        assert [e.id for e in g.search_entities("verletzung")] == ["c1"]

    def test_round_trip_by_id(self):
        g = _graph_with(0)
        entity = Entity(id="x", label="x", kind=EntityKind.NORM)
        g.add_entity(entity)
        assert g.get_entity("x") == entity

    def test_thousand_entities(self):
        g = _graph_with(1000)
        assert len(g.entities) == 1000
        assert len(g.edges) == 0

    def test_duplicate_id_rejected(self):
        g = _graph_with(1)
        with pytest.raises(DuplicateId):
            g.add_entity(Entity(id="n000", label="dup", kind=EntityKind.NORM))

    def test_dangling_source_rejected(self):
        g = _graph_with(0)
        with pytest.raises(DanglingSource):
            g.add_entity(Entity(id="x", label="x", kind=EntityKind.NORM,
                                source="dp:missing"))

    def test_registered_source_accepted(self):
        g = _graph_with(0)
        g.register_data_point(DataPoint(id="dp1", dataset_id="d",
                                        kind=PointKind.CONCEPT, payload="t",
                                        granularity=2))
        g.add_entity(Entity(id="x", label="x", kind=EntityKind.CONCEPT,
                            source="dp1"))
        assert g.get_entity("x").source == "dp1"


class TestEdges:
    def test_parallel_edges_with_distinct_ids(self):
        g = _graph_with(2)
        g.register_relation_type(RelationType(id="interprets", name="interprets"))
        e1 = g.add_edge("n000", "n001", REL.id,
                        RelationMetadata(provenance="extractor:t"))
        e2 = g.add_edge("n000", "n001", "interprets",
                        RelationMetadata(provenance="extractor:t"))
        assert e1 != e2
        assert {g.edges[e1].rel, g.edges[e2].rel} == {REL.id, "interprets"}

    def test_metadata_provenance_round_trip(self):
        g = _graph_with(2)
        eid = g.add_edge("n000", "n001", REL.id,
                         RelationMetadata(provenance="user"))
        assert g.get_metadata(eid).provenance == "user"

    def test_degree_sum_equals_edge_count(self):
        rng = random.Random(11)
        g = make_random_graph(rng, 40, 150)
        out_degree_sum = sum(len(g.out_index[e]) for e in g.entities)
        assert out_degree_sum == len(g.edges)
        assert sum(len(g.in_index[e]) for e in g.entities) == len(g.edges)

    def test_errors(self):
        g = _graph_with(2)
        with pytest.raises(UnknownEntity):
            g.add_edge("nope", "n001", REL.id, RelationMetadata(provenance="user"))
        with pytest.raises(UnknownRelationType):
            g.add_edge("n000", "n001", "nope", RelationMetadata(provenance="user"))
        with pytest.raises(SelfLoopForbidden):
            g.add_edge("n000", "n000", REL.id, RelationMetadata(provenance="user"))
        with pytest.raises(UnknownEdge):
            g.get_metadata("e999999")

    def test_self_loop_allowed_when_relation_opts_in(self):
        g = _graph_with(1)
        g.register_relation_type(RelationType(id="loop", name="loop",
                                              allow_self_loops=True))
        eid = g.add_edge("n000", "n000", "loop",
                         RelationMetadata(provenance="user"))
        assert g.edges[eid].src == g.edges[eid].dst


class TestApplyMapping:
    def test_empty_mapper_adds_nothing(self):
        g = _graph_with(5)
        pairs = [(g.entities[a], g.entities[b])
                 for a in g.entities for b in g.entities if a != b]
        assert g.apply_mapping(lambda u, v: [], pairs) == []
        assert len(g.edges) == 0

    def test_same_container_mapper_matches_nested_loop_oracle(self):
        g = _graph_with(12)
        container = {eid: i % 3 for i, eid in enumerate(sorted(g.entities))}

        def mapper(u, v):
            if container[u.id] == container[v.id]:
                return [(REL, RelationMetadata(provenance="extractor:same"))]
            return []

        pairs = [(g.entities[a], g.entities[b])
                 for a in sorted(g.entities) for b in sorted(g.entities) if a != b]
        added = g.apply_mapping(mapper, pairs)

        expected = {(a, b) for a in sorted(g.entities) for b in sorted(g.entities)
                    if a != b and container[a] == container[b]}
        got = {(g.edges[e].src, g.edges[e].dst) for e in added}
        assert got == expected

    def test_idempotent_under_dedup(self):
        g = _graph_with(6)

        def mapper(u, v):
            if u.id < v.id:
                return [(REL, RelationMetadata(provenance="extractor:lt"))]
            return []

        pairs = [(g.entities[a], g.entities[b])
                 for a in sorted(g.entities) for b in sorted(g.entities) if a != b]
        first = g.apply_mapping(mapper, pairs)
        second = g.apply_mapping(mapper, pairs)
        assert first and second == []


def bfs_oracle(graph, start, depth):
    """Independent truncated BFS over both directions."""
    dist = {start: 0}
    frontier = deque([start])
    while frontier:
        node = frontier.popleft()
        if dist[node] >= depth:
            continue
        neighbors = [e.dst for e in graph.out_edges(node)]
        neighbors += [e.src for e in graph.in_edges(node)]
        for nb in neighbors:
            if nb not in dist:
                dist[nb] = dist[node] + 1
                frontier.append(nb)
    return set(dist)


class TestNeighborhood:
    def test_isolated_entity(self):
        g = _graph_with(3)
        sub = g.neighborhood("n000", 1)
        assert set(sub.entities) == {"n000"}
        assert not sub.edges

    def test_fixture_verletzung_depth_one(self, fixture_graph_shared):
        sub = fixture_graph_shared.neighborhood("concept:Verletzung", 1)
        kinds = {fixture_graph_shared.entities[e].kind.value
                 for e in sub.entities if e != "concept:Verletzung"}
        assert kinds == {"norm", "ruling", "commentary"}
        assert {"StGB/s223", "ruling-bgh-1/rn1"} <= set(sub.entities)

    @pytest.mark.parametrize("seed", range(8))
    def test_depth_two_matches_bfs_oracle(self, seed):
        rng = random.Random(seed)
        g = make_random_graph(rng, 60, 180)
        start = "n000"
        sub = g.neighborhood(start, 2)
        assert set(sub.entities) == bfs_oracle(g, start, 2)

    def test_subgraph_contains_all_internal_edges(self):
        rng = random.Random(3)
        g = make_random_graph(rng, 30, 120)
        sub = g.neighborhood("n000", 2)
        keep = set(sub.entities)
        expected = {eid for eid, e in g.edges.items()
                    if e.src in keep and e.dst in keep}
        assert set(sub.edges) == expected

    def test_unknown_entity(self):
        with pytest.raises(UnknownEntity):
            _graph_with(1).neighborhood("nope", 1)


def _membership_graph(rng, n_members, n_containers, n_base_edges):
    g = KnowledgeGraph()
    part_of = RelationType(id="part_of", name="part of")
    base = RelationType(id="cites", name="cites")
    g.register_relation_type(part_of)
    g.register_relation_type(base)
    for c in range(n_containers):
        g.add_entity(Entity(id=f"c{c:03d}", label=f"container {c}",
                            kind=EntityKind.LAW))
    container_of = {}
    for m in range(n_members):
        mid = f"m{m:03d}"
        g.add_entity(Entity(id=mid, label=f"member {m}", kind=EntityKind.NORM))
        cid = f"c{rng.randrange(n_containers):03d}"
        container_of[mid] = cid
        g.add_edge(mid, cid, "part_of", RelationMetadata(provenance="extractor:t"))
    for _ in range(n_base_edges):
        a, b = (f"m{rng.randrange(n_members):03d}" for _ in range(2))
        if a != b:
            g.add_edge(a, b, "cites", RelationMetadata(provenance="extractor:t"))
    return g, container_of


class TestInduceRelations:
    def test_no_cross_container_edges_induce_nothing(self):
        rng = random.Random(1)
        g, container_of = _membership_graph(rng, 10, 10, 0)
        assert g.induce_relations("part_of", "cites") == []

    def test_two_citations_merge_with_count_two(self):
        g = KnowledgeGraph()
        for rel in (RelationType(id="part_of", name="p"),
                    RelationType(id="cites", name="c")):
            g.register_relation_type(rel)
        for eid, kind in (("lawA", EntityKind.LAW), ("lawB", EntityKind.LAW),
                          ("a1", EntityKind.NORM), ("a2", EntityKind.NORM),
                          ("b1", EntityKind.NORM)):
            g.add_entity(Entity(id=eid, label=eid, kind=kind))
        for member, cont in (("a1", "lawA"), ("a2", "lawA"), ("b1", "lawB")):
            g.add_edge(member, cont, "part_of", RelationMetadata(provenance="user"))
        g.add_edge("a1", "b1", "cites", RelationMetadata(provenance="user"))
        g.add_edge("a2", "b1", "cites", RelationMetadata(provenance="user"))
        [induced] = g.induce_relations("part_of", "cites")
        edge = g.edges[induced]
        assert (edge.src, edge.dst) == ("lawA", "lawB")
        assert edge.meta.entry("count") == "2"
        assert edge.meta.provenance == "induced"
        assert len(edge.meta.entry("support").split(",")) == 2
        assert g.relation_types[edge.rel].induced_parent == "cites"

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_nested_loop_oracle(self, seed):
        rng = random.Random(seed)
        g, container_of = _membership_graph(rng, 120, 15, 300)
        g.induce_relations("part_of", "cites")

        oracle = {}
        for edge in g.edges.values():
            if edge.rel != "cites":
                continue
            u_c, v_c = container_of[edge.src], container_of[edge.dst]
            if u_c != v_c:
                oracle[(u_c, v_c)] = oracle.get((u_c, v_c), 0) + 1
        induced = {(e.src, e.dst): int(e.meta.entry("count"))
                   for e in g.edges.values() if e.rel == "cites_induced"}
        assert induced == oracle

    def test_idempotent(self):
        rng = random.Random(5)
        g, _ = _membership_graph(rng, 40, 6, 100)
        before = len(g.edges)
        first = g.induce_relations("part_of", "cites")
        assert len(g.edges) == before + len(first)
        assert g.induce_relations("part_of", "cites") == []
        assert len(g.edges) == before + len(first)

    def test_ambiguous_container_rejected(self):
        g = KnowledgeGraph()
        for rel in (RelationType(id="part_of", name="p"),
                    RelationType(id="cites", name="c")):
            g.register_relation_type(rel)
        for eid in ("m", "c1", "c2"):
            g.add_entity(Entity(id=eid, label=eid, kind=EntityKind.NORM))
        g.add_edge("m", "c1", "part_of", RelationMetadata(provenance="user"))
        g.add_edge("m", "c2", "part_of", RelationMetadata(provenance="user"))
        with pytest.raises(AmbiguousContainer):
            g.induce_relations("part_of", "cites")

    def test_unknown_relation_types(self):
        g = KnowledgeGraph()
        g.register_relation_type(REL)
        with pytest.raises(UnknownRelationType):
            g.induce_relations("nope", REL.id)
        with pytest.raises(UnknownRelationType):
            g.induce_relations(REL.id, "nope")


class TestMetadata:
    def test_entries_round_trip(self):
        g = _graph_with(2)
        meta = RelationMetadata(provenance="extractor:x",
                                entries=(("a", "1"), ("b", "2")))
        eid = g.add_edge("n000", "n001", REL.id, meta)
        assert g.get_metadata(eid) == meta

    def test_metadata_survives_serialization_round_trip(self):
        rng = random.Random(2)
        g = make_random_graph(rng, 20, 60)
        data = store.save_graph(g)
        restored = store.load_graph(data)
        assert store.save_graph(restored) == data
        for eid in g.edges:
            assert restored.get_metadata(eid) == g.get_metadata(eid)


@pytest.mark.parametrize("seed", range(5))
def test_index_integrity_full_scan(seed):
    rng = random.Random(seed)
    g = make_random_graph(rng, 50, 200)
    assert g.check_integrity() == []


def test_fixture_graph_integrity(fixture_graph_shared):
    assert fixture_graph_shared.check_integrity() == []
