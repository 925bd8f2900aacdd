from __future__ import annotations

import random
from pathlib import Path

import pytest

from semtour import store
from semtour.extraction import ExtractorConfig, build_graph
from semtour.graph import Entity, EntityKind, KnowledgeGraph, RelationMetadata, RelationType

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS_MANIFEST = FIXTURES / "corpus" / "manifest.json"

FIXTURE_CONFIG = ExtractorConfig(
    code_whitelist=frozenset({"StGB", "BGB", "StPO", "GG", "BUrlG"}),
    concept_lexicon=(("Verletzung", "Verletzung"),
                     ("Urlaub", "Urlaub"),
                     ("Schaden", "Schaden")),
    co_occurrence_window="sentence")

REL = RelationType(id="rel", name="related")


@pytest.fixture(scope="session")
def corpus():
    return store.load_corpus(CORPUS_MANIFEST)


@pytest.fixture(scope="session")
def fixture_config():
    return FIXTURE_CONFIG


@pytest.fixture()
def fixture_graph(corpus):
    graph, _report = build_graph(corpus, FIXTURE_CONFIG)
    return graph


@pytest.fixture(scope="session")
def fixture_graph_shared(corpus):
    """Read-only fixture graph shared across a test session."""
    graph, _report = build_graph(corpus, FIXTURE_CONFIG)
    return graph


def make_random_graph(rng: random.Random, n_nodes: int, n_edges: int,
                      allow_parallel: bool = True) -> KnowledgeGraph:
    """Random multigraph with a single generic relation type."""
    graph = KnowledgeGraph()
    graph.register_relation_type(REL)
    for i in range(n_nodes):
        graph.add_entity(Entity(id=f"n{i:03d}", label=f"node {i}",
                                kind=EntityKind.CONCEPT))
    for _ in range(n_edges):
        src = f"n{rng.randrange(n_nodes):03d}"
        dst = f"n{rng.randrange(n_nodes):03d}"
        if src == dst:
            continue
        graph.add_edge(src, dst, REL.id, RelationMetadata(provenance="extractor:test"))
    return graph


def make_path_graph(n_nodes: int) -> KnowledgeGraph:
    """Directed path n000 -> n001 -> ... -> n(k-1)."""
    graph = KnowledgeGraph()
    graph.register_relation_type(REL)
    for i in range(n_nodes):
        graph.add_entity(Entity(id=f"n{i:03d}", label=f"node {i}",
                                kind=EntityKind.CONCEPT))
    for i in range(n_nodes - 1):
        graph.add_edge(f"n{i:03d}", f"n{i + 1:03d}", REL.id,
                       RelationMetadata(provenance="extractor:test"))
    return graph


def make_random_tree(rng: random.Random, n_nodes: int) -> KnowledgeGraph:
    """Random tree: each node links from a random earlier node."""
    graph = KnowledgeGraph()
    graph.register_relation_type(REL)
    for i in range(n_nodes):
        graph.add_entity(Entity(id=f"n{i:03d}", label=f"node {i}",
                                kind=EntityKind.CONCEPT))
    for i in range(1, n_nodes):
        parent = rng.randrange(i)
        graph.add_edge(f"n{parent:03d}", f"n{i:03d}", REL.id,
                       RelationMetadata(provenance="extractor:test"))
    return graph
