"""Command-line interface: batch graph builds, exports, replay and serving."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import store
from .errors import SemtourError
from .extraction import ExtractorConfig, build_graph
from .session import EventKind, _NavState


def _load_lexicon(path: str | None) -> ExtractorConfig:
    if path is None:
        return ExtractorConfig()
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return ExtractorConfig(
        code_whitelist=frozenset(obj.get("code_whitelist", [])),
        concept_lexicon=tuple((p, l) for p, l in obj.get("concept_lexicon", [])),
        co_occurrence_window=obj.get("co_occurrence_window", "sentence"))


@click.group()
def main():
    """Semantic tour engine over linked document corpora."""


@main.command()
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=True), help="Corpus manifest JSON.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output graph JSON file.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Extractor config JSON (code_whitelist, concept_lexicon).")
def build(corpus_path, out_path, config_path):
    """Ingest a corpus manifest and build the knowledge graph."""
    try:
        corpus = store.load_corpus(corpus_path)
        config = _load_lexicon(config_path)
        graph, report = build_graph(corpus, config)
        Path(out_path).write_bytes(store.save_graph(graph))
    except SemtourError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"built graph: {len(graph.entities)} entities, "
               f"{len(graph.edges)} edges, "
               f"{len(report.unresolved)} unresolved references")


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", type=click.Path(exists=True))
@click.option("--port", type=int, default=None,
              help="Overrides SEMTOUR_PORT; default 8080.")
@click.option("--host", default="127.0.0.1")
def serve(graph_path, corpus_path, port, host):
    """Run the HTTP service over a built graph."""
    import os
    import uvicorn
    from .api import create_app

    if port is None:
        port = int(os.environ.get("SEMTOUR_PORT", "8080"))
    try:
        app = create_app(corpus_path=corpus_path, graph_path=graph_path)
    except SemtourError as exc:
        raise click.ClickException(str(exc))
    uvicorn.run(app, host=host, port=port)


@main.command("export-dot")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--tour", "tour_path", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Output file; stdout when omitted.")
def export_dot(graph_path, tour_path, out_path):
    """Export a graph (or a tour over it) as DOT."""
    try:
        graph = store.load_graph(Path(graph_path).read_bytes())
        if tour_path:
            tour = store.load_tour(Path(tour_path).read_bytes())
            text = store.export_dot(tour, graph=graph)
        else:
            text = store.export_dot(graph)
    except SemtourError as exc:
        raise click.ClickException(str(exc))
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--session-log", "log_path", required=True,
              type=click.Path(exists=True), help="JSON-lines session log.")
def replay(log_path):
    """Replay a session log and print a snapshot per navigation event."""
    try:
        events = store.load_session_log(Path(log_path).read_bytes())
    except SemtourError as exc:
        raise click.ClickException(str(exc))
    state = _NavState()
    for event in events:
        state.apply(event)
        if event.kind in (EventKind.INIT, EventKind.STEP, EventKind.BRANCH,
                          EventKind.DETOUR):
            click.echo(json.dumps(state.snapshot(event.seq).to_json(),
                                  sort_keys=True))
    click.echo("final: " + json.dumps(state.snapshot(len(events) - 1).to_json(),
                                      sort_keys=True))


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--q", "query", required=True)
def search(graph_path, query):
    """Search entity labels (case-insensitive substring)."""
    try:
        graph = store.load_graph(Path(graph_path).read_bytes())
    except SemtourError as exc:
        raise click.ClickException(str(exc))
    for entity in graph.search_entities(query):
        click.echo(f"{entity.id}\t{entity.kind.value}\t{entity.label}")


if __name__ == "__main__":
    sys.exit(main())
