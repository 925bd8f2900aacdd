"""Data space: data points, datasets, scenes and the four tour operators.

Tours are assembled from four primitives: selecting data points, staging a
selection into a scene, sequencing scenes, and transitioning between
consecutive scenes.  All values here are immutable after construction so
they can be shared freely between threads.
"""

from __future__ import annotations

import itertools
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

from .errors import AlreadySequenced, HighlightOutsideSelection, UnknownScene


class PointKind(str, Enum):
    TOKEN = "token"
    EXPRESSION = "expression"
    CONCEPT = "concept"
    PARAGRAPH = "paragraph"
    SECTION = "section"
    DOCUMENT = "document"
    LAW = "law"


class ViewKind(str, Enum):
    TEXT = "text"
    TREEMAP = "treemap"
    ICICLE = "icicle"
    ENTITY_CARD = "entity_card"


@dataclass(frozen=True)
class Locator:
    """Position of a data point inside a source document."""

    document_id: str
    span: tuple[int, int]
    path: tuple[str, ...] = ()

    def __post_init__(self):
        start, end = self.span
        if not start < end:
            raise ValueError(f"locator span must satisfy start < end, got {self.span}")


@dataclass(frozen=True)
class DataPoint:
    id: str
    dataset_id: str
    kind: PointKind
    payload: str
    locator: Optional[Locator] = None
    granularity: int = 0

    def __post_init__(self):
        if self.granularity < 0:
            raise ValueError("granularity must be non-negative")
        if self.kind is PointKind.TOKEN and self.granularity != 0:
            raise ValueError("token data points are granularity 0")


@dataclass(frozen=True)
class Dataset:
    id: str
    name: str
    member_ids: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Selection:
    """A materialized set of data-point ids; may be empty."""

    member_ids: frozenset[str] = frozenset()

    def __contains__(self, point_id: str) -> bool:
        return point_id in self.member_ids

    def __len__(self) -> int:
        return len(self.member_ids)


@dataclass(frozen=True)
class StagingConfig:
    view_kind: ViewKind = ViewKind.TEXT
    viewport: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    zoom: float = 1.0
    highlights: tuple[tuple[str, str], ...] = ()
    layout_hints: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.zoom <= 0:
            raise ValueError("zoom must be positive")


@dataclass(frozen=True)
class Scene:
    id: str
    selection: Selection
    staging: StagingConfig
    seq_index: Optional[int] = None

    def content_equal(self, other: "Scene") -> bool:
        """Equality modulo id (staging is a pure function of its inputs)."""
        return self.selection == other.selection and self.staging == other.staging


@dataclass(frozen=True)
class LinearTour:
    """An ordered sequence of scenes with consecutive transitions."""

    id: str
    scenes: tuple[Scene, ...]
    transitions: tuple[tuple[str, str], ...]

    def __post_init__(self):
        indices = [s.seq_index for s in self.scenes]
        if indices != list(range(len(self.scenes))):
            raise ValueError("scene seq indices must be 0..k-1 in order")
        expected = tuple(
            (a.id, b.id) for a, b in zip(self.scenes, self.scenes[1:])
        )
        if self.transitions != expected:
            raise ValueError("transitions must connect consecutive scenes only")

    def scene_order(self) -> list[str]:
        return [s.id for s in self.scenes]


_scene_counter = itertools.count()


def _fresh_scene_id() -> str:
    return f"scene-{uuid.uuid4().hex[:12]}"


def select(datasets: Iterable[Dataset], predicate: Callable[[DataPoint], bool],
           points: dict[str, DataPoint]) -> Selection:
    """Filter the union of all dataset members by a total predicate.

    ``points`` resolves member ids to data points; the result contains
    exactly the ids whose point satisfies the predicate.
    """
    union: set[str] = set()
    for ds in datasets:
        union |= ds.member_ids
    kept = frozenset(pid for pid in union if predicate(points[pid]))
    return Selection(member_ids=kept)


def stage(selection: Selection, config: StagingConfig,
          scene_id: Optional[str] = None) -> Scene:
    """Stage a selection into an unsequenced scene.

    Pure apart from id assignment; pass ``scene_id`` for deterministic ids.
    """
    for point_id, _color in config.highlights:
        if point_id not in selection:
            raise HighlightOutsideSelection(
                f"highlighted point {point_id!r} not in selection", point=point_id)
    return Scene(id=scene_id or _fresh_scene_id(), selection=selection, staging=config)


def sequence_scenes(scenes: Sequence[Scene]) -> list[Scene]:
    """Assign 0-based sequence indices by list position."""
    if not scenes:
        raise ValueError("cannot sequence an empty scene list")
    for scene in scenes:
        if scene.seq_index is not None:
            raise AlreadySequenced(f"scene {scene.id!r} already sequenced",
                                   scene=scene.id)
    return [replace(scene, seq_index=i) for i, scene in enumerate(scenes)]


def make_linear_tour(scenes: Sequence[Scene], tour_id: Optional[str] = None) -> LinearTour:
    """Sequence scenes and wire consecutive transitions into a tour."""
    ordered = tuple(sequence_scenes(scenes))
    transitions = tuple((a.id, b.id) for a, b in zip(ordered, ordered[1:]))
    return LinearTour(id=tour_id or f"tour-{uuid.uuid4().hex[:12]}",
                      scenes=ordered, transitions=transitions)


def transition_next(tour: LinearTour, scene_id: str) -> Optional[Scene]:
    """Successor scene within a linear tour, or None at the last scene."""
    for i, scene in enumerate(tour.scenes):
        if scene.id == scene_id:
            return tour.scenes[i + 1] if i + 1 < len(tour.scenes) else None
    raise UnknownScene(f"scene {scene_id!r} not in tour {tour.id!r}", scene=scene_id)
