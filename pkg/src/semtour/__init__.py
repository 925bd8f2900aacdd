"""Graph-based semantic tour engine for linked document corpora."""

from .dataspace import (
    DataPoint,
    Dataset,
    LinearTour,
    Locator,
    PointKind,
    Scene,
    Selection,
    StagingConfig,
    ViewKind,
    make_linear_tour,
    select,
    sequence_scenes,
    stage,
    transition_next,
)
from .graph import (
    Edge,
    Entity,
    EntityKind,
    Interpretation,
    KnowledgeGraph,
    RelationMetadata,
    RelationType,
)
from .extraction import (
    BuildReport,
    Document,
    DocumentKind,
    ExtractorConfig,
    Reference,
    Unit,
    build_graph,
    extract_entities,
    parse_references,
)
from .tour import (
    SemanticTour,
    ValidationReport,
    expand,
    linearize,
    seed_from_document,
    seed_from_entity,
    validate,
)
from .session import (
    FocusLevel,
    LayoutModel,
    LensState,
    NavigationSession,
    ProvenanceEvent,
    SemanticPath,
    TaskTag,
    compute_lens,
    compute_layout,
)

__version__ = "0.1.0"
