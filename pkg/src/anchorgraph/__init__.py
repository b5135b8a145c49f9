"""Collaborative image labeling on a server-authoritative cluster graph."""

from .graph_core import (
    Anchor,
    Edge,
    GraphError,
    GraphState,
    Mutation,
    PictureNode,
    apply_mutation,
)
from .graph_io import export_graph, export_labels, import_graph, validate_exclusive
from .dataset_ingest import IngestConfig, generate_thumbnails, ingest_folder
from .sync_service import SyncService

__all__ = [
    "Anchor",
    "Edge",
    "GraphError",
    "GraphState",
    "IngestConfig",
    "Mutation",
    "PictureNode",
    "SyncService",
    "apply_mutation",
    "export_graph",
    "export_labels",
    "generate_thumbnails",
    "import_graph",
    "ingest_folder",
    "validate_exclusive",
]
