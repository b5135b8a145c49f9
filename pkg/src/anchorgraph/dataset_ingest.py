"""Dataset ingestion: turn a folder of image files into picture nodes and
build the down-scaled thumbnail mirror the clients display.

Ingestion is deterministic: accepted filenames are sorted by byte order
and ids assigned densely from 0, so the same folder always produces the
same graph. Thumbnails live beside the dataset in ``.thumbs/`` as plain
static files; re-running the generator skips anything already up to date.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .graph_core import GraphState, PictureNode

log = logging.getLogger(__name__)

DEFAULT_EXTENSIONS = frozenset({"png", "jpg", "jpeg", "gif", "bmp"})
DEFAULT_THUMB_MAX_EDGE = 128
MIN_THUMB_EDGE = 16
THUMBS_DIRNAME = ".thumbs"
PLACEHOLDER_COLOR = (96, 96, 96)


class MissingDirectory(Exception):
    """The configured dataset directory does not exist."""


@dataclass
class IngestConfig:
    dataset_dir: Path
    thumb_max_edge: int = DEFAULT_THUMB_MAX_EDGE
    accepted_extensions: frozenset[str] = DEFAULT_EXTENSIONS

    def __post_init__(self) -> None:
        self.dataset_dir = Path(self.dataset_dir)
        if self.thumb_max_edge < MIN_THUMB_EDGE:
            raise ValueError(f"thumb_max_edge must be >= {MIN_THUMB_EDGE}")

    @property
    def thumbs_dir(self) -> Path:
        return self.dataset_dir / THUMBS_DIRNAME


@dataclass
class ThumbnailReport:
    """What one generator run did, filename by filename."""

    generated: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    placeholders: list[str] = field(default_factory=list)


def ingest_folder(config: IngestConfig) -> GraphState:
    """Scan the dataset directory (non-recursive) and build a fresh graph:
    one node per accepted file, ids 0..n-1 in byte-order filename sort, no
    clusters, revision 0. An empty folder yields an empty graph with a
    warning."""
    root = config.dataset_dir
    if not root.is_dir():
        raise MissingDirectory(str(root))
    names: list[str] = []
    for entry in os.scandir(root):
        if not entry.is_file():
            continue
        ext = os.path.splitext(entry.name)[1].lstrip(".").lower()
        if ext not in config.accepted_extensions:
            continue
        if not os.access(entry.path, os.R_OK):
            log.warning("skipping unreadable file %s", entry.name)
            continue
        names.append(entry.name)
    names.sort(key=os.fsencode)
    if not names:
        log.warning("no accepted images found in %s", root)
    state = GraphState()
    for node_id, name in enumerate(names):
        state.nodes[node_id] = PictureNode(id=node_id, image=name)
    return state


def scaled_size(width: int, height: int, max_edge: int) -> tuple[int, int]:
    """Target thumbnail size: longest edge capped at max_edge, aspect
    preserved, short edge floored but never below 1. Never upscales."""
    longest = max(width, height)
    if longest <= max_edge:
        return width, height
    if width >= height:
        return max_edge, max(1, height * max_edge // width)
    return max(1, width * max_edge // height), max_edge


def generate_thumbnails(config: IngestConfig, state: GraphState) -> ThumbnailReport:
    """Write one thumbnail per picture node under ``<dataset>/.thumbs/``.

    Thumbnails whose mtime is already >= the source mtime are skipped, so
    a second run over an unchanged dataset re-encodes nothing. Files that
    cannot be decoded get a flat placeholder and a warning, never an
    aborted run.
    """
    thumbs_dir = config.thumbs_dir
    thumbs_dir.mkdir(exist_ok=True)
    report = ThumbnailReport()
    for node_id in sorted(state.nodes):
        name = state.nodes[node_id].image
        src = config.dataset_dir / name
        dst = thumbs_dir / name
        if dst.exists() and src.exists() and dst.stat().st_mtime >= src.stat().st_mtime:
            report.skipped.append(name)
            continue
        try:
            with Image.open(src) as im:
                fmt = im.format or "PNG"
                target = scaled_size(im.width, im.height, config.thumb_max_edge)
                thumb = im.resize(target, Image.Resampling.LANCZOS) if target != im.size else im
                _save_thumbnail(thumb, dst, fmt)
            report.generated.append(name)
        except (OSError, UnidentifiedImageError, ValueError) as exc:
            log.warning("cannot decode %s (%s); writing placeholder", name, exc)
            _write_placeholder(dst, config.thumb_max_edge)
            report.placeholders.append(name)
    return report


def _save_thumbnail(im: Image.Image, dst: Path, fmt: str) -> None:
    if fmt == "JPEG" and im.mode not in ("RGB", "L", "CMYK"):
        im = im.convert("RGB")
    im.save(dst, format=fmt)


def _write_placeholder(dst: Path, max_edge: int) -> None:
    side = min(max_edge, 128)
    im = Image.new("RGB", (side, side), PLACEHOLDER_COLOR)
    try:
        im.save(dst)
    except (ValueError, OSError):
        # Extension gives no usable format; PNG bytes still render.
        im.save(dst, format="PNG")
