"""Reading and writing the shared graph formats.

Two on-disk artifacts:

* ``*.graph.json`` -- the canonical graph document, three top-level arrays
  (clusters, nodes, edges). Export is deterministic: one state, one byte
  sequence. Import is lenient about whitespace and key order but strict
  about content; a document whose member lists disagree with its edges is
  rejected, never repaired.
* ``labels.csv`` -- flat per-image rows for downstream consumers, one line
  per picture, multiple labels joined by ``;`` inside the second field.

All functions are pure with respect to the passed state and safe for
concurrent use.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re

from .graph_core import (
    LABEL_SEPARATOR,
    ANCHOR_GROUP,
    ANCHOR_IMAGE,
    NODE_SHAPE,
    Anchor,
    Edge,
    GraphState,
    PictureNode,
)

log = logging.getLogger(__name__)

GRAPH_FILE_SUFFIX = ".graph.json"
CSV_HEADER = ("image", "labels")

_UUID_RE = re.compile(r"[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}")

_CLUSTER_KEYS = {"id", "image", "label", "shape", "group", "members"}
_NODE_KEYS = {"id", "image", "label", "shape"}
_EDGE_KEYS = {"to", "from"}


class GraphIOError(Exception):
    """Base class for import/export failures."""


class ParseError(GraphIOError):
    """Input is not valid UTF-8 JSON."""

    def __init__(self, message: str, position: int | None = None):
        suffix = f" at position {position}" if position is not None else ""
        super().__init__(message + suffix)
        self.position = position


class SchemaError(GraphIOError):
    """A field is missing, has the wrong type, or a constant mismatches."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ConsistencyError(GraphIOError):
    """The document parses but violates a graph invariant."""

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# -- export ------------------------------------------------------------


def document_dict(state: GraphState) -> dict:
    """The graph document as a plain dict, in canonical field order:
    clusters (creation order), nodes (ascending id), edges (grouped by
    anchor creation order, then member insertion order)."""
    clusters = []
    for anchor in state.clusters.values():
        clusters.append(
            {
                "id": anchor.id,
                "image": anchor.image,
                "label": anchor.label,
                "shape": anchor.shape,
                "group": anchor.group,
                "members": list(anchor.members),
            }
        )
    nodes = []
    for node_id in sorted(state.nodes):
        node = state.nodes[node_id]
        record: dict = {"id": node.id, "image": node.image}
        if node.label is not None:
            record["label"] = node.label
        record["shape"] = node.shape
        nodes.append(record)
    edges = [
        {"to": anchor.id, "from": member}
        for anchor in state.clusters.values()
        for member in anchor.members
    ]
    return {"clusters": clusters, "nodes": nodes, "edges": edges}


def export_graph(state: GraphState) -> bytes:
    """Serialize the state to canonical UTF-8 JSON bytes (2-space indent,
    trailing newline). Same state, identical bytes."""
    return (_dump_canonical(document_dict(state)) + "\n").encode("utf-8")


def _dump_canonical(doc: dict) -> str:
    """Hand-rolled writer for the document layout, byte-identical to
    ``json.dumps(doc, indent=2, ensure_ascii=False)`` but an order of
    magnitude faster: with ``indent`` set, json falls back to its
    pure-Python encoder, which dominates export time on large graphs."""
    sections = []
    for key, items in doc.items():
        if not items:
            sections.append(f'  "{key}": []')
        else:
            rendered = ",\n".join(_dump_record(item) for item in items)
            sections.append(f'  "{key}": [\n{rendered}\n  ]')
    return "{\n" + ",\n".join(sections) + "\n}"


def _dump_record(item: dict) -> str:
    fields = []
    for key, value in item.items():
        if isinstance(value, str):
            fields.append(f'      "{key}": {json.dumps(value, ensure_ascii=False)}')
        elif isinstance(value, list):
            if not value:
                fields.append(f'      "{key}": []')
            else:
                numbers = ",\n".join(f"        {n}" for n in value)
                fields.append(f'      "{key}": [\n{numbers}\n      ]')
        else:
            fields.append(f'      "{key}": {value}')
    return "    {\n" + ",\n".join(fields) + "\n    }"


# -- import ------------------------------------------------------------


def import_graph(data: bytes | str) -> GraphState:
    """Parse and validate a graph document; returns a state at revision 0.

    Raises ParseError for bad UTF-8/JSON, SchemaError for wrong shapes or
    constants, ConsistencyError for duplicate ids, dangling edges, or a
    member list that disagrees with the edges.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("input is not valid UTF-8", position=exc.start) from exc
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", position=exc.pos) from exc

    if not isinstance(doc, dict):
        raise SchemaError("<document>", "top level must be an object")
    for key in ("clusters", "nodes", "edges"):
        if key not in doc:
            raise SchemaError(key, "missing required array")
        if not isinstance(doc[key], list):
            raise SchemaError(key, "must be an array")
    _warn_unknown_keys(doc, {"clusters", "nodes", "edges"}, "<document>")

    nodes = _read_nodes(doc["nodes"])
    clusters = _read_clusters(doc["clusters"], nodes)
    edges = _read_edges(doc["edges"], nodes, clusters)

    # Members and edges describe the same relation twice; any disagreement
    # means the file was edited inconsistently and must not be repaired.
    linked: dict[str, set[int]] = {aid: set() for aid in clusters}
    for edge in edges:
        linked[edge.anchor_id].add(edge.node_id)
    for anchor_id, anchor in clusters.items():
        if set(anchor.members) != linked[anchor_id]:
            raise ConsistencyError(
                f"cluster {anchor_id}: members disagree with edges "
                f"(members={sorted(anchor.members)}, edges={sorted(linked[anchor_id])})"
            )

    return GraphState(nodes=nodes, clusters=clusters, edges=edges, revision=0)


def _warn_unknown_keys(record: dict, known: set[str], where: str) -> None:
    for key in record:
        if key not in known:
            log.warning("ignoring unknown key %r in %s", key, where)


def _check_image_path(value: object, field: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(field, "image must be a non-empty string")
    if value.startswith("/") or value.startswith("\\"):
        raise SchemaError(field, "image must be a relative path")
    if ".." in value.replace("\\", "/").split("/"):
        raise SchemaError(field, "image may not contain parent-directory components")
    return value


def _check_label(value: object, field: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise SchemaError(field, "label must be a non-blank string")
    if LABEL_SEPARATOR in value:
        raise SchemaError(field, f"label may not contain {LABEL_SEPARATOR!r}")
    return value


def _is_plain_int(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _read_nodes(items: list) -> dict[int, PictureNode]:
    nodes: dict[int, PictureNode] = {}
    for i, item in enumerate(items):
        where = f"nodes[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(where, "node must be an object")
        node_id = item.get("id")
        if not _is_plain_int(node_id) or node_id < 0:
            raise SchemaError(f"{where}.id", "id must be a non-negative integer")
        if node_id in nodes:
            raise ConsistencyError(f"duplicate node id {node_id}")
        image = _check_image_path(item.get("image"), f"{where}.image")
        if item.get("shape") != NODE_SHAPE:
            raise SchemaError(f"{where}.shape", f"shape must be {NODE_SHAPE!r}")
        label = item.get("label")
        if label is not None:
            label = _check_label(label, f"{where}.label")
        _warn_unknown_keys(item, _NODE_KEYS, where)
        nodes[node_id] = PictureNode(id=node_id, image=image, label=label)
    return nodes


def _read_clusters(items: list, nodes: dict[int, PictureNode]) -> dict[str, Anchor]:
    clusters: dict[str, Anchor] = {}
    for i, item in enumerate(items):
        where = f"clusters[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(where, "cluster must be an object")
        anchor_id = item.get("id")
        if not isinstance(anchor_id, str) or not _UUID_RE.fullmatch(anchor_id):
            raise SchemaError(f"{where}.id", "id must be a lowercase hyphenated UUID")
        if anchor_id in clusters:
            raise ConsistencyError(f"duplicate anchor id {anchor_id}")
        if item.get("image") != ANCHOR_IMAGE:
            raise SchemaError(f"{where}.image", f"anchor image must be {ANCHOR_IMAGE!r}")
        if item.get("shape") != NODE_SHAPE:
            raise SchemaError(f"{where}.shape", f"shape must be {NODE_SHAPE!r}")
        if item.get("group") != ANCHOR_GROUP:
            raise SchemaError(f"{where}.group", f"group must be {ANCHOR_GROUP!r}")
        label = _check_label(item.get("label"), f"{where}.label")
        members_raw = item.get("members")
        if not isinstance(members_raw, list):
            raise SchemaError(f"{where}.members", "members must be an array")
        members: list[int] = []
        seen: set[int] = set()
        for j, member in enumerate(members_raw):
            if not _is_plain_int(member):
                raise SchemaError(f"{where}.members[{j}]", "member must be an integer")
            if member in seen:
                raise ConsistencyError(f"cluster {anchor_id}: duplicate member {member}")
            if member not in nodes:
                raise ConsistencyError(f"cluster {anchor_id}: member {member} is not a node")
            seen.add(member)
            members.append(member)
        _warn_unknown_keys(item, _CLUSTER_KEYS, where)
        clusters[anchor_id] = Anchor(id=anchor_id, label=label, members=members)
    return clusters


def _read_edges(
    items: list, nodes: dict[int, PictureNode], clusters: dict[str, Anchor]
) -> list[Edge]:
    edges: list[Edge] = []
    seen: set[tuple[str, int]] = set()
    for i, item in enumerate(items):
        where = f"edges[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(where, "edge must be an object")
        to = item.get("to")
        if not isinstance(to, str):
            raise SchemaError(f"{where}.to", "to must be an anchor id string")
        from_ = item.get("from")
        if not _is_plain_int(from_):
            raise SchemaError(f"{where}.from", "from must be a node id integer")
        if to not in clusters:
            raise ConsistencyError(f"dangling edge: anchor {to} does not exist")
        if from_ not in nodes:
            raise ConsistencyError(f"dangling edge: node {from_} does not exist")
        if (to, from_) in seen:
            raise ConsistencyError(f"duplicate edge ({to}, {from_})")
        seen.add((to, from_))
        _warn_unknown_keys(item, _EDGE_KEYS, where)
        edges.append(Edge(anchor_id=to, node_id=from_))
    return edges


# -- flat label export ---------------------------------------------------


def export_labels(state: GraphState) -> bytes:
    """Ground-truth CSV: header ``image,labels``, one row per picture in
    ascending id order, memberships joined by ``;`` in creation order."""
    labels: dict[int, list[str]] = {node_id: [] for node_id in state.nodes}
    for anchor in state.clusters.values():
        for member in anchor.members:
            labels[member].append(anchor.label)
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(CSV_HEADER)
    for node_id in sorted(state.nodes):
        writer.writerow([state.nodes[node_id].image, LABEL_SEPARATOR.join(labels[node_id])])
    return out.getvalue().encode("utf-8")


def validate_exclusive(state: GraphState) -> list[tuple[int, list[str]]]:
    """Report pictures that sit in two or more clusters. An empty report
    means the labeling is mutually exclusive."""
    report: list[tuple[int, list[str]]] = []
    for node_id in sorted(state.nodes):
        anchors = [aid for aid, anchor in state.clusters.items() if node_id in anchor.members]
        if len(anchors) >= 2:
            report.append((node_id, anchors))
    return report
