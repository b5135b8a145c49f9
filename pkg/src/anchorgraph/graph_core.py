"""Canonical in-memory labeling graph and its mutation semantics.

Pictures are integer-id nodes; clusters are synthetic "anchor" nodes keyed
by UUID. A picture belongs to a cluster when an edge links it to that
anchor, and every anchor also carries its member list in insertion order;
the edge set and the member lists must always agree. Mutations apply
atomically: either the whole action lands and the revision counter moves
up by one, or a GraphError is raised and the state is untouched.

The state has a single logical writer. Nothing here locks; the session
layer is responsible for applying mutations strictly serially.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field, replace
from typing import Iterable

NODE_SHAPE = "image"
ANCHOR_IMAGE = "anchor.png"
ANCHOR_GROUP = "anchor"

# Joins multiple labels in the flat CSV export, so labels may not contain it.
LABEL_SEPARATOR = ";"

# Mutation kinds, as they appear on the wire.
CREATE_CLUSTER = "CreateCluster"
RENAME_NODE = "RenameNode"
DELETE_CLUSTER = "DeleteCluster"
ADD_MEMBERS = "AddMembers"
REMOVE_MEMBERS = "RemoveMembers"
DELETE_PICTURES = "DeletePictures"

MUTATION_KINDS = frozenset(
    {CREATE_CLUSTER, RENAME_NODE, DELETE_CLUSTER, ADD_MEMBERS, REMOVE_MEMBERS, DELETE_PICTURES}
)


class GraphError(Exception):
    """A mutation was rejected. ``code`` is the wire-level error name."""

    code = "GraphError"


class UnknownNode(GraphError):
    code = "UnknownNode"

    def __init__(self, node_id: int):
        super().__init__(f"no picture node with id {node_id}")
        self.node_id = node_id


class UnknownAnchor(GraphError):
    code = "UnknownAnchor"

    def __init__(self, anchor_id: str):
        super().__init__(f"no anchor with id {anchor_id}")
        self.anchor_id = anchor_id


class UnknownTarget(GraphError):
    code = "UnknownTarget"

    def __init__(self, target: object):
        super().__init__(f"no node or anchor matching {target!r}")
        self.target = target


class EmptySelection(GraphError):
    code = "EmptySelection"

    def __init__(self) -> None:
        super().__init__("selection is empty after deduplication")


class EmptyLabel(GraphError):
    code = "EmptyLabel"

    def __init__(self) -> None:
        super().__init__("label must contain at least one non-whitespace character")


class ForbiddenCharacter(GraphError):
    code = "ForbiddenCharacter"

    def __init__(self, label: str) -> None:
        super().__init__(f"label may not contain {LABEL_SEPARATOR!r}: {label!r}")
        self.label = label


class BadMutation(GraphError):
    """Mutation payload is missing required fields or carries wrong types."""

    code = "BadMutation"


@dataclass
class PictureNode:
    """One image of the dataset. ``label`` is a cosmetic display label,
    unset by default; it has no effect on clustering."""

    id: int
    image: str
    label: str | None = None
    shape: str = NODE_SHAPE


@dataclass
class Anchor:
    """Cluster-representative node; pictures join it by gaining an edge."""

    id: str
    label: str
    members: list[int] = field(default_factory=list)
    image: str = ANCHOR_IMAGE
    shape: str = NODE_SHAPE
    group: str = ANCHOR_GROUP


@dataclass(frozen=True)
class Edge:
    """Directed membership link: ``node_id`` (from) -> ``anchor_id`` (to)."""

    anchor_id: str
    node_id: int


@dataclass
class Mutation:
    """One labeling action. Only the fields the kind needs are set."""

    kind: str
    selection: list[int] | None = None
    anchor: str | None = None
    target: int | str | None = None
    label: str | None = None

    def to_payload(self) -> dict:
        payload: dict = {"kind": self.kind}
        if self.selection is not None:
            payload["selection"] = list(self.selection)
        if self.anchor is not None:
            payload["anchor"] = self.anchor
        if self.target is not None:
            payload["target"] = self.target
        if self.label is not None:
            payload["label"] = self.label
        return payload

    @classmethod
    def from_payload(cls, payload: object) -> Mutation:
        """Parse and validate a wire payload. Raises BadMutation."""
        if not isinstance(payload, dict):
            raise BadMutation("mutation payload must be an object")
        kind = payload.get("kind")
        if kind not in MUTATION_KINDS:
            raise BadMutation(f"unknown mutation kind {kind!r}")
        mutation = cls(
            kind=kind,
            selection=_opt_selection(payload.get("selection")),
            anchor=_opt_str(payload.get("anchor"), "anchor"),
            target=_opt_target(payload.get("target")),
            label=_opt_str(payload.get("label"), "label"),
        )
        mutation._check_required()
        return mutation

    def _check_required(self) -> None:
        need: tuple[str, ...]
        if self.kind == CREATE_CLUSTER:
            need = ("selection",)
        elif self.kind == RENAME_NODE:
            need = ("target", "label")
        elif self.kind == DELETE_CLUSTER:
            need = ("anchor",)
        elif self.kind in (ADD_MEMBERS, REMOVE_MEMBERS):
            need = ("anchor", "selection")
        else:  # DELETE_PICTURES
            need = ("selection",)
        for name in need:
            if getattr(self, name) is None:
                raise BadMutation(f"{self.kind} requires field {name!r}")


def _is_plain_int(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _opt_selection(value: object) -> list[int] | None:
    if value is None:
        return None
    if not isinstance(value, list) or not all(_is_plain_int(v) and v >= 0 for v in value):
        raise BadMutation("selection must be a list of non-negative integers")
    return list(value)


def _opt_str(value: object, name: str) -> str | None:
    if value is None:
        return None
    if not isinstance(value, str):
        raise BadMutation(f"{name} must be a string")
    return value


def _opt_target(value: object) -> int | str | None:
    if value is None:
        return None
    if _is_plain_int(value) or isinstance(value, str):
        return value
    raise BadMutation("target must be a node id or an anchor id")


def _dedupe(selection: Iterable[int]) -> list[int]:
    seen: set[int] = set()
    out: list[int] = []
    for node_id in selection:
        if node_id not in seen:
            seen.add(node_id)
            out.append(node_id)
    return out


def _clean_label(label: str | None) -> str | None:
    """Normalize an optional label: blank collapses to None, the CSV
    separator is rejected outright."""
    if label is None:
        return None
    if LABEL_SEPARATOR in label:
        raise ForbiddenCharacter(label)
    if not label.strip():
        return None
    return label


def default_label(anchor_id: str) -> str:
    """Placeholder label for clusters created without one."""
    return f"unnamed-{anchor_id[:8]}"


@dataclass
class GraphState:
    """The canonical shared document: picture nodes, anchors, edges, and
    the count of mutations applied since load or ingest."""

    nodes: dict[int, PictureNode] = field(default_factory=dict)
    clusters: dict[str, Anchor] = field(default_factory=dict)
    edges: list[Edge] = field(default_factory=list)
    revision: int = 0

    # -- mutations ---------------------------------------------------

    def create_cluster(
        self,
        selection: Iterable[int],
        label: str | None = None,
        anchor_id: str | None = None,
    ) -> str:
        """Create a new anchor whose members are the deduplicated selection.

        ``anchor_id`` lets a replaying client reuse the id the server
        assigned; interactive callers leave it unset and get a fresh UUID.
        Returns the anchor id.
        """
        deduped = _dedupe(selection)
        for node_id in deduped:
            if node_id not in self.nodes:
                raise UnknownNode(node_id)
        if not deduped:
            raise EmptySelection()
        cleaned = _clean_label(label)
        if anchor_id is None:
            anchor_id = str(uuid.uuid4())
        elif anchor_id in self.clusters:
            raise ValueError(f"anchor id {anchor_id} already exists")
        anchor = Anchor(id=anchor_id, label=cleaned or default_label(anchor_id), members=deduped)
        self.clusters[anchor_id] = anchor
        self.edges.extend(Edge(anchor_id, node_id) for node_id in deduped)
        self.revision += 1
        return anchor_id

    def rename_node(self, target: int | str, new_label: str) -> None:
        """Set the label of an anchor, or the display label of a picture."""
        if not isinstance(new_label, str) or not new_label.strip():
            raise EmptyLabel()
        if LABEL_SEPARATOR in new_label:
            raise ForbiddenCharacter(new_label)
        if _is_plain_int(target):
            node = self.nodes.get(target)
            if node is None:
                raise UnknownTarget(target)
            node.label = new_label
        elif isinstance(target, str):
            anchor = self.clusters.get(target)
            if anchor is None:
                raise UnknownTarget(target)
            anchor.label = new_label
        else:
            raise UnknownTarget(target)
        self.revision += 1

    def add_members(self, anchor_id: str, selection: Iterable[int]) -> None:
        """Join each selected picture to the anchor; existing members are
        skipped silently."""
        anchor = self.clusters.get(anchor_id)
        if anchor is None:
            raise UnknownAnchor(anchor_id)
        deduped = _dedupe(selection)
        for node_id in deduped:
            if node_id not in self.nodes:
                raise UnknownNode(node_id)
        current = set(anchor.members)
        for node_id in deduped:
            if node_id in current:
                continue
            anchor.members.append(node_id)
            self.edges.append(Edge(anchor_id, node_id))
        self.revision += 1

    def remove_members(self, anchor_id: str, selection: Iterable[int]) -> None:
        """Drop the selected pictures from the anchor; ids that are not
        members are skipped. An emptied anchor persists."""
        anchor = self.clusters.get(anchor_id)
        if anchor is None:
            raise UnknownAnchor(anchor_id)
        doomed = set(selection) & set(anchor.members)
        if doomed:
            anchor.members = [m for m in anchor.members if m not in doomed]
            self.edges = [
                e for e in self.edges if not (e.anchor_id == anchor_id and e.node_id in doomed)
            ]
        self.revision += 1

    def delete_cluster(self, anchor_id: str) -> None:
        """Remove the anchor and all its edges; pictures are untouched."""
        if anchor_id not in self.clusters:
            raise UnknownAnchor(anchor_id)
        del self.clusters[anchor_id]
        self.edges = [e for e in self.edges if e.anchor_id != anchor_id]
        self.revision += 1

    def delete_pictures(self, selection: Iterable[int]) -> None:
        """Remove picture nodes plus every edge and membership they hold."""
        deduped = _dedupe(selection)
        for node_id in deduped:
            if node_id not in self.nodes:
                raise UnknownNode(node_id)
        doomed = set(deduped)
        for node_id in deduped:
            del self.nodes[node_id]
        if doomed:
            self.edges = [e for e in self.edges if e.node_id not in doomed]
            for anchor in self.clusters.values():
                if any(m in doomed for m in anchor.members):
                    anchor.members = [m for m in anchor.members if m not in doomed]
        self.revision += 1

    # -- queries -----------------------------------------------------

    def memberships_of(self, node_id: int) -> list[str]:
        """Anchors containing the picture, in anchor-creation order."""
        if node_id not in self.nodes:
            raise UnknownNode(node_id)
        return [aid for aid, anchor in self.clusters.items() if node_id in anchor.members]

    def unlabeled_nodes(self) -> list[int]:
        """Ids of pictures that belong to no cluster, ascending."""
        labeled = {e.node_id for e in self.edges}
        return sorted(nid for nid in self.nodes if nid not in labeled)

    def same_content(self, other: GraphState) -> bool:
        """Structural equality, ignoring revision and edge storage order."""
        return (
            self.nodes == other.nodes
            and self.clusters == other.clusters
            and list(self.clusters) == list(other.clusters)
            and set(self.edges) == set(other.edges)
        )


def apply_mutation(state: GraphState, mutation: Mutation) -> Mutation:
    """Apply one mutation to the state; returns the mutation as applied.

    For CreateCluster the returned copy carries the assigned anchor id so
    the caller can broadcast a record that replays identically elsewhere.
    Raises GraphError without touching the state when the mutation is
    invalid.
    """
    kind = mutation.kind
    if kind == CREATE_CLUSTER:
        anchor_id = state.create_cluster(
            mutation.selection or [], label=mutation.label, anchor_id=mutation.anchor
        )
        return replace(mutation, anchor=anchor_id)
    if kind == RENAME_NODE:
        if mutation.target is None or mutation.label is None:
            raise BadMutation("RenameNode requires target and label")
        state.rename_node(mutation.target, mutation.label)
        return mutation
    if kind == DELETE_CLUSTER:
        if mutation.anchor is None:
            raise BadMutation("DeleteCluster requires anchor")
        state.delete_cluster(mutation.anchor)
        return mutation
    if kind == ADD_MEMBERS:
        if mutation.anchor is None or mutation.selection is None:
            raise BadMutation("AddMembers requires anchor and selection")
        state.add_members(mutation.anchor, mutation.selection)
        return mutation
    if kind == REMOVE_MEMBERS:
        if mutation.anchor is None or mutation.selection is None:
            raise BadMutation("RemoveMembers requires anchor and selection")
        state.remove_members(mutation.anchor, mutation.selection)
        return mutation
    if kind == DELETE_PICTURES:
        if mutation.selection is None:
            raise BadMutation("DeletePictures requires selection")
        state.delete_pictures(mutation.selection)
        return mutation
    raise BadMutation(f"unknown mutation kind {kind!r}")
