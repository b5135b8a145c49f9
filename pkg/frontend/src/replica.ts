import type {
  AnchorId,
  AnchorRecord,
  EdgeRecord,
  GraphDocument,
  MutationPayload,
  NodeId,
  PictureNodeRecord,
  SnapshotMessage,
} from "./types";

/**
 * Client-side copy of the shared graph. It is only ever written by the
 * server round trip: a snapshot replaces everything, and each `applied`
 * broadcast replays one mutation with the exact semantics the server
 * used, so every client converges on the same node/anchor/edge sets.
 */
export class GraphReplica {
  nodes = new Map<NodeId, PictureNodeRecord>();
  clusters = new Map<AnchorId, AnchorRecord>();
  edges: EdgeRecord[] = [];
  revision = 0;

  loadSnapshot(message: SnapshotMessage): void {
    this.nodes = new Map(message.state.nodes.map((n) => [n.id, { ...n }]));
    this.clusters = new Map(
      message.state.clusters.map((c) => [c.id, { ...c, members: [...c.members] }]),
    );
    this.edges = message.state.edges.map((e) => ({ ...e }));
    this.revision = message.revision;
  }

  apply(mutation: MutationPayload, revision: number): void {
    switch (mutation.kind) {
      case "CreateCluster":
        this.applyCreate(mutation);
        break;
      case "RenameNode":
        this.applyRename(mutation);
        break;
      case "DeleteCluster":
        this.applyDeleteCluster(mutation);
        break;
      case "AddMembers":
        this.applyAddMembers(mutation);
        break;
      case "RemoveMembers":
        this.applyRemoveMembers(mutation);
        break;
      case "DeletePictures":
        this.applyDeletePictures(mutation);
        break;
    }
    this.revision = revision;
  }

  toDocument(): GraphDocument {
    const clusters = [...this.clusters.values()].map((c) => ({
      ...c,
      members: [...c.members],
    }));
    const nodes = [...this.nodes.values()]
      .sort((a, b) => a.id - b.id)
      .map((n) => ({ ...n }));
    const edges = clusters.flatMap((c) =>
      c.members.map((m) => ({ to: c.id, from: m })),
    );
    return { clusters, nodes, edges };
  }

  membershipsOf(id: NodeId): AnchorId[] {
    const result: AnchorId[] = [];
    for (const cluster of this.clusters.values()) {
      if (cluster.members.includes(id)) result.push(cluster.id);
    }
    return result;
  }

  unlabeledCount(): number {
    const labeled = new Set(this.edges.map((e) => e.from));
    let count = 0;
    for (const id of this.nodes.keys()) if (!labeled.has(id)) count += 1;
    return count;
  }

  private applyCreate(mutation: MutationPayload): void {
    const anchorId = mutation.anchor;
    if (!anchorId) throw new Error("CreateCluster broadcast without anchor id");
    const members = dedupe(mutation.selection ?? []);
    const label =
      mutation.label && mutation.label.trim() !== ""
        ? mutation.label
        : `unnamed-${anchorId.slice(0, 8)}`;
    this.clusters.set(anchorId, {
      id: anchorId,
      image: "anchor.png",
      label,
      shape: "image",
      group: "anchor",
      members,
    });
    for (const member of members) this.edges.push({ to: anchorId, from: member });
  }

  private applyRename(mutation: MutationPayload): void {
    const { target, label } = mutation;
    if (label === undefined) return;
    if (typeof target === "number") {
      const node = this.nodes.get(target);
      if (node) node.label = label;
    } else if (typeof target === "string") {
      const cluster = this.clusters.get(target);
      if (cluster) cluster.label = label;
    }
  }

  private applyDeleteCluster(mutation: MutationPayload): void {
    const anchorId = mutation.anchor;
    if (!anchorId) return;
    this.clusters.delete(anchorId);
    this.edges = this.edges.filter((e) => e.to !== anchorId);
  }

  private applyAddMembers(mutation: MutationPayload): void {
    const cluster = mutation.anchor ? this.clusters.get(mutation.anchor) : undefined;
    if (!cluster) return;
    const current = new Set(cluster.members);
    for (const id of dedupe(mutation.selection ?? [])) {
      if (current.has(id)) continue;
      current.add(id);
      cluster.members.push(id);
      this.edges.push({ to: cluster.id, from: id });
    }
  }

  private applyRemoveMembers(mutation: MutationPayload): void {
    const cluster = mutation.anchor ? this.clusters.get(mutation.anchor) : undefined;
    if (!cluster) return;
    const doomed = new Set(
      (mutation.selection ?? []).filter((id) => cluster.members.includes(id)),
    );
    if (doomed.size === 0) return;
    cluster.members = cluster.members.filter((m) => !doomed.has(m));
    this.edges = this.edges.filter((e) => !(e.to === cluster.id && doomed.has(e.from)));
  }

  private applyDeletePictures(mutation: MutationPayload): void {
    const doomed = new Set(dedupe(mutation.selection ?? []));
    if (doomed.size === 0) return;
    for (const id of doomed) this.nodes.delete(id);
    this.edges = this.edges.filter((e) => !doomed.has(e.from));
    for (const cluster of this.clusters.values()) {
      if (cluster.members.some((m) => doomed.has(m))) {
        cluster.members = cluster.members.filter((m) => !doomed.has(m));
      }
    }
  }
}

function dedupe(ids: NodeId[]): NodeId[] {
  const seen = new Set<NodeId>();
  const out: NodeId[] = [];
  for (const id of ids) {
    if (!seen.has(id)) {
      seen.add(id);
      out.push(id);
    }
  }
  return out;
}
