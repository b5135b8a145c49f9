import type { GraphReplica } from "./replica";
import type { AnchorId, NodeId } from "./types";

export interface Point {
  x: number;
  y: number;
}

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export const GRID_SPACING = 110;
export const SPRING_LENGTH = 90;
export const SPRING_STRENGTH = 0.04;
export const REPULSION = 18000;
export const REPULSION_RADIUS = 160;
export const MAX_STEP = 14;

/**
 * Everything the server never sees: node positions, the current
 * selection, zoom/pan, and the physics / high-performance switches.
 * Positions live and die in this object; no other module serializes it.
 */
export class ViewState {
  positions = new Map<NodeId | AnchorId, Point>();
  selection = new Set<NodeId>();
  /** Single node (picture or anchor) picked by clicking; rename/delete target. */
  focused: NodeId | AnchorId | null = null;
  physicsEnabled = false;
  highPerformance = false;
  zoom = 1;
  panX = 0;
  panY = 0;
  /** Rubber-band rectangle while the right button is held, world coords. */
  bandRect: Rect | null = null;

  /** Physics runs only when enabled and not frozen by high-performance mode. */
  get physicsActive(): boolean {
    return this.physicsEnabled && !this.highPerformance;
  }

  /**
   * Deterministic grid placement by node id for anything not placed yet;
   * anchors start at the centroid of their members. Existing positions
   * are never touched, so replaying or re-snapshotting keeps the layout.
   */
  ensurePositions(replica: GraphReplica): void {
    const ids = [...replica.nodes.keys()];
    if (ids.length > 0) {
      const columns = Math.max(1, Math.ceil(Math.sqrt(Math.max(...ids) + 1)));
      for (const id of ids) {
        if (!this.positions.has(id)) {
          this.positions.set(id, {
            x: (id % columns) * GRID_SPACING,
            y: Math.floor(id / columns) * GRID_SPACING,
          });
        }
      }
    }
    for (const cluster of replica.clusters.values()) {
      if (this.positions.has(cluster.id)) continue;
      const points = cluster.members
        .map((m) => this.positions.get(m))
        .filter((p): p is Point => p !== undefined);
      if (points.length === 0) {
        this.positions.set(cluster.id, { x: -GRID_SPACING, y: -GRID_SPACING });
        continue;
      }
      const cx = points.reduce((acc, p) => acc + p.x, 0) / points.length;
      const cy = points.reduce((acc, p) => acc + p.y, 0) / points.length;
      this.positions.set(cluster.id, { x: cx, y: cy - GRID_SPACING / 2 });
    }
    // Drop positions of things that no longer exist.
    for (const key of this.positions.keys()) {
      if (typeof key === "number" ? !replica.nodes.has(key) : !replica.clusters.has(key)) {
        this.positions.delete(key);
      }
    }
    this.selection = new Set([...this.selection].filter((id) => replica.nodes.has(id)));
    if (this.focused !== null) {
      const stillThere =
        typeof this.focused === "number"
          ? replica.nodes.has(this.focused)
          : replica.clusters.has(this.focused);
      if (!stillThere) this.focused = null;
    }
  }

  moveBy(id: NodeId | AnchorId, dx: number, dy: number): void {
    const p = this.positions.get(id);
    if (p) {
      p.x += dx;
      p.y += dy;
    }
  }

  /** Picture nodes whose centers fall inside the rectangle; anchors never
   * make it into a rubber-band selection. An empty rect clears it. */
  selectInRect(replica: GraphReplica, rect: Rect): void {
    const picked = new Set<NodeId>();
    for (const id of replica.nodes.keys()) {
      const p = this.positions.get(id);
      if (
        p &&
        p.x >= rect.x &&
        p.x <= rect.x + rect.width &&
        p.y >= rect.y &&
        p.y <= rect.y + rect.height
      ) {
        picked.add(id);
      }
    }
    this.selection = picked;
    this.focused = picked.size === 1 ? [...picked][0] : null;
  }

  /**
   * One relaxation step of the force layout: edges pull members toward
   * their anchor, and nearby nodes push each other apart so an edgeless
   * graph never collapses. Position-based (no velocities), so disabling
   * physics stops all motion on the next frame.
   */
  physicsStep(replica: GraphReplica): void {
    if (!this.physicsActive) return;
    const forces = new Map<NodeId | AnchorId, Point>();
    const bump = (id: NodeId | AnchorId, dx: number, dy: number) => {
      const f = forces.get(id);
      if (f) {
        f.x += dx;
        f.y += dy;
      } else {
        forces.set(id, { x: dx, y: dy });
      }
    };

    for (const edge of replica.edges) {
      const a = this.positions.get(edge.from);
      const b = this.positions.get(edge.to);
      if (!a || !b) continue;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const dist = Math.hypot(dx, dy) || 1;
      const pull = SPRING_STRENGTH * (dist - SPRING_LENGTH);
      bump(edge.from, (dx / dist) * pull, (dy / dist) * pull);
      bump(edge.to, (-dx / dist) * pull, (-dy / dist) * pull);
    }

    // Repulsion via a coarse grid: only neighbouring buckets interact.
    const cell = REPULSION_RADIUS;
    const buckets = new Map<string, (NodeId | AnchorId)[]>();
    for (const [id, p] of this.positions) {
      const key = `${Math.floor(p.x / cell)}:${Math.floor(p.y / cell)}`;
      const bucket = buckets.get(key);
      if (bucket) bucket.push(id);
      else buckets.set(key, [id]);
    }
    for (const [key, ids] of buckets) {
      const [bx, by] = key.split(":").map(Number);
      const neighbours: (NodeId | AnchorId)[] = [];
      for (let gx = bx - 1; gx <= bx + 1; gx++) {
        for (let gy = by - 1; gy <= by + 1; gy++) {
          const other = buckets.get(`${gx}:${gy}`);
          if (other) neighbours.push(...other);
        }
      }
      for (const id of ids) {
        const p = this.positions.get(id)!;
        for (const otherId of neighbours) {
          if (otherId === id) continue;
          const q = this.positions.get(otherId)!;
          const dx = p.x - q.x;
          const dy = p.y - q.y;
          const distSq = dx * dx + dy * dy;
          if (distSq === 0 || distSq > REPULSION_RADIUS * REPULSION_RADIUS) continue;
          const dist = Math.sqrt(distSq);
          const push = Math.min(REPULSION / distSq, MAX_STEP);
          bump(id, (dx / dist) * push, (dy / dist) * push);
        }
      }
    }

    for (const [id, force] of forces) {
      const p = this.positions.get(id);
      if (!p) continue;
      p.x += clamp(force.x, -MAX_STEP, MAX_STEP);
      p.y += clamp(force.y, -MAX_STEP, MAX_STEP);
    }
  }
}

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}
