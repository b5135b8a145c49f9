import type { SyncConnection } from "./connection";
import type { GraphReplica } from "./replica";
import { ANCHOR_RADIUS, NODE_SIZE, THUMB_SIZE } from "./renderer";
import type { AnchorId, NodeId } from "./types";
import type { ViewState } from "./viewstate";

export interface UiHooks {
  status(message: string): void;
  /** Open the rename dialog for a node; resolves to the new label or null. */
  promptRename(current: string): Promise<string | null>;
  requestFrame(): void;
}

type DragMode =
  | { kind: "none" }
  | { kind: "node"; id: NodeId | AnchorId; moved: boolean; lastX: number; lastY: number }
  | { kind: "pan"; lastX: number; lastY: number }
  | { kind: "band"; startX: number; startY: number };

/**
 * Pointer and keyboard wiring. Left drag moves a node (or pans on empty
 * space), right drag rubber-band selects pictures, `C` clusters the
 * selection, Delete removes a focused anchor. Every labeling action goes
 * through the server; drags touch only client-local positions and send
 * nothing.
 */
export class InteractionController {
  private drag: DragMode = { kind: "none" };

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly replica: GraphReplica,
    private readonly view: ViewState,
    private readonly connection: SyncConnection,
    private readonly ui: UiHooks,
  ) {}

  attach(): void {
    this.canvas.addEventListener("mousedown", this.onMouseDown);
    this.canvas.addEventListener("mousemove", this.onMouseMove);
    window.addEventListener("mouseup", this.onMouseUp);
    this.canvas.addEventListener("contextmenu", (e) => e.preventDefault());
    this.canvas.addEventListener("wheel", this.onWheel, { passive: false });
    window.addEventListener("keydown", this.onKeyDown);
  }

  /** Canvas pixel coords -> world coords under current pan/zoom. */
  toWorld(clientX: number, clientY: number): { x: number; y: number } {
    const bounds = this.canvas.getBoundingClientRect();
    return {
      x: (clientX - bounds.left - this.view.panX) / this.view.zoom,
      y: (clientY - bounds.top - this.view.panY) / this.view.zoom,
    };
  }

  hitTest(x: number, y: number): NodeId | AnchorId | null {
    // Anchors sit on top of pictures, so test them first.
    for (const id of [...this.replica.clusters.keys()].reverse()) {
      const p = this.view.positions.get(id);
      if (p && Math.hypot(x - p.x, y - p.y) <= ANCHOR_RADIUS + 2) return id;
    }
    const half = (this.view.highPerformance ? THUMB_SIZE : NODE_SIZE) / 2;
    for (const id of [...this.replica.nodes.keys()].reverse()) {
      const p = this.view.positions.get(id);
      if (p && Math.abs(x - p.x) <= half && Math.abs(y - p.y) <= half) return id;
    }
    return null;
  }

  clusterSelection(): void {
    if (this.view.selection.size === 0) {
      this.ui.status("Nothing selected — right-drag over pictures first.");
      return;
    }
    this.connection.sendMutation({
      kind: "CreateCluster",
      selection: [...this.view.selection],
    });
    this.view.selection = new Set();
    this.ui.requestFrame();
  }

  async renameFocused(): Promise<void> {
    const target = this.view.focused;
    if (target === null) {
      this.ui.status("Click a node first, then rename it.");
      return;
    }
    const current =
      typeof target === "number"
        ? this.replica.nodes.get(target)?.label ?? ""
        : this.replica.clusters.get(target)?.label ?? "";
    const label = await this.ui.promptRename(current);
    if (label === null || label.trim() === "") return;
    this.connection.sendMutation({ kind: "RenameNode", target, label });
  }

  deleteFocusedAnchor(): void {
    if (typeof this.view.focused !== "string") {
      this.ui.status("Select an anchor to delete its cluster.");
      return;
    }
    this.connection.sendMutation({ kind: "DeleteCluster", anchor: this.view.focused });
    this.view.focused = null;
  }

  private onMouseDown = (event: MouseEvent): void => {
    const { x, y } = this.toWorld(event.clientX, event.clientY);
    if (event.button === 2) {
      this.drag = { kind: "band", startX: x, startY: y };
      this.view.bandRect = { x, y, width: 0, height: 0 };
      event.preventDefault();
      return;
    }
    if (event.button !== 0) return;
    const hit = this.hitTest(x, y);
    if (hit !== null) {
      this.drag = { kind: "node", id: hit, moved: false, lastX: event.clientX, lastY: event.clientY };
    } else {
      this.drag = { kind: "pan", lastX: event.clientX, lastY: event.clientY };
    }
  };

  private onMouseMove = (event: MouseEvent): void => {
    if (this.drag.kind === "none") return;
    if (this.drag.kind === "node") {
      this.view.moveBy(
        this.drag.id,
        (event.clientX - this.drag.lastX) / this.view.zoom,
        (event.clientY - this.drag.lastY) / this.view.zoom,
      );
      this.drag.lastX = event.clientX;
      this.drag.lastY = event.clientY;
      this.drag.moved = true;
    } else if (this.drag.kind === "pan") {
      this.view.panX += event.clientX - this.drag.lastX;
      this.view.panY += event.clientY - this.drag.lastY;
      this.drag.lastX = event.clientX;
      this.drag.lastY = event.clientY;
    } else {
      const { x, y } = this.toWorld(event.clientX, event.clientY);
      this.view.bandRect = {
        x: Math.min(x, this.drag.startX),
        y: Math.min(y, this.drag.startY),
        width: Math.abs(x - this.drag.startX),
        height: Math.abs(y - this.drag.startY),
      };
    }
    this.ui.requestFrame();
  };

  private onMouseUp = (event: MouseEvent): void => {
    if (this.drag.kind === "band") {
      const rect = this.view.bandRect;
      this.view.bandRect = null;
      if (rect) this.view.selectInRect(this.replica, rect);
      this.ui.status(`${this.view.selection.size} selected`);
    } else if (this.drag.kind === "node" && !this.drag.moved) {
      // Plain click: focus the node; pictures also become the selection.
      this.view.focused = this.drag.id;
      this.view.selection =
        typeof this.drag.id === "number" ? new Set([this.drag.id]) : new Set();
    } else if (this.drag.kind === "pan" && event.button === 0) {
      const { x, y } = this.toWorld(event.clientX, event.clientY);
      if (this.hitTest(x, y) === null) {
        this.view.focused = null;
      }
    }
    this.drag = { kind: "none" };
    this.ui.requestFrame();
  };

  private onWheel = (event: WheelEvent): void => {
    event.preventDefault();
    const factor = event.deltaY < 0 ? 1.1 : 1 / 1.1;
    const next = Math.min(4, Math.max(0.1, this.view.zoom * factor));
    const bounds = this.canvas.getBoundingClientRect();
    const cx = event.clientX - bounds.left;
    const cy = event.clientY - bounds.top;
    // Keep the point under the cursor fixed while zooming.
    this.view.panX = cx - ((cx - this.view.panX) / this.view.zoom) * next;
    this.view.panY = cy - ((cy - this.view.panY) / this.view.zoom) * next;
    this.view.zoom = next;
    this.ui.requestFrame();
  };

  private onKeyDown = (event: KeyboardEvent): void => {
    if (event.target instanceof HTMLInputElement) return;
    if (event.key === "c" || event.key === "C") {
      this.clusterSelection();
    } else if (event.key === "Delete") {
      this.deleteFocusedAnchor();
    }
  };
}
