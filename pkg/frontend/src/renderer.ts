import type { GraphReplica } from "./replica";
import type { Point, ViewState } from "./viewstate";

/** Edges are skipped in high-performance mode once the graph has more
 * than this many of them. */
export const EDGE_HIDE_THRESHOLD = 500;

export const NODE_SIZE = 72;
export const THUMB_SIZE = 40;
export const ANCHOR_RADIUS = 16;

/** The 2D context surface the renderer actually uses; tests substitute a
 * recording stub, production passes a real CanvasRenderingContext2D. */
export interface Canvas2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  scale(x: number, y: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  drawImage(image: CanvasImageSource, x: number, y: number, w: number, h: number): void;
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  globalAlpha: number;
}

/** Supplies a drawable for a picture, or null while it is still loading.
 * The default implementation loads /thumbs/ or /images/ URLs lazily. */
export interface ImageSource {
  get(image: string, thumbnail: boolean): CanvasImageSource | null;
}

export class NetworkImageSource implements ImageSource {
  private cache = new Map<string, HTMLImageElement>();
  constructor(private readonly onLoad: () => void) {}

  get(image: string, thumbnail: boolean): CanvasImageSource | null {
    const url = `${thumbnail ? "/thumbs" : "/images"}/${encodeURIComponent(image)}`;
    let img = this.cache.get(url);
    if (!img) {
      img = new Image();
      img.src = url;
      img.addEventListener("load", this.onLoad);
      this.cache.set(url, img);
    }
    return img.complete && img.naturalWidth > 0 ? img : null;
  }
}

export interface FrameStats {
  nodesDrawn: number;
  edgesDrawn: number;
  hullsDrawn: number;
  imagesDrawn: number;
}

export class GraphRenderer {
  constructor(
    private readonly ctx: Canvas2D,
    private readonly images: ImageSource,
  ) {}

  render(
    replica: GraphReplica,
    view: ViewState,
    width: number,
    height: number,
  ): FrameStats {
    const stats: FrameStats = { nodesDrawn: 0, edgesDrawn: 0, hullsDrawn: 0, imagesDrawn: 0 };
    const ctx = this.ctx;
    ctx.clearRect(0, 0, width, height);
    ctx.save();
    ctx.translate(view.panX, view.panY);
    ctx.scale(view.zoom, view.zoom);

    if (!view.highPerformance) {
      stats.hullsDrawn = this.drawClusterBoxes(replica, view);
    }

    const hideEdges =
      view.highPerformance && replica.edges.length > EDGE_HIDE_THRESHOLD;
    if (!hideEdges) {
      ctx.strokeStyle = "#8a93a6";
      ctx.lineWidth = 1;
      for (const edge of replica.edges) {
        const a = view.positions.get(edge.from);
        const b = view.positions.get(edge.to);
        if (!a || !b) continue;
        ctx.beginPath();
        ctx.moveTo(a.x, a.y);
        ctx.lineTo(b.x, b.y);
        ctx.stroke();
        stats.edgesDrawn += 1;
      }
    }

    const size = view.highPerformance ? THUMB_SIZE : NODE_SIZE;
    for (const node of replica.nodes.values()) {
      const p = view.positions.get(node.id);
      if (!p) continue;
      const drawable = this.images.get(node.image, view.highPerformance);
      if (drawable) {
        ctx.drawImage(drawable, p.x - size / 2, p.y - size / 2, size, size);
        stats.imagesDrawn += 1;
      } else {
        ctx.fillStyle = "#3b4252";
        ctx.fillRect(p.x - size / 2, p.y - size / 2, size, size);
      }
      if (view.selection.has(node.id) || view.focused === node.id) {
        ctx.strokeStyle = "#ffb454";
        ctx.lineWidth = 3;
        ctx.strokeRect(p.x - size / 2 - 3, p.y - size / 2 - 3, size + 6, size + 6);
      }
      if (node.label) {
        ctx.fillStyle = "#d8dee9";
        ctx.font = "11px sans-serif";
        ctx.textAlign = "center";
        ctx.fillText(node.label, p.x, p.y + size / 2 + 12);
      }
      stats.nodesDrawn += 1;
    }

    for (const cluster of replica.clusters.values()) {
      const p = view.positions.get(cluster.id);
      if (!p) continue;
      ctx.beginPath();
      ctx.arc(p.x, p.y, ANCHOR_RADIUS, 0, Math.PI * 2);
      ctx.fillStyle = view.focused === cluster.id ? "#ffb454" : "#5e81ac";
      ctx.fill();
      ctx.strokeStyle = "#2e3440";
      ctx.lineWidth = 2;
      ctx.stroke();
      ctx.fillStyle = "#eceff4";
      ctx.font = "bold 12px sans-serif";
      ctx.textAlign = "center";
      ctx.fillText(cluster.label, p.x, p.y - ANCHOR_RADIUS - 6);
      stats.nodesDrawn += 1;
    }

    ctx.restore();

    if (view.bandRect) {
      const r = view.bandRect;
      ctx.save();
      ctx.translate(view.panX, view.panY);
      ctx.scale(view.zoom, view.zoom);
      ctx.strokeStyle = "#88c0d0";
      ctx.lineWidth = 1 / view.zoom;
      ctx.globalAlpha = 0.15;
      ctx.fillStyle = "#88c0d0";
      ctx.fillRect(r.x, r.y, r.width, r.height);
      ctx.globalAlpha = 1;
      ctx.strokeRect(r.x, r.y, r.width, r.height);
      ctx.restore();
    }
    return stats;
  }

  /** Translucent convex hull behind each cluster's members and anchor. */
  private drawClusterBoxes(replica: GraphReplica, view: ViewState): number {
    let drawn = 0;
    const ctx = this.ctx;
    for (const cluster of replica.clusters.values()) {
      const points: Point[] = [];
      const anchorPos = view.positions.get(cluster.id);
      if (anchorPos) points.push(anchorPos);
      for (const member of cluster.members) {
        const p = view.positions.get(member);
        if (p) points.push(p);
      }
      if (points.length < 2) continue;
      const hull = convexHull(points);
      const padded = padOutward(hull, NODE_SIZE * 0.75);
      ctx.beginPath();
      ctx.moveTo(padded[0].x, padded[0].y);
      for (const p of padded.slice(1)) ctx.lineTo(p.x, p.y);
      ctx.closePath();
      ctx.globalAlpha = 0.12;
      ctx.fillStyle = "#a3be8c";
      ctx.fill();
      ctx.globalAlpha = 0.5;
      ctx.strokeStyle = "#a3be8c";
      ctx.lineWidth = 1.5;
      ctx.stroke();
      ctx.globalAlpha = 1;
      drawn += 1;
    }
    return drawn;
  }
}

/** Andrew's monotone chain; returns vertices counter-clockwise. */
export function convexHull(points: Point[]): Point[] {
  const sorted = [...points].sort((a, b) => a.x - b.x || a.y - b.y);
  if (sorted.length <= 2) return sorted;
  const cross = (o: Point, a: Point, b: Point) =>
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  const lower: Point[] = [];
  for (const p of sorted) {
    while (lower.length >= 2 && cross(lower[lower.length - 2], lower[lower.length - 1], p) <= 0)
      lower.pop();
    lower.push(p);
  }
  const upper: Point[] = [];
  for (const p of [...sorted].reverse()) {
    while (upper.length >= 2 && cross(upper[upper.length - 2], upper[upper.length - 1], p) <= 0)
      upper.pop();
    upper.push(p);
  }
  lower.pop();
  upper.pop();
  return lower.concat(upper);
}

function padOutward(hull: Point[], padding: number): Point[] {
  const cx = hull.reduce((acc, p) => acc + p.x, 0) / hull.length;
  const cy = hull.reduce((acc, p) => acc + p.y, 0) / hull.length;
  return hull.map((p) => {
    const dx = p.x - cx;
    const dy = p.y - cy;
    const dist = Math.hypot(dx, dy) || 1;
    return { x: p.x + (dx / dist) * padding, y: p.y + (dy / dist) * padding };
  });
}
