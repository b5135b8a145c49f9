import { GraphReplica } from "./replica";
import { GraphRenderer, type ImageSource } from "./renderer";
import type { SnapshotMessage } from "./types";
import { ViewState } from "./viewstate";

export interface BenchResult {
  nodes: number;
  frames: number;
  seconds: number;
  fps: number;
  highPerformance: boolean;
}

/** Synthetic graph for benchmarking: `count` pictures, one cluster per 30
 * pictures, every picture a member of something. */
export function syntheticSnapshot(count: number): SnapshotMessage {
  const nodes = Array.from({ length: count }, (_, i) => ({
    id: i,
    image: `synthetic-${i}.png`,
    shape: "image" as const,
  }));
  const clusters = [];
  const edges = [];
  const clusterCount = Math.max(1, Math.floor(count / 30));
  for (let c = 0; c < clusterCount; c++) {
    const members = [];
    for (let i = c * 30; i < Math.min(count, (c + 1) * 30); i++) {
      members.push(i);
      edges.push({ to: syntheticAnchorId(c), from: i });
    }
    clusters.push({
      id: syntheticAnchorId(c),
      image: "anchor.png" as const,
      label: `bench-${c}`,
      shape: "image" as const,
      group: "anchor" as const,
      members,
    });
  }
  return { type: "snapshot", revision: 0, state: { clusters, nodes, edges } };
}

function syntheticAnchorId(index: number): string {
  return `${index.toString(16).padStart(8, "0")}-0000-4000-8000-000000000000`;
}

/** Picture source that never touches the network: one tinted offscreen
 * tile shared by all nodes. */
export class OfflineImageSource implements ImageSource {
  private tile: HTMLCanvasElement | null = null;

  get(): CanvasImageSource | null {
    if (!this.tile) {
      const canvas = document.createElement("canvas");
      canvas.width = canvas.height = 48;
      const ctx = canvas.getContext("2d");
      if (!ctx) return null;
      ctx.fillStyle = "#4c566a";
      ctx.fillRect(0, 0, 48, 48);
      ctx.fillStyle = "#81a1c1";
      ctx.fillRect(6, 6, 36, 36);
      this.tile = canvas;
    }
    return this.tile;
  }
}

/**
 * Drive the real render loop against a synthetic graph for `seconds` and
 * report the sustained frame rate. The camera pans every frame so no
 * frame can be skipped as redundant.
 */
export function runRenderBenchmark(
  canvas: HTMLCanvasElement,
  count: number,
  seconds = 5,
  warmupSeconds = 0.5,
): Promise<BenchResult> {
  const replica = new GraphReplica();
  replica.loadSnapshot(syntheticSnapshot(count));
  const view = new ViewState();
  view.highPerformance = true;
  view.ensurePositions(replica);
  view.zoom = 0.35;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d context");
  const renderer = new GraphRenderer(ctx, new OfflineImageSource());

  return new Promise((resolve) => {
    let frames = 0;
    let started = 0;
    const begin = performance.now();
    const tick = (now: number) => {
      view.panX = Math.sin(now / 900) * 120;
      view.panY = Math.cos(now / 1100) * 90;
      renderer.render(replica, view, canvas.width, canvas.height);
      if (now - begin >= warmupSeconds * 1000) {
        if (started === 0) started = now;
        frames += 1;
        if (now - started >= seconds * 1000) {
          const elapsed = (now - started) / 1000;
          resolve({
            nodes: count,
            frames,
            seconds: elapsed,
            fps: frames / elapsed,
            highPerformance: view.highPerformance,
          });
          return;
        }
      }
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
  });
}
