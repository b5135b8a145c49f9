import { describe, expect, it } from "vitest";
import { GraphReplica } from "../src/replica";
import type { SnapshotMessage } from "../src/types";
import { GRID_SPACING, ViewState } from "../src/viewstate";

const ANCHOR = "0badc0de-0000-4000-8000-000000000000";

function snapshotOf(nodeIds: number[], members: number[] = []): SnapshotMessage {
  return {
    type: "snapshot",
    revision: 0,
    state: {
      clusters: members.length
        ? [
            {
              id: ANCHOR,
              image: "anchor.png",
              label: "c",
              shape: "image",
              group: "anchor",
              members,
            },
          ]
        : [],
      nodes: nodeIds.map((id) => ({ id, image: `p${id}.png`, shape: "image" as const })),
      edges: members.map((m) => ({ to: ANCHOR, from: m })),
    },
  };
}

function loaded(nodeIds: number[], members: number[] = []) {
  const replica = new GraphReplica();
  replica.loadSnapshot(snapshotOf(nodeIds, members));
  const view = new ViewState();
  view.ensurePositions(replica);
  return { replica, view };
}

describe("grid placement", () => {
  it("is deterministic by node id and leaves existing positions alone", () => {
    const { replica, view } = loaded([0, 1, 2, 3]);
    const first = structuredClone([...view.positions.entries()]);
    view.moveBy(2, 500, 500);
    view.ensurePositions(replica);
    expect(view.positions.get(2)).toEqual({
      x: first.find(([id]) => id === 2)![1].x + 500,
      y: first.find(([id]) => id === 2)![1].y + 500,
    });
    const again = loaded([0, 1, 2, 3]).view;
    expect([...again.positions.entries()]).toEqual(first);
    expect(view.positions.get(1)).toEqual({ x: GRID_SPACING, y: 0 });
  });

  it("places anchors near their members and forgets deleted ids", () => {
    const { replica, view } = loaded([0, 1], [0, 1]);
    const anchorPos = view.positions.get(ANCHOR)!;
    const a = view.positions.get(0)!;
    const b = view.positions.get(1)!;
    expect(anchorPos.x).toBeCloseTo((a.x + b.x) / 2);
    replica.apply({ kind: "DeleteCluster", anchor: ANCHOR }, 1);
    view.ensurePositions(replica);
    expect(view.positions.has(ANCHOR)).toBe(false);
  });
});

describe("rubber-band selection", () => {
  it("selects picture centers inside the rect and never anchors", () => {
    const { replica, view } = loaded([0, 1, 2, 3, 4], [0, 1, 2, 3, 4]);
    // Anchor sits inside the band on purpose.
    view.positions.set(ANCHOR, { x: GRID_SPACING, y: 0 });
    view.selectInRect(replica, { x: -10, y: -10, width: GRID_SPACING * 2 + 20, height: 20 });
    expect([...view.selection].sort()).toEqual([0, 1, 2]);
  });

  it("clears the selection on an empty rect", () => {
    const { replica, view } = loaded([0, 1]);
    view.selection = new Set([0, 1]);
    view.selectInRect(replica, { x: -5000, y: -5000, width: 1, height: 1 });
    expect(view.selection.size).toBe(0);
  });
});

describe("physics", () => {
  it("pulls members toward their anchor when enabled", () => {
    const { replica, view } = loaded([0, 1], [0, 1]);
    view.physicsEnabled = true;
    view.positions.set(0, { x: 0, y: 0 });
    view.positions.set(1, { x: 600, y: 0 });
    view.positions.set(ANCHOR, { x: 300, y: 0 });
    const before = Math.abs(view.positions.get(0)!.x - 300);
    for (let i = 0; i < 30; i++) view.physicsStep(replica);
    const after = Math.abs(view.positions.get(0)!.x - 300);
    expect(after).toBeLessThan(before);
  });

  it("freezes everything when disabled or in high-performance mode", () => {
    const { replica, view } = loaded([0, 1], [0, 1]);
    const frozen = structuredClone([...view.positions.entries()]);
    view.physicsEnabled = false;
    view.physicsStep(replica);
    expect([...view.positions.entries()]).toEqual(frozen);
    view.physicsEnabled = true;
    view.highPerformance = true;
    expect(view.physicsActive).toBe(false);
    view.physicsStep(replica);
    expect([...view.positions.entries()]).toEqual(frozen);
  });

  it("does not collapse an edgeless graph to a point", () => {
    const { replica, view } = loaded([0, 1, 2, 3]);
    view.physicsEnabled = true;
    // Start everyone nearly stacked.
    let i = 0;
    for (const id of replica.nodes.keys()) {
      view.positions.set(id, { x: i * 0.5, y: 0 });
      i += 1;
    }
    for (let step = 0; step < 50; step++) view.physicsStep(replica);
    const xs = [...replica.nodes.keys()].map((id) => view.positions.get(id)!.x);
    const spread = Math.max(...xs) - Math.min(...xs);
    expect(spread).toBeGreaterThan(10);
  });
});
