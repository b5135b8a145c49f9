import { runRenderBenchmark, type BenchResult } from "./bench";
import { SyncConnection } from "./connection";
import { InteractionController, type UiHooks } from "./interactions";
import { GraphReplica } from "./replica";
import { GraphRenderer, NetworkImageSource } from "./renderer";
import type { StatsResponse } from "./types";
import { ViewState } from "./viewstate";
import "./style.css";

declare global {
  interface Window {
    __benchResult?: BenchResult;
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function buildShell() {
  const root = document.getElementById("app") ?? document.body;
  const toolbar = el("div", "toolbar");
  const canvas = el("canvas", "graph");
  const status = el("div", "status", "connecting…");

  const editBtn = el("button", "", "Edit Node");
  const physicsBtn = el("button", "", "Physics: off");
  const perfBtn = el("button", "", "High-Performance: off");
  const exportBtn = el("button", "", "Export");
  const counts = el("span", "counts");
  toolbar.append(editBtn, physicsBtn, perfBtn, exportBtn, counts);
  root.append(toolbar, canvas, status);

  const dialog = el("div", "dialog hidden");
  const dialogInput = el("input") as HTMLInputElement;
  const dialogOk = el("button", "", "Rename");
  const dialogCancel = el("button", "", "Cancel");
  dialog.append(el("div", "dialog-title", "Edit node label"), dialogInput, dialogOk, dialogCancel);
  root.append(dialog);

  return {
    canvas,
    status,
    editBtn,
    physicsBtn,
    perfBtn,
    exportBtn,
    counts,
    dialog,
    dialogInput,
    dialogOk,
    dialogCancel,
  };
}

function startApp() {
  const ui = buildShell();
  const replica = new GraphReplica();
  const view = new ViewState();

  const resize = () => {
    ui.canvas.width = window.innerWidth;
    ui.canvas.height = window.innerHeight - ui.canvas.offsetTop - 28;
  };
  window.addEventListener("resize", () => {
    resize();
    requestFrame();
  });
  resize();

  const ctx = ui.canvas.getContext("2d");
  if (!ctx) {
    ui.status.textContent = "Canvas 2D is not available in this browser.";
    return;
  }
  const renderer = new GraphRenderer(ctx, new NetworkImageSource(() => requestFrame()));

  let framePending = false;
  let fpsWindowStart = performance.now();
  let fpsFrames = 0;
  let fps = 0;
  const requestFrame = () => {
    if (framePending) return;
    framePending = true;
    requestAnimationFrame(() => {
      framePending = false;
      if (view.physicsActive) {
        view.physicsStep(replica);
        requestFrame();
      }
      renderer.render(replica, view, ui.canvas.width, ui.canvas.height);
      fpsFrames += 1;
      const now = performance.now();
      if (now - fpsWindowStart >= 1000) {
        fps = (fpsFrames * 1000) / (now - fpsWindowStart);
        fpsWindowStart = now;
        fpsFrames = 0;
      }
      updateCounts();
    });
  };

  const updateCounts = () => {
    ui.counts.textContent =
      `${replica.nodes.size} pictures · ${replica.clusters.size} clusters · ` +
      `${replica.unlabeledCount()} unlabeled · rev ${replica.revision}` +
      (view.physicsActive ? ` · ${fps.toFixed(0)} fps` : "");
  };

  const flash = (message: string) => {
    ui.status.textContent = message;
  };

  const hooks: UiHooks = {
    status: flash,
    requestFrame,
    promptRename: (current) =>
      new Promise((resolve) => {
        ui.dialog.classList.remove("hidden");
        ui.dialogInput.value = current;
        ui.dialogOk.disabled = current.trim() === "";
        ui.dialogInput.oninput = () => {
          ui.dialogOk.disabled = ui.dialogInput.value.trim() === "";
        };
        const finish = (value: string | null) => {
          ui.dialog.classList.add("hidden");
          ui.dialogOk.onclick = ui.dialogCancel.onclick = null;
          resolve(value);
        };
        ui.dialogOk.onclick = () => finish(ui.dialogInput.value);
        ui.dialogCancel.onclick = () => finish(null);
        ui.dialogInput.focus();
      }),
  };

  const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
  const connection = new SyncConnection(wsUrl, {
    onSnapshot(message) {
      replica.loadSnapshot(message);
      view.ensurePositions(replica);
      flash(`snapshot at revision ${message.revision}`);
      requestFrame();
    },
    onApplied(message) {
      replica.apply(message.mutation, message.revision);
      view.ensurePositions(replica);
      requestFrame();
    },
    onRejected(message) {
      flash(`rejected: ${message.error.code} — ${message.error.detail}`);
    },
    onStatus(connected) {
      flash(connected ? "connected" : "connection lost, retrying…");
    },
  });

  const controller = new InteractionController(ui.canvas, replica, view, connection, hooks);
  controller.attach();

  ui.editBtn.addEventListener("click", () => void controller.renameFocused());
  ui.physicsBtn.addEventListener("click", () => {
    view.physicsEnabled = !view.physicsEnabled;
    ui.physicsBtn.textContent = `Physics: ${view.physicsEnabled ? "on" : "off"}`;
    requestFrame();
  });
  ui.perfBtn.addEventListener("click", () => {
    view.highPerformance = !view.highPerformance;
    ui.perfBtn.textContent = `High-Performance: ${view.highPerformance ? "on" : "off"}`;
    requestFrame();
  });
  ui.exportBtn.addEventListener("click", () => {
    window.open("/api/export", "_blank");
  });

  fetch("/api/stats")
    .then((r) => r.json() as Promise<StatsResponse>)
    .then((stats) => flash(`server holds ${stats.nodes} pictures at revision ${stats.revision}`))
    .catch(() => flash("stats unavailable"));

  connection.connect();
}

function startBench(count: number) {
  const root = document.getElementById("app") ?? document.body;
  const hud = el("div", "status", `benchmark: ${count} nodes, high-performance mode…`);
  const canvas = el("canvas", "graph");
  canvas.width = window.innerWidth;
  canvas.height = window.innerHeight - 28;
  root.append(hud, canvas);
  runRenderBenchmark(canvas, count).then((result) => {
    window.__benchResult = result;
    hud.textContent =
      `benchmark: ${result.nodes} nodes, ${result.frames} frames in ` +
      `${result.seconds.toFixed(1)}s -> ${result.fps.toFixed(1)} fps`;
    console.log(`BENCH_RESULT ${JSON.stringify(result)}`);
  });
}

const benchParam = new URLSearchParams(location.search).get("bench");
if (benchParam) {
  startBench(Number(benchParam) || 4000);
} else {
  startApp();
}
