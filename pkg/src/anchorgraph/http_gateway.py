"""Process entry point: configuration, HTTP endpoints, static assets,
image/thumbnail serving, and the websocket sync channel.

Run ``anchorgraph --dataset-dir ./pictures`` (or ``--state-file
saved.graph.json``) and point browsers at the printed port. Admin import
happens over ``POST /api/admin/load`` only; the sync channel cannot
replace the graph.
"""

from __future__ import annotations

import argparse
import asyncio
import contextlib
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from aiohttp import WSMsgType, web

from .dataset_ingest import (
    DEFAULT_THUMB_MAX_EDGE,
    IngestConfig,
    MissingDirectory,
    THUMBS_DIRNAME,
    generate_thumbnails,
    ingest_folder,
)
from .graph_core import GraphState
from .graph_io import GraphIOError, export_graph, export_labels, import_graph
from .sync_service import ServerFull, SyncService, autosave_loop, save_if_changed

log = logging.getLogger(__name__)

SERVICE_KEY = web.AppKey("service", SyncService)
CONFIG_KEY = web.AppKey("config", object)

DEFAULT_PORT = 8080
DEFAULT_AUTOSAVE_SECS = 30

_FALLBACK_INDEX = """<!DOCTYPE html>
<html>
  <head><title>anchorgraph</title></head>
  <body>
    <h1>anchorgraph server</h1>
    <p>No UI bundle configured (start with --ui-dir to serve one).</p>
    <ul>
      <li><a href="/api/stats">/api/stats</a></li>
      <li><a href="/api/export">/api/export</a></li>
      <li><a href="/api/export/labels.csv">/api/export/labels.csv</a></li>
      <li><code>/ws</code> — sync channel</li>
    </ul>
  </body>
</html>
"""


@dataclass
class ServerConfig:
    port: int = DEFAULT_PORT
    dataset_dir: Path | None = None
    state_file: Path | None = None
    thumb_size: int = DEFAULT_THUMB_MAX_EDGE
    autosave_secs: int = DEFAULT_AUTOSAVE_SECS
    ui_dir: Path | None = None


def cli_entry(argv: list[str] | None = None) -> ServerConfig:
    """Parse command-line flags. Exits 2 with usage when no graph seed
    (dataset dir or state file) is given."""
    parser = argparse.ArgumentParser(
        prog="anchorgraph",
        description="Collaborative image-labeling server over a shared cluster graph.",
    )
    parser.add_argument("--port", type=int, default=DEFAULT_PORT, help="TCP port (default 8080)")
    parser.add_argument(
        "--dataset-dir", type=Path, help="folder of images to ingest and serve"
    )
    parser.add_argument(
        "--state-file",
        type=Path,
        help="saved graph to load; also the autosave target (wins over --dataset-dir)",
    )
    parser.add_argument(
        "--thumb-size",
        type=int,
        default=DEFAULT_THUMB_MAX_EDGE,
        help="longest thumbnail edge in pixels (default 128)",
    )
    parser.add_argument(
        "--autosave-secs",
        type=int,
        default=DEFAULT_AUTOSAVE_SECS,
        help="seconds between autosave checks (default 30)",
    )
    parser.add_argument("--ui-dir", type=Path, help="directory with a built web UI to serve at /")
    args = parser.parse_args(argv)
    if args.dataset_dir is None and args.state_file is None:
        parser.error("one of --dataset-dir or --state-file is required")
    if args.autosave_secs <= 0:
        parser.error("--autosave-secs must be positive")
    return ServerConfig(
        port=args.port,
        dataset_dir=args.dataset_dir,
        state_file=args.state_file,
        thumb_size=args.thumb_size,
        autosave_secs=args.autosave_secs,
        ui_dir=args.ui_dir,
    )


def build_initial_state(config: ServerConfig) -> GraphState:
    """Seed the graph: an existing state file wins; otherwise the dataset
    directory is ingested."""
    if config.state_file is not None and config.state_file.exists():
        return import_graph(config.state_file.read_bytes())
    if config.dataset_dir is not None:
        return ingest_folder(IngestConfig(config.dataset_dir, config.thumb_size))
    raise FileNotFoundError(
        f"state file {config.state_file} does not exist and no --dataset-dir was given"
    )


# -- request handlers ------------------------------------------------------


async def _index(request: web.Request) -> web.StreamResponse:
    config = request.app[CONFIG_KEY]
    if config.ui_dir is not None:
        index = config.ui_dir / "index.html"
        if index.is_file():
            return web.FileResponse(index)
    return web.Response(text=_FALLBACK_INDEX, content_type="text/html")

async def _export(request: web.Request) -> web.Response:
    service = request.app[SERVICE_KEY]
    return web.Response(body=export_graph(service.state), content_type="application/json")


async def _export_labels(request: web.Request) -> web.Response:
    service = request.app[SERVICE_KEY]
    return web.Response(body=export_labels(service.state), content_type="text/csv")


async def _stats(request: web.Request) -> web.Response:
    return web.json_response(request.app[SERVICE_KEY].stats())


async def _admin_load(request: web.Request) -> web.Response:
    service = request.app[SERVICE_KEY]
    data = await request.read()
    try:
        new_state = import_graph(data)
    except GraphIOError as exc:
        return web.json_response(
            {"error": type(exc).__name__, "detail": str(exc)}, status=400
        )
    service.load_state(new_state)
    return web.json_response({"loaded": True, "revision": new_state.revision})


def _safe_child(base: Path | None, name: str) -> Path | None:
    """Resolve a single-segment filename under base; None if the name
    tries to escape or the base is unset."""
    if base is None or not name or name in (".", ".."):
        return None
    if "/" in name or "\\" in name or "\x00" in name:
        return None
    candidate = (base / name).resolve()
    if candidate.parent != base.resolve():
        return None
    return candidate


async def _image(request: web.Request) -> web.StreamResponse:
    config = request.app[CONFIG_KEY]
    path = _safe_child(config.dataset_dir, request.match_info["name"])
    if path is None or not path.is_file():
        raise web.HTTPNotFound()
    return web.FileResponse(path)


async def _thumb(request: web.Request) -> web.StreamResponse:
    config = request.app[CONFIG_KEY]
    thumbs = config.dataset_dir / THUMBS_DIRNAME if config.dataset_dir else None
    path = _safe_child(thumbs, request.match_info["name"])
    if path is None or not path.is_file():
        raise web.HTTPNotFound()
    return web.FileResponse(path)


_CLOSE = object()  # outbox sentinel: flush, then close the socket


async def _drain_outbox(ws: web.WebSocketResponse, outbox: asyncio.Queue) -> None:
    while True:
        message = await outbox.get()
        if message is _CLOSE:
            await ws.close()
            return
        try:
            await ws.send_json(message)
        except (ConnectionResetError, RuntimeError):
            return


async def _ws(request: web.Request) -> web.WebSocketResponse:
    service = request.app[SERVICE_KEY]
    ws = web.WebSocketResponse(heartbeat=30)
    await ws.prepare(request)

    outbox: asyncio.Queue = asyncio.Queue()
    try:
        session = service.connect(
            send=outbox.put_nowait, close=lambda: outbox.put_nowait(_CLOSE)
        )
    except ServerFull as exc:
        await ws.send_json(
            {
                "type": "rejected",
                "revision": service.state.revision,
                "error": {"code": "ServerFull", "detail": str(exc)},
            }
        )
        await ws.close()
        return ws

    sender = asyncio.create_task(_drain_outbox(ws, outbox))
    try:
        async for msg in ws:
            if msg.type == WSMsgType.TEXT:
                service.handle_message(session, msg.data)
            elif msg.type == WSMsgType.ERROR:
                break
    finally:
        service.disconnect(session)
        outbox.put_nowait(_CLOSE)
        with contextlib.suppress(Exception):
            await asyncio.wait_for(sender, timeout=5)
    return ws


def build_app(service: SyncService, config: ServerConfig) -> web.Application:
    # Graph documents stay small at desk scale, but leave import headroom.
    app = web.Application(client_max_size=64 * 1024 * 1024)
    app[SERVICE_KEY] = service
    app[CONFIG_KEY] = config
    app.router.add_get("/", _index)
    app.router.add_get("/api/export", _export)
    app.router.add_get("/api/export/labels.csv", _export_labels)
    app.router.add_get("/api/stats", _stats)
    app.router.add_post("/api/admin/load", _admin_load)
    app.router.add_get("/images/{name}", _image)
    app.router.add_get("/thumbs/{name}", _thumb)
    app.router.add_get("/ws", _ws)
    if config.ui_dir is not None and config.ui_dir.is_dir():
        app.router.add_static("/ui", config.ui_dir)

    if config.state_file is not None:

        async def _autosave_ctx(app: web.Application):
            task = asyncio.create_task(
                autosave_loop(service, config.state_file, config.autosave_secs)
            )
            yield
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task
            with contextlib.suppress(OSError):
                save_if_changed(service, config.state_file, None)

        app.cleanup_ctx.append(_autosave_ctx)
    return app


def serve(config: ServerConfig) -> None:
    """Build everything and block serving until interrupted."""
    state = build_initial_state(config)
    service = SyncService(state)
    if config.dataset_dir is not None and config.dataset_dir.is_dir():
        report = generate_thumbnails(IngestConfig(config.dataset_dir, config.thumb_size), state)
        log.info(
            "thumbnails: %d generated, %d up to date, %d placeholders",
            len(report.generated),
            len(report.skipped),
            len(report.placeholders),
        )
    app = build_app(service, config)
    log.info("serving %d pictures on port %d", len(state.nodes), config.port)
    web.run_app(app, port=config.port, print=None)


def main(argv: list[str] | None = None) -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    config = cli_entry(argv)
    try:
        serve(config)
    except (OSError, GraphIOError, MissingDirectory) as exc:
        print(f"anchorgraph: {exc}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
