"""Session layer: one authoritative graph, many clients.

Clients speak a small JSON message protocol over a persistent
bidirectional channel. After a ``hello`` handshake the client receives a
full snapshot; every mutation it sends is applied strictly in server
arrival order and, on success, broadcast to every connected session
(including the sender) as an ``applied`` message carrying the new
revision. Failures produce a ``rejected`` message to the sender only.

There is deliberately no message for node positions: the viewport is
client-local state and never crosses the wire. Unrecognized message types
are rejected without touching the graph.

The protocol core is transport-free. A Session wraps two callables
(deliver one message, close the connection), so the same service drives
real websockets and in-memory test clients alike. All handling is
synchronous and runs on the event loop thread, which is what guarantees
the strict serial order of mutations.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
import tempfile
import uuid
from dataclasses import replace
from pathlib import Path
from typing import Callable

from .graph_core import CREATE_CLUSTER, GraphError, GraphState, Mutation, apply_mutation
from .graph_io import document_dict, export_graph, import_graph

log = logging.getLogger(__name__)

MAX_CLIENTS_ENV = "ANCHORGRAPH_MAX_CLIENTS"
DEFAULT_MAX_CLIENTS = 64


class ServerFull(Exception):
    """Connection refused: the configured client limit is reached."""


class Session:
    """One connected client. ``send`` must enqueue without blocking and
    deliver messages in the order enqueued; ``close`` tears the transport
    down after pending messages are flushed."""

    def __init__(self, session_id: int, send: Callable[[dict], None], close: Callable[[], None]):
        self.id = session_id
        self._send = send
        self._close = close
        self.handshaken = False
        self.closed = False

    def deliver(self, message: dict) -> None:
        if not self.closed:
            self._send(message)

    def shutdown(self) -> None:
        if not self.closed:
            self.closed = True
            self._close()


def _noop() -> None:
    pass


class SyncService:
    """Owns the canonical GraphState and every connected session."""

    def __init__(self, state: GraphState, max_clients: int | None = None):
        if max_clients is None:
            max_clients = int(os.environ.get(MAX_CLIENTS_ENV, DEFAULT_MAX_CLIENTS))
        self.state = state
        self.max_clients = max_clients
        self.sessions: dict[int, Session] = {}
        self.generation = 0  # bumps on every server-side load
        self._next_id = 1

    # -- connection lifecycle -----------------------------------------

    def connect(self, send: Callable[[dict], None], close: Callable[[], None] = _noop) -> Session:
        if len(self.sessions) >= self.max_clients:
            raise ServerFull(f"client limit {self.max_clients} reached")
        session = Session(self._next_id, send, close)
        self._next_id += 1
        self.sessions[session.id] = session
        return session

    def disconnect(self, session: Session) -> None:
        self.sessions.pop(session.id, None)
        session.closed = True

    # -- message handling ---------------------------------------------

    def handle_message(self, session: Session, raw: str | bytes | dict) -> None:
        """Process one inbound frame. Never raises for client mistakes;
        those turn into rejected messages (and, before the handshake, a
        closed connection)."""
        if session.closed:
            return
        message = raw if isinstance(raw, dict) else _parse_json_object(raw)
        msg_type = message.get("type") if isinstance(message, dict) else None
        client_seq = _client_seq(message) if isinstance(message, dict) else None

        if not session.handshaken:
            if msg_type == "hello" and isinstance(message, dict) and message.get("mutation") is None:
                session.handshaken = True
                session.deliver(self.snapshot_message())
            else:
                self._hang_up(session, "BadHandshake", "first message must be hello", client_seq)
            return

        if message is None:
            self._reject(session, "BadMessage", "frame is not a JSON object", None)
        elif msg_type == "hello":
            self._hang_up(session, "BadHandshake", "session already handshaken", client_seq)
        elif msg_type == "request_snapshot":
            session.deliver(self.snapshot_message())
        elif msg_type == "mutate":
            self._handle_mutate(session, message, client_seq)
        else:
            self._reject(session, "UnknownType", f"unknown message type {msg_type!r}", client_seq)

    def _handle_mutate(self, session: Session, message: dict, client_seq: int | None) -> None:
        payload = message.get("mutation")
        if payload is None:
            self._reject(session, "BadMutation", "mutate requires a mutation payload", client_seq)
            return
        if client_seq is None:
            self._reject(session, "BadMutation", "mutate requires a positive client_seq", None)
            return
        try:
            mutation = Mutation.from_payload(payload)
        except GraphError as exc:
            self._reject(session, exc.code, str(exc), client_seq)
            return
        if mutation.kind == CREATE_CLUSTER:
            # The server owns id assignment; any client-supplied anchor id
            # is replaced so broadcast replay is collision-free.
            mutation = replace(mutation, anchor=str(uuid.uuid4()))
        try:
            applied = apply_mutation(self.state, mutation)
        except GraphError as exc:
            self._reject(session, exc.code, str(exc), client_seq)
            return
        self.broadcast(
            {
                "type": "applied",
                "revision": self.state.revision,
                "mutation": applied.to_payload(),
            }
        )

    def _reject(self, session: Session, code: str, detail: str, client_seq: int | None) -> None:
        error: dict = {"code": code, "detail": detail}
        if client_seq is not None:
            error["client_seq"] = client_seq
        session.deliver({"type": "rejected", "revision": self.state.revision, "error": error})

    def _hang_up(self, session: Session, code: str, detail: str, client_seq: int | None) -> None:
        self._reject(session, code, detail, client_seq)
        session.shutdown()
        self.disconnect(session)

    # -- server-side state operations ----------------------------------

    def snapshot_message(self) -> dict:
        return {
            "type": "snapshot",
            "revision": self.state.revision,
            "state": document_dict(self.state),
        }

    def broadcast(self, message: dict) -> None:
        for session in list(self.sessions.values()):
            if session.handshaken and not session.closed:
                session.deliver(message)

    def load_state(self, new_state: GraphState) -> None:
        """Replace the canonical graph (server-side load). Every connected
        client immediately receives a fresh snapshot."""
        self.state = new_state
        self.generation += 1
        snapshot = self.snapshot_message()
        for session in list(self.sessions.values()):
            if session.handshaken and not session.closed:
                session.deliver(snapshot)

    def stats(self) -> dict:
        return {
            "nodes": len(self.state.nodes),
            "clusters": len(self.state.clusters),
            "edges": len(self.state.edges),
            "unlabeled": len(self.state.unlabeled_nodes()),
            "revision": self.state.revision,
        }


def _parse_json_object(raw: str | bytes) -> dict | None:
    try:
        value = json.loads(raw)
    except (ValueError, UnicodeDecodeError):
        return None
    return value if isinstance(value, dict) else None


def _client_seq(message: dict) -> int | None:
    value = message.get("client_seq")
    if isinstance(value, int) and not isinstance(value, bool) and value > 0:
        return value
    return None


# -- persistence ---------------------------------------------------------


def load_graph_file(service: SyncService, path: str | Path) -> None:
    """Import a saved graph and make it the served state. Import errors
    propagate to the caller; the old state keeps serving untouched."""
    data = Path(path).read_bytes()
    service.load_state(import_graph(data))


def write_state_atomic(state: GraphState, path: str | Path) -> None:
    """Export to a temp file in the target directory, then rename over the
    destination, so readers never observe a partial document."""
    path = Path(path)
    data = export_graph(state)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def save_if_changed(
    service: SyncService, path: str | Path, last_mark: tuple[int, int] | None
) -> tuple[int, int]:
    """Write the state if it changed since ``last_mark`` (a (generation,
    revision) pair); returns the new mark."""
    mark = (service.generation, service.state.revision)
    if mark != last_mark:
        write_state_atomic(service.state, path)
    return mark


async def autosave_loop(service: SyncService, path: str | Path, interval_secs: float) -> None:
    """Periodically persist the state when its revision moved. Write
    failures are logged and the next tick retries; serving never stops."""
    path = Path(path)
    last: tuple[int, int] | None = None
    if path.exists():
        # The file we started from counts as the last save.
        last = (service.generation, service.state.revision)
    while True:
        await asyncio.sleep(interval_secs)
        try:
            last = save_if_changed(service, path, last)
        except OSError as exc:
            log.error("autosave to %s failed: %s", path, exc)
