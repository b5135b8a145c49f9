import json
from pathlib import Path

import pytest
from PIL import Image

from anchorgraph.dataset_ingest import IngestConfig, generate_thumbnails, ingest_folder
from anchorgraph.graph_io import export_graph, import_graph
from anchorgraph.http_gateway import (
    ServerConfig,
    build_app,
    build_initial_state,
    cli_entry,
)
from anchorgraph.sync_service import SyncService

GOLDEN = Path(__file__).parent / "data" / "golden.graph.json"


def make_dataset(tmp_path: Path, count: int) -> Path:
    root = tmp_path / "dataset"
    root.mkdir()
    for i in range(count):
        Image.new("RGB", (32, 24), (i % 256, 60, 60)).save(root / f"img-{i:04d}.png")
    return root


def gateway(tmp_path, count=3, thumbs=True):
    dataset = make_dataset(tmp_path, count)
    config = IngestConfig(dataset)
    state = ingest_folder(config)
    if thumbs:
        generate_thumbnails(config, state)
    service = SyncService(state, max_clients=16)
    app = build_app(service, ServerConfig(dataset_dir=dataset))
    return app, service


class TestApi:
    async def test_stats_on_fresh_ingest(self, aiohttp_client, tmp_path):
        app, _ = gateway(tmp_path, count=85, thumbs=False)
        client = await aiohttp_client(app)
        resp = await client.get("/api/stats")
        assert resp.status == 200
        assert await resp.json() == {
            "nodes": 85,
            "clusters": 0,
            "edges": 0,
            "unlabeled": 85,
            "revision": 0,
        }

    async def test_stats_track_mutations(self, aiohttp_client, tmp_path):
        app, service = gateway(tmp_path, count=5, thumbs=False)
        service.state.create_cluster([0, 2], label="pair")
        client = await aiohttp_client(app)
        stats = await (await client.get("/api/stats")).json()
        assert stats == {"nodes": 5, "clusters": 1, "edges": 2, "unlabeled": 3, "revision": 1}
        assert stats["unlabeled"] == len(service.state.unlabeled_nodes())

    async def test_export_passes_import_validation(self, aiohttp_client, tmp_path):
        app, service = gateway(tmp_path, count=4, thumbs=False)
        service.state.create_cluster([1, 3], label="pair")
        client = await aiohttp_client(app)
        resp = await client.get("/api/export")
        assert resp.status == 200
        assert resp.content_type == "application/json"
        body = await resp.read()
        assert import_graph(body).same_content(service.state)
        assert body == export_graph(service.state)

    async def test_labels_csv(self, aiohttp_client, tmp_path):
        app, service = gateway(tmp_path, count=3, thumbs=False)
        service.state.create_cluster([0], label="solo")
        client = await aiohttp_client(app)
        resp = await client.get("/api/export/labels.csv")
        assert resp.status == 200
        assert resp.content_type == "text/csv"
        text = (await resp.read()).decode("utf-8")
        lines = [l for l in text.split("\r\n") if l]
        assert lines[0] == "image,labels"
        assert lines[1] == "img-0000.png,solo"
        assert len(lines) == 4

    async def test_admin_load_round_trips_canonical_bytes(self, aiohttp_client, tmp_path):
        app, service = gateway(tmp_path, count=2, thumbs=False)
        client = await aiohttp_client(app)
        golden = GOLDEN.read_bytes()
        resp = await client.post("/api/admin/load", data=golden)
        assert resp.status == 200
        assert (await resp.json())["revision"] == 0
        exported = await (await client.get("/api/export")).read()
        assert exported == export_graph(import_graph(golden))
        assert exported == golden  # fixture is canonical already

    async def test_admin_load_rejects_bad_documents(self, aiohttp_client, tmp_path):
        app, service = gateway(tmp_path, count=2, thumbs=False)
        before = export_graph(service.state)
        client = await aiohttp_client(app)
        resp = await client.post("/api/admin/load", data=b'{"nodes": []}')
        assert resp.status == 400
        body = await resp.json()
        assert body["error"] == "SchemaError"
        resp = await client.post(
            "/api/admin/load",
            data=json.dumps(
                {
                    "clusters": [],
                    "nodes": [],
                    "edges": [{"to": "a5e1baa2-aead-4164-9205-63f26f656d6f", "from": 0}],
                }
            ).encode(),
        )
        assert resp.status == 400
        assert (await resp.json())["error"] == "ConsistencyError"
        assert export_graph(service.state) == before

    async def test_index_fallback_page(self, aiohttp_client, tmp_path):
        app, _ = gateway(tmp_path, count=1, thumbs=False)
        client = await aiohttp_client(app)
        resp = await client.get("/")
        assert resp.status == 200
        assert "anchorgraph" in await resp.text()

    async def test_index_serves_ui_dir(self, aiohttp_client, tmp_path):
        dataset = make_dataset(tmp_path, 1)
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<html><body>bundled ui</body></html>")
        state = ingest_folder(IngestConfig(dataset))
        app = build_app(
            SyncService(state, max_clients=4),
            ServerConfig(dataset_dir=dataset, ui_dir=ui),
        )
        client = await aiohttp_client(app)
        assert "bundled ui" in await (await client.get("/")).text()


class TestFileServing:
    async def test_original_and_thumbnail(self, aiohttp_client, tmp_path):
        app, _ = gateway(tmp_path, count=2, thumbs=True)
        client = await aiohttp_client(app)
        resp = await client.get("/images/img-0000.png")
        assert resp.status == 200
        assert (await resp.read())[:8] == b"\x89PNG\r\n\x1a\n"
        resp = await client.get("/thumbs/img-0001.png")
        assert resp.status == 200

    async def test_missing_thumb_is_404(self, aiohttp_client, tmp_path):
        app, _ = gateway(tmp_path, count=1, thumbs=True)
        client = await aiohttp_client(app)
        assert (await client.get("/thumbs/missing.png")).status == 404

    @pytest.mark.parametrize(
        "path",
        [
            "/images/..%2Fsecret.txt",
            "/images/%2e%2e%2fsecret.txt",
            "/images/..%5Csecret.txt",
            "/thumbs/..%2F..%2Fsecret.txt",
            "/thumbs/%2e%2e%2fimg-0000.png",
        ],
    )
    async def test_path_traversal_blocked(self, aiohttp_client, tmp_path, path):
        app, _ = gateway(tmp_path, count=1, thumbs=True)
        secret = tmp_path / "secret.txt"
        secret.write_text("do not serve")
        client = await aiohttp_client(app)
        resp = await client.get(path)
        assert resp.status != 200
        assert b"do not serve" not in await resp.read()

    async def test_literal_dot_segments_collapse_before_routing(
        self, aiohttp_client, tmp_path
    ):
        # Clients normalize "/images/../x" to "/x" per RFC 3986; the server
        # must still never map it into the dataset directory.
        app, _ = gateway(tmp_path, count=1, thumbs=True)
        secret = tmp_path / "secret.txt"
        secret.write_text("do not serve")
        client = await aiohttp_client(app)
        resp = await client.get("/images/../secret.txt")
        assert b"do not serve" not in await resp.read()
        resp = await client.get("/thumbs/../img-0000.png")
        assert b"do not serve" not in await resp.read()

    async def test_no_dataset_dir_means_404(self, aiohttp_client):
        state = import_graph(GOLDEN.read_bytes())
        app = build_app(SyncService(state, max_clients=4), ServerConfig(state_file=GOLDEN))
        client = await aiohttp_client(app)
        assert (await client.get("/images/anything.png")).status == 404


class TestWebsocket:
    async def test_handshake_and_broadcast(self, aiohttp_client, tmp_path):
        app, service = gateway(tmp_path, count=4, thumbs=False)
        client = await aiohttp_client(app)
        ws_a = await client.ws_connect("/ws")
        ws_b = await client.ws_connect("/ws")
        await ws_a.send_json({"type": "hello", "client_seq": 1})
        await ws_b.send_json({"type": "hello", "client_seq": 1})
        snap_a = await ws_a.receive_json()
        snap_b = await ws_b.receive_json()
        assert snap_a["type"] == snap_b["type"] == "snapshot"
        assert len(snap_a["state"]["nodes"]) == 4

        await ws_a.send_json(
            {
                "type": "mutate",
                "client_seq": 2,
                "mutation": {"kind": "CreateCluster", "selection": [0, 1], "label": "dup"},
            }
        )
        applied_a = await ws_a.receive_json()
        applied_b = await ws_b.receive_json()
        assert applied_a == applied_b
        assert applied_a["type"] == "applied"
        assert applied_a["revision"] == 1
        assert service.state.revision == 1
        await ws_a.close()
        await ws_b.close()

    async def test_unknown_type_rejected_but_connection_survives(
        self, aiohttp_client, tmp_path
    ):
        app, service = gateway(tmp_path, count=2, thumbs=False)
        client = await aiohttp_client(app)
        ws = await client.ws_connect("/ws")
        await ws.send_json({"type": "hello", "client_seq": 1})
        await ws.receive_json()
        await ws.send_json({"type": "move_node", "client_seq": 2, "x": 1, "y": 2})
        rejected = await ws.receive_json()
        assert rejected["type"] == "rejected"
        assert rejected["error"]["code"] == "UnknownType"
        await ws.send_json({"type": "request_snapshot", "client_seq": 3})
        assert (await ws.receive_json())["type"] == "snapshot"
        assert service.state.revision == 0
        await ws.close()

    async def test_bad_handshake_closes_socket(self, aiohttp_client, tmp_path):
        app, _ = gateway(tmp_path, count=2, thumbs=False)
        client = await aiohttp_client(app)
        ws = await client.ws_connect("/ws")
        await ws.send_json({"type": "mutate", "client_seq": 1})
        rejected = await ws.receive_json()
        assert rejected["error"]["code"] == "BadHandshake"
        closed = await ws.receive()
        assert closed.type.name in ("CLOSE", "CLOSED", "CLOSING")


class TestCli:
    def test_defaults(self):
        config = cli_entry(["--dataset-dir", "./imgs"])
        assert config.port == 8080
        assert config.thumb_size == 128
        assert config.autosave_secs == 30
        assert config.dataset_dir == Path("./imgs")
        assert config.state_file is None

    def test_requires_a_seed(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            cli_entry([])
        assert excinfo.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            cli_entry(["--help"])
        assert excinfo.value.code == 0
        assert "usage" in capsys.readouterr().out

    def test_unknown_flag_exits_two(self):
        with pytest.raises(SystemExit) as excinfo:
            cli_entry(["--dataset-dir", "x", "--bogus"])
        assert excinfo.value.code == 2

    def test_state_file_and_dataset_both_accepted(self):
        config = cli_entry(["--state-file", "s.graph.json", "--dataset-dir", "./imgs"])
        assert config.state_file == Path("s.graph.json")
        assert config.dataset_dir == Path("./imgs")


class TestInitialState:
    def test_existing_state_file_wins(self, tmp_path):
        dataset = make_dataset(tmp_path, 3)
        config = ServerConfig(dataset_dir=dataset, state_file=GOLDEN)
        state = build_initial_state(config)
        assert state.nodes[456].image == "zonked-silent-snobbish-review.png"

    def test_missing_state_file_falls_back_to_ingest(self, tmp_path):
        dataset = make_dataset(tmp_path, 3)
        config = ServerConfig(dataset_dir=dataset, state_file=tmp_path / "later.graph.json")
        state = build_initial_state(config)
        assert len(state.nodes) == 3

    def test_nothing_to_seed_from(self, tmp_path):
        config = ServerConfig(state_file=tmp_path / "absent.graph.json")
        with pytest.raises(FileNotFoundError):
            build_initial_state(config)
