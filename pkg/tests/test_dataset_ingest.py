import logging
import os
from pathlib import Path

import pytest
from PIL import Image

from anchorgraph.dataset_ingest import (
    IngestConfig,
    MissingDirectory,
    generate_thumbnails,
    ingest_folder,
    scaled_size,
)
from anchorgraph.graph_io import export_graph


def make_image(path: Path, size=(8, 8), color=(200, 30, 30), fmt=None):
    Image.new("RGB", size, color).save(path, format=fmt)


@pytest.fixture
def dataset(tmp_path):
    for name in ("b.png", "a.png", "c.png"):
        make_image(tmp_path / name)
    return tmp_path


class TestIngestFolder:
    def test_ids_follow_byte_order_sort(self, dataset):
        # Oracle: the expected order is an independent sort of the listing.
        expected = sorted(p.name for p in dataset.iterdir())
        state = ingest_folder(IngestConfig(dataset))
        assert [state.nodes[i].image for i in sorted(state.nodes)] == expected
        assert [state.nodes[i].image for i in (0, 1, 2)] == ["a.png", "b.png", "c.png"]
        assert state.clusters == {}
        assert state.edges == []
        assert state.revision == 0

    def test_empty_folder_warns_and_returns_empty_graph(self, tmp_path, caplog):
        with caplog.at_level(logging.WARNING):
            state = ingest_folder(IngestConfig(tmp_path))
        assert state.nodes == {}
        assert "no accepted images" in caplog.text

    def test_missing_directory(self, tmp_path):
        with pytest.raises(MissingDirectory):
            ingest_folder(IngestConfig(tmp_path / "nope"))

    def test_extension_filter_and_case(self, tmp_path):
        make_image(tmp_path / "keep.PNG")
        make_image(tmp_path / "keep2.jpeg", fmt="JPEG")
        (tmp_path / "notes.txt").write_text("not an image")
        (tmp_path / "noext").write_text("x")
        state = ingest_folder(IngestConfig(tmp_path))
        assert sorted(n.image for n in state.nodes.values()) == ["keep.PNG", "keep2.jpeg"]

    def test_scan_is_not_recursive(self, tmp_path):
        make_image(tmp_path / "top.png")
        sub = tmp_path / "sub"
        sub.mkdir()
        make_image(sub / "below.png")
        state = ingest_folder(IngestConfig(tmp_path))
        assert [n.image for n in state.nodes.values()] == ["top.png"]

    def test_deterministic_and_dense(self, dataset):
        config = IngestConfig(dataset)
        first = export_graph(ingest_folder(config))
        second = export_graph(ingest_folder(config))
        assert first == second
        state = ingest_folder(config)
        assert max(state.nodes) == len(state.nodes) - 1

    def test_alphabetical_extremes_take_first_and_last_ids(self, tmp_path):
        make_image(tmp_path / "abashed-careless-ordinary-crew.png")
        make_image(tmp_path / "zonked-silent-snobbish-review.png")
        for i in range(455):
            make_image(tmp_path / f"file-{i:04d}.png")
        state = ingest_folder(IngestConfig(tmp_path))
        assert len(state.nodes) == 457
        assert state.nodes[0].image == "abashed-careless-ordinary-crew.png"
        assert state.nodes[456].image == "zonked-silent-snobbish-review.png"

    def test_thumb_edge_minimum_enforced(self, dataset):
        with pytest.raises(ValueError):
            IngestConfig(dataset, thumb_max_edge=8)


class TestScaledSize:
    # Hand-checked: floor(1080 * 128 / 1920) == 72.
    def test_landscape_downscale(self):
        assert scaled_size(1920, 1080, 128) == (128, 72)

    def test_portrait_downscale(self):
        assert scaled_size(1080, 1920, 128) == (72, 128)

    def test_never_upscales(self):
        assert scaled_size(64, 64, 128) == (64, 64)

    def test_exact_fit_untouched(self):
        assert scaled_size(128, 128, 128) == (128, 128)

    def test_short_edge_never_below_one(self):
        assert scaled_size(2000, 1, 128) == (128, 1)

    def test_floor_rounding(self):
        # floor(100 * 128 / 199) = floor(64.32...) = 64
        assert scaled_size(199, 100, 128) == (128, 64)


class TestGenerateThumbnails:
    def test_sizes_and_formats(self, tmp_path):
        make_image(tmp_path / "wide.png", size=(1920, 1080))
        make_image(tmp_path / "small.jpg", size=(64, 64), fmt="JPEG")
        config = IngestConfig(tmp_path, thumb_max_edge=128)
        state = ingest_folder(config)
        report = generate_thumbnails(config, state)
        assert sorted(report.generated) == ["small.jpg", "wide.png"]
        with Image.open(tmp_path / ".thumbs" / "wide.png") as im:
            assert im.size == (128, 72)
            assert im.format == "PNG"
        with Image.open(tmp_path / ".thumbs" / "small.jpg") as im:
            assert im.size == (64, 64)
            assert im.format == "JPEG"

    def test_longest_edge_bounded(self, tmp_path):
        for name, size in [("a.png", (500, 100)), ("b.png", (100, 500)), ("c.png", (20, 20))]:
            make_image(tmp_path / name, size=size)
        config = IngestConfig(tmp_path, thumb_max_edge=64)
        state = ingest_folder(config)
        generate_thumbnails(config, state)
        for name in ("a.png", "b.png", "c.png"):
            with Image.open(tmp_path / ".thumbs" / name) as im:
                assert max(im.size) <= 64

    def test_second_run_skips_everything(self, tmp_path):
        make_image(tmp_path / "one.png", size=(300, 200))
        config = IngestConfig(tmp_path)
        state = ingest_folder(config)
        first = generate_thumbnails(config, state)
        assert first.generated == ["one.png"]
        mtime = (tmp_path / ".thumbs" / "one.png").stat().st_mtime_ns
        second = generate_thumbnails(config, state)
        assert second.generated == []
        assert second.placeholders == []
        assert second.skipped == ["one.png"]
        assert (tmp_path / ".thumbs" / "one.png").stat().st_mtime_ns == mtime

    def test_touched_source_is_reencoded(self, tmp_path):
        make_image(tmp_path / "one.png")
        config = IngestConfig(tmp_path)
        state = ingest_folder(config)
        generate_thumbnails(config, state)
        future = (tmp_path / "one.png").stat().st_mtime + 10
        os.utime(tmp_path / "one.png", (future, future))
        report = generate_thumbnails(config, state)
        assert report.generated == ["one.png"]

    def test_undecodable_file_gets_placeholder(self, tmp_path, caplog):
        make_image(tmp_path / "good.png")
        (tmp_path / "broken.png").write_bytes(b"this is not a png")
        config = IngestConfig(tmp_path)
        state = ingest_folder(config)
        with caplog.at_level(logging.WARNING):
            report = generate_thumbnails(config, state)
        assert report.placeholders == ["broken.png"]
        assert report.generated == ["good.png"]
        assert "placeholder" in caplog.text
        with Image.open(tmp_path / ".thumbs" / "broken.png") as im:
            assert max(im.size) <= 128
