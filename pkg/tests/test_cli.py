import filecmp
import pathlib

import numpy as np
import pytest

from usqz.cli import (EXIT_ENCODABILITY, EXIT_GENERIC, EXIT_IO, EXIT_TOPOLOGY,
                      main)
from usqz.grid import EXTERNAL
from usqz.pgm import read_pgm, write_pgm
from usqz.phantom import read_manifest


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Small dataset plus a trained model, built once through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    ds = root / "ds"
    assert main(["phantom", "--out", str(ds), "--count", "4",
                 "--scan-lines", "64", "--samples", "96",
                 "--width", "200", "--height", "200", "--seed", "0"]) == 0
    model = root / "model.bin"
    assert main(["train", "--manifest", str(ds / "manifest.txt"),
                 "--out", str(model), "--window", "5"]) == 0
    return root, ds, model


class TestPipeline:
    def test_end_to_end(self, workspace, tmp_path):
        root, ds, model = workspace
        item = [it for it in read_manifest(ds / "manifest.txt")
                if it["role"] == "test"][0]
        blob = tmp_path / "frame.usqz"
        assert main(["compress", "--input", item["frame"], "--out", str(blob),
                     "--model", str(model), "--window", "5",
                     "--width", "200", "--height", "200"]) == 0
        assert blob.is_file()

        out = tmp_path / "decoded.pgm"
        polar = tmp_path / "decoded_polar.pgm"
        labels = tmp_path / "decoded_labels.pgm"
        assert main(["decompress", "--input", str(blob), "--out", str(out),
                     "--polar-out", str(polar), "--labels-out", str(labels),
                     "--seed", "11"]) == 0
        assert read_pgm(out).shape == (200, 200)
        assert read_pgm(polar).shape == (96, 64)

        csv_path = tmp_path / "metrics.csv"
        assert main(["eval", "--original", item["frame"],
                     "--decompressed", str(polar),
                     "--labels", item["labels"],
                     "--pred-labels", str(labels),
                     "--out", str(csv_path), "--window", "16"]) == 0
        text = csv_path.read_text()
        assert text.splitlines()[0] == "frame_id,metric,class_or_pair,value"
        for metric in ("intra_jsd", "attenuation_jsd", "Dice", "SE"):
            assert metric in text

        assert main(["report", str(csv_path)]) == 0

    def test_compress_from_labels_prints_ratio(self, tmp_path, capsys):
        ds = tmp_path / "ds"
        assert main(["phantom", "--out", str(ds), "--count", "2",
                     "--seed", "4"]) == 0
        item = read_manifest(ds / "manifest.txt")[0]
        capsys.readouterr()
        assert main(["compress", "--input", item["frame"],
                     "--out", str(tmp_path / "f.usqz"),
                     "--from-labels", item["labels"]]) == 0
        out = capsys.readouterr().out
        assert "725.5" in out  # 256 scan lines, 384 samples, 2 contours

    def test_decompress_reproducible(self, workspace, tmp_path):
        _, ds, _ = workspace
        item = read_manifest(ds / "manifest.txt")[0]
        a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
        for out in (a, b):
            assert main(["decompress", "--input", item["compressed"],
                         "--out", str(out), "--seed", "7"]) == 0
        assert filecmp.cmp(a, b, shallow=False)

    def test_simulate_from_labels(self, workspace, tmp_path):
        _, ds, _ = workspace
        item = read_manifest(ds / "manifest.txt")[0]
        out = tmp_path / "sim.pgm"
        assert main(["simulate", "--labels", item["labels"], "--out", str(out),
                     "--width", "200", "--height", "200", "--seed", "3"]) == 0
        assert read_pgm(out).shape == read_pgm(item["labels"]).shape


class TestFailureModes:
    def test_missing_input_exit_io_and_no_partial_output(self, tmp_path):
        out = tmp_path / "never.usqz"
        code = main(["compress", "--input", str(tmp_path / "missing.pgm"),
                     "--out", str(out), "--from-labels", str(tmp_path / "x.pgm")])
        assert code == EXIT_IO
        assert not out.exists()

    def test_compress_without_model_or_labels(self, workspace, tmp_path):
        _, ds, _ = workspace
        item = read_manifest(ds / "manifest.txt")[0]
        assert main(["compress", "--input", item["frame"],
                     "--out", str(tmp_path / "f.usqz")]) == EXIT_GENERIC

    def test_topology_failure_exit_code(self, workspace, tmp_path):
        _, _, model = workspace
        # This uniform frame classifies as external tissue everywhere,
        # so no lumen boundary exists.
        frame = tmp_path / "flat.pgm"
        write_pgm(frame, np.full((96, 64), 200, np.uint8))
        code = main(["compress", "--input", str(frame),
                     "--out", str(tmp_path / "f.usqz"),
                     "--model", str(model), "--window", "5",
                     "--width", "200", "--height", "200"])
        assert code == EXIT_TOPOLOGY

    def test_seed_is_required(self, workspace, tmp_path):
        _, ds, _ = workspace
        item = read_manifest(ds / "manifest.txt")[0]
        with pytest.raises(SystemExit):
            main(["decompress", "--input", item["compressed"],
                  "--out", str(tmp_path / "o.pgm")])

    def test_corrupt_compressed_file(self, tmp_path):
        bad = tmp_path / "bad.usqz"
        bad.write_bytes(b"JUNK" + b"\x00" * 20)
        code = main(["decompress", "--input", str(bad),
                     "--out", str(tmp_path / "o.pgm"), "--seed", "0"])
        assert code == EXIT_GENERIC

    def test_report_empty(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("frame_id,metric,class_or_pair,value\n")
        assert main(["report", str(empty)]) == EXIT_IO
