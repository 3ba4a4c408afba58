import json

import numpy as np
import pytest

from occlab.errors import ConfigurationError
from occlab.reader import read_depth, read_png
from occlab.writer import RunWriter, format_cell, write_csv, write_json, write_ply
from occlab.writer.formats import DEPTH_MAGIC


def test_png_roundtrip(tmp_path):
    rgb = np.random.default_rng(0).random((5, 7, 3))
    writer = RunWriter(str(tmp_path))
    back = read_png(writer.png("images/a.png", rgb))
    assert back.shape == (5, 7, 3)
    assert np.max(np.abs(back - rgb)) <= 0.5 / 255.0 + 1e-12


def test_ppm_layout(tmp_path):
    rgb = np.zeros((2, 3, 3))
    rgb[0, 0] = [1.0, 0.5, 2.0]
    file_name = RunWriter(str(tmp_path)).ppm("a.ppm", rgb)
    lines = open(file_name).read().splitlines()
    assert lines[:3] == ["P3", "3 2", "255"]
    assert lines[3].split()[:3] == ["255", "128", "255"]
    assert len(lines) == 5


def test_depth_roundtrip(tmp_path):
    depth = np.random.default_rng(1).uniform(0.0, 4.0, (6, 4))
    file_name = RunWriter(str(tmp_path)).depth("d.depth", depth)
    back = read_depth(file_name)
    assert back.shape == (6, 4)
    assert np.allclose(back, depth.astype(np.float32))
    with pytest.raises(ConfigurationError):
        RunWriter(str(tmp_path), resume=True).depth("bad.depth", np.zeros(3))


def test_depth_reader_rejects_other_files(tmp_path):
    (tmp_path / "x.depth").write_bytes(b"something else")
    with pytest.raises(ConfigurationError):
        read_depth(str(tmp_path / "x.depth"))


def test_depth_reader_rejects_truncated_header(tmp_path):
    for size in (0, 1, 11):
        (tmp_path / "cut.depth").write_bytes(DEPTH_MAGIC + bytes(size))
        with pytest.raises(ConfigurationError):
            read_depth(str(tmp_path / "cut.depth"))


def test_csv_cells(tmp_path):
    assert format_cell(None) == ""
    assert format_cell(0.1) == "0.1"
    assert format_cell(np.int64(3)) == "3"
    assert format_cell(True) == "true"
    file_name = str(tmp_path / "t.csv")
    write_csv(file_name, ["a", "b"], [{"a": 1, "b": 0.5}, {"a": 2}])
    assert open(file_name).read() == "a,b\n1,0.5\n2,\n"


def test_json_infinities(tmp_path):
    file_name = str(tmp_path / "t.json")
    write_json(file_name, {"psnr": float("inf"), "x": np.float64(1.5), "n": np.arange(2)})
    assert json.load(open(file_name)) == {"psnr": "inf", "x": 1.5, "n": [0, 1]}


def test_ply_length_checks(tmp_path):
    with pytest.raises(ConfigurationError):
        write_ply(str(tmp_path / "a.ply"), np.zeros((3, 3)), np.zeros((2, 3)))
    with pytest.raises(ConfigurationError):
        write_ply(str(tmp_path / "a.ply"), np.zeros((3, 3)), np.zeros((3, 3)), np.zeros(2))


def test_run_writer_refuses_non_empty_directory(tmp_path):
    RunWriter(str(tmp_path)).json("a.json", {})
    with pytest.raises(ConfigurationError):
        RunWriter(str(tmp_path))
    RunWriter(str(tmp_path), force=True)
    RunWriter(str(tmp_path), resume=True)


def test_manifest_lists_artifacts(tmp_path):
    writer = RunWriter(str(tmp_path))
    writer.csv("log.csv", ["a"], [])
    writer.png("images/x.png", np.zeros((2, 2, 3)))
    writer.manifest({"command": "test"})
    manifest = json.load(open(tmp_path / "manifest.json"))
    assert manifest["artifacts"] == ["images/x.png", "log.csv"]
    assert manifest["command"] == "test"
    assert manifest["config"] == {}
    assert "occlab_version" in manifest
