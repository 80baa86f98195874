"""End-to-end command-line behavior, run in-process through main()."""

import sys

import numpy as np
import pytest

from otmorph import (
    GridShape,
    load_dictionary,
    normalize_to_measure,
    parse_metrics,
    write_idx,
    write_pgm,
)
from otmorph.cli import load_measure_arg, main

from conftest import gaussian_blob


@pytest.fixture
def blob_files(tmp_path):
    shape = GridShape(16, 16)
    a = gaussian_blob(shape, 4.0, 4.0, 1.8)
    b = gaussian_blob(shape, 11.0, 11.0, 1.8)
    pa, pb = tmp_path / "a.pgm", tmp_path / "b.pgm"
    write_pgm(a, pa)
    write_pgm(b, pb)
    return pa, pb


@pytest.fixture
def idx_file(tmp_path):
    rng = np.random.default_rng(50)
    images = rng.integers(1, 256, size=(40, 8, 8), dtype=np.uint8)
    path = tmp_path / "set.idx"
    write_idx(path, images)
    return path


class TestImageArguments:
    def test_pgm(self, blob_files):
        a, _ = blob_files
        m = load_measure_arg(str(a))
        assert m.shape == GridShape(16, 16)

    def test_idx_with_index(self, idx_file):
        m = load_measure_arg(f"{idx_file}:3")
        assert m.shape == GridShape(8, 8)

    def test_raw_with_dims(self, tmp_path):
        path = tmp_path / "img.raw"
        path.write_bytes(bytes(range(1, 13)))
        m = load_measure_arg(f"{path}:3x4")
        assert m.shape == GridShape(3, 4)

    def test_large_image_guard(self, tmp_path):
        shape = GridShape(65, 65)
        m = normalize_to_measure(np.ones(shape.n), shape)
        path = tmp_path / "big.pgm"
        write_pgm(m, path)
        from otmorph.cli import UsageError

        with pytest.raises(UsageError):
            load_measure_arg(str(path))
        assert load_measure_arg(str(path), allow_large=True).shape == shape


class TestExitCodes:
    def test_missing_file_is_io_error(self, capsys):
        assert main(["distance", "--a", "nope.pgm", "--b", "nope.pgm"]) == 3
        assert "error" in capsys.readouterr().err

    def test_bad_prior_is_usage_error(self, blob_files, tmp_path, capsys):
        a, b = blob_files
        code = main(["morph", "--a", str(a), "--b", str(b), "--frames", "1",
                     "--prior", "bogus", "--out-dir", str(tmp_path / "o")])
        assert code == 2

    def test_shape_mismatch_is_usage_error(self, blob_files, tmp_path, capsys):
        a, _ = blob_files
        small = tmp_path / "small.pgm"
        write_pgm(gaussian_blob(GridShape(8, 8), 3, 3, 1.5), small)
        assert main(["distance", "--a", str(a), "--b", str(small)]) == 2

    def test_broken_external_is_protocol_error(self, blob_files, tmp_path, capsys):
        a, b = blob_files
        quitter = tmp_path / "quit.py"
        quitter.write_text("raise SystemExit(0)\n")
        code = main(["morph", "--a", str(a), "--b", str(b), "--frames", "1",
                     "--prior", f"external:{sys.executable} {quitter}",
                     "--out-dir", str(tmp_path / "o"), "--epsilon", "0.005"])
        assert code == 4

    def test_bad_config_file_is_usage_error(self, blob_files, tmp_path):
        a, b = blob_files
        cfg = tmp_path / "run.cfg"
        cfg.write_text("no_such_option=3\n")
        assert main(["distance", "--a", str(a), "--b", str(b),
                     "--config", str(cfg)]) == 2


class TestDistance:
    def test_self_distance_small(self, blob_files, capsys):
        a, _ = blob_files
        assert main(["distance", "--a", str(a), "--b", str(a),
                     "--epsilon", "0.005"]) == 0
        out = capsys.readouterr().out
        values = dict(line.split("=") for line in out.strip().splitlines())
        assert float(values["sharp_cost"]) < 0.01
        assert values["converged"] == "true"

    def test_between_blobs_positive(self, blob_files, capsys):
        a, b = blob_files
        assert main(["distance", "--a", str(a), "--b", str(b),
                     "--epsilon", "0.005"]) == 0
        out = capsys.readouterr().out
        values = dict(line.split("=") for line in out.strip().splitlines())
        assert float(values["sharp_cost"]) > 0.1


class TestLearnDict:
    def test_writes_dictionary(self, idx_file, tmp_path, capsys):
        out = tmp_path / "atoms.dict"
        code = main(["learn-dict", "--idx", str(idx_file), "--atoms", "8",
                     "--sparsity", "3", "--epochs", "2", "--out", str(out),
                     "--seed", "1"])
        assert code == 0
        d = load_dictionary(out)
        assert d.atom_dim == 64
        assert d.atom_count == 8

    def test_deterministic(self, idx_file, tmp_path, capsys):
        out1, out2 = tmp_path / "d1.dict", tmp_path / "d2.dict"
        for out in (out1, out2):
            assert main(["learn-dict", "--idx", str(idx_file), "--atoms", "8",
                         "--sparsity", "3", "--epochs", "2", "--out", str(out),
                         "--seed", "9"]) == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestMorphPipeline:
    def test_frame_files_and_report(self, blob_files, tmp_path, capsys):
        a, b = blob_files
        out_dir = tmp_path / "seq"
        code = main(["morph", "--a", str(a), "--b", str(b), "--frames", "3",
                     "--out-dir", str(out_dir), "--epsilon", "0.005"])
        assert code == 0
        frames = sorted(out_dir.glob("frame_*.pgm"))
        assert [f.name for f in frames] == [
            "frame_000.pgm", "frame_001.pgm", "frame_002.pgm",
            "frame_003.pgm", "frame_004.pgm",
        ]
        report = parse_metrics((out_dir / "report.txt").read_text())
        assert len(report["per_step_distances"]) == 4
        assert report["total_distance"] > 0

    def test_evaluate_reproduces_report_bitwise(self, blob_files, tmp_path, capsys):
        a, b = blob_files
        out_dir = tmp_path / "seq"
        assert main(["morph", "--a", str(a), "--b", str(b), "--frames", "2",
                     "--out-dir", str(out_dir), "--epsilon", "0.005"]) == 0
        capsys.readouterr()
        assert main(["evaluate", "--frames", str(out_dir),
                     "--epsilon", "0.005"]) == 0
        stdout = capsys.readouterr().out
        assert stdout == (out_dir / "report.txt").read_text()

    def test_morph_deterministic_across_runs(self, blob_files, tmp_path, capsys):
        a, b = blob_files
        runs = []
        for name in ("r1", "r2"):
            out_dir = tmp_path / name
            assert main(["morph", "--a", str(a), "--b", str(b), "--frames", "2",
                         "--out-dir", str(out_dir), "--epsilon", "0.005",
                         "--seed", "4"]) == 0
            runs.append(sorted(out_dir.glob("*")))
        for f1, f2 in zip(*runs):
            assert f1.name == f2.name
            assert f1.read_bytes() == f2.read_bytes()

    def test_endpoint_frames_match_inputs(self, blob_files, tmp_path, capsys):
        a, b = blob_files
        out_dir = tmp_path / "seq"
        assert main(["morph", "--a", str(a), "--b", str(b), "--frames", "1",
                     "--out-dir", str(out_dir), "--epsilon", "0.005"]) == 0
        assert (out_dir / "frame_000.pgm").read_bytes() == a.read_bytes()
        assert (out_dir / "frame_002.pgm").read_bytes() == b.read_bytes()


class TestBarycenter4:
    def test_writes_lattice(self, tmp_path, capsys):
        shape = GridShape(12, 12)
        corners = [gaussian_blob(shape, r, c, 1.5)
                   for r, c in ((3, 3), (8, 3), (3, 8), (8, 8))]
        paths = []
        for i, m in enumerate(corners):
            p = tmp_path / f"c{i}.pgm"
            write_pgm(m, p)
            paths.append(str(p))
        out_dir = tmp_path / "grid"
        code = main(["barycenter4", "--images", *paths, "--steps", "2",
                     "--out-dir", str(out_dir), "--epsilon", "0.005"])
        assert code == 0
        cells = sorted(out_dir.glob("cell_*.pgm"))
        assert len(cells) == 4
        # lattice corners are the inputs verbatim
        assert (out_dir / "cell_0_0.pgm").read_bytes() == \
            (tmp_path / "c0.pgm").read_bytes()


class TestSparsePriorPipeline:
    def test_morph_with_learned_dictionary(self, tmp_path, capsys):
        shape = GridShape(12, 12)
        rng = np.random.default_rng(51)
        images = []
        for _ in range(30):
            blob = gaussian_blob(shape, rng.uniform(3, 9), rng.uniform(3, 9), 1.6)
            images.append(np.round(254 * blob.as_image()
                                   / blob.as_image().max()).astype(np.uint8))
        idx = tmp_path / "blobs.idx"
        write_idx(idx, np.stack(images))
        dict_path = tmp_path / "atoms.dict"
        assert main(["learn-dict", "--idx", str(idx), "--atoms", "16",
                     "--epochs", "3", "--sparsity", "4",
                     "--out", str(dict_path)]) == 0
        a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
        write_pgm(gaussian_blob(shape, 3.5, 3.5, 1.6), a)
        write_pgm(gaussian_blob(shape, 8.5, 8.5, 1.6), b)
        out_dir = tmp_path / "seq"
        code = main(["morph", "--a", str(a), "--b", str(b), "--frames", "1",
                     "--prior", f"sparse:{dict_path}", "--sparsity", "4",
                     "--out-dir", str(out_dir), "--epsilon", "0.005",
                     "--fixed-iters", "1"])
        assert code == 0
        report = parse_metrics((out_dir / "report.txt").read_text())
        assert report["manifold_distance"] >= 0.0
