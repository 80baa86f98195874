"""File formats: IDX, raw, PGM, dictionary serialization, metrics text."""

import struct

import numpy as np
import pytest

from otmorph import (
    BadMagic,
    ConfigError,
    GridShape,
    IoError,
    RunConfig,
    TransitionReport,
    TruncatedFile,
    format_metrics,
    load_dictionary,
    load_idx,
    load_raw,
    normalize_to_measure,
    parse_metrics,
    quantize_pgm,
    read_pgm,
    save_dictionary,
    write_idx,
    write_pgm,
)

from test_sparse import hadamard_union


class TestIdx:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        images = rng.integers(0, 256, size=(5, 4, 6), dtype=np.uint8)
        path = tmp_path / "set.idx"
        write_idx(path, images)
        ds = load_idx(path)
        assert ds.count == 5
        assert ds.shape == GridShape(4, 6)
        np.testing.assert_array_equal(ds.pixels.reshape(5, 4, 6), images)

    def test_measure_accessor(self, tmp_path):
        images = np.zeros((2, 2, 2), dtype=np.uint8)
        images[1] = [[0, 60], [60, 120]]
        path = tmp_path / "set.idx"
        write_idx(path, images)
        m = load_idx(path).measure(1)
        np.testing.assert_allclose(m.mass, [0.0, 0.25, 0.25, 0.5], atol=1e-12)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.idx"
        path.write_bytes(struct.pack(">IIII", 0x00000801, 3, 1, 1) + b"abc")
        with pytest.raises(BadMagic):
            load_idx(path)

    def test_magic_checked_before_header_length(self, tmp_path):
        # label-file header is only 8 bytes + payload; the magic mismatch
        # must win over the truncation complaint
        path = tmp_path / "labels.idx"
        path.write_bytes(struct.pack(">II", 0x00000801, 3) + b"abc")
        with pytest.raises(BadMagic):
            load_idx(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "short.idx"
        path.write_bytes(struct.pack(">I", 0x00000803) + b"\x00\x00")
        with pytest.raises(TruncatedFile):
            load_idx(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short.idx"
        path.write_bytes(struct.pack(">IIII", 0x00000803, 2, 2, 2) + b"\x01" * 7)
        with pytest.raises(TruncatedFile):
            load_idx(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "long.idx"
        path.write_bytes(struct.pack(">IIII", 0x00000803, 1, 2, 2) + b"\x01" * 5)
        with pytest.raises(IoError):
            load_idx(path)


class TestRaw:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "img.raw"
        path.write_bytes(bytes([0, 1, 2, 3, 4, 5]))
        pixels = load_raw(path, GridShape(2, 3))
        np.testing.assert_array_equal(pixels, [0, 1, 2, 3, 4, 5])

    def test_wrong_length(self, tmp_path):
        path = tmp_path / "img.raw"
        path.write_bytes(bytes(5))
        with pytest.raises(TruncatedFile):
            load_raw(path, GridShape(2, 3))


class TestPgm:
    def test_round_trip(self, tmp_path):
        shape = GridShape(3, 5)
        rng = np.random.default_rng(1)
        m = normalize_to_measure(rng.uniform(0.1, 1.0, 15), shape)
        path = tmp_path / "img.pgm"
        write_pgm(m, path)
        shape2, pixels = read_pgm(path)
        assert shape2 == shape
        np.testing.assert_array_equal(pixels, quantize_pgm(m, 1.0).ravel())

    def test_quantization_range(self):
        shape = GridShape(1, 4)
        m = normalize_to_measure(np.array([1.0, 2.0, 3.0, 4.0]), shape)
        q = quantize_pgm(m, 1.0).ravel()
        assert q.dtype == np.uint8
        assert q.max() == 255  # peak maps to white
        assert q[0] == round(255 / 4)

    def test_gamma_brightens_midtones(self):
        shape = GridShape(1, 3)
        m = normalize_to_measure(np.array([1.0, 2.0, 4.0]), shape)
        flat = quantize_pgm(m, 1.0).ravel()
        bright = quantize_pgm(m, 0.5).ravel()
        assert bright[0] > flat[0]
        assert bright[2] == flat[2] == 255

    def test_header_format(self, tmp_path):
        shape = GridShape(2, 3)
        m = normalize_to_measure(np.ones(6), shape)
        path = tmp_path / "img.pgm"
        write_pgm(m, path)
        assert path.read_bytes().startswith(b"P5\n3 2\n255\n")

    def test_comments_skipped_on_read(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P5\n# a comment\n2 2\n255\n\x00\x40\x80\xff")
        shape, pixels = read_pgm(path)
        assert shape == GridShape(2, 2)
        np.testing.assert_array_equal(pixels, [0, 64, 128, 255])

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 0 0 0")
        with pytest.raises(BadMagic):
            read_pgm(path)

    def test_short_payload(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P5\n2 2\n255\n\x00\x00")
        with pytest.raises(TruncatedFile):
            read_pgm(path)


class TestDictionaryFile:
    def test_round_trip_bitwise(self, tmp_path):
        d = hadamard_union(0)
        path = tmp_path / "atoms.dict"
        save_dictionary(d, path)
        d2 = load_dictionary(path)
        np.testing.assert_array_equal(d.atoms, d2.atoms)

    def test_magic_enforced(self, tmp_path):
        path = tmp_path / "atoms.dict"
        path.write_bytes(b"NOTDICT0" + bytes(16))
        with pytest.raises(BadMagic):
            load_dictionary(path)

    def test_truncated_payload(self, tmp_path):
        d = hadamard_union(0)
        path = tmp_path / "atoms.dict"
        save_dictionary(d, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(TruncatedFile):
            load_dictionary(path)


class TestMetricsText:
    def test_format_and_parse_round_trip(self):
        report = TransitionReport.from_distances([0.125, 0.25, 0.5], 0.03125, True)
        text = format_metrics(report)
        parsed = parse_metrics(text)
        assert parsed["regularity"] == report.regularity
        assert parsed["total_distance"] == report.total_distance
        assert parsed["manifold_distance"] == report.manifold_distance
        assert tuple(parsed["per_step_distances"]) == report.per_step_distances
        assert parsed["all_converged"] is True

    def test_line_layout(self):
        report = TransitionReport.from_distances([0.5, 0.5], 0.0, False)
        lines = format_metrics(report).splitlines()
        assert lines[0].startswith("regularity=")
        assert lines[1].startswith("total_distance=")
        assert lines[2].startswith("manifold_distance=")
        assert lines[3].startswith("per_step_distances=")
        assert lines[4] == "all_converged=false"

    def test_full_precision_preserved(self):
        # %.17g text survives a float64 round trip exactly
        value = 1 / 3 + 1e-16
        report = TransitionReport.from_distances([value, value], 0.0, True)
        parsed = parse_metrics(format_metrics(report))
        assert parsed["total_distance"] == report.total_distance


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.epsilon == 2e-3
        assert cfg.mu == 0.05
        assert cfg.n_frames == 5
        assert cfg.sparsity == 12
        assert cfg.atoms == 256
        assert cfg.seed == 0

    def test_from_mapping_rejects_unknown_keys(self):
        with pytest.raises(ConfigError):
            RunConfig.from_mapping({"episolon": 1e-3})

    def test_from_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("epsilon=0.004\nseed=7\nstop_tol=none\n# comment\n\n")
        cfg = RunConfig.from_file(path)
        assert cfg.epsilon == 0.004
        assert cfg.seed == 7
        assert cfg.stop_tol is None

    def test_bad_value_type(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed=abc\n")
        with pytest.raises(ConfigError):
            RunConfig.from_file(path)

    def test_override_ignores_none(self):
        cfg = RunConfig().override(epsilon=None, seed=9)
        assert cfg.epsilon == 2e-3
        assert cfg.seed == 9
