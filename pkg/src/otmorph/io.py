"""File formats: IDX image sets, binary PGM frames, dictionary files,
raw grayscale, the flat key=value metrics/report format, and the run
configuration surface shared by the CLI.

All writers are deterministic: identical inputs produce byte-identical
files.  Floats are rendered with repr-exact precision (%.17g) so metrics
round-trip without loss.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import BadMagic, ConfigError, IoError, TruncatedFile
from .measures import GridMeasure, GridShape, normalize_to_measure
from .sparse import Dictionary

IDX_IMAGE_MAGIC = 0x00000803
DICT_MAGIC = b"OTDICT01"

_FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class IdxDataset:
    """Decoded IDX image file: ``pixels`` is (count, rows*cols) uint8."""

    shape: GridShape
    pixels: np.ndarray

    @property
    def count(self) -> int:
        return self.pixels.shape[0]

    def measure(self, index: int) -> GridMeasure:
        """Image ``index`` normalized to a unit-mass measure."""
        if not 0 <= index < self.count:
            raise IndexError(f"index {index} out of range [0, {self.count})")
        return normalize_to_measure(self.pixels[index].astype(np.float64), self.shape)


def _read_file(path) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _write_file(path, payload: bytes) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_idx(path) -> IdxDataset:
    """Parse an IDX image file (magic 0x00000803, big-endian dimensions).

    Raises:
        BadMagic: wrong magic number (e.g. a label file).
        TruncatedFile: header or payload shorter than declared.
        IoError: unreadable file or trailing garbage.
    """
    raw = _read_file(path)
    if len(raw) < 4:
        raise TruncatedFile(f"{path}: IDX magic needs 4 bytes, file has {len(raw)}")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != IDX_IMAGE_MAGIC:
        raise BadMagic(f"{path}: magic 0x{magic:08x}, want 0x{IDX_IMAGE_MAGIC:08x}")
    if len(raw) < 16:
        raise TruncatedFile(f"{path}: IDX header needs 16 bytes, file has {len(raw)}")
    count, rows, cols = struct.unpack(">III", raw[4:16])
    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise TruncatedFile(
            f"{path}: payload has {len(raw) - 16} bytes, header declares {expected - 16}"
        )
    if len(raw) > expected:
        raise IoError(f"{path}: {len(raw) - expected} trailing bytes after payload")
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows * cols)
    return IdxDataset(shape=GridShape(rows, cols), pixels=pixels)


def write_idx(path, images: np.ndarray) -> None:
    """Write (count, rows, cols) uint8 images as an IDX file."""
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError(f"images must be (count, rows, cols), got {images.shape}")
    count, rows, cols = images.shape
    header = struct.pack(">IIII", IDX_IMAGE_MAGIC, count, rows, cols)
    _write_file(path, header + images.tobytes())


def load_raw(path, shape: GridShape) -> np.ndarray:
    """Raw grayscale: exactly rows*cols uint8 bytes, row-major."""
    raw = _read_file(path)
    if len(raw) != shape.n:
        raise TruncatedFile(f"{path}: {len(raw)} bytes for a {shape} image ({shape.n})")
    return np.frombuffer(raw, dtype=np.uint8).copy()


def quantize_pgm(measure: GridMeasure, gamma: float = 1.0) -> np.ndarray:
    """Pixel image of a measure: round(255 * (mass / max)^gamma), uint8."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    img = measure.as_image()
    scaled = (img / img.max()) ** gamma
    return np.round(255.0 * scaled).astype(np.uint8)


def write_pgm(measure: GridMeasure, path, gamma: float = 1.0) -> None:
    """Binary PGM (P5, maxval 255) render of a measure."""
    pixels = quantize_pgm(measure, gamma)
    rows, cols = measure.shape.rows, measure.shape.cols
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    _write_file(path, header + pixels.tobytes())


def read_pgm(path) -> tuple[GridShape, np.ndarray]:
    """Parse a binary PGM; returns the grid shape and flat uint8 pixels.

    Raises:
        BadMagic: not a P5 file.
        TruncatedFile: fewer pixel bytes than the header declares.
        IoError: malformed header or unsupported maxval.
    """
    raw = _read_file(path)
    if raw[:2] != b"P5":
        raise BadMagic(f"{path}: not a binary PGM (P5) file")
    pos, tokens = 2, []
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise IoError(f"{path}: malformed PGM header")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        cols, rows, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise IoError(f"{path}: non-numeric PGM header fields") from exc
    if maxval != 255:
        raise IoError(f"{path}: only maxval 255 supported, got {maxval}")
    if len(raw) - pos < rows * cols:
        raise TruncatedFile(f"{path}: {len(raw) - pos} pixel bytes for {rows}x{cols}")
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=pos, count=rows * cols).copy()
    return GridShape(rows, cols), pixels


def save_dictionary(dictionary: Dictionary, path) -> None:
    """Serialize atoms as OTDICT01: u32 n, u32 m, column-major float64."""
    n, m = dictionary.atom_dim, dictionary.atom_count
    payload = DICT_MAGIC + struct.pack("<II", n, m)
    payload += dictionary.atoms.astype("<f8").tobytes(order="F")
    _write_file(path, payload)


def load_dictionary(path) -> Dictionary:
    """Read an OTDICT01 dictionary file.

    Raises:
        BadMagic: wrong magic.
        TruncatedFile: shorter than the declared atom matrix.
    """
    raw = _read_file(path)
    if len(raw) < 16 or raw[:8] != DICT_MAGIC:
        raise BadMagic(f"{path}: not an OTDICT01 file")
    n, m = struct.unpack("<II", raw[8:16])
    expected = 16 + 8 * n * m
    if len(raw) < expected:
        raise TruncatedFile(f"{path}: {len(raw)} bytes, need {expected} for {n}x{m}")
    atoms = np.frombuffer(raw, dtype="<f8", offset=16, count=n * m)
    return Dictionary(atoms.reshape((n, m), order="F"))


# -- metrics / report format -------------------------------------------------


def format_metrics(report) -> str:
    """Flat key=value rendering of a TransitionReport, one field per line."""
    steps = ",".join(_FLOAT_FMT % s for s in report.per_step_distances)
    lines = [
        "regularity=" + _FLOAT_FMT % report.regularity,
        "total_distance=" + _FLOAT_FMT % report.total_distance,
        "manifold_distance=" + _FLOAT_FMT % report.manifold_distance,
        "per_step_distances=" + steps,
        "all_converged=" + ("true" if report.all_converged else "false"),
    ]
    return "\n".join(lines) + "\n"


def parse_metrics(text: str) -> dict:
    """Inverse of format_metrics; values parsed to floats/lists/bools."""
    out: dict = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise IoError(f"malformed metrics line: {line!r}")
        key, value = line.split("=", 1)
        if key == "per_step_distances":
            out[key] = [float(v) for v in value.split(",")] if value else []
        elif key == "all_converged":
            out[key] = value == "true"
        else:
            out[key] = float(value)
    return out


# -- run configuration -------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a CLI run in one place.

    ``stop_tol=None`` and ``noise_sigma=None`` mean the owning modules'
    adaptive defaults; ``fixed_iters=None`` keeps the ADMM stopping rule.
    """

    epsilon: float = 2e-3
    mu: float = 0.05
    stop_tol: float | None = None
    max_outer_iters: int = 20
    fixed_iters: int | None = None
    n_frames: int = 5
    sparsity: int = 12
    atoms: int = 256
    mmse_passes: int = 10
    noise_sigma: float | None = None
    seed: int = 0

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        """Build from a key/value mapping; unknown keys are rejected."""
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(mapping) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        coerced = {}
        int_fields = {"max_outer_iters", "fixed_iters", "n_frames", "sparsity",
                      "atoms", "mmse_passes", "seed"}
        for key, value in mapping.items():
            if value is None or (isinstance(value, str) and value == "none"):
                coerced[key] = None
                continue
            try:
                coerced[key] = int(value) if key in int_fields else float(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
        return cls(**coerced)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        """Key=value text file, # comments and blank lines allowed."""
        try:
            text = _read_file(path).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"{path}: not a text config file") from exc
        mapping: dict = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            mapping[key] = value
        return cls.from_mapping(mapping)

    def override(self, **kwargs) -> "RunConfig":
        """Copy with the given non-None fields replaced."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates)
