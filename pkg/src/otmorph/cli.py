"""Command-line interface.

Subcommands: learn-dict, morph, barycenter4, distance, evaluate.  Exit
codes: 0 success (numerical non-convergence only warns on stderr), 2 usage
or parameter errors, 3 file/data errors, 4 external-projector protocol
errors.

Image arguments accept three forms: a binary PGM path, ``file.idx:N``
for image N of an IDX set, and ``file.raw:RxC`` for raw grayscale bytes.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from .admm import AdmmConfig
from .errors import (
    AllZeroInput,
    BadMagic,
    ConfigError,
    IoError,
    NegativeInput,
    OtmorphError,
    ProcessUnavailable,
    ProtocolViolation,
    ShapeMismatch,
    SparsityOutOfRange,
    Timeout,
    TooFewSamples,
    TruncatedFile,
)
from .io import (
    RunConfig,
    format_metrics,
    load_dictionary,
    load_idx,
    load_raw,
    read_pgm,
    save_dictionary,
    write_pgm,
)
from .measures import GridMeasure, GridShape, GroundCost, normalize_to_measure
from .morph import MorphSequence, evaluate, morph, morph4
from .priors import ExternalProjector, IdentityProjector, Projector, SparseProjector
from .sparse import learn_dictionary
from .transport import DEFAULT_MAX_ITERS, sinkhorn

MAX_DEFAULT_SIDE = 64

_RAW_SUFFIX = re.compile(r"^(\d+)x(\d+)$")


class UsageError(Exception):
    pass


def _check_size(shape: GridShape, allow_large: bool) -> None:
    if not allow_large and (shape.rows > MAX_DEFAULT_SIDE or shape.cols > MAX_DEFAULT_SIDE):
        raise UsageError(
            f"image is {shape.rows}x{shape.cols}, larger than "
            f"{MAX_DEFAULT_SIDE}x{MAX_DEFAULT_SIDE}; pass --allow-large to override"
        )


def load_measure_arg(arg: str, allow_large: bool = False) -> GridMeasure:
    """Image argument to measure; see module docstring for accepted forms."""
    path_part, sep, suffix = arg.rpartition(":")
    if sep and suffix.isdigit() and Path(path_part).exists():
        dataset = load_idx(path_part)
        _check_size(dataset.shape, allow_large)
        index = int(suffix)
        if index >= dataset.count:
            raise UsageError(f"{path_part} has {dataset.count} images, asked for {index}")
        return dataset.measure(index)
    raw_match = _RAW_SUFFIX.match(suffix) if sep else None
    if raw_match and Path(path_part).exists():
        shape = GridShape(int(raw_match.group(1)), int(raw_match.group(2)))
        _check_size(shape, allow_large)
        pixels = load_raw(path_part, shape)
        return normalize_to_measure(pixels.astype(np.float64), shape)
    shape, pixels = read_pgm(arg)
    _check_size(shape, allow_large)
    return normalize_to_measure(pixels.astype(np.float64), shape)


def _run_config(args) -> RunConfig:
    base = RunConfig.from_file(args.config) if args.config else RunConfig()
    return base.override(
        epsilon=args.epsilon,
        mu=args.mu,
        stop_tol=args.stop_tol,
        max_outer_iters=args.max_outer_iters,
        fixed_iters=args.fixed_iters,
        sparsity=args.sparsity,
        mmse_passes=args.mmse_passes,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )


def _admm_config(cfg: RunConfig) -> AdmmConfig:
    return AdmmConfig(
        mu=cfg.mu,
        stop_tol=cfg.stop_tol,
        max_outer_iters=cfg.max_outer_iters,
        fixed_iters=cfg.fixed_iters,
    )


def build_projector(prior: str, cfg: RunConfig) -> Projector:
    """Projector from a --prior value: none, sparse:<dict>, external:<cmd>."""
    if prior == "none":
        return IdentityProjector()
    kind, sep, rest = prior.partition(":")
    if not sep or not rest:
        raise UsageError(f"bad --prior {prior!r}; use none, sparse:<dict>, external:<cmd>")
    if kind == "sparse":
        return SparseProjector(
            load_dictionary(rest),
            k=cfg.sparsity,
            mmse_passes=cfg.mmse_passes,
            noise_sigma=cfg.noise_sigma,
            seed=cfg.seed,
        )
    if kind == "external":
        return ExternalProjector(rest)
    raise UsageError(f"unknown prior kind {kind!r}; use none, sparse, external")


def _warn_unconverged(converged: bool) -> None:
    if not converged:
        print("warning: some transport solves did not converge", file=sys.stderr)


def _frame_files(directory: Path) -> list[Path]:
    files = sorted(directory.glob("frame_*.pgm"))
    if len(files) < 2:
        raise UsageError(f"{directory} holds {len(files)} frame_*.pgm files, need >= 2")
    return files


def _load_frames(files: list[Path], allow_large: bool) -> list[GridMeasure]:
    frames = []
    for f in files:
        shape, pixels = read_pgm(f)
        _check_size(shape, allow_large)
        frames.append(normalize_to_measure(pixels.astype(np.float64), shape))
    return frames


def _sequence_report(
    frames: list[GridMeasure], projector: Projector, cfg: RunConfig, tol: float
):
    alphas = tuple(i / (len(frames) - 1) for i in range(len(frames)))
    seq = MorphSequence(tuple(frames), alphas, "external-interpolation")
    cost = GroundCost(frames[0].shape, cfg.epsilon)
    return evaluate(seq, cost, projector, sinkhorn_tol=tol)


# -- subcommands -------------------------------------------------------------


def cmd_learn_dict(args) -> int:
    cfg = _run_config(args)
    dataset = load_idx(args.idx)
    _check_size(dataset.shape, args.allow_large)
    pixels = dataset.pixels.astype(np.float64)
    sums = pixels.sum(axis=1)
    samples = pixels[sums > 0] / sums[sums > 0, None]
    if args.limit:
        samples = samples[: args.limit]
    atoms = args.atoms if args.atoms is not None else cfg.atoms
    dictionary = learn_dictionary(
        samples, m=atoms, k=cfg.sparsity, epochs=args.epochs, seed=cfg.seed
    )
    save_dictionary(dictionary, args.out)
    print(f"wrote {atoms} atoms of dimension {dictionary.atom_dim} to {args.out}")
    return 0


def cmd_morph(args) -> int:
    cfg = _run_config(args)
    a = load_measure_arg(args.a, args.allow_large)
    b = load_measure_arg(args.b, args.allow_large)
    if a.shape != b.shape:
        raise UsageError(f"--a is {a.shape}, --b is {b.shape}; shapes must match")
    projector = build_projector(args.prior, cfg)
    cost = GroundCost(a.shape, cfg.epsilon)
    seq = morph(
        a, b, args.frames, projector, cost, _admm_config(cfg), jobs=args.jobs
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for i, frame in enumerate(seq.frames):
        path = out_dir / f"frame_{i:03d}.pgm"
        write_pgm(frame, path, gamma=args.gamma)
        files.append(path)
    # metrics are computed from the quantized frames on disk, so a later
    # `evaluate` over the output directory reproduces them byte for byte
    frames = _load_frames(files, args.allow_large)
    report = _sequence_report(frames, projector, cfg, args.tol)
    (out_dir / "report.txt").write_text(format_metrics(report))
    _warn_unconverged(report.all_converged)
    print(f"wrote {len(files)} frames and report.txt to {out_dir}")
    return 0


def cmd_barycenter4(args) -> int:
    cfg = _run_config(args)
    corners = [load_measure_arg(s, args.allow_large) for s in args.images]
    shape = corners[0].shape
    for c in corners[1:]:
        if c.shape != shape:
            raise UsageError(f"corner shapes differ: {shape} vs {c.shape}")
    projector = build_projector(args.prior, cfg)
    cost = GroundCost(shape, cfg.epsilon)
    lattice = morph4(
        corners, args.steps, projector, cost, _admm_config(cfg), jobs=args.jobs
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for i, row in enumerate(lattice):
        for j, cell in enumerate(row):
            write_pgm(cell, out_dir / f"cell_{i}_{j}.pgm", gamma=args.gamma)
            count += 1
    print(f"wrote {count} lattice cells to {out_dir}")
    return 0


def cmd_distance(args) -> int:
    cfg = _run_config(args)
    a = load_measure_arg(args.a, args.allow_large)
    b = load_measure_arg(args.b, args.allow_large)
    if a.shape != b.shape:
        raise UsageError(f"--a is {a.shape}, --b is {b.shape}; shapes must match")
    cost = GroundCost(a.shape, cfg.epsilon)
    res = sinkhorn(a, b, cost, max_iters=DEFAULT_MAX_ITERS, tol=args.tol)
    print("sharp_cost=%.17g" % res.cost)
    print("regularized_cost=%.17g" % res.regularized_cost)
    print("converged=%s" % ("true" if res.potentials.converged else "false"))
    _warn_unconverged(res.potentials.converged)
    return 0


def cmd_evaluate(args) -> int:
    cfg = _run_config(args)
    projector = build_projector(args.prior, cfg)
    files = _frame_files(Path(args.frames))
    frames = _load_frames(files, args.allow_large)
    report = _sequence_report(frames, projector, cfg, args.tol)
    sys.stdout.write(format_metrics(report))
    _warn_unconverged(report.all_converged)
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    num = common.add_argument_group("numerics")
    num.add_argument("--epsilon", type=float, help="entropic regularization weight")
    num.add_argument("--mu", type=float, help="ADMM quadratic penalty")
    num.add_argument("--tol", type=float, default=1e-6, help="transport marginal tolerance")
    num.add_argument("--stop-tol", type=float, help="ADMM stopping threshold")
    num.add_argument("--fixed-iters", type=int, help="run exactly this many outer iterations")
    num.add_argument("--max-outer-iters", type=int, help="outer iteration cap")
    num.add_argument("--seed", type=int, help="seed for all stochastic parts")
    num.add_argument("--sparsity", type=int, help="atoms per sparse code")
    num.add_argument("--mmse-passes", type=int, help="stochastic resonance passes")
    num.add_argument("--noise-sigma", type=float, help="stochastic resonance noise level")
    common.add_argument("--config", help="key=value config file with RunConfig fields")
    common.add_argument("--jobs", type=int, default=1, help="parallel frame computations")
    common.add_argument("--allow-large", action="store_true",
                        help="accept images larger than 64x64")

    parser = argparse.ArgumentParser(
        prog="otmorph",
        description="Wasserstein-barycenter image morphing with manifold priors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn-dict", parents=[common],
                       help="learn a sparse-coding dictionary from an IDX image set")
    p.add_argument("--idx", required=True, help="IDX image file")
    p.add_argument("--atoms", type=int, help="dictionary size m")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--limit", type=int, default=0, help="use only the first N images")
    p.add_argument("--out", required=True, help="output dictionary file")
    p.set_defaults(func=cmd_learn_dict)

    p = sub.add_parser("morph", parents=[common],
                       help="morph between two images through constrained barycenters")
    p.add_argument("--a", required=True, help="first image")
    p.add_argument("--b", required=True, help="second image")
    p.add_argument("--frames", type=int, required=True, help="in-between frame count N")
    p.add_argument("--prior", default="none", help="none | sparse:<dict> | external:<cmd>")
    p.add_argument("--gamma", type=float, default=1.0, help="PGM display gamma")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_morph)

    p = sub.add_parser("barycenter4", parents=[common],
                       help="bilinear barycenter lattice between four images")
    p.add_argument("--images", nargs=4, required=True, metavar="IMG")
    p.add_argument("--steps", type=int, required=True, help="lattice side length")
    p.add_argument("--prior", default="none")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_barycenter4)

    p = sub.add_parser("distance", parents=[common],
                       help="entropic transport cost between two images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("evaluate", parents=[common],
                       help="transition metrics of a frame directory")
    p.add_argument("--frames", required=True, help="directory with frame_*.pgm")
    p.add_argument("--prior", default="none")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, ShapeMismatch, SparsityOutOfRange,
            TooFewSamples, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ProcessUnavailable, ProtocolViolation, Timeout) as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return 4
    except (BadMagic, TruncatedFile, IoError, AllZeroInput, NegativeInput,
            OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except OtmorphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
