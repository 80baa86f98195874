"""Morphing sequences between images and their quality metrics.

A morph is a sequence of constrained barycenters along a linear weight
schedule between two endpoint measures (or a bilinear schedule between
four).  A transition report summarizes the sequence by three numbers:
regularity (how steady the per-step distances are), total distance (how
direct the path is), and distance to the manifold (how well frames
respect the prior).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .admm import AdmmConfig, constrained_barycenter
from .barycenter import BarycenterWeights
from .errors import ShapeMismatch
from .measures import GridMeasure, GroundCost
from .priors import Projector
from .transport import DEFAULT_MAX_ITERS, DEFAULT_TOL, sinkhorn

_ALPHA_TOL = 1e-12


@dataclass(frozen=True)
class MorphSequence:
    """Ordered frames including both endpoints, with their schedule."""

    frames: tuple[GridMeasure, ...]
    alphas: tuple[float, ...]
    method: str

    def __post_init__(self):
        frames = tuple(self.frames)
        alphas = tuple(float(a) for a in self.alphas)
        if len(frames) != len(alphas):
            raise ValueError(f"{len(frames)} frames for {len(alphas)} alphas")
        if len(frames) < 2:
            raise ValueError("a sequence needs at least both endpoints")
        if abs(alphas[0]) > _ALPHA_TOL or abs(alphas[-1] - 1.0) > _ALPHA_TOL:
            raise ValueError(f"alphas must run from 0 to 1, got {alphas}")
        if any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError(f"alphas must be strictly increasing, got {alphas}")
        shape = frames[0].shape
        for f in frames[1:]:
            if f.shape != shape:
                raise ShapeMismatch(f"mixed frame shapes {shape} and {f.shape}")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "alphas", alphas)

    def reversed(self) -> "MorphSequence":
        return MorphSequence(
            frames=self.frames[::-1],
            alphas=tuple(1.0 - a for a in self.alphas[::-1]),
            method=self.method,
        )


@dataclass(frozen=True)
class TransitionReport:
    """Sequence metrics; regularity and total_distance are the population
    standard deviation and mean of per_step_distances."""

    regularity: float
    total_distance: float
    manifold_distance: float
    per_step_distances: tuple[float, ...]
    all_converged: bool = True

    @classmethod
    def from_distances(
        cls,
        per_step: list[float],
        manifold_distance: float,
        all_converged: bool = True,
    ) -> "TransitionReport":
        steps = np.asarray(per_step, dtype=np.float64)
        return cls(
            regularity=float(np.std(steps)),
            total_distance=float(np.mean(steps)),
            manifold_distance=float(manifold_distance),
            per_step_distances=tuple(float(s) for s in steps),
            all_converged=all_converged,
        )


def morph_alphas(n_frames: int) -> list[float]:
    """Schedule 0, 1/(N+1), ..., N/(N+1), 1 for N in-between frames."""
    if n_frames < 1:
        raise ValueError(f"n_frames must be >= 1, got {n_frames}")
    return [i / (n_frames + 1) for i in range(n_frames + 2)]


def morph(
    x1: GridMeasure,
    x2: GridMeasure,
    n_frames: int,
    projector: Projector,
    cost: GroundCost,
    config: AdmmConfig = AdmmConfig(),
    jobs: int = 1,
) -> MorphSequence:
    """Constrained-barycenter morph from ``x1`` to ``x2``.

    Computes one constrained barycenter per interior schedule point
    alpha_i = i/(N+1) with weights (1 - alpha_i, alpha_i); the endpoints
    are passed through verbatim.  Frames are independent of each other, so
    ``jobs`` > 1 computes them concurrently without changing the result.
    """
    alphas = morph_alphas(n_frames)
    inputs = [x1, x2]

    def frame(alpha: float) -> GridMeasure:
        out, _ = constrained_barycenter(
            inputs, BarycenterWeights.pair(alpha), projector, cost, config
        )
        return out

    interior = alphas[1:-1]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            middles = list(pool.map(frame, interior))
    else:
        middles = [frame(a) for a in interior]
    return MorphSequence(
        frames=(x1, *middles, x2),
        alphas=tuple(alphas),
        method="constrained" if projector.kind != "identity" else "unconstrained",
    )


def bilinear_weights(a: float, b: float) -> np.ndarray:
    """Corner weights ((1-a)(1-b), a(1-b), (1-a)b, ab) at lattice point (a, b)."""
    return np.array([(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b])


def morph4(
    corners: list[GridMeasure],
    grid_steps: int,
    projector: Projector,
    cost: GroundCost,
    config: AdmmConfig = AdmmConfig(),
    jobs: int = 1,
) -> list[list[GridMeasure]]:
    """Bilinear barycenter lattice between four corner measures.

    Cell (i, j) of the grid_steps x grid_steps result uses weights
    ((1-a)(1-b), a(1-b), (1-a)b, ab) with a = i/(g-1), b = j/(g-1); the
    four lattice corners return the corner measures verbatim.
    """
    if len(corners) != 4:
        raise ValueError(f"need exactly 4 corner measures, got {len(corners)}")
    if grid_steps < 2:
        raise ValueError(f"grid_steps must be >= 2, got {grid_steps}")
    ticks = [i / (grid_steps - 1) for i in range(grid_steps)]

    def cell(ab: tuple[float, float]) -> GridMeasure:
        a, b = ab
        if (a, b) == (0.0, 0.0):
            return corners[0]
        if (a, b) == (1.0, 0.0):
            return corners[1]
        if (a, b) == (0.0, 1.0):
            return corners[2]
        if (a, b) == (1.0, 1.0):
            return corners[3]
        weights = BarycenterWeights(bilinear_weights(a, b))
        out, _ = constrained_barycenter(corners, weights, projector, cost, config)
        return out

    coords = [(a, b) for a in ticks for b in ticks]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            flat = list(pool.map(cell, coords))
    else:
        flat = [cell(ab) for ab in coords]
    return [flat[i * grid_steps : (i + 1) * grid_steps] for i in range(grid_steps)]


def _canonical_pair(a: GridMeasure, b: GridMeasure) -> tuple[GridMeasure, GridMeasure]:
    # fixed order per unordered pair, so a reversed sequence produces the
    # exact same list of transport solves
    if a.mass.tobytes() <= b.mass.tobytes():
        return a, b
    return b, a


def evaluate(
    seq: MorphSequence,
    cost: GroundCost,
    projector: Projector,
    sinkhorn_iters: int = DEFAULT_MAX_ITERS,
    sinkhorn_tol: float = DEFAULT_TOL,
) -> TransitionReport:
    """Transition metrics of a frame sequence.

    Per-step distance is the square root of the sharp transport cost
    between successive frames; regularity and total_distance are the
    population standard deviation and the mean of those.  The manifold
    distance is the mean L2 residual between each frame and its projection
    under ``projector``.  Any non-converged transport solve clears
    ``all_converged`` instead of raising.
    """
    per_step = []
    all_converged = True
    for a, b in zip(seq.frames, seq.frames[1:]):
        first, second = _canonical_pair(a, b)
        res = sinkhorn(first, second, cost, max_iters=sinkhorn_iters, tol=sinkhorn_tol)
        all_converged = all_converged and res.potentials.converged
        per_step.append(float(np.sqrt(max(res.cost, 0.0))))
    residuals = [projector.residual(f.mass) for f in seq.frames]
    return TransitionReport.from_distances(
        per_step,
        manifold_distance=float(np.mean(residuals)),
        all_converged=all_converged,
    )
