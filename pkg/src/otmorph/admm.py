"""Constrained Wasserstein barycenters by ADMM splitting.

The barycenter variable q and the on-manifold variable r are split and
coupled through a scaled dual vector u; each outer iteration solves the
prox-regularized barycenter subproblem for q, projects q - u onto the
manifold for r, and updates u with the residual.  The on-manifold iterate
r is the returned solution.

Only (r, u) carry information across iterations, so a run can be resumed
from a saved state and reproduces an uninterrupted run bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .barycenter import (
    BarycenterWeights,
    ProxTerm,
    entropic_barycenter,
    prox_barycenter_step,
)
from .errors import InconsistentState
from .measures import GridMeasure, GroundCost
from .priors import Projector

DEFAULT_MU = 0.05
DEFAULT_MAX_OUTER_ITERS = 20

#: Default stopping threshold per pixel; the Euclidean norm of the split
#: residual is compared against this times sqrt(n).
DEFAULT_STOP_TOL_PER_PIXEL = 1e-4


@dataclass(frozen=True)
class AdmmConfig:
    """Outer-loop parameters.

    ``stop_tol=None`` means the default 1e-4 * sqrt(n), resolved against
    the grid at run time.  ``fixed_iters``, when set, disables the stopping
    rule and runs exactly that many iterations.
    """

    mu: float = DEFAULT_MU
    stop_tol: float | None = None
    max_outer_iters: int = DEFAULT_MAX_OUTER_ITERS
    fixed_iters: int | None = None
    inner_iters: int = 300

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.stop_tol is not None and not self.stop_tol > 0:
            raise ValueError(f"stop_tol must be positive, got {self.stop_tol}")
        if self.fixed_iters is not None and self.fixed_iters < 1:
            raise ValueError(f"fixed_iters must be >= 1, got {self.fixed_iters}")

    def resolved_stop_tol(self, n: int) -> float:
        if self.stop_tol is not None:
            return self.stop_tol
        return DEFAULT_STOP_TOL_PER_PIXEL * math.sqrt(n)


@dataclass(frozen=True)
class AdmmState:
    """Full iteration state; ``r`` is the on-manifold iterate returned to
    callers, ``residual_history`` holds ||q - r||_2 per outer iteration."""

    q: GridMeasure
    r: GridMeasure
    u: np.ndarray
    outer_iter: int
    residual_history: tuple[float, ...]
    converged: bool

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64).ravel()
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "residual_history", tuple(self.residual_history))

    def validate(self) -> None:
        if self.q.shape != self.r.shape:
            raise InconsistentState(
                f"q on {self.q.shape}, r on {self.r.shape}"
            )
        if self.u.size != self.q.shape.n:
            raise InconsistentState(
                f"dual vector has length {self.u.size}, grid has {self.q.shape.n}"
            )
        if not np.isfinite(self.u).all():
            raise InconsistentState("dual vector has non-finite entries")
        if len(self.residual_history) != self.outer_iter:
            raise InconsistentState(
                f"{len(self.residual_history)} residuals recorded for "
                f"{self.outer_iter} iterations"
            )


def _iterate(
    inputs: list[GridMeasure],
    weights: BarycenterWeights,
    projector: Projector,
    cost: GroundCost,
    config: AdmmConfig,
    state: AdmmState,
) -> AdmmState:
    """Run up to one budget of outer iterations from ``state``."""
    shape = state.r.shape
    stop_tol = config.resolved_stop_tol(shape.n)
    budget = config.fixed_iters if config.fixed_iters is not None else config.max_outer_iters
    q, r, u = state.q, state.r, np.array(state.u)
    history = list(state.residual_history)
    outer = state.outer_iter
    converged = state.converged
    for _ in range(budget):
        q = prox_barycenter_step(
            inputs,
            weights,
            ProxTerm(r.mass + u, config.mu),
            cost,
            inner_iters=config.inner_iters,
        )
        r = GridMeasure(shape, projector.project(q.mass - u))
        u = u + r.mass - q.mass
        residual = float(np.linalg.norm(q.mass - r.mass))
        history.append(residual)
        outer += 1
        if config.fixed_iters is None and residual < stop_tol:
            converged = True
            break
    return AdmmState(
        q=q,
        r=r,
        u=u,
        outer_iter=outer,
        residual_history=tuple(history),
        converged=converged,
    )


def constrained_barycenter(
    inputs: list[GridMeasure],
    weights: BarycenterWeights,
    projector: Projector,
    cost: GroundCost,
    config: AdmmConfig = AdmmConfig(),
) -> tuple[GridMeasure, AdmmState]:
    """Weighted barycenter constrained to the projector's manifold.

    Initializes q and r at the unconstrained entropic barycenter with a
    zero dual, then alternates prox step, projection, and dual update.
    Stops when ||q - r||_2 drops below the configured threshold, after
    ``fixed_iters`` iterations if that is set, or at ``max_outer_iters``.
    Non-convergence is reported through the state, never raised.

    Returns the final on-manifold iterate r and the full state.
    """
    q0 = entropic_barycenter(inputs, weights, cost)
    state = AdmmState(
        q=q0,
        r=q0,
        u=np.zeros(q0.shape.n),
        outer_iter=0,
        residual_history=(),
        converged=False,
    )
    state = _iterate(inputs, weights, projector, cost, config, state)
    return state.r, state


def resume(
    state: AdmmState,
    inputs: list[GridMeasure],
    weights: BarycenterWeights,
    projector: Projector,
    cost: GroundCost,
    config: AdmmConfig = AdmmConfig(),
) -> tuple[GridMeasure, AdmmState]:
    """Continue a run for one more budget of outer iterations.

    The budget (``fixed_iters`` or ``max_outer_iters``) counts additional
    iterations on top of those already in ``state``.  A run of j iterations
    resumed for k more is bit-identical to a single run of j + k.  If the
    stopping rule is active and already satisfied, returns immediately.

    Raises:
        InconsistentState: if the state is internally inconsistent.
    """
    state.validate()
    if config.fixed_iters is None and state.converged:
        return state.r, state
    if config.fixed_iters is None and config.max_outer_iters == 0:
        return state.r, state
    state = _iterate(inputs, weights, projector, cost, config, state)
    return state.r, state
