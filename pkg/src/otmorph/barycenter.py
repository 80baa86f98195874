"""Weighted entropic Wasserstein barycenters on pixel grids.

Two solvers live here.  ``entropic_barycenter`` runs iterative Bregman
projections in scaling-vector form, which is fast because every step is a
kernel convolution.  ``prox_barycenter_step`` minimizes the same objective
plus a quadratic proximal term; the quadratic breaks the pure scaling
structure, so that solver is mirror descent on the simplex driven by the
dual potentials of each transport subproblem.

All barycenter iterations run in the log domain so point masses and tiny
entropic weights stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputs, NegativeInput, ShapeMismatch, StepNotPositive
from .kernels import GibbsKernel, _logsumexp
from .measures import MASS_FLOOR, GridMeasure, GroundCost, floored_image
from .transport import centered_second_potential, sinkhorn

DEFAULT_BARY_ITERS = 1000
DEFAULT_BARY_TOL = 1e-8

#: Mirror-descent defaults: unit initial step, halved on objective increase
#: and doubled after every accepted move, so the step self-tunes to the
#: objective's curvature scale (potential gradients are O(eps), so useful
#: steps are O(1/eps); a fixed unit step would crawl).
DEFAULT_INNER_ITERS = 300
DEFAULT_STEP = 1.0
_STEP_CAP = 1e12

#: Sinkhorn budget per objective/gradient evaluation inside the prox step.
#: The tolerance is tight because the line search compares objective values
#: whose differences shrink to ~1e-8 near the optimum; loose solves stall
#: it.  Warm-starting from the previous iterate keeps this affordable.
PROX_SINKHORN_ITERS = 1000
PROX_SINKHORN_TOL = 1e-8

_WEIGHT_SUM_TOL = 1e-12
_REL_DECREASE_TOL = 1e-7
_MIN_STEP = 1e-12


@dataclass(frozen=True)
class BarycenterWeights:
    """Convex weights of a weighted barycenter, one per input measure."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if w.size == 0:
            raise EmptyInputs("need at least one weight")
        if np.any(w < 0):
            raise NegativeInput("barycenter weights must be non-negative")
        if abs(w.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def pair(cls, alpha: float) -> "BarycenterWeights":
        """Two-input weights (1 - alpha, alpha); alpha is progress toward
        the second input."""
        return cls(np.array([1.0 - alpha, alpha]))

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class ProxTerm:
    """Quadratic proximal term (mu/2) * ||target - q||^2; mu = 0 disables it."""

    target: np.ndarray
    mu: float

    def __post_init__(self):
        t = np.asarray(self.target, dtype=np.float64).ravel()
        t.setflags(write=False)
        object.__setattr__(self, "target", t)
        if self.mu < 0:
            raise NegativeInput(f"mu must be non-negative, got {self.mu}")


def _check_inputs(inputs, weights, cost):
    if len(inputs) == 0:
        raise EmptyInputs("need at least one input measure")
    if len(weights) != len(inputs):
        raise ShapeMismatch(
            f"{len(weights)} weights for {len(inputs)} input measures"
        )
    shape = inputs[0].shape
    for p in inputs[1:]:
        if p.shape != shape:
            raise ShapeMismatch(f"mixed input shapes {shape} and {p.shape}")
    if cost.shape != shape:
        raise ShapeMismatch(f"cost defined on {cost.shape}, inputs on {shape}")
    return shape


def _log_geometric_mean(log_p: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted geometric mean of measures given as stacked log images,
    renormalized to the simplex in log space."""
    log_bar = np.einsum("k,k...->...", w, log_p)
    return log_bar - _logsumexp(log_bar.reshape(-1), axis=0)


def entropic_barycenter(
    inputs: list[GridMeasure],
    weights: BarycenterWeights,
    cost: GroundCost,
    max_iters: int = DEFAULT_BARY_ITERS,
    tol: float = DEFAULT_BARY_TOL,
) -> GridMeasure:
    """Weighted entropic barycenter by iterative Bregman projections.

    Scaling-vector form: each pass fits every transport plan's first
    marginal to its input, then recombines the implied second marginals by
    a weighted geometric mean.  Stops when successive iterates differ by
    less than ``tol`` in L1, or after ``max_iters`` passes.

    Raises:
        EmptyInputs: no input measures.
        ShapeMismatch: inputs, weights, and cost disagree.
    """
    shape = _check_inputs(inputs, weights, cost)
    w = weights.weights
    kernel = GibbsKernel(cost)
    log_p = np.log(np.stack([floored_image(p) for p in inputs]))
    log_bar = _log_geometric_mean(log_p, w)
    log_v = np.zeros_like(log_p)
    prev = np.exp(log_bar)
    for _ in range(max_iters):
        log_kv = kernel.apply_log(log_v)
        log_ku = kernel.apply_log(log_p - log_kv)
        log_bar = _log_geometric_mean(log_ku, w)
        log_v = log_bar[None] - log_ku
        cur = np.exp(log_bar)
        err = float(np.abs(cur - prev).sum())
        prev = cur
        if err < tol:
            break
    mass = prev.ravel()
    return GridMeasure(shape, mass / mass.sum())


def prox_barycenter_step(
    inputs: list[GridMeasure],
    weights: BarycenterWeights,
    prox: ProxTerm,
    cost: GroundCost,
    inner_iters: int = DEFAULT_INNER_ITERS,
    step: float = DEFAULT_STEP,
    history: list | None = None,
    sinkhorn_iters: int = PROX_SINKHORN_ITERS,
    sinkhorn_tol: float = PROX_SINKHORN_TOL,
) -> GridMeasure:
    """Approximate minimizer of the prox-regularized barycenter objective.

    Objective over the simplex:
        sum_i w_i W_eps(p_i, q) + (prox.mu / 2) * ||prox.target - q||^2

    Mirror descent: the gradient of each transport term with respect to q
    is its centered second potential; the multiplicative update
    ``q <- q * exp(-step * grad)`` (renormalized) stays on the simplex.
    The step is halved whenever the objective would increase and doubled
    after every accepted move, so accepted objective values are
    non-increasing; terminates after ``inner_iters`` accepted steps, when
    the relative decrease drops below 1e-7, or when backtracking bottoms
    out.  Starts from the prox target when mu > 0 (the natural warm point
    for an ADMM q-step), else from the weighted geometric mean of the
    inputs.

    If ``history`` is a list, the objective value at every accepted iterate
    (including the initial one) is appended to it.

    Raises:
        ShapeMismatch: inputs, weights, cost, or prox target disagree.
        StepNotPositive: step <= 0.
    """
    shape = _check_inputs(inputs, weights, cost)
    if prox.target.size != shape.n:
        raise ShapeMismatch(
            f"prox target has length {prox.target.size}, grid has {shape.n}"
        )
    if not step > 0:
        raise StepNotPositive(f"step must be positive, got {step}")
    w = weights.weights
    mu = prox.mu
    target = prox.target

    def solve_all(q, warm=None):
        results = [
            sinkhorn(
                p,
                q,
                cost,
                max_iters=sinkhorn_iters,
                tol=sinkhorn_tol,
                warm_start=None if warm is None else warm[i].potentials,
            )
            for i, p in enumerate(inputs)
        ]
        ot = sum(wi * res.regularized_cost for wi, res in zip(w, results))
        quad = 0.5 * mu * float(np.square(target - q.mass).sum())
        return ot + quad, results

    if mu > 0:
        mass = np.maximum(target, MASS_FLOOR)
    else:
        log_p = np.log(np.stack([floored_image(p) for p in inputs]))
        mass = np.exp(_log_geometric_mean(log_p, w)).ravel()
    q = GridMeasure(shape, mass / mass.sum())
    cur_obj, cur_results = solve_all(q)
    if history is not None:
        history.append(cur_obj)

    step_cur = step
    for _ in range(inner_iters):
        grad = mu * (q.mass - target)
        for wi, res in zip(w, cur_results):
            grad = grad + wi * centered_second_potential(res.potentials, cost)
        accepted = False
        while step_cur >= _MIN_STEP:
            log_q = np.log(q.mass) - step_cur * grad
            log_q -= _logsumexp(log_q, axis=0)
            mass = np.maximum(np.exp(log_q), MASS_FLOOR)
            q_new = GridMeasure(shape, mass / mass.sum())
            new_obj, new_results = solve_all(q_new, warm=cur_results)
            if np.isfinite(new_obj) and new_obj <= cur_obj:
                accepted = True
                break
            step_cur *= 0.5
        if not accepted:
            break
        rel = (cur_obj - new_obj) / max(abs(cur_obj), 1e-30)
        q, cur_obj, cur_results = q_new, new_obj, new_results
        if history is not None:
            history.append(cur_obj)
        if rel < _REL_DECREASE_TOL:
            break
        step_cur = min(_STEP_CAP, 2.0 * step_cur)
    return q
