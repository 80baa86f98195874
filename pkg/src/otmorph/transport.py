"""Entropic-regularized Wasserstein distances on pixel grids.

``sinkhorn`` runs scaling iterations with the kernel applied as separable
1-D convolutions, switching to log-domain updates when scalings overflow or
the entropic weight is very small.  ``exact_lp_transport`` solves the
underlying linear program exactly for small instances and serves as the
test oracle for the approximate solver.

Reported distances follow the "sharp" convention: ``cost`` is <P, C> at
the entropic-optimal plan, without the entropy term.  The full regularized
objective is exposed alongside it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import InstanceTooLarge, NotConverged, ShapeMismatch
from .kernels import GibbsKernel
from .measures import GridMeasure, GroundCost, floored_image, require_same_shape

DEFAULT_EPSILON = 2e-3
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 10000

#: Below this entropic weight the solver starts directly in the log domain.
LOG_DOMAIN_EPSILON = 1e-3

#: Scaling magnitude that triggers a switch to log-domain updates.
SCALING_LIMIT = 1e30

#: Kernel-application floor; smaller values risk overflow in the next division.
_DENOM_LIMIT = 1e-290

#: Maximum LP oracle size (pixels).
LP_MAX_PIXELS = 256


@dataclass(frozen=True)
class DualPotentials:
    """Dual potentials of one entropic transport problem.

    ``f`` and ``g`` are length-n vectors (row-major pixel order) for the
    first and second marginal; the implied plan is
    ``P_ij = exp((f_i + g_j - C_ij) / epsilon)``.  The gauge is fixed so
    that ``f`` sums to zero.
    """

    f: np.ndarray
    g: np.ndarray
    epsilon: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class TransportResult:
    """Outcome of one entropic transport solve.

    ``cost`` is the sharp transport cost <P, C>; ``regularized_cost`` is
    the full entropic objective <P, C> - eps * H(P).
    """

    cost: float
    regularized_cost: float
    sharp_cost: bool
    potentials: DualPotentials


def sinkhorn(
    p: GridMeasure,
    q: GridMeasure,
    cost: GroundCost,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    warm_start: DualPotentials | None = None,
    log_domain: bool | None = None,
) -> TransportResult:
    """Solve entropic transport between ``p`` and ``q`` by Sinkhorn scaling.

    Iterates alternate marginal fits until the implied plan reproduces the
    first marginal within L1 error ``tol`` (the second is exact after every
    update).  Non-convergence within ``max_iters`` is reported through
    ``potentials.converged``, never raised, so outer loops can proceed with
    best-effort potentials.

    ``warm_start`` seeds the second-marginal scaling from a previous solve
    of a nearby problem; the fixed point is unaffected, only the iteration
    count.

    ``log_domain`` forces the update domain; the default picks standard
    scaling for large epsilon and switches to log-sum-exp updates when the
    scalings grow past float range.

    Raises:
        ShapeMismatch: if the measures or cost disagree on the grid.
    """
    shape = require_same_shape(p, q)
    if cost.shape != shape:
        raise ShapeMismatch(f"cost defined on {cost.shape}, measures on {shape}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    kernel = GibbsKernel(cost)
    a = floored_image(p)
    b = floored_image(q)
    eps = cost.epsilon

    psi0 = np.zeros_like(b)
    if warm_start is not None:
        psi0 = (warm_start.g / eps).reshape(shape.rows, shape.cols)

    phi = psi = None
    u = v = kv = None
    if log_domain is None:
        log_domain = eps < LOG_DOMAIN_EPSILON
    if not log_domain:
        u = np.ones_like(a)
        # clip keeps exp finite; the log-domain guard still covers growth
        v = np.exp(np.clip(psi0, -60.0, 60.0))
        kv = kernel.apply(v)
    else:
        phi = np.zeros_like(a)
        psi = psi0

    converged = False
    it = 0
    log_a = log_b = lkv = None
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        while it < max_iters:
            if not log_domain:
                if (
                    u.max() > SCALING_LIMIT
                    or v.max() > SCALING_LIMIT
                    or kv.min() < _DENOM_LIMIT
                    or not (np.isfinite(u).all() and np.isfinite(v).all())
                ):
                    log_domain = True
                    phi = np.log(u)
                    psi = np.log(v)
                else:
                    u = a / kv
                    v = b / kernel.apply(u)
                    kv = kernel.apply(v)
                    it += 1
                    if np.abs(u * kv - a).sum() < tol:
                        converged = True
                        break
                    continue
            if lkv is None:
                log_a = np.log(a)
                log_b = np.log(b)
                lkv = kernel.apply_log(psi)
            phi = log_a - lkv
            psi = log_b - kernel.apply_log(phi)
            lkv = kernel.apply_log(psi)
            it += 1
            if np.abs(np.exp(phi + lkv) - a).sum() < tol:
                converged = True
                break

    if log_domain:
        sharp = kernel.sharp_cost_log(phi, psi)
        total_mass = float(np.exp(phi + lkv).sum()) if lkv is not None else 1.0
        f_img = eps * phi
        g_img = eps * psi
    else:
        sharp = kernel.sharp_cost(u, v)
        total_mass = float((u * kv).sum())
        f_img = eps * np.log(u)
        g_img = eps * np.log(v)

    regularized = float((f_img * a).sum() + (g_img * b).sum() - eps * total_mass)
    shift = float(f_img.mean())
    f = (f_img - shift).ravel()
    g = (g_img + shift).ravel()
    potentials = DualPotentials(
        f=f, g=g, epsilon=eps, converged=converged, iterations=it
    )
    return TransportResult(
        cost=sharp, regularized_cost=regularized, sharp_cost=True, potentials=potentials
    )


def full_cost_matrix(cost: GroundCost) -> np.ndarray:
    """Dense n x n ground-cost matrix (LP oracle only; O(n^2) memory)."""
    kernel = GibbsKernel(cost)
    rows, cols = cost.shape.rows, cost.shape.cols
    c = kernel.row_cost[:, None, :, None] + kernel.col_cost[None, :, None, :]
    return c.reshape(rows * cols, rows * cols)


def exact_lp_transport(p: GridMeasure, q: GridMeasure, cost: GroundCost) -> float:
    """Optimal transport cost solved exactly as a linear program.

    Test oracle for ``sinkhorn``; deterministic given inputs.  Uses the
    HiGHS simplex solver on the dense formulation, so instances are capped
    at ``LP_MAX_PIXELS`` pixels.

    Raises:
        InstanceTooLarge: if the grid has more than ``LP_MAX_PIXELS`` pixels.
    """
    shape = require_same_shape(p, q)
    n = shape.n
    if n > LP_MAX_PIXELS:
        raise InstanceTooLarge(f"LP oracle limited to {LP_MAX_PIXELS} pixels, got {n}")
    c = full_cost_matrix(cost).ravel()
    eye = sp.eye(n, format="csr")
    ones = np.ones((1, n))
    row_sums = sp.kron(eye, ones, format="csr")
    col_sums = sp.kron(ones, eye, format="csr")
    a_eq = sp.vstack([row_sums, col_sums], format="csr")
    b_eq = np.concatenate([p.mass, q.mass])
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"LP oracle failed: {res.message}")
    return float(res.fun)


def barycentric_displacement(potentials: DualPotentials, cost: GroundCost) -> np.ndarray:
    """Gradient of the entropic cost with respect to its second marginal.

    Returns the second potential ``g`` centered by its mass-weighted mean
    (weights: the implied plan's second marginal), i.e. the first-order
    change of the transport cost along simplex-tangent perturbations.

    Raises:
        NotConverged: if the potentials did not converge.
    """
    if not potentials.converged:
        raise NotConverged("displacement requires converged potentials")
    return centered_second_potential(potentials, cost)


def centered_second_potential(potentials: DualPotentials, cost: GroundCost) -> np.ndarray:
    """As ``barycentric_displacement`` but accepting best-effort potentials."""
    kernel = GibbsKernel(cost)
    shape = cost.shape
    eps = potentials.epsilon
    phi = (potentials.f / eps).reshape(shape.rows, shape.cols)
    psi = (potentials.g / eps).reshape(shape.rows, shape.cols)
    col_marginal = np.exp(psi + kernel.apply_log(phi))
    weights = col_marginal / col_marginal.sum()
    g = potentials.g
    return g - float((weights.ravel() * g).sum())
