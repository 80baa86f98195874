"""Separable Gibbs kernels for entropic transport on pixel grids.

The squared-Euclidean ground cost on a grid splits into a row part and a
column part, so the n x n Gibbs kernel ``exp(-C/eps)`` is the Kronecker
product of a rows x rows and a cols x cols factor and is never materialized:
applying it to an image costs two 1-D convolutions, O(n * (rows + cols)).

Both a plain (exp-domain) application and a log-domain application built
from per-element logsumexp are provided; the latter stays finite for
arbitrarily small ``eps``.
"""

from __future__ import annotations

import numpy as np

from .measures import GroundCost, axis_cost_matrix


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - m), axis=axis))
    return out + np.squeeze(m, axis=axis)


class GibbsKernel:
    """Kernel ``exp(-C/eps)`` on a grid, applied as two axis convolutions.

    Images are (rows, cols) arrays; a leading batch dimension is accepted
    by every method.  The per-axis factors are symmetric, so no transposes
    are needed.
    """

    def __init__(self, cost: GroundCost):
        self.shape = cost.shape
        self.epsilon = float(cost.epsilon)
        self.row_cost = axis_cost_matrix(cost.shape.rows)
        self.col_cost = axis_cost_matrix(cost.shape.cols)
        self.log_krow = -self.row_cost / self.epsilon
        self.log_kcol = -self.col_cost / self.epsilon
        self.krow = np.exp(self.log_krow)
        self.kcol = np.exp(self.log_kcol)

    # -- exp domain ----------------------------------------------------------

    def apply(self, img: np.ndarray) -> np.ndarray:
        """K @ vec(img), returned as an image; img may be (..., rows, cols)."""
        return self.krow @ img @ self.kcol

    # -- log domain ----------------------------------------------------------

    def apply_log(self, h: np.ndarray) -> np.ndarray:
        """log(K @ exp(vec(h))) as an image, stable for large negative h.

        The max is taken over the combined exponent per output element, so
        the result is exact even when single kernel entries underflow.
        """
        # rows: out1[..., a, c] = lse_b(log_krow[a, b] + h[..., b, c])
        t = self.log_krow[:, :, None] + h[..., None, :, :]
        out1 = _logsumexp(t, axis=-2)
        # cols: out[..., a, d] = lse_c(out1[..., a, c] + log_kcol[c, d])
        t = out1[..., :, None] + self.log_kcol
        return _logsumexp(t, axis=-2)

    # -- transport cost ------------------------------------------------------

    def sharp_cost(self, u: np.ndarray, v: np.ndarray) -> float:
        """<P, C> for the plan diag(u) K diag(v), u and v given as images."""
        s_row = u @ self.kcol @ v.T           # (rows, rows)
        s_col = u.T @ self.krow @ v           # (cols, cols)
        term_row = np.sum(self.row_cost * self.krow * s_row)
        term_col = np.sum(self.col_cost * self.kcol * s_col)
        return float(term_row + term_col)

    def sharp_cost_log(self, phi: np.ndarray, psi: np.ndarray) -> float:
        """<P, C> for log P = phi_i + psi_j - C_ij/eps, potentials as images."""
        term = 0.0
        for a_cost, a_logk, b_logk, p1, p2 in (
            (self.row_cost, self.log_krow, self.log_kcol, phi, psi),
            (self.col_cost, self.log_kcol, self.log_krow, phi.T, psi.T),
        ):
            # inner[a, c'] = lse_c(p1[a, c] + b_logk[c, c'])
            inner = _logsumexp(p1[:, :, None] + b_logk, axis=1)
            # log_w[a, a'] = lse_c'(inner[a, c'] + p2[a', c'])
            log_w = _logsumexp(inner[:, None, :] + p2[None, :, :], axis=2)
            term += np.sum(a_cost * np.exp(a_logk + log_w))
        return float(term)

    def plan_total_mass_log(self, phi: np.ndarray, psi: np.ndarray) -> float:
        """Sum of all plan entries for log-domain potentials."""
        row_marginal = np.exp(phi + self.apply_log(psi))
        return float(row_marginal.sum())
