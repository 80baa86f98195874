"""Sparse coding machinery for the manifold prior.

The prior manifold is the set of non-negative, k-sparse combinations of
dictionary atoms.  Projection onto it is orthogonal matching pursuit,
optionally averaged over noise-perturbed copies of the input (a stochastic
resonance approximation of the MMSE estimate), then re-projected onto the
probability simplex.

The dictionary itself is learned by minibatch MOD: alternate OMP coding of
shuffled minibatches with a ridge-regularized least-squares update of the
atom matrix on accumulated second-moment statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SparsityOutOfRange, TooFewSamples

BATCH_SIZE = 64

#: Exponential forgetting applied to the accumulated statistics before each
#: batch.  Without it, codes produced by the early (poor) dictionary keep
#: full weight forever and the atoms never converge.
STAT_DECAY = 0.95

#: Defaults for the stochastic-resonance projection; sigma scales with the
#: input's peak so flat inputs are not drowned.
DEFAULT_MMSE_PASSES = 10
DEFAULT_NOISE_SCALE = 0.05

_NORM_TOL = 1e-9
_RIDGE = 1e-8


@dataclass(frozen=True)
class Dictionary:
    """Atom matrix with unit-L2-norm columns, shape (atom_dim, atom_count)."""

    atoms: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] < 1:
            raise ValueError(f"atoms must be a 2-D matrix with m >= 1, got {a.shape}")
        norms = np.linalg.norm(a, axis=0)
        if np.any(np.abs(norms - 1.0) > _NORM_TOL):
            bad = int(np.argmax(np.abs(norms - 1.0)))
            raise ValueError(f"column {bad} has norm {norms[bad]!r}, want 1")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "atoms", a)

    @property
    def atom_dim(self) -> int:
        return self.atoms.shape[0]

    @property
    def atom_count(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class SparseCode:
    """Support indices and matching coefficients of one coded vector."""

    support: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.support, dtype=np.int64).ravel()
        c = np.asarray(self.coefficients, dtype=np.float64).ravel()
        if s.size != c.size:
            raise ValueError(f"{s.size} support indices, {c.size} coefficients")
        if s.size != np.unique(s).size:
            raise ValueError("support indices must be unique")
        s.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "coefficients", c)

    def reconstruct(self, dictionary: Dictionary) -> np.ndarray:
        if self.support.size == 0:
            return np.zeros(dictionary.atom_dim)
        return dictionary.atoms[:, self.support] @ self.coefficients


def omp(
    y: np.ndarray,
    dictionary: Dictionary,
    k: int,
    residual_tol: float = 0.0,
) -> SparseCode:
    """Greedy sparse coding by orthogonal matching pursuit.

    Each step selects the atom with the largest absolute correlation with
    the current residual, then refits all selected coefficients by least
    squares.  Stops at ``k`` atoms, when the residual norm falls to
    ``residual_tol`` (or the relative machine floor), or when no remaining
    atom correlates with the residual.

    Raises:
        SparsityOutOfRange: if k < 1 or k > min(atom_dim, atom_count).
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    atoms = dictionary.atoms
    n, m = atoms.shape
    if y.size != n:
        raise ValueError(f"input has length {y.size}, atoms have dimension {n}")
    if not 1 <= k <= min(n, m):
        raise SparsityOutOfRange(f"k={k} not in [1, {min(n, m)}]")
    y_norm = float(np.linalg.norm(y))
    floor = max(residual_tol, 1e-12 * y_norm)
    support: list[int] = []
    coeffs = np.zeros(0)
    residual = y
    for _ in range(k):
        if np.linalg.norm(residual) <= floor:
            break
        corr = atoms.T @ residual
        if support:
            corr[support] = 0.0
        best = int(np.argmax(np.abs(corr)))
        if np.abs(corr[best]) <= 1e-12 * max(y_norm, 1.0):
            break
        support.append(best)
        coeffs, *_ = np.linalg.lstsq(atoms[:, support], y, rcond=None)
        residual = y - atoms[:, support] @ coeffs
    return SparseCode(np.array(support, dtype=np.int64), coeffs)


def _normalize_columns(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=0)
    norms = np.where(norms > _NORM_TOL, norms, 1.0)
    return mat / norms


def _init_atoms(samples: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    atoms = samples[:m].T.copy()
    norms = np.linalg.norm(atoms, axis=0)
    for j in np.flatnonzero(norms <= _NORM_TOL):
        atoms[:, j] = rng.standard_normal(atoms.shape[0])
    return _normalize_columns(atoms)


def learn_dictionary(
    samples: np.ndarray,
    m: int,
    k: int,
    epochs: int,
    seed: int,
) -> Dictionary:
    """Minibatch MOD dictionary learning, deterministic given ``seed``.

    Initialization is the first ``m`` samples, normalized.  Each epoch
    shuffles the samples, codes minibatches of 64 with OMP, and refits the
    atom matrix on accumulated statistics A = sum(c c^T), B = sum(y c^T)
    after every batch; the statistics are exponentially downweighted by
    ``STAT_DECAY`` per batch.  Atoms unused for a whole epoch are replaced
    by the epoch's worst-reconstructed samples and their statistics are
    zeroed.

    Raises:
        TooFewSamples: fewer than ``m`` samples.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise ValueError(f"samples must be (count, dim), got shape {samples.shape}")
    count, n = samples.shape
    if count < m:
        raise TooFewSamples(f"need at least m={m} samples, got {count}")
    if not np.isfinite(samples).all():
        raise ValueError("samples must be finite")
    rng = np.random.default_rng(seed)
    atoms = _init_atoms(samples, m, rng)
    if epochs == 0:
        return Dictionary(atoms)
    stat_a = np.zeros((m, m))
    stat_b = np.zeros((n, m))
    for _ in range(epochs):
        order = rng.permutation(count)
        used = np.zeros(m, dtype=bool)
        residual_norms = np.zeros(count)
        for start in range(0, count, BATCH_SIZE):
            batch = order[start : start + BATCH_SIZE]
            stat_a *= STAT_DECAY
            stat_b *= STAT_DECAY
            dictionary = Dictionary(atoms)
            for idx in batch:
                code = omp(samples[idx], dictionary, k)
                residual_norms[idx] = float(
                    np.linalg.norm(samples[idx] - code.reconstruct(dictionary))
                )
                if code.support.size == 0:
                    continue
                used[code.support] = True
                c = np.zeros(m)
                c[code.support] = code.coefficients
                stat_a += np.outer(c, c)
                stat_b += np.outer(samples[idx], c)
            new_atoms = np.linalg.solve(
                stat_a + _RIDGE * np.eye(m), stat_b.T
            ).T
            # keep the old atom wherever the update collapsed a column
            norms = np.linalg.norm(new_atoms, axis=0)
            keep = norms <= _NORM_TOL
            new_atoms = _normalize_columns(new_atoms)
            new_atoms[:, keep] = atoms[:, keep]
            atoms = new_atoms
        dead = np.flatnonzero(~used)
        if dead.size:
            worst = np.argsort(residual_norms)[::-1]
            for rank, j in enumerate(dead):
                sample = samples[worst[rank % count]]
                norm = float(np.linalg.norm(sample))
                if norm <= _NORM_TOL:
                    sample = rng.standard_normal(n)
                    norm = float(np.linalg.norm(sample))
                atoms[:, j] = sample / norm
                stat_a[j, :] = 0.0
                stat_a[:, j] = 0.0
                stat_b[:, j] = 0.0
    return Dictionary(atoms)


def project_sparse(
    y: np.ndarray,
    dictionary: Dictionary,
    k: int,
    mmse_passes: int = DEFAULT_MMSE_PASSES,
    noise_sigma: float | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Sparse-manifold projection with stochastic-resonance averaging.

    Averages OMP reconstructions of ``mmse_passes`` noise-perturbed copies
    of the input (sigma defaults to 0.05 * max(y)), then floors at zero and
    renormalizes, so the output always lies on the probability simplex.
    With one pass and zero noise this is the plain OMP reconstruction.
    Pure given ``seed``: identical calls give bit-identical outputs.

    Raises:
        SparsityOutOfRange: propagated from omp.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if mmse_passes < 1:
        raise ValueError(f"mmse_passes must be >= 1, got {mmse_passes}")
    if noise_sigma is None:
        noise_sigma = DEFAULT_NOISE_SCALE * float(y.max(initial=0.0))
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    if noise_sigma == 0.0:
        recon = omp(y, dictionary, k).reconstruct(dictionary)
    else:
        rng = np.random.default_rng(seed)
        recon = np.zeros_like(y)
        for _ in range(mmse_passes):
            noisy = y + noise_sigma * rng.standard_normal(y.size)
            recon += omp(noisy, dictionary, k).reconstruct(dictionary)
        recon /= mmse_passes
    recon = np.maximum(recon, 0.0)
    total = recon.sum()
    if total <= 0.0:
        # degenerate reconstruction; fall back to the flat measure
        return np.full(y.size, 1.0 / y.size)
    return recon / total
