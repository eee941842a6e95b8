"""Dense linear-algebra kernels and seeded randomness shared by every module.

All routines operate on plain float64 ``numpy`` arrays, validate their
inputs, and are deterministic: identical inputs give bitwise-identical
outputs, and identical seeds give identical draw sequences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SvdResult",
    "make_rng",
    "thin_svd",
    "sym_eig",
    "pinv",
    "nuclear_norm",
]

_EPS = float(np.finfo(np.float64).eps)


def _as_matrix(a, name="A"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def make_rng(seed):
    """Seeded generator; identical seeds produce identical draw sequences."""
    return np.random.default_rng(int(seed))


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``A = U diag(s) Vt`` with s sorted nonincreasing."""

    left_vectors: np.ndarray      # (m, r), orthonormal columns
    singular_values: np.ndarray   # (r,), nonincreasing, nonnegative
    right_vectors: np.ndarray     # (n, r), orthonormal columns

    def reconstruct(self):
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def thin_svd(a) -> SvdResult:
    """Thin SVD with r = min(rows, cols) triples.

    Deterministic up to sign/rotation inside degenerate singular blocks;
    downstream code must consume subspaces or Grams, never individual
    degenerate vectors.
    """
    a = _as_matrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return SvdResult(left_vectors=u, singular_values=s, right_vectors=vt.T)


def sym_eig(a, rel_tol=1e-10):
    """Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing.

    Returns ``(eigenvalues, eigenvectors)`` with A = Q diag(pi) Q^T.
    Rejects inputs whose asymmetry exceeds ``rel_tol`` relative to |A|.
    """
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    scale = max(float(np.abs(a).max()), 1.0)
    if float(np.abs(a - a.T).max()) > rel_tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    w, q = np.linalg.eigh((a + a.T) / 2.0)
    order = np.argsort(w, kind="stable")[::-1]
    return w[order], q[:, order]


def pinv(a, rel_tol=None):
    """Moore-Penrose pseudoinverse.

    Singular values below ``rel_tol * sigma_max`` are zeroed.  The default
    tolerance is ``max(rows, cols) * eps``.
    """
    a = _as_matrix(a)
    if rel_tol is None:
        rel_tol = max(a.shape) * _EPS
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]))
    inv = np.where(s > rel_tol * s[0], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return (vt.T * inv) @ u.T


def nuclear_norm(a):
    """Sum of singular values of ``a``."""
    a = _as_matrix(a)
    return float(np.linalg.svd(a, compute_uv=False).sum())
