"""Truncated left singular subspaces via subspace iteration.

The spectral initialization only ever needs the leading *left* singular
subspace of short-and-fat matricizations (ROI count x everything else), so we
iterate on the small Gram matrix ``G = A A^T`` with QR re-orthonormalization
instead of running a full SVD. A Rayleigh-Ritz step at the end rotates the
converged basis onto singular-vector estimates and yields the singular values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .tensor import DenseMatrix

__all__ = ["SingularSubspace", "svd_r"]

# Fixed internal seed for the start-basis perturbation; svd_r takes no seed
# argument and must be reproducible call-to-call.
_INIT_SEED = 0x5121D
_MAX_ITERS = 500
_PROJ_TOL = 1e-10


@dataclass(frozen=True)
class SingularSubspace:
    """Orthonormal basis of a leading left singular subspace.

    ``basis`` is p x r with orthonormal columns (each column sign-fixed so its
    largest-magnitude entry is positive); ``singular_values`` is length r,
    nonnegative and nonincreasing.
    """

    basis: DenseMatrix
    singular_values: np.ndarray

    def projector(self) -> np.ndarray:
        """The p x p orthogonal projector ``basis @ basis.T``."""
        b = self.basis.array
        return b @ b.T


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    anchor = np.abs(basis).argmax(axis=0)
    signs = np.sign(basis[anchor, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def svd_r(a: DenseMatrix, r: int) -> SingularSubspace:
    """Leading-r left singular subspace of ``a``.

    Subspace iteration on ``G = a @ a.T``: start from the first r identity
    columns plus a small seeded Gaussian perturbation, repeat
    ``Q <- qr(G @ Q)`` until the orthogonal projectors of consecutive
    iterates differ by less than 1e-10 in Frobenius norm (or 500 iterations).

    Raises ``ValueError`` if ``r`` is out of range and ``DataError`` on
    non-finite input.
    """
    r = int(r)
    arr = a.array
    p = a.rows
    if not 1 <= r <= min(a.rows, a.cols):
        raise ValueError(f"r={r} out of range for a {a.rows}x{a.cols} matrix")
    if not np.all(np.isfinite(arr)):
        raise DataError("svd_r: input matrix contains non-finite entries")

    gram = arr @ arr.T
    rng = np.random.default_rng(_INIT_SEED)
    start = np.eye(p, r) + 1e-3 * rng.standard_normal((p, r))
    q, _ = np.linalg.qr(start)

    for _ in range(_MAX_ITERS):
        q_next, _ = np.linalg.qr(gram @ q)
        # ||QQ^T - Q'Q'^T||_F == sqrt(2) * ||(I - Q'Q'^T) Q||_F; the residual
        # form avoids the cancellation of the direct overlap formula
        residual = q - q_next @ (q_next.T @ q)
        q = q_next
        if np.sqrt(2.0) * np.linalg.norm(residual) < _PROJ_TOL:
            break

    # Rayleigh-Ritz on the converged subspace: rotate onto eigenvector
    # estimates of G, whose eigenvalues are the squared singular values.
    small = q.T @ gram @ q
    evals, evecs = np.linalg.eigh((small + small.T) / 2.0)
    order = np.argsort(evals)[::-1]
    basis = _fix_signs(q @ evecs[:, order])
    sigma = np.sqrt(np.clip(evals[order], 0.0, None))
    return SingularSubspace(DenseMatrix.from_array(basis), sigma)
