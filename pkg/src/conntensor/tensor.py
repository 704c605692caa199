"""Dense tensors and the mode-wise algebra used by the clustering stage.

Conventions
-----------
* A ``DenseTensor`` stores its entries in a flat array with the *first index
  fastest* (column-major / Fortran layout). With that layout the mode-i
  matricization is a pure axis move plus reshape: entry ``t[j1, ..., jd]``
  lands at row ``j_i`` and column ``j1 + p1*(j2-1) + ...`` (1-based, mode i
  skipped) of the unfolded matrix.
* Modes are **1-based** throughout, matching the usual mathematical notation
  for n-mode products (``y ×₃ M ×₄ M``).
* All arithmetic is float64; tensors are immutable after construction, so
  every operation here is a pure function and safe to call concurrently.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DenseTensor",
    "DenseMatrix",
    "matricize",
    "dematricize",
    "mode_product",
    "multilinear_product",
    "frobenius_norm",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class DenseTensor:
    """Immutable order-d dense tensor in canonical (first-index-fastest) layout."""

    __slots__ = ("dims", "data")

    def __init__(self, dims: Sequence[int], data):
        dims = tuple(int(d) for d in dims)
        if len(dims) < 1:
            raise ValueError("tensor order must be at least 1")
        if any(d < 1 for d in dims):
            raise ValueError(f"all dims must be >= 1, got {dims}")
        flat = np.array(data, dtype=np.float64).ravel()
        expected = int(np.prod(dims))
        if flat.size != expected:
            raise ValueError(
                f"data length {flat.size} does not match product(dims) = {expected}"
            )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", _freeze(flat))

    def __setattr__(self, name, value):
        raise AttributeError("DenseTensor is immutable")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "DenseTensor":
        """Wrap an ndarray; the canonical flat layout is its Fortran raveling."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim < 1:
            arr = arr.reshape(1)
        return cls(arr.shape, arr.ravel(order="F"))

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def array(self) -> np.ndarray:
        """Read-only ndarray view of shape ``dims``."""
        return self.data.reshape(self.dims, order="F")

    def __repr__(self) -> str:
        return f"DenseTensor(dims={self.dims})"


class DenseMatrix:
    """Immutable matrix stored column-major, the order-2 companion of DenseTensor."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data):
        rows, cols = int(rows), int(cols)
        if rows < 1 or cols < 1:
            raise ValueError(f"matrix dims must be positive, got {rows}x{cols}")
        flat = np.array(data, dtype=np.float64).ravel()
        if flat.size != rows * cols:
            raise ValueError(
                f"data length {flat.size} does not match rows*cols = {rows * cols}"
            )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "data", _freeze(flat))

    def __setattr__(self, name, value):
        raise AttributeError("DenseMatrix is immutable")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "DenseMatrix":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got ndim={arr.ndim}")
        return cls(arr.shape[0], arr.shape[1], arr.ravel(order="F"))

    @property
    def array(self) -> np.ndarray:
        """Read-only (rows, cols) ndarray view."""
        return self.data.reshape((self.rows, self.cols), order="F")

    def __repr__(self) -> str:
        return f"DenseMatrix({self.rows}x{self.cols})"


def _check_mode(t: DenseTensor, mode: int) -> int:
    if not 1 <= mode <= t.order:
        raise ValueError(f"mode {mode} out of range for order-{t.order} tensor")
    return mode - 1


def matricize(t: DenseTensor, mode: int) -> DenseMatrix:
    """Mode-i matricization: rows index mode ``mode``, remaining modes are
    flattened into columns with the lowest surviving mode fastest."""
    ax = _check_mode(t, mode)
    moved = np.moveaxis(t.array, ax, 0)
    mat = moved.reshape((t.dims[ax], -1), order="F")
    return DenseMatrix.from_array(mat)


def dematricize(m: DenseMatrix, dims: Sequence[int], mode: int) -> DenseTensor:
    """Inverse of :func:`matricize`: rebuild the tensor of shape ``dims`` whose
    mode-``mode`` matricization is ``m``."""
    dims = tuple(int(d) for d in dims)
    if not 1 <= mode <= len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    ax = mode - 1
    if m.rows != dims[ax] or m.rows * m.cols != int(np.prod(dims)):
        raise ValueError(f"matrix {m.rows}x{m.cols} does not fold into dims {dims}")
    rest = dims[:ax] + dims[ax + 1 :]
    moved = m.array.reshape((dims[ax],) + rest, order="F")
    return DenseTensor.from_array(np.moveaxis(moved, 0, ax))


def mode_product(t: DenseTensor, u: DenseMatrix, mode: int) -> DenseTensor:
    """n-mode product ``t ×_mode u``; requires ``u.cols == t.dims[mode]``.

    Satisfies ``matricize(result, mode) == u @ matricize(t, mode)``.
    """
    ax = _check_mode(t, mode)
    if u.cols != t.dims[ax]:
        raise ValueError(
            f"mode-{mode} product needs a matrix with {t.dims[ax]} columns, "
            f"got {u.rows}x{u.cols}"
        )
    mat = u.array @ matricize(t, mode).array
    new_dims = list(t.dims)
    new_dims[ax] = u.rows
    return dematricize(DenseMatrix.from_array(mat), new_dims, mode)


def multilinear_product(
    s: DenseTensor, factors: Iterable[tuple[DenseMatrix, int]]
) -> DenseTensor:
    """Apply several mode products at once, e.g. ``S ×₃ M ×₄ M``.

    Modes must be distinct; the result does not depend on factor order.
    """
    factors = list(factors)
    modes = [mode for _, mode in factors]
    if len(set(modes)) != len(modes):
        raise ValueError(f"repeated modes in multilinear product: {modes}")
    out = s
    for u, mode in factors:
        out = mode_product(out, u, mode)
    return out


def frobenius_norm(t: DenseTensor) -> float:
    return float(np.linalg.norm(t.data))
