"""Small dense complex linear algebra.

Everything here works on ``numpy`` arrays of dtype ``complex128``. Matrices
are at most 32x32, so no effort is spent on sparse or batched paths.

Basis ordering: in a tensor product, subsystem 0 is the slowest-varying
index, which is the ordering produced by :func:`numpy.kron` and by C-order
reshapes.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

#: Default absolute tolerance for equality checks.
TOL = 1e-12

#: Tolerance for the Hermiticity precondition of :func:`hermitian_eigenvalues`.
HERMITIAN_TOL = 1e-10


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-D complex array (copied, read-only)."""
    arr = np.array(m, dtype=np.complex128)
    if arr.ndim != 2 or 0 in arr.shape:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    arr.setflags(write=False)
    return arr


def as_vector(v) -> np.ndarray:
    """Return ``v`` as a finite 1-D complex array (copied, read-only)."""
    arr = np.array(v, dtype=np.complex128)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector entries must be finite")
    arr.setflags(write=False)
    return arr


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def dagger(m) -> np.ndarray:
    return as_matrix(m).conj().T


def partial_trace(m, dims: Sequence[int], keep: int) -> np.ndarray:
    """Trace out every subsystem except ``keep``.

    Args:
        m: square matrix on the product space ``dims[0] x dims[1] x ...``.
        dims: subsystem dimensions, slowest-varying first.
        keep: index of the subsystem that survives.

    Returns:
        The ``dims[keep] x dims[keep]`` reduced matrix.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise DimensionError(f"subsystem dimensions must be positive, got {dims}")
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise DimensionError(f"matrix shape {m.shape} does not match dims {dims}")
    if not 0 <= keep < len(dims):
        raise DimensionError(f"keep index {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = m.reshape(dims + dims)
    # Move the kept row/column axes to the front, then trace pairs of the rest.
    others = [k for k in range(n) if k != keep]
    t = np.transpose(t, [keep, n + keep] + others + [n + k for k in others])
    rest = int(np.prod([dims[k] for k in others])) if others else 1
    t = t.reshape(dims[keep], dims[keep], rest, rest)
    return np.trace(t, axis1=2, axis2=3)


def is_hermitian(m, tol: float = TOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_unitary(m, tol: float = TOL) -> bool:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


def hermitian_eigenvalues(m, tol: float = HERMITIAN_TOL) -> list[float]:
    """Real eigenvalues of a Hermitian matrix, ascending."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got {m.shape}")
    if not is_hermitian(m, tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    # Symmetrize so the solver only sees the Hermitian part.
    h = (m + m.conj().T) / 2
    return [float(x) for x in np.linalg.eigvalsh(h)]


def singular_values(m) -> list[float]:
    """Non-negative singular values, descending."""
    return [float(x) for x in np.linalg.svd(as_matrix(m), compute_uv=False)]
