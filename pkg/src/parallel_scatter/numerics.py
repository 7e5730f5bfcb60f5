"""Small dense complex linear algebra.

Transfer matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype
``complex128``. A block matrix of ``n x n`` such blocks is an array of shape
``(n, n, 2, 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrix, SingularSystem

Cx = complex
TransferMatrix2 = np.ndarray
BlockMatrix = np.ndarray

IDENTITY = np.eye(2, dtype=complex)
IDENTITY.setflags(write=False)


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used across the package.

    ``singular`` is relative: a pivot or determinant is treated as zero when
    it falls below ``singular`` times the matching power of the input's
    infinity norm.
    """

    det: float = 1e-9
    singular: float = 1e-12
    unitary: float = 1e-10


DEFAULT_TOL = Tolerances()


def as_matrix(a, name: str = "matrix") -> TransferMatrix2:
    m = np.asarray(a, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"{name} must have shape (2, 2), got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def det2(a: TransferMatrix2) -> complex:
    return complex(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])


def norm_inf(a: np.ndarray) -> float:
    """Maximum absolute row sum."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(a), axis=-1)))


def mat2_mul(a: TransferMatrix2, b: TransferMatrix2) -> TransferMatrix2:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    return a @ b


def mat2_inv(a: TransferMatrix2, tol: Tolerances = DEFAULT_TOL) -> TransferMatrix2:
    """Inverse through the adjugate.

    For unit determinant this is exactly ``[[m22, -m12], [-m21, m11]]``.
    """
    a = as_matrix(a, "a")
    d = det2(a)
    scale = norm_inf(a)
    if abs(d) <= tol.singular * scale * scale or scale == 0.0:
        raise SingularMatrix(f"2x2 matrix is singular (|det| = {abs(d):.3e})")
    adj = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]], dtype=complex)
    if d == 1:
        return adj
    return adj / d


def lu_factor(a: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """LU decomposition with partial pivoting, ``a[perm] = L @ U``.

    L (unit lower) and U share the returned array. Raises ``SingularSystem``
    if a pivot falls below ``tol.singular * ||a||_inf``.
    """
    lu = np.array(a, dtype=complex, copy=True)
    n = lu.shape[0]
    if lu.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {lu.shape}")
    perm = np.arange(n)
    threshold = tol.singular * norm_inf(lu)
    for col in range(n):
        p = col + int(np.argmax(np.abs(lu[col:, col])))
        if abs(lu[p, col]) <= threshold or lu[p, col] == 0:
            raise SingularSystem(
                f"pivot {col} below threshold ({abs(lu[p, col]):.3e} <= {threshold:.3e})"
            )
        if p != col:
            lu[[col, p]] = lu[[p, col]]
            perm[[col, p]] = perm[[p, col]]
        lu[col + 1 :, col] /= lu[col, col]
        lu[col + 1 :, col + 1 :] -= np.outer(lu[col + 1 :, col], lu[col, col + 1 :])
    return lu, perm


def lu_solve(lu: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = lu.shape[0]
    x = np.array(b, dtype=complex)[perm]
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1 :] @ x[i + 1 :]) / lu[i, i]
    return x


def flatten_blocks(blocks: BlockMatrix) -> np.ndarray:
    """(n, n, 2, 2) block grid -> dense (2n, 2n) matrix."""
    blocks = np.asarray(blocks, dtype=complex)
    n = blocks.shape[0]
    if blocks.shape != (n, n, 2, 2):
        raise ValueError(f"block matrix must have shape (n, n, 2, 2), got {blocks.shape}")
    return blocks.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)


def block_solve(
    a: BlockMatrix, rhs, tol: Tolerances = DEFAULT_TOL, *, return_condition: bool = False
):
    """Solve ``A X = R`` where A is a grid of 2x2 blocks and R a column of 2x2 blocks.

    Returns X with shape ``(n, 2, 2)``. With ``return_condition`` also returns
    the ratio of largest to smallest pivot magnitude as a cheap conditioning
    estimate.
    """
    dense = flatten_blocks(a)
    n = dense.shape[0] // 2
    r = np.asarray(rhs, dtype=complex)
    if r.shape != (n, 2, 2):
        raise ValueError(f"rhs must have shape ({n}, 2, 2), got {r.shape}")
    if not (np.all(np.isfinite(dense)) and np.all(np.isfinite(r))):
        raise ValueError("block system has non-finite entries")
    lu, perm = lu_factor(dense, tol)
    x = lu_solve(lu, perm, r.reshape(2 * n, 2)).reshape(n, 2, 2)
    if return_condition:
        pivots = np.abs(np.diag(lu))
        return x, float(pivots.max() / pivots.min())
    return x
