"""Bordered matrices, determinants and cofactors.

Index convention
----------------
Rows and columns of a bordered matrix are numbered ``0 .. m+n-1``. The
first ``m`` indices are border rows; for the usual single-constraint
bordered Hessian (``m = 1``) index 0 is the border and indices ``1..n``
are the factors, so ``cofactor(M, i, j)`` with ``i, j >= 1`` is the
cofactor of ``f_ij``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError

SINGULAR_RTOL = 1e-9


@dataclass(frozen=True)
class BorderedMatrix:
    """``[[0, G], [G', base]]`` with ``G`` the ``m x n`` constraint gradients."""

    entries: np.ndarray
    border_count: int = 1

    @property
    def size(self):
        return self.entries.shape[0]

    @property
    def n(self):
        return self.size - self.border_count

    @property
    def base(self):
        m = self.border_count
        return self.entries[m:, m:]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __str__(self):
        return format_matrix(self.entries, self.border_count)


@dataclass(frozen=True)
class MinorSequence:
    """Leading principal minors ``Delta_2 .. Delta_{n+1}``."""

    values: tuple
    sign_alternates: bool


def _entries(M):
    if isinstance(M, BorderedMatrix):
        return M.entries
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    return A


def bordered_hessian(d) -> BorderedMatrix:
    """Border a DiffBundle's Hessian with its gradient."""
    return multi_bordered([d.gradient], d.hessian)


def multi_bordered(grads, base) -> BorderedMatrix:
    """Bordered matrix for ``m`` constraints with gradient rows ``grads``."""
    G = np.atleast_2d(np.asarray(grads, dtype=float))
    base = np.asarray(base, dtype=float)
    m, n = G.shape
    if m < 1 or base.shape != (n, n):
        raise DimensionError(f"need m >= 1 gradients of length n and an n x n base; got {G.shape}, {base.shape}")
    M = np.zeros((m + n, m + n))
    M[:m, m:] = G
    M[m:, :m] = G.T
    M[m:, m:] = base
    return BorderedMatrix(M, m)


def determinant(M) -> float:
    """Determinant by LU factorization with partial pivoting."""
    A = _entries(M)
    if A.shape[0] == 0:
        return 1.0
    with warnings.catch_warnings():
        # exactly singular input is a valid case here (determinant 0)
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    swaps = np.count_nonzero(piv != np.arange(piv.size))
    d = float(np.prod(np.diag(lu)))
    return -d if swaps % 2 else d


def hadamard_scale(M) -> float:
    """Product of row infinity-norms, the scale for singularity tests."""
    A = _entries(M)
    return float(np.prod(np.abs(A).max(axis=1))) if A.size else 1.0


def is_singular(M, rtol: float = SINGULAR_RTOL, det: float | None = None) -> bool:
    A = _entries(M)
    if det is None:
        det = determinant(A)
    return abs(det) <= rtol * hadamard_scale(A)


def minor_matrix(M, i: int, j: int) -> np.ndarray:
    A = _entries(M)
    size = A.shape[0]
    if not (0 <= i < size and 0 <= j < size):
        raise IndexError(f"cofactor index ({i}, {j}) out of range for size {size}")
    return np.delete(np.delete(A, i, axis=0), j, axis=1)


def cofactor(M, i: int, j: int) -> float:
    """``(-1)**(i+j)`` times the determinant with row ``i`` and column ``j`` deleted."""
    sign = -1.0 if (i + j) % 2 else 1.0
    return sign * determinant(minor_matrix(M, i, j))


def leading_principal_minors(M) -> MinorSequence:
    """``Delta_r`` for ``r = 2 .. n+1`` of a single-border matrix.

    Alternation requires every minor to be nonzero (by the scaled
    singularity test) and consecutive minors to have opposite signs.
    """
    if isinstance(M, BorderedMatrix) and M.border_count != 1:
        raise DimensionError("leading principal minors are defined here for a single border")
    A = _entries(M)
    vals = []
    alternates = True
    for r in range(2, A.shape[0] + 1):
        sub = A[:r, :r]
        d = determinant(sub)
        vals.append(d)
        if d == 0 or is_singular(sub, det=d):
            alternates = False
    for a, b in zip(vals, vals[1:]):
        if np.sign(a) == np.sign(b):
            alternates = False
    return MinorSequence(tuple(vals), alternates)


def scaled_border_det(A, B, C, lam: float):
    """Both sides of ``det([[0, B], [C, lam*A]]) == lam**(n-1) * det([[0, B], [C, A]])``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(1, -1)
    C = np.asarray(C, dtype=float).reshape(-1, 1)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[1] != n or C.shape[0] != n:
        raise DimensionError("A must be n x n, B 1 x n and C n x 1")

    def border(base):
        M = np.zeros((n + 1, n + 1))
        M[0, 1:] = B
        M[1:, 0] = C[:, 0]
        M[1:, 1:] = base
        return M

    lhs = determinant(border(lam * A))
    rhs = lam ** (n - 1) * determinant(border(A))
    return lhs, rhs


def split_product(A, B, n1: int):
    """``A @ B`` assembled as ``A1 @ B1 + A2 @ B2`` from a column/row split at ``n1``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[1] != B.shape[0] or not 0 <= n1 <= A.shape[1]:
        raise DimensionError("blocks are not conformal")
    return A[:, :n1] @ B[:n1, :] + A[:, n1:] @ B[n1:, :]


def format_matrix(M, border_count: int = 0, precision: int = 6) -> str:
    """Aligned text rendering; a ``|`` separates border columns."""
    A = _entries(M)
    cells = [[f"{v:.{precision}g}" for v in row] for row in A]
    width = max((len(c) for row in cells for c in row), default=1)
    lines = []
    for r, row in enumerate(cells):
        parts = [c.rjust(width) for c in row]
        if 0 < border_count < len(parts):
            parts.insert(border_count, "|")
        lines.append(" ".join(parts))
        if border_count and r == border_count - 1:
            lines.append("-" * len(lines[-1]))
    return "\n".join(lines)
