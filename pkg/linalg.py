"""
Dense real/complex linear algebra for the greedy solvers.

Matrices are numpy arrays stored column-major (``np.asfortranarray``) with
dtype float64 or complex128, so ``A[:, j]`` is a contiguous view. The
incremental least-squares engine is a modified Gram-Schmidt QR that grows one
column at a time:

1. each incoming column is swept against every stored q, one projection at a time
2. columns whose residual collapses below ``lin_dep_tol`` are rejected
3. least squares is back-substitution of R x = Q^H y
"""

import logging

import numpy as np
import scipy.linalg

from errors import RejectedInputError, SingularityError

logger = logging.getLogger(__name__)

LIN_DEP_TOL = 1e-10
SINGULAR_TOL = 1e-12


def _field_dtype(*arrays) -> np.dtype:
    if any(np.iscomplexobj(a) for a in arrays):
        return np.dtype(np.complex128)
    return np.dtype(np.float64)


def as_matrix(A) -> np.ndarray:
    """Validate ``A`` and return it as a column-major float64/complex128 array."""
    arr = np.asarray(A)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise RejectedInputError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    arr = np.asfortranarray(arr, dtype=_field_dtype(arr))
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError("matrix has non-finite entries")
    return arr


def as_vector(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise RejectedInputError(f"expected a 1-D vector, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=_field_dtype(arr))
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError("vector has non-finite entries")
    return arr


def matvec(A, x) -> np.ndarray:
    A, x = as_matrix(A), as_vector(x)
    if x.shape[0] != A.shape[1]:
        raise RejectedInputError(f"matvec: x has length {x.shape[0]}, A has {A.shape[1]} columns")
    return A @ x


def adjoint_matvec(A, r) -> np.ndarray:
    """Proxy ``u = A^H r``; entry j is <column_j(A), r> with the column conjugated."""
    A, r = as_matrix(A), as_vector(r)
    if r.shape[0] != A.shape[0]:
        raise RejectedInputError(f"adjoint_matvec: r has length {r.shape[0]}, A has {A.shape[0]} rows")
    return A.conj().T @ r


def dense_lstsq(A, y) -> np.ndarray:
    """Non-incremental least squares through a full economic QR (oracle for qr_solve)."""
    A, y = as_matrix(A), as_vector(y)
    m, n = A.shape
    if y.shape[0] != m:
        raise RejectedInputError(f"dense_lstsq: y has length {y.shape[0]}, A has {m} rows")
    if m < n:
        raise RejectedInputError(f"dense_lstsq needs rows >= cols, got {m}x{n}")
    q, r = scipy.linalg.qr(A, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.min() <= SINGULAR_TOL * max(diag.max(), 1.0):
        raise SingularityError(f"rank-deficient system: min |R_ii| = {diag.min():.3e}")
    return scipy.linalg.solve_triangular(r, q.conj().T @ y, lower=False)


def lstsq_min_norm(A, y) -> np.ndarray:
    """SVD-based least squares that tolerates rank deficiency (used by CoSaMP)."""
    A, y = as_matrix(A), as_vector(y)
    if y.shape[0] != A.shape[0]:
        raise RejectedInputError(f"lstsq: y has length {y.shape[0]}, A has {A.shape[0]} rows")
    solution, *_ = scipy.linalg.lstsq(A, y, lapack_driver="gelsd")
    return solution


def classical_gram_schmidt(A) -> tuple[np.ndarray, np.ndarray]:
    """One-shot projection Gram-Schmidt; only here as a comparison baseline."""
    A = as_matrix(A)
    m, n = A.shape
    q = np.zeros((m, n), dtype=A.dtype, order="F")
    r = np.zeros((n, n), dtype=A.dtype)
    for j in range(n):
        coeffs = q[:, :j].conj().T @ A[:, j]
        v = A[:, j] - q[:, :j] @ coeffs
        r[:j, j] = coeffs
        r[j, j] = np.linalg.norm(v)
        q[:, j] = v / r[j, j]
    return q, r


class IncrementalQR:
    """Growing thin QR of the selected columns Phi|_Omega.

    ``q_columns`` holds the orthonormal system, ``r_columns[j]`` the (j+1)
    coefficients of column j of the upper-triangular factor. Each processed
    column costs exactly one working vector of length ``ambient_rows``; the
    normalized residual becomes the stored q column.
    """

    def __init__(self, ambient_rows: int, lin_dep_tol: float = LIN_DEP_TOL, dtype=np.float64):
        if ambient_rows < 1:
            raise RejectedInputError("ambient_rows must be positive")
        if lin_dep_tol < 0:
            raise RejectedInputError("lin_dep_tol must be nonnegative")
        self.ambient_rows = int(ambient_rows)
        self.lin_dep_tol = float(lin_dep_tol)
        self.dtype = np.dtype(dtype)
        self.selected: list[int] = []
        self.q_columns: list[np.ndarray] = []
        self.r_columns: list[np.ndarray] = []
        # allocation-count hook for the one-vector-per-column memory contract
        self.work_vectors_allocated = 0

    def __len__(self) -> int:
        return len(self.selected)

    @property
    def q_matrix(self) -> np.ndarray:
        if not self.q_columns:
            return np.zeros((self.ambient_rows, 0), dtype=self.dtype)
        return np.column_stack(self.q_columns)

    @property
    def r_factor(self) -> np.ndarray:
        k = len(self.r_columns)
        r = np.zeros((k, k), dtype=self.dtype)
        for j, col in enumerate(self.r_columns):
            r[: j + 1, j] = col
        return r

    def extend(self, A, new_indices) -> list[int]:
        """Orthogonalize ``A[:, new_indices]`` into the basis; return the rejected indices."""
        A = as_matrix(A)
        if A.shape[0] != self.ambient_rows:
            raise RejectedInputError(f"matrix has {A.shape[0]} rows, QR expects {self.ambient_rows}")
        indices = [int(j) for j in new_indices]
        if len(set(indices)) != len(indices) or set(indices) & set(self.selected):
            raise RejectedInputError(f"duplicate column index in {indices}")
        if any(j < 0 or j >= A.shape[1] for j in indices):
            raise RejectedInputError(f"column index out of range 0..{A.shape[1] - 1}")
        if A.dtype.kind == "c" and self.dtype.kind != "c":
            self._promote_to_complex()

        rejected = []
        for j in indices:
            w = np.array(A[:, j], dtype=self.dtype)
            self.work_vectors_allocated += 1
            original_norm = np.linalg.norm(w)
            coeffs = np.zeros(len(self.q_columns) + 1, dtype=self.dtype)
            for i, q in enumerate(self.q_columns):
                c = np.vdot(q, w)
                w -= c * q
                coeffs[i] = c
            residual_norm = np.linalg.norm(w)
            if original_norm == 0 or residual_norm <= self.lin_dep_tol * original_norm:
                logger.debug("column %d rejected: residual %.3e of %.3e", j, residual_norm, original_norm)
                rejected.append(j)
                continue
            w /= residual_norm
            coeffs[-1] = residual_norm
            self.q_columns.append(w)
            self.r_columns.append(coeffs)
            self.selected.append(j)
        return rejected

    def project(self, y) -> tuple[np.ndarray, np.ndarray]:
        """Return (Q^H y, y - Q Q^H y), both from one stabilized sweep."""
        y = as_vector(y)
        if y.shape[0] != self.ambient_rows:
            raise RejectedInputError(f"y has length {y.shape[0]}, QR expects {self.ambient_rows}")
        w = np.array(y, dtype=np.result_type(self.dtype, y.dtype))
        qty = np.zeros(len(self.q_columns), dtype=w.dtype)
        for i, q in enumerate(self.q_columns):
            qty[i] = np.vdot(q, w)
            w -= qty[i] * q
        return qty, w

    def residual(self, y) -> np.ndarray:
        return self.project(y)[1]

    def solve(self, y) -> np.ndarray:
        """Least-squares coefficients over ``selected``, in selection order."""
        qty, _ = self.project(y)
        if qty.size == 0:
            return qty
        return scipy.linalg.solve_triangular(self.r_factor, qty, lower=False)

    def _promote_to_complex(self):
        self.dtype = np.dtype(np.complex128)
        self.q_columns = [q.astype(self.dtype) for q in self.q_columns]
        self.r_columns = [c.astype(self.dtype) for c in self.r_columns]


def qr_extend(qr: IncrementalQR, A, new_indices) -> tuple[IncrementalQR, list[int]]:
    rejected = qr.extend(A, new_indices)
    return qr, rejected


def qr_solve(qr: IncrementalQR, y) -> np.ndarray:
    return qr.solve(y)
