"""Sparse matrix storage and the two linear solvers used by the package.

Matrices accumulate (row, col, value) triplets during assembly and are
compressed to CSR on finalization, summing duplicates.  SPD reduced systems
go through Jacobi-preconditioned conjugate gradients; general and
saddle-point systems go through a sparse LU factorization.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "SparseMatrix",
    "SolveReport",
    "SolverError",
    "SingularMatrixError",
    "spmv",
    "cg_solve",
    "lu_solve",
    "LuFactorization",
]


class SolverError(RuntimeError):
    """Iterative solve failed; carries the best iterate seen so far."""

    def __init__(self, message, best_x=None, residual=None):
        super().__init__(message)
        self.best_x = best_x
        self.residual = residual


class SingularMatrixError(RuntimeError):
    pass


class SparseMatrix:
    """Triplet-built sparse matrix with a compressed-row query form.

    Entries are accumulated with :meth:`add` / :meth:`add_block`;
    :meth:`finalize` compresses them (summing duplicates) and freezes the
    matrix.  Query methods finalize on first use.
    """

    def __init__(self, n_rows: int, n_cols: int):
        self.shape = (int(n_rows), int(n_cols))
        self._rows: list = []
        self._cols: list = []
        self._vals: list = []
        self._csr = None

    @classmethod
    def from_csr(cls, csr) -> "SparseMatrix":
        m = cls(*csr.shape)
        m._csr = csr.tocsr()
        m._csr.sum_duplicates()
        m._csr.sort_indices()
        return m

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls.from_csr(sp.identity(n, format="csr"))

    def add(self, i: int, j: int, value: float) -> None:
        if self._csr is not None:
            raise RuntimeError("matrix already finalized; cannot add entries")
        if not (0 <= i < self.shape[0] and 0 <= j < self.shape[1]):
            raise IndexError(f"entry ({i}, {j}) outside shape {self.shape}")
        self._rows.append(np.array([i]))
        self._cols.append(np.array([j]))
        self._vals.append(np.array([float(value)]))

    def add_block(self, row_dofs, col_dofs, block) -> None:
        """Scatter a dense local block: A[row_dofs[a], col_dofs[b]] += block[a, b]."""
        if self._csr is not None:
            raise RuntimeError("matrix already finalized; cannot add entries")
        row_dofs = np.asarray(row_dofs, dtype=np.int64)
        col_dofs = np.asarray(col_dofs, dtype=np.int64)
        block = np.asarray(block, dtype=float)
        if block.shape != (len(row_dofs), len(col_dofs)):
            raise ValueError("local block shape does not match dof lists")
        if len(row_dofs) and (row_dofs.min() < 0 or row_dofs.max() >= self.shape[0]):
            raise IndexError("row dof out of range")
        if len(col_dofs) and (col_dofs.min() < 0 or col_dofs.max() >= self.shape[1]):
            raise IndexError("column dof out of range")
        rr, cc = np.meshgrid(row_dofs, col_dofs, indexing="ij")
        self._rows.append(rr.ravel())
        self._cols.append(cc.ravel())
        self._vals.append(block.ravel())

    def add_matrix(self, other: "SparseMatrix", row_offset: int = 0, col_offset: int = 0, scale: float = 1.0) -> None:
        """Accumulate ``scale * other`` as a block at the given offsets."""
        if self._csr is not None:
            raise RuntimeError("matrix already finalized; cannot add entries")
        nr, nc = other.shape
        if row_offset < 0 or col_offset < 0 or row_offset + nr > self.shape[0] or col_offset + nc > self.shape[1]:
            raise IndexError("block does not fit inside matrix")
        coo = other.csr.tocoo()
        self._rows.append(coo.row.astype(np.int64) + row_offset)
        self._cols.append(coo.col.astype(np.int64) + col_offset)
        self._vals.append(scale * coo.data)

    def finalize(self) -> "SparseMatrix":
        """Compress triplets to CSR (duplicates summed); idempotent."""
        if self._csr is None:
            if self._rows:
                rows = np.concatenate(self._rows)
                cols = np.concatenate(self._cols)
                vals = np.concatenate(self._vals)
            else:
                rows = cols = np.empty(0, dtype=np.int64)
                vals = np.empty(0)
            coo = sp.coo_matrix((vals, (rows, cols)), shape=self.shape)
            self._csr = coo.tocsr()
            self._csr.sum_duplicates()
            self._csr.sort_indices()
            self._rows = self._cols = self._vals = []
        return self

    @property
    def csr(self):
        return self.finalize()._csr

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.csr @ np.asarray(x, dtype=float)

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_csr(self.csr.T.tocsr())

    def submatrix(self, rows, cols) -> "SparseMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        return SparseMatrix.from_csr(self.csr[rows, :][:, cols])

    def max_abs(self) -> float:
        csr = self.csr
        return float(np.abs(csr.data).max()) if csr.nnz else 0.0

    def symmetry_error(self) -> float:
        """Largest absolute entry of A - A^T (0 for rectangular-safe use, call on square only)."""
        diff = (self.csr - self.csr.T).tocoo()
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0


def spmv(matrix: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product y = A x."""
    return matrix.matvec(x)


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float
    size: int
    elapsed: float = 0.0


def cg_solve(matrix: SparseMatrix, b: np.ndarray, tol: float = 1e-10, maxit: int | None = None):
    """Jacobi-preconditioned conjugate gradients for SPD systems.

    Stops when ||b - A x||_2 <= tol * ||b||_2.  The caller guarantees A is
    SPD; a cheap symmetry check guards against obvious misuse.  Raises
    :class:`SolverError` (carrying the best iterate) if maxit is exceeded.
    """
    start = time.perf_counter()
    n, m = matrix.shape
    if n != m:
        raise ValueError(f"cg_solve needs a square matrix, got {matrix.shape}")
    b = np.asarray(b, dtype=float)
    if b.shape != (n,):
        raise ValueError("right-hand side length does not match matrix")
    if maxit is None:
        maxit = 10 * max(n, 1)

    scale = matrix.max_abs()
    if matrix.symmetry_error() > 1e-10 * max(scale, 1e-300):
        raise ValueError("matrix is not symmetric; cg_solve requires SPD input")

    bnorm = float(np.linalg.norm(b))
    if n == 0 or bnorm == 0.0:
        return np.zeros(n), SolveReport("cg", 0, 0.0, n, time.perf_counter() - start)

    diag = matrix.diagonal()
    if np.any(diag <= 0):
        raise ValueError("non-positive diagonal entry; matrix cannot be SPD")
    inv_diag = 1.0 / diag

    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    best_x, best_res = x.copy(), bnorm

    for k in range(1, maxit + 1):
        ap = matrix.matvec(p)
        denom = float(p @ ap)
        if denom <= 0:
            raise ValueError("non-positive curvature encountered; matrix is not SPD")
        alpha = rz / denom
        x += alpha * p
        r -= alpha * ap
        rnorm = float(np.linalg.norm(r))
        if rnorm < best_res:
            best_res, best_x = rnorm, x.copy()
        if rnorm <= tol * bnorm:
            true_res = float(np.linalg.norm(b - matrix.matvec(x)))
            return x, SolveReport("cg", k, true_res, n, time.perf_counter() - start)
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    raise SolverError(
        f"cg did not converge in {maxit} iterations (residual {best_res:.3e})",
        best_x=best_x,
        residual=best_res,
    )


class LuFactorization:
    """Sparse LU factorization with partial pivoting, reusable across solves."""

    def __init__(self, matrix: SparseMatrix):
        n, m = matrix.shape
        if n != m:
            raise ValueError(f"LU needs a square matrix, got {matrix.shape}")
        self.matrix = matrix
        self.n = n
        scale = matrix.max_abs()
        try:
            self._lu = spla.splu(matrix.csr.tocsc())
        except RuntimeError as exc:
            raise SingularMatrixError(f"LU factorization failed: {exc}") from exc
        u_diag = np.abs(self._lu.U.diagonal())
        if u_diag.size and u_diag.min() <= 1e-14 * max(scale, 1e-300):
            raise SingularMatrixError(
                f"matrix is numerically singular (pivot {u_diag.min():.3e})"
            )

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape != (self.n,):
            raise ValueError("right-hand side length does not match matrix")
        return self._lu.solve(b)


def lu_solve(matrix: SparseMatrix, b: np.ndarray):
    """Direct solve via sparse LU with partial pivoting.

    Raises :class:`SingularMatrixError` when a pivot falls below
    1e-14 times the largest matrix entry.
    """
    start = time.perf_counter()
    lu = LuFactorization(matrix)
    x = lu.solve(b)
    residual = float(np.linalg.norm(b - matrix.matvec(x)))
    return x, SolveReport("lu", 0, residual, lu.n, time.perf_counter() - start)
