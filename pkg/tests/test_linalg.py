import numpy as np
import pytest

from femkit.assembly import LinearSystem, Stiffness, apply_dirichlet, assemble_bilinear, assemble_load, Convection
from femkit.elements import P1_1D, build_dofmap
from femkit.linalg import (
    LuFactorization,
    SingularMatrixError,
    SolverError,
    SparseMatrix,
    cg_solve,
    lu_solve,
    spmv,
)
from femkit.mesh import build_interval_mesh


def neumann_laplace_6x6():
    mesh = build_interval_mesh(0.0, 1.0, 5)
    return assemble_bilinear(mesh, Stiffness(1.0), P1_1D)


def random_spd(rng, n):
    a = rng.uniform(-1, 1, size=(n, n))
    dense = a.T @ a + n * np.eye(n)
    m = SparseMatrix(n, n)
    m.add_block(np.arange(n), np.arange(n), dense)
    return m.finalize()


class TestSparseMatrix:
    def test_identity_spmv(self):
        eye = SparseMatrix.identity(4)
        x = np.array([1.0, -2.0, 3.0, 0.5])
        assert np.array_equal(spmv(eye, x), x)

    def test_duplicates_summed_at_finalization(self):
        m = SparseMatrix(2, 2)
        m.add(0, 0, 1.0)
        m.add(0, 0, 1.0)
        m.finalize()
        assert m.nnz == 1
        assert m.toarray()[0, 0] == 2.0

    def test_neumann_matrix_annihilates_constants(self):
        A = neumann_laplace_6x6()
        assert np.abs(spmv(A, np.ones(6))).max() < 1e-13

    def test_add_after_finalize_rejected(self):
        m = SparseMatrix(2, 2)
        m.add(0, 0, 1.0)
        m.finalize()
        with pytest.raises(RuntimeError):
            m.add(1, 1, 1.0)

    def test_out_of_range_rejected(self):
        m = SparseMatrix(2, 2)
        with pytest.raises(IndexError):
            m.add(2, 0, 1.0)

    def test_spmv_linearity(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            A = random_spd(rng, 8)
            x, y = rng.uniform(-1, 1, 8), rng.uniform(-1, 1, 8)
            alpha = rng.uniform(-2, 2)
            lhs = spmv(A, alpha * x + y)
            rhs = alpha * spmv(A, x) + spmv(A, y)
            assert np.abs(lhs - rhs).max() <= 1e-13 * max(1.0, np.abs(lhs).max())

    def test_submatrix(self):
        A = neumann_laplace_6x6()
        sub = A.submatrix([1, 2, 3, 4], [1, 2, 3, 4])
        expected = A.toarray()[1:5, 1:5]
        assert np.array_equal(sub.toarray(), expected)


class TestCg:
    def test_identity_converges_in_one_iteration(self):
        eye = SparseMatrix.identity(5)
        b = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        x, report = cg_solve(eye, b)
        assert np.allclose(x, b, atol=1e-14)
        assert report.iterations <= 1

    def test_zero_rhs_short_circuits(self):
        x, report = cg_solve(SparseMatrix.identity(3), np.zeros(3))
        assert np.array_equal(x, np.zeros(3))
        assert report.iterations == 0

    def test_reduced_laplace_system(self, interval6):
        A = assemble_bilinear(interval6, Stiffness(1.0), P1_1D)
        b = assemble_load(interval6, -1.0, P1_1D)
        dofmap = build_dofmap(interval6, P1_1D)
        reduced = apply_dirichlet(LinearSystem(A, b), {"left": 1.0, "right": 1.0}, dofmap)
        x, _ = cg_solve(reduced.matrix, reduced.rhs, tol=1e-14)
        assert np.abs(x - np.array([23, 22, 22, 23]) / 25).max() < 1e-12

    def test_matches_lu_on_random_spd(self):
        rng = np.random.default_rng(42)
        A = random_spd(rng, 50)
        b = rng.uniform(-1, 1, 50)
        x_cg, _ = cg_solve(A, b, tol=1e-13)
        x_lu, _ = lu_solve(A, b)
        assert np.abs(x_cg - x_lu).max() < 1e-10

    @pytest.mark.parametrize("n", [20, 120, 500])
    def test_cg_and_lu_agree_across_sizes(self, n):
        rng = np.random.default_rng(n)
        A = random_spd(rng, n)
        b = rng.uniform(-1, 1, n)
        x_cg, _ = cg_solve(A, b, tol=1e-12)
        x_lu, _ = lu_solve(A, b)
        assert np.abs(x_cg - x_lu).max() < 1e-8

    def test_maxit_error_carries_best_iterate(self):
        rng = np.random.default_rng(1)
        A = random_spd(rng, 30)
        b = rng.uniform(-1, 1, 30)
        with pytest.raises(SolverError) as err:
            cg_solve(A, b, tol=1e-16, maxit=1)
        assert err.value.best_x is not None
        assert err.value.residual is not None

    def test_rejects_nonsymmetric(self):
        m = SparseMatrix(2, 2)
        m.add(0, 1, 1.0)
        m.add(0, 0, 2.0)
        m.add(1, 1, 2.0)
        with pytest.raises(ValueError, match="symmetric"):
            cg_solve(m.finalize(), np.ones(2))


class TestLu:
    def test_diagonal_system(self):
        m = SparseMatrix(2, 2)
        m.add(0, 0, 2.0)
        m.add(1, 1, 4.0)
        x, report = lu_solve(m.finalize(), np.array([2.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0], atol=1e-15)
        assert report.method == "lu"

    def test_low_peclet_steady_profile_monotone(self):
        # -mu u'' + beta u' = 0 with u(0)=1, u(1)=0; element Peclet
        # beta*h/(2 mu) = 0.25, so the discrete profile is monotone
        mesh = build_interval_mesh(0.0, 1.0, 20)
        mu, beta = 0.05, 0.5
        dofmap = build_dofmap(mesh, P1_1D)
        A = assemble_bilinear(mesh, Stiffness(mu), dofmap)
        V = assemble_bilinear(mesh, Convection(beta), dofmap)
        K = SparseMatrix.from_csr(A.csr + V.csr)
        reduced = apply_dirichlet(
            LinearSystem(K, np.zeros(dofmap.n_dofs)), {"left": 1.0, "right": 0.0}, dofmap
        )
        x, _ = lu_solve(reduced.matrix, reduced.rhs)
        full = reduced.reconstruct(x)
        assert np.all(np.diff(full) < 1e-12)
        assert full[0] == 1.0 and full[-1] == 0.0

    def test_residual_contract_on_diagonally_dominant(self):
        rng = np.random.default_rng(77)
        for n in (10, 40):
            dense = rng.uniform(-1, 1, size=(n, n))
            dense += np.diag(np.abs(dense).sum(axis=1) + 1.0)
            m = SparseMatrix(n, n)
            m.add_block(np.arange(n), np.arange(n), dense)
            b = rng.uniform(-1, 1, n)
            x, report = lu_solve(m.finalize(), b)
            assert report.residual <= 1e-10 * np.linalg.norm(b)

    def test_singular_matrix_rejected(self):
        m = SparseMatrix(2, 2)
        m.add(0, 0, 1.0)
        m.add(0, 1, 1.0)
        m.add(1, 0, 1.0)
        m.add(1, 1, 1.0)
        with pytest.raises(SingularMatrixError):
            lu_solve(m.finalize(), np.ones(2))

    def test_factorization_reuse(self):
        rng = np.random.default_rng(5)
        A = random_spd(rng, 12)
        lu = LuFactorization(A)
        for _ in range(3):
            b = rng.uniform(-1, 1, 12)
            x = lu.solve(b)
            assert np.linalg.norm(b - A.matvec(x)) < 1e-10 * np.linalg.norm(b)
