import numpy as np
import pytest

from errors import RejectedInputError, SingularityError
from linalg import (
    IncrementalQR,
    adjoint_matvec,
    classical_gram_schmidt,
    dense_lstsq,
    lstsq_min_norm,
    matvec,
    qr_extend,
    qr_solve,
)


def _random_system(rng, m, n, complex_=False):
    A = rng.standard_normal((m, n))
    y = rng.standard_normal(m)
    if complex_:
        A = A + 1j * rng.standard_normal((m, n))
        y = y + 1j * rng.standard_normal(m)
    return A, y


def test_matvec_examples():
    np.testing.assert_array_equal(matvec(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(matvec(np.zeros((2, 3)), [4.0, 5.0, 6.0]), [0.0, 0.0])
    np.testing.assert_array_equal(matvec([[1.0, 2.0], [3.0, 4.0]], [1.0, 1.0]), [3.0, 7.0])


def test_matvec_rejects_mismatch():
    with pytest.raises(RejectedInputError):
        matvec(np.eye(3), [1.0, 2.0])


def test_adjoint_matvec_conjugates():
    np.testing.assert_array_equal(adjoint_matvec(np.eye(2), [5.0, -1.0]), [5.0, -1.0])
    np.testing.assert_allclose(adjoint_matvec(np.array([[1j]]), np.array([1.0 + 0j])), [-1j])


def test_adjoint_matvec_matches_dense_transpose():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((10, 20))
    r = rng.standard_normal(10)
    oracle = np.array([sum(A[i, j] * r[i] for i in range(10)) for j in range(20)])
    np.testing.assert_allclose(adjoint_matvec(A, r), oracle, atol=1e-12)


def test_adjoint_matvec_rejects_mismatch():
    with pytest.raises(RejectedInputError):
        adjoint_matvec(np.eye(3), [1.0])


def test_extend_single_unit_column():
    qr = IncrementalQR(3)
    qr, rejected = qr_extend(qr, np.eye(3), [0])
    assert rejected == []
    np.testing.assert_allclose(qr.q_matrix, np.eye(3)[:, :1])
    np.testing.assert_allclose(qr.r_factor, [[1.0]])


def test_extend_rejects_exactly_dependent_column():
    A = np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
    qr = IncrementalQR(3)
    qr.extend(A, [0])
    rejected = qr.extend(A, [1])
    assert rejected == [1]
    assert qr.selected == [0]


def test_extend_rejects_zero_column():
    qr = IncrementalQR(3)
    assert qr.extend(np.zeros((3, 2)), [0, 1]) == [0, 1]
    assert len(qr) == 0


def test_extend_rejects_duplicates_and_out_of_range():
    qr = IncrementalQR(4)
    qr.extend(np.eye(4), [1])
    with pytest.raises(RejectedInputError):
        qr.extend(np.eye(4), [1])
    with pytest.raises(RejectedInputError):
        qr.extend(np.eye(4), [2, 2])
    with pytest.raises(RejectedInputError):
        qr.extend(np.eye(4), [4])


def test_two_batches_orthonormal_and_reconstruct():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((50, 8))
    qr = IncrementalQR(50)
    qr.extend(A, range(4))
    qr.extend(A, range(4, 8))
    Q, R = qr.q_matrix, qr.r_factor
    assert np.linalg.norm(Q @ R - A) <= 1e-10 * np.linalg.norm(A)
    assert np.linalg.norm(Q.conj().T @ Q - np.eye(8)) <= 1e-10
    assert np.all(np.abs(np.diag(R)) > qr.lin_dep_tol)
    # columns of R reproduce each original column
    for j in range(8):
        np.testing.assert_allclose(Q @ R[:, j], A[:, j], rtol=1e-10, atol=1e-10)


def test_batches_match_single_extension():
    rng = np.random.default_rng(5)
    A, _ = _random_system(rng, 30, 9, complex_=True)
    one = IncrementalQR(30)
    one.extend(A, [3, 1, 7])
    one.extend(A, [0, 8, 2, 5])
    both = IncrementalQR(30)
    both.extend(A, [3, 1, 7, 0, 8, 2, 5])
    assert one.selected == both.selected
    np.testing.assert_allclose(one.q_matrix, both.q_matrix, atol=1e-10)
    np.testing.assert_allclose(one.r_factor, both.r_factor, atol=1e-10)


def test_complex_columns_promote_real_basis():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((12, 3)).astype(np.complex128)
    A[:, 2] += 1j * rng.standard_normal(12)
    qr = IncrementalQR(12)
    qr.extend(A.real, [0, 1])
    assert qr.dtype == np.float64
    assert qr.extend(A, [2]) == []
    assert qr.selected == [0, 1, 2]
    assert qr.dtype == np.complex128
    Q = qr.q_matrix
    np.testing.assert_allclose(Q.conj().T @ Q, np.eye(3), atol=1e-10)


def test_modified_matches_classical_when_well_conditioned():
    rng = np.random.default_rng(21)
    A = rng.standard_normal((30, 8))
    assert np.linalg.cond(A) < 1e3
    qr = IncrementalQR(30)
    qr.extend(A, range(8))
    q_cgs, r_cgs = classical_gram_schmidt(A)
    np.testing.assert_allclose(qr.q_matrix, q_cgs, atol=1e-8)
    np.testing.assert_allclose(qr.r_factor, r_cgs, atol=1e-8)


def test_modified_beats_classical_on_lauchli_columns():
    e = 1e-8
    A = np.array([
        [1.0, 1.0, 1.0],
        [e, 0.0, 0.0],
        [0.0, e, 0.0],
        [0.0, 0.0, e],
    ])
    qr = IncrementalQR(4)
    assert qr.extend(A, [0, 1, 2]) == []
    mgs_loss = np.linalg.norm(qr.q_matrix.T @ qr.q_matrix - np.eye(3))
    q_cgs, _ = classical_gram_schmidt(A)
    cgs_loss = np.linalg.norm(q_cgs.T @ q_cgs - np.eye(3))
    assert cgs_loss > 0.1
    assert mgs_loss * 100 <= cgs_loss


def test_residual_is_orthogonal_to_basis():
    rng = np.random.default_rng(2)
    A, y = _random_system(rng, 40, 12, complex_=True)
    qr = IncrementalQR(40)
    qr.extend(A, range(12))
    r = qr.residual(y)
    for q in qr.q_columns:
        assert abs(np.vdot(q, r)) <= 1e-10 * np.linalg.norm(y)


def test_one_work_vector_per_processed_column():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((20, 10))
    A[:, 9] = A[:, 0]
    qr = IncrementalQR(20)
    qr.extend(A, [0, 1, 2])
    assert qr.work_vectors_allocated == 3
    qr.extend(A, [3, 9])
    # rejected columns still cost their one vector
    assert qr.work_vectors_allocated == 5
    assert len(qr) == 4


def test_qr_solve_orthonormal_columns():
    qr = IncrementalQR(3)
    qr.extend(np.eye(3), [0, 2])
    np.testing.assert_allclose(qr_solve(qr, [7.0, 0.0, -4.0]), [7.0, -4.0])


def test_qr_solve_orthogonal_rhs_gives_zero():
    qr = IncrementalQR(3)
    qr.extend(np.eye(3), [0, 2])
    np.testing.assert_allclose(qr_solve(qr, [0.0, 5.0, 0.0]), [0.0, 0.0])


def test_qr_solve_empty_basis():
    assert qr_solve(IncrementalQR(3), [1.0, 2.0, 3.0]).size == 0


def test_qr_solve_matches_dense_lstsq():
    rng = np.random.default_rng(60)
    A, y = _random_system(rng, 60, 10)
    qr = IncrementalQR(60)
    qr.extend(A, range(10))
    x_inc, x_dense = qr_solve(qr, y), dense_lstsq(A, y)
    assert np.linalg.norm(x_inc - x_dense) <= 1e-8 * np.linalg.norm(x_dense)


def test_qr_solve_follows_selection_order():
    rng = np.random.default_rng(9)
    A, y = _random_system(rng, 25, 6)
    qr = IncrementalQR(25)
    qr.extend(A, [4, 0, 2])
    expected = dense_lstsq(A[:, [4, 0, 2]], y)
    np.testing.assert_allclose(qr.solve(y), expected, rtol=1e-8)


def test_incremental_solve_agrees_with_dense_over_many_systems():
    rng = np.random.default_rng(1234)
    for trial in range(200):
        m = int(rng.integers(31, 101))
        n = int(rng.integers(1, 31))
        A, y = _random_system(rng, m, n, complex_=bool(trial % 2))
        qr = IncrementalQR(m)
        split = int(rng.integers(0, n + 1))
        qr.extend(A, range(split))
        qr.extend(A, range(split, n))
        x_inc, x_dense = qr.solve(y), dense_lstsq(A, y)
        assert np.linalg.norm(x_inc - x_dense) <= 1e-8 * np.linalg.norm(x_dense)


def test_dense_lstsq_examples():
    y = np.array([3.0, -1.0, 2.0])
    np.testing.assert_allclose(dense_lstsq(np.eye(3), y), y)
    np.testing.assert_allclose(dense_lstsq([[1.0], [1.0]], [1.0, 3.0]), [2.0])


def test_dense_lstsq_errors():
    with pytest.raises(SingularityError):
        dense_lstsq([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]], [1.0, 2.0, 3.0])
    with pytest.raises(RejectedInputError):
        dense_lstsq(np.ones((2, 3)), [1.0, 2.0])
    with pytest.raises(RejectedInputError):
        dense_lstsq(np.eye(3), [1.0, 2.0])


def test_lstsq_min_norm_handles_rank_deficiency():
    A = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    x = lstsq_min_norm(A, [2.0, 2.0, 0.0])
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-12)


def test_non_finite_input_rejected():
    with pytest.raises(RejectedInputError):
        matvec([[np.nan, 1.0]], [1.0, 1.0])
