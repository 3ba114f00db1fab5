import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ris_zf import numerics
from ris_zf.errors import DimensionError, DomainError
from conftest import cn, random_hermitian


def test_evd_diagonal():
    lam, vec = numerics.hermitian_evd(np.diag([1.0, 2.0]))
    np.testing.assert_allclose(lam, [2.0, 1.0])
    np.testing.assert_allclose(np.abs(vec), [[0, 1], [1, 0]])


def test_evd_swap_matrix():
    lam, _ = numerics.hermitian_evd([[0, 1], [1, 0]])
    np.testing.assert_allclose(lam, [1.0, -1.0], atol=1e-15)


def test_evd_matches_general_eig_oracle(rng):
    a = random_hermitian(rng, 6)
    lam, vec = numerics.hermitian_evd(a)
    oracle = np.sort(np.real(scipy.linalg.eigvals(a)))[::-1]
    np.testing.assert_allclose(lam, oracle, atol=1e-9)
    for j in range(6):
        resid = np.linalg.norm(a @ vec[:, j] - lam[j] * vec[:, j])
        assert resid <= 1e-10 * (1 + np.linalg.norm(a))
    np.testing.assert_allclose(vec.conj().T @ vec, np.eye(6), atol=1e-10)


def test_evd_rejects_non_square():
    with pytest.raises(DimensionError):
        numerics.hermitian_evd(np.ones((2, 3)))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 16), seed=st.integers(0, 2**32 - 1))
def test_evd_reconstruction(n, seed):
    a = random_hermitian(np.random.default_rng(seed), n)
    lam, v = numerics.hermitian_evd(a)
    assert np.all(np.diff(lam) <= 0)
    err = np.linalg.norm(v @ np.diag(lam) @ v.conj().T - a)
    assert err <= 1e-9 * (1 + np.linalg.norm(a))


def test_qr_identity():
    q, r = numerics.thin_qr(np.eye(3))
    np.testing.assert_allclose(q @ r, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(np.abs(q), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(np.abs(r), np.eye(3), atol=1e-15)


def test_qr_single_column():
    q, r = numerics.thin_qr([[2.0], [0.0]])
    assert q.shape == (2, 1) and r.shape == (1, 1)
    assert abs(abs(r[0, 0]) - 2.0) < 1e-15
    np.testing.assert_allclose(q @ r, [[2.0], [0.0]], atol=1e-15)


def test_qr_tall_random(rng):
    m = cn(rng, 40, 5)
    q, r = numerics.thin_qr(m)
    np.testing.assert_allclose(q.conj().T @ q, np.eye(5), atol=1e-10)
    assert np.allclose(np.tril(r, -1), 0)
    assert np.linalg.norm(q @ r - m) <= 1e-10 * (1 + np.linalg.norm(m))


def test_qr_wide_rejected():
    with pytest.raises(DimensionError):
        numerics.thin_qr(np.ones((2, 3)))


@settings(max_examples=30, deadline=None)
@given(m=st.integers(1, 129), n=st.integers(1, 13), seed=st.integers(0, 2**32 - 1))
def test_qr_properties(m, n, seed):
    if m < n:
        m, n = n, m
    a = cn(np.random.default_rng(seed), m, n)
    q, r = numerics.thin_qr(a)
    np.testing.assert_allclose(q.conj().T @ q, np.eye(n), atol=1e-10)
    assert np.allclose(np.tril(r, -1), 0)


def test_pinv_diagonal():
    np.testing.assert_allclose(numerics.pseudoinverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))


def test_pinv_identity_and_zero():
    np.testing.assert_allclose(numerics.pseudoinverse(np.eye(3)), np.eye(3), atol=1e-15)
    z = numerics.pseudoinverse(np.zeros((2, 4)))
    assert z.shape == (4, 2) and not z.any()


def test_pinv_full_row_rank_normal_equations(rng):
    m = cn(rng, 3, 8)
    oracle = m.conj().T @ np.linalg.inv(m @ m.conj().T)
    np.testing.assert_allclose(numerics.pseudoinverse(m), oracle, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(rows=st.integers(1, 8), cols=st.integers(1, 8), rank=st.integers(0, 8),
       seed=st.integers(0, 2**32 - 1))
def test_pinv_penrose_identities(rows, cols, rank, seed):
    rng = np.random.default_rng(seed)
    rank = min(rank, rows, cols)
    m = cn(rng, rows, rank) @ cn(rng, rank, cols)
    p = numerics.pseudoinverse(m)
    tol = 1e-9 * (1 + np.linalg.norm(m))
    assert np.linalg.norm(m @ p @ m - m) <= tol
    assert np.linalg.norm(p @ m @ p - p) <= 1e-9 * (1 + np.linalg.norm(p))
    assert np.linalg.norm((m @ p).conj().T - m @ p) <= tol
    assert np.linalg.norm((p @ m).conj().T - p @ m) <= tol


def test_weighted_pair_diagonal():
    lam, v = numerics.principal_eigpair_psd_weighted(np.diag([3.0, 1.0]), [1.0, 1.0])
    assert lam == pytest.approx(3.0)
    np.testing.assert_allclose(np.abs(v), [1.0, 0.0], atol=1e-15)


def test_weighted_pair_weight_dominates():
    lam, v = numerics.principal_eigpair_psd_weighted(np.eye(2), [5.0, 2.0])
    assert lam == pytest.approx(5.0)
    np.testing.assert_allclose(np.abs(v), [1.0, 0.0], atol=1e-15)


def test_weighted_pair_matches_nonsymmetric_oracle(rng):
    x = cn(rng, 5, 5)
    a = x @ x.conj().T
    g = rng.uniform(0.1, 4.0, 5)
    lam, v = numerics.principal_eigpair_psd_weighted(a, g)
    w, vecs = scipy.linalg.eig(a @ np.diag(g))
    top = np.argmax(w.real)
    assert lam == pytest.approx(w[top].real, rel=1e-9)
    ref = vecs[:, top] / np.linalg.norm(vecs[:, top])
    assert abs(abs(np.vdot(ref, v)) - 1.0) < 1e-9
    np.testing.assert_allclose(a @ (g * v), lam * v, atol=1e-9 * lam)
    sg = np.sqrt(g)
    assert lam == pytest.approx(np.linalg.eigvalsh(sg[:, None] * a * sg)[-1], rel=1e-10)


def test_weighted_pair_rejects_nonpositive_weights():
    with pytest.raises(DomainError):
        numerics.principal_eigpair_psd_weighted(np.eye(2), [1.0, 0.0])


def test_op_counter_depends_only_on_shapes():
    with numerics.count_ops() as c1:
        numerics.matmul(np.ones((3, 4)), np.ones((4, 2)))
        numerics.inv(np.eye(3))
    with numerics.count_ops() as c2:
        numerics.matmul(np.zeros((3, 4)), np.zeros((4, 2)))
        numerics.inv(2 * np.eye(3))
    assert c1.flops == c2.flops > 0
    with numerics.count_ops() as c3:
        numerics.matmul(np.ones((3, 40)), np.ones((40, 2)))
    assert c3.flops > c1.flops - 8 * 27
