import numpy as np
import pytest

from vrnet.errors import InvalidInput
from vrnet.microgen import rng_from_seed
from vrnet.spdcore import (
    eig_sym,
    frob_dist,
    frob_norm,
    loewner_leq,
    pinv_sym,
    sym_pack,
    sym_unpack,
)


def test_eig_identity():
    ep = eig_sym(np.eye(2))
    assert np.allclose(ep.values, [1.0, 1.0])
    assert np.allclose(ep.vectors @ ep.vectors.T, np.eye(2), atol=1e-14)


def test_eig_diagonal_sorted_descending():
    ep = eig_sym(np.diag([1.0, 3.0]))
    assert np.allclose(ep.values, [3.0, 1.0])
    # vectors are +-e2, +-e1 up to sign
    assert np.allclose(np.abs(ep.vectors), [[0.0, 1.0], [1.0, 0.0]], atol=1e-14)


def test_eig_construct_then_decompose():
    rng = rng_from_seed(11)
    lam = np.array([5.0, 2.0, -1.0])
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    a = (q * lam) @ q.T
    ep = eig_sym(a)
    assert np.max(np.abs(ep.values - lam)) < 1e-12
    assert frob_dist((ep.vectors * ep.values) @ ep.vectors.T, a) < 1e-12


@pytest.mark.parametrize("m", [2, 3, 6])
def test_eig_matches_lapack_oracle(m):
    rng = rng_from_seed(100 + m)
    for _ in range(25):
        a = rng.normal(size=(m, m))
        a = a + a.T
        ep = eig_sym(a)
        ref = np.linalg.eigvalsh(a)[::-1]
        assert np.max(np.abs(ep.values - ref)) < 1e-10 * max(1.0, np.abs(ref).max())
        # reconstruction and orthonormality
        assert frob_dist((ep.vectors * ep.values) @ ep.vectors.T, a) < 1e-10 * max(1.0, frob_norm(a))
        assert frob_dist(ep.vectors.T @ ep.vectors, np.eye(m)) < 1e-10


def test_eig_rejects_nonfinite():
    with pytest.raises(InvalidInput):
        eig_sym(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_eig_rejects_nonsquare():
    with pytest.raises(InvalidInput):
        eig_sym(np.zeros((2, 3)))


def test_loewner_trivial_cases():
    assert loewner_leq(np.eye(2), 2 * np.eye(2), 0.0)
    assert not loewner_leq(2 * np.eye(2), np.eye(2), 0.0)


def test_loewner_dimension_mismatch():
    with pytest.raises(InvalidInput):
        loewner_leq(np.eye(2), np.eye(3))


def test_loewner_tolerance_is_relative():
    a = np.eye(2)
    b = a - 1e-9 * np.eye(2)
    assert loewner_leq(a, b, tol=1e-8)
    assert not loewner_leq(a, b, tol=1e-10)


def test_pinv_diag():
    assert np.allclose(pinv_sym(np.diag([4.0, 0.0])), np.diag([0.25, 0.0]))


def test_pinv_full_rank_is_inverse():
    rng = rng_from_seed(7)
    a = rng.normal(size=(3, 3))
    spd = a @ a.T + 3 * np.eye(3)
    assert frob_dist(pinv_sym(spd), np.linalg.inv(spd)) < 1e-12


def test_pinv_rank_one_closed_form():
    rng = rng_from_seed(8)
    a = rng.normal(size=4)
    outer = np.outer(a, a)
    expected = outer / np.dot(a, a) ** 2
    assert frob_dist(pinv_sym(outer), expected) < 1e-12


def test_pinv_zero_matrix():
    assert np.allclose(pinv_sym(np.zeros((3, 3))), np.zeros((3, 3)))


def test_frob_examples():
    assert np.isclose(frob_norm(np.eye(2)), np.sqrt(2.0))
    assert np.isclose(frob_norm(np.array([[0.0, 1.0], [1.0, 0.0]])), np.sqrt(2.0))
    a = rng_from_seed(9).normal(size=(3, 3))
    assert frob_dist(a, a) == 0.0


def test_sym_pack_round_trip():
    rng = rng_from_seed(10)
    for m in (2, 3, 6):
        a = rng.normal(size=(m, m))
        a = a + a.T
        assert np.allclose(sym_unpack(sym_pack(a), m), a)
