import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cinderella.regression import (
    mahalanobis_inv_norm,
    ridge_init,
    ridge_update,
    theta_hat,
)


def test_init_identity():
    st0 = ridge_init(2, 1.0)
    np.testing.assert_allclose(st0.lam, np.eye(2))
    np.testing.assert_allclose(st0.lam_inv, np.eye(2))
    assert st0.count == 0


def test_init_scalar_inverse():
    st0 = ridge_init(1, 2.0)
    np.testing.assert_allclose(st0.lam_inv, [[0.5]])


def test_init_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        ridge_init(3, 0.0)


def test_rank_one_update_2x2():
    st0 = ridge_init(2, 1.0)
    ridge_update(st0, np.array([1.0, 1.0]), 1.0)
    np.testing.assert_allclose(st0.lam, [[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(st0.lam_inv, np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3.0)


def test_zero_feature_update_is_noop_except_count():
    st0 = ridge_init(3, 1.0)
    ridge_update(st0, np.zeros(3), 1.0)
    np.testing.assert_allclose(st0.lam, np.eye(3))
    assert st0.count == 1


def test_rejects_non_finite():
    st0 = ridge_init(2, 1.0)
    with pytest.raises(ValueError):
        ridge_update(st0, np.array([np.nan, 0.0]), 1.0)
    with pytest.raises(ValueError):
        ridge_update(st0, np.array([1.0, 0.0]), float("inf"))


def test_theta_hat_fresh_state_is_zero():
    assert np.all(theta_hat(ridge_init(4, 1.0)) == 0.0)


def test_theta_hat_single_update():
    st0 = ridge_init(3, 1.0)
    ridge_update(st0, np.array([1.0, 0.0, 0.0]), 1.0)
    np.testing.assert_allclose(theta_hat(st0), [0.5, 0.0, 0.0])


def test_theta_hat_recovers_noiseless_linear(rng):
    d = 4
    theta_true = rng.normal(size=d)
    theta_true /= np.linalg.norm(theta_true)
    st0 = ridge_init(d, 1.0)
    for _ in range(500):
        phi = rng.uniform(-1, 1, size=d)
        ridge_update(st0, phi, float(phi @ theta_true))
    assert np.linalg.norm(theta_hat(st0) - theta_true) <= 0.05


def test_mahalanobis_identity():
    st0 = ridge_init(2, 1.0)
    assert mahalanobis_inv_norm(st0, np.array([3.0, 4.0])) == pytest.approx(5.0)
    assert mahalanobis_inv_norm(st0, np.zeros(2)) == 0.0


def test_mahalanobis_diagonal():
    st0 = ridge_init(2, 1.0)
    st0.lam = np.diag([4.0, 1.0])
    st0.lam_inv = np.diag([0.25, 1.0])
    assert mahalanobis_inv_norm(st0, np.array([2.0, 0.0])) == pytest.approx(1.0)


def test_incremental_inverse_matches_direct(rng):
    d = 10
    st0 = ridge_init(d, 1.0)
    for _ in range(1000):
        ridge_update(st0, rng.normal(size=d), float(np.clip(rng.normal(), -1, 2)))
    direct = np.linalg.inv(st0.lam)
    assert np.max(np.abs(st0.lam_inv - direct)) <= 1e-8


def test_symmetry_preserved_many_updates(rng):
    st0 = ridge_init(6, 1.0)
    for _ in range(10_000):
        ridge_update(st0, rng.normal(size=6), 0.5)
    assert np.max(np.abs(st0.lam - st0.lam.T)) <= 1e-12


def test_monotone_bonus_shrinkage(rng):
    st0 = ridge_init(5, 1.0)
    probe = rng.normal(size=5)
    prev = mahalanobis_inv_norm(st0, probe)
    for _ in range(200):
        ridge_update(st0, rng.normal(size=5), 0.0)
        cur = mahalanobis_inv_norm(st0, probe)
        assert cur <= prev + 1e-12
        prev = cur


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=2))
@settings(max_examples=50, deadline=None)
def test_update_keeps_inverse_consistent(phi):
    st0 = ridge_init(2, 1.0)
    ridge_update(st0, np.array(phi), 1.0)
    np.testing.assert_allclose(st0.lam @ st0.lam_inv, np.eye(2), atol=1e-10)
