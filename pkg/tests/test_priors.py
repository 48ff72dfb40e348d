import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_dataset, random_labels
from oracles import hsic_brute_force, hsic_value
from swmlda.data import MultiLabelDataset
from swmlda.errors import ConfigError, EmptyClassError
from swmlda.priors import (ConvergenceWarning, baseline_weight_matrix, class_means, compute_priors,
                           correlation_matrix, correlation_weights, dependence_memberships,
                           fuzzy_membership_update, fuzzy_memberships, hsic_objective,
                           misclassification_values, prior_binary, prior_correlation,
                           prior_dependence, prior_entropy, prior_fuzzy, prior_misclassification)


def _ds(X, Y):
    return MultiLabelDataset(np.asarray(X, float), np.asarray(Y))


# -- correlation ---------------------------------------------------------------


def test_correlation_matrix_cases():
    same = correlation_matrix([[1, 0, 1], [1, 0, 1]])
    assert same[0, 1] == pytest.approx(1.0)
    disjoint = correlation_matrix([[1, 0, 0], [0, 1, 1]])
    assert disjoint[0, 1] == 0.0
    half = correlation_matrix([[1, 1, 0], [0, 1, 1]])
    assert half[0, 1] == pytest.approx(0.5, abs=1e-15)


def test_correlation_weights_cases():
    R = np.array([[1.0, 0.5], [0.5, 1.0]])
    np.testing.assert_allclose(correlation_weights(np.array([[1], [1]]), R)[0], [0.75, 0.75])
    np.testing.assert_allclose(correlation_weights(np.array([[1], [1], [0]]), np.eye(3))[0],
                               [0.5, 0.5, 0.0])
    np.testing.assert_allclose(correlation_weights(np.array([[0], [1]]), R)[0], [0.5, 1.0])


def test_prior_correlation_values():
    R = np.array([[1.0, 0.5], [0.5, 1.0]])
    ds = _ds([[0.0, 1.0]], [[1, 1], [0, 1]])
    pd = prior_correlation(ds, 0, R)
    np.testing.assert_allclose(pd.values, [0.0, 0.25])


def test_prior_correlation_disjoint_is_zero():
    ds = _ds(np.arange(6.0)[None], [[1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0], [0, 0, 0, 0, 1, 1]])
    for c in range(3):
        assert np.all(prior_correlation(ds, c).values == 0.0)


# -- binary / entropy ------------------------------------------------------------------


def test_prior_binary():
    ds = _ds(np.zeros((1, 3)), [[1, 1, 1]])
    np.testing.assert_array_equal(prior_binary(ds, 0).values, [1, 1, 1])
    np.testing.assert_array_equal(prior_binary(ds, 0, 0.0).values, [0, 0, 0])
    with pytest.raises(ConfigError):
        prior_binary(ds, 0, -1.0)


def test_prior_entropy_exact():
    Y = np.array([[1, 1, 1], [0, 1, 1], [0, 0, 1], [0, 0, 1]])
    ds = _ds(np.zeros((1, 3)), Y)
    vals = prior_entropy(ds, 0).values
    assert vals.tolist() == [0.0, 0.5, 0.75]


def test_empty_class_raises():
    ds = _ds(np.zeros((1, 2)), [[1, 1], [0, 0]])
    with pytest.raises(EmptyClassError):
        prior_entropy(ds, 1)
    assert compute_priors(ds, "e")[1] is None


# -- misclassification ------------------------------------------------------------------


def _two_class_line():
    # class 0 members at x = -3, -1, 1, 3 (mean 0); class 1 single member at x = 4
    X = np.array([[-3.0, -1.0, 1.0, 3.0, 4.0], [0.0, 0.0, 0.0, 0.0, 0.0]])
    Y = np.array([[1, 1, 1, 1, 0], [0, 0, 0, 0, 1]])
    return _ds(X, Y)


def test_misclassification_branches():
    ds = _two_class_line()
    means, mask = class_means(ds.X, ds.Y)
    np.testing.assert_allclose(means[:, 0], [0, 0])
    np.testing.assert_allclose(means[:, 1], [4, 0])
    vals = prior_misclassification(ds, 0).values
    # x=1: d_own 1 < d_rival 9 -> 0; x=3: d_own 9, d_rival 1 -> 9
    np.testing.assert_array_equal(vals, [0.0, 0.0, 0.0, 9.0])
    assert prior_misclassification(ds, 1).values.tolist() == [0.0]


def test_misclassification_values_tie_and_floor():
    v = misclassification_values(np.array([4.0, 1.0, 0.0]), np.array([4.0, 2.0, 0.0]))
    assert v[0] == 1.0 and v[1] == 0.0
    assert np.isfinite(v[2])


def test_misclassification_single_class():
    ds = _ds(np.zeros((1, 2)), [[1, 1]])
    with pytest.raises(ConfigError):
        compute_priors(ds, "m")


# -- fuzzy -----------------------------------------------------------------------


def test_fuzzy_update_hand_values():
    Y = np.array([[1, 1, 1], [1, 1, 0]])
    sq = np.array([[1.0, 4.0], [2.0, 2.0], [3.0, 0.5]])
    w = fuzzy_membership_update(sq, Y)
    np.testing.assert_allclose(w[0], [0.8, 0.2], atol=1e-15)
    np.testing.assert_allclose(w[1], [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(w[2], [1.0, 0.0], atol=1e-15)


def test_fuzzy_zero_distance_is_finite():
    w = fuzzy_membership_update(np.array([[0.0, 4.0]]), np.array([[1], [1]]))
    assert np.all(np.isfinite(w)) and w[0, 0] > 0.999


def test_fuzzy_constraint_at_convergence(rng):
    ds = random_dataset(rng, N=40, C=4, D=3)
    mm = fuzzy_memberships(ds.X, ds.Y)
    assert mm.converged
    np.testing.assert_allclose((mm.w * ds.Y.T).sum(axis=1), 1.0, atol=1e-8)
    assert np.all(mm.w[ds.Y.T == 0] == 0)
    pd = prior_fuzzy(ds, 1, membership=mm)
    np.testing.assert_allclose(pd.values, 1.0 - mm.w[pd.member_indices, 1])


def test_fuzzy_non_convergence_warns(rng):
    ds = random_dataset(rng, N=40, C=4, D=3, p=0.7)
    with pytest.warns(ConvergenceWarning):
        mm = fuzzy_memberships(ds.X, ds.Y, max_iters=1, tol=1e-300)
    assert not mm.converged and mm.warnings


# -- dependence (HSIC) ----------------------------------------------------------------


def test_hsic_objective_matches_trace_form(rng):
    for _ in range(20):
        X = rng.normal(size=(3, 7))
        Y = random_labels(rng, 3, 7)
        w = rng.random((7, 3)) * Y.T
        assert hsic_objective(X, Y, w) == pytest.approx(hsic_value(X, Y, w), rel=1e-12, abs=1e-12)


def test_hsic_single_label_is_forced():
    Y = np.array([[1, 0, 1], [0, 1, 0]])
    mm = dependence_memberships(np.array([[0.0, 1.0, 3.0]]), Y)
    np.testing.assert_array_equal(mm.w, Y.T)
    ds = _ds([[0.0, 1.0, 3.0]], Y)
    assert prior_dependence(ds, 0).values.tolist() == [0.0, 0.0]


def test_hsic_two_by_two_brute_force(rng):
    for _ in range(200):
        X = rng.normal(size=(2, 2))
        Y = np.ones((2, 2), dtype=int)
        w = dependence_memberships(X, Y).w
        assert hsic_value(X, Y, w) == pytest.approx(hsic_brute_force(X, Y), rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hsic_rows_one_hot_and_locally_optimal(seed):
    """Terminal rows are one-hot over positive labels, and no single-row move improves."""
    r = np.random.default_rng(seed)
    N, C = int(r.integers(2, 12)), int(r.integers(2, 5))
    X, Y = r.normal(size=(3, N)), random_labels(r, C, N, 0.5)
    mm = dependence_memberships(X, Y)
    assert mm.converged
    w = mm.w
    assert np.all(w.sum(axis=1) == 1.0) and np.all((w == 0) | (w == 1))
    assert np.all(w[Y.T == 0] == 0)
    f = hsic_value(X, Y, w)
    for i in range(N):
        for k in np.flatnonzero(Y[:, i]):
            alt = w.copy()
            alt[i] = 0
            alt[i, k] = 1
            assert hsic_value(X, Y, alt) <= f + 1e-9 * max(1.0, abs(f))


# -- dispatch / baselines ----------------------------------------------------------------


@pytest.mark.parametrize("form", list("mcbefd"))
def test_priors_nonnegative_finite(form, rng):
    ds = random_dataset(rng, N=25, C=4, D=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for pd in compute_priors(ds, form):
            assert np.all(pd.values >= 0) and np.all(np.isfinite(pd.values))
            if form == "e":
                assert np.all(pd.values < 1)
                single = ds.Y[:, pd.member_indices].sum(axis=0) == 1
                assert np.array_equal(pd.values == 0, single)


def test_baseline_forms(rng):
    ds = random_dataset(rng, N=20, C=3, D=3)
    Y = ds.Y.astype(float)
    np.testing.assert_array_equal(baseline_weight_matrix(ds, "binary"), Y)
    ent = baseline_weight_matrix(ds, "entropy")
    np.testing.assert_allclose(ent, Y / Y.sum(axis=0))
    fz = baseline_weight_matrix(ds, "fuzzy")
    np.testing.assert_allclose(fz.sum(axis=0), 1.0, atol=1e-8)
    for form in ("correlation", "fuzzy", "dependence"):
        P = baseline_weight_matrix(ds, form)
        assert np.all(P[Y == 0] == 0) and np.all(P >= 0)
    with pytest.raises(ConfigError):
        baseline_weight_matrix(ds, "nope")
