import numpy as np
import pytest

from oracles import mlknn_by_hand
from swmlda.errors import ConfigError, DimensionError
from swmlda.mlknn import mlknn_fit, mlknn_predict, nearest_neighbors

# six points on a line, two classes
Z6 = np.array([[0.0, 1.0, 2.0, 10.0, 11.0, 12.5]])
Y6 = np.array([[1, 1, 1, 0, 0, 1], [0, 0, 1, 1, 1, 0]])
Q3 = np.array([[0.4, 6.0, 11.6]])


def test_prior_smoothing():
    m = mlknn_fit(np.arange(4.0)[None], np.array([[1, 1, 0, 0]]), k=1)
    assert m.prior[0] == 0.5 and m.prior_neg[0] == 0.5


def test_prior_tends_to_one_without_smoothing():
    m = mlknn_fit(np.arange(5.0)[None], np.ones((1, 5)), k=2, s=1e-9)
    assert m.prior[0] == pytest.approx(1.0, abs=1e-9)


def test_cond_rows_sum_to_one():
    m = mlknn_fit(Z6, Y6, k=3)
    np.testing.assert_allclose(m.cond.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(m.cond_neg.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(m.prior + m.prior_neg, 1.0)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_six_point_hand_trace(k):
    probs, labels = mlknn_by_hand(Z6, Y6, Q3, k)
    pred = mlknn_predict(mlknn_fit(Z6, Y6, k=k), Q3)
    np.testing.assert_allclose(pred.probs, probs, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(pred.labels, labels)


def test_six_point_worked_numbers():
    # k = 2, class 0. Training neighbour counts (self excluded):
    #   x0:{1,2}->2  x1:{0,2}->2  x2:{1,0}->2  x3:{4,5}->1  x4:{3,5}->1  x5:{4,3}->0
    # positives (0,1,2,5) give counts 2,2,2,0 ; negatives (3,4) give 1,1
    m = mlknn_fit(Z6, Y6, k=2)
    np.testing.assert_allclose(m.cond[0], np.array([2, 1, 4]) / 7)
    np.testing.assert_allclose(m.cond_neg[0], np.array([1, 3, 1]) / 5)
    assert m.prior[0] == pytest.approx(5 / 8)
    # query 0.4 -> neighbours {0,1}: two positives
    a, b = 5 / 8 * 4 / 7, 3 / 8 * 1 / 5
    assert mlknn_predict(m, Q3).probs[0, 0] == pytest.approx(a / (a + b), abs=1e-15)


def test_threshold_and_labels():
    m = mlknn_fit(Z6, Y6, k=2)
    pred = mlknn_predict(m, Q3, threshold=0.5)
    np.testing.assert_array_equal(pred.labels, (pred.probs >= 0.5).astype(int))
    assert np.all((pred.probs >= 0) & (pred.probs <= 1))


def test_dominant_cluster(rng):
    Z = np.hstack([rng.normal(0, 0.1, size=(2, 40)), rng.normal(5, 0.1, size=(2, 40))])
    Y = np.zeros((2, 80), dtype=int)
    Y[0, :40] = 1
    Y[1, 40:] = 1
    pred = mlknn_predict(mlknn_fit(Z, Y, k=15), np.zeros((2, 1)))
    assert pred.probs[0, 0] > 0.5 and pred.probs[1, 0] < 0.5


def test_rotation_invariance(rng):
    Z = rng.normal(size=(3, 30))
    Y = (rng.random((2, 30)) < 0.5).astype(int)
    Q = rng.normal(size=(3, 7))
    R = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    a = mlknn_predict(mlknn_fit(Z, Y, k=5), Q)
    b = mlknn_predict(mlknn_fit(R @ Z, Y, k=5), R @ Q)
    np.testing.assert_allclose(a.probs, b.probs, atol=1e-12)


def test_tie_break_lower_index():
    Z = np.array([[1.0, -1.0, 1.0, 5.0]])
    nn = nearest_neighbors(Z, np.zeros((1, 1)), 2)
    assert nn[0].tolist() == [0, 1]
    nn = nearest_neighbors(Z, Z, 1, exclude_self=True)
    assert nn[:, 0].tolist() == [2, 0, 0, 0]  # x=5 ties 0 and 2 -> 0


def test_errors():
    with pytest.raises(ConfigError):
        mlknn_fit(Z6, Y6, k=6)
    with pytest.raises(ConfigError):
        mlknn_fit(Z6, Y6, k=2, s=0.0)
    with pytest.raises(DimensionError):
        mlknn_predict(mlknn_fit(Z6, Y6, k=2), np.zeros((2, 1)))
