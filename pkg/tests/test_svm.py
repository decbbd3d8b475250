import json
import warnings

import numpy as np
import pytest

from gappy_bci.errors import ConfigError, DimensionMismatch, SingleClassData
from gappy_bci.svm import (NoConvergence, SvmModel, SvmParams, dual_objective, predict_svm,
                           rbf_kernel, select_hyperparams, smo, to_signed, train_svm)

from oracles import dual_by_projected_gradient, dual_value, gaussian_kernel, separable_blobs


def random_problem(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = np.where(X[:, 0] + 0.8 * rng.normal(size=n) > 0, 1, -1)
    y[:2] = (1, -1)
    return X, y


def kkt_violation(alpha, y, f, C):
    yf = y * f
    free = (alpha > 0) & (alpha < C)
    v = np.zeros_like(yf)
    v[alpha == 0] = np.maximum(0, 1 - yf[alpha == 0])
    v[alpha >= C] = np.maximum(0, yf[alpha >= C] - 1)
    v[free] = np.abs(yf[free] - 1)
    return v.max()


def test_two_point_problem():
    m = train_svm([[0.0], [1.0]], [1, -1], SvmParams(C=1e6, gamma=1.0))
    assert m.support_vectors.shape[0] == 2
    _, f = m.predict([[0.5]])
    assert abs(f[0]) < 1e-9
    assert m.predict([[0.49]])[0][0] == 1 and m.predict([[0.51]])[0][0] == -1


@pytest.mark.parametrize("n", [20, 30])
@pytest.mark.parametrize("seed", range(5))
def test_dual_objective_matches_oracle(n, seed):
    X, y = random_problem(seed, n)
    C, gamma = 1.0, 0.5
    K = gaussian_kernel(X, gamma)
    sol = smo(rbf_kernel(X, X, gamma), y, C, tolerance=1e-6)
    ref = dual_by_projected_gradient(K, y, C)
    assert abs(y @ ref) < 1e-9
    assert abs(dual_objective(sol.alpha, y, K) - dual_value(ref, y, K)) <= 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_constraints_and_kkt(seed):
    X, y = random_problem(seed, 40)
    for C in (0.1, 1.0, 100.0):
        K = rbf_kernel(X, X, 0.3)
        sol = smo(K, y, C, tolerance=1e-3)
        assert sol.converged
        assert np.all((sol.alpha >= 0) & (sol.alpha <= C))
        assert abs(sol.alpha @ y) < 1e-9
        f = K @ (sol.alpha * y) - sol.rho
        assert kkt_violation(sol.alpha, y, f, C) <= 1e-3


def test_model_predicts_free_support_vectors_correctly():
    X, y = random_problem(7, 40)
    params = SvmParams(C=1.0, gamma=0.3)
    m = train_svm(X, y, params)
    assert abs(m.coef.sum()) < 1e-9
    assert np.all(np.abs(m.coef) <= params.C)
    free = np.abs(m.coef) < params.C
    assert free.any()
    cls, _ = m.predict(m.support_vectors[free])
    np.testing.assert_array_equal(cls, np.sign(m.coef[free]).astype(int))


def test_kernel_properties():
    X = np.random.default_rng(0).normal(size=(15, 4))
    K = rbf_kernel(X, X, 0.7)
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_array_equal(np.diag(K), 1.0)
    np.testing.assert_allclose(K, gaussian_kernel(X, 0.7), rtol=1e-12)


def test_decision_value_continuous():
    X, y = random_problem(3, 30)
    m = train_svm(X, y, SvmParams())
    x = np.random.default_rng(1).normal(size=(20, 3))
    d = np.random.default_rng(2).normal(size=x.shape)
    d *= 1e-9 / np.linalg.norm(d, axis=1, keepdims=True)
    assert np.max(np.abs(m.decision_function(x + d) - m.decision_function(x))) < 1e-6


def test_sign_zero_is_positive():
    m = SvmModel(np.zeros((1, 2)), np.array([0.0]), 0.0, 1.0)
    cls, f = predict_svm(m, [[1.0, 1.0]])
    assert f[0] == 0 and cls[0] == 1


def test_blobs_test_accuracy():
    X, y = separable_blobs(seed=0)
    Xt, yt = separable_blobs(seed=1)
    m = train_svm(X, to_signed(y), SvmParams())
    assert np.mean(m.predict(Xt)[0] == to_signed(yt)) >= 0.95


def test_select_hyperparams():
    X, y = separable_blobs(n_per_class=40, seed=0)
    ys = to_signed(y)
    assert select_hyperparams(X, ys, grid=[(10.0, 0.5)]).C == 10.0
    params, scores = select_hyperparams(X, ys, seed=3, return_scores=True)
    assert scores[(params.C, params.gamma)] >= 0.95
    assert len(scores) == 20 and (1.0, 1 / 56) in scores
    assert select_hyperparams(X, ys, seed=3) == params


def test_tie_break_prefers_small_c_then_small_gamma():
    X, y = separable_blobs(n_per_class=20, dim=4, seed=0)
    params, scores = select_hyperparams(X, to_signed(y), grid=[(100.0, 1.0), (1.0, 10.0), (1.0, 1.0)],
                                        return_scores=True)
    assert set(scores.values()) == {1.0}
    assert (params.C, params.gamma) == (1.0, 1.0)


def test_cv_groups_keep_trials_together():
    from gappy_bci.svm import _fold_ids
    y = np.repeat([1, -1, 1, -1, 1, -1, 1, -1, 1, -1], 5)
    groups = np.repeat(np.arange(10), 5)
    folds = _fold_ids(y, groups, 5, np.random.default_rng(0))
    for g in range(10):
        assert np.unique(folds[groups == g]).size == 1
    for k in range(5):
        assert set(y[folds == k]) == {-1, 1}


def test_errors():
    with pytest.raises(SingleClassData):
        train_svm(np.zeros((4, 2)), [1, 1, 1, 1])
    with pytest.raises(ConfigError):
        train_svm(np.zeros((2, 2)), [0, 1])
    with pytest.raises(ConfigError):
        SvmParams(C=0)
    m = train_svm([[0.0], [1.0]], [1, -1])
    with pytest.raises(DimensionMismatch):
        m.predict([[0.0, 1.0]])


def test_no_convergence_warns():
    X, y = random_problem(0, 30)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        m = train_svm(X, y, SvmParams(C=100.0, max_passes=2))
    assert any(issubclass(x.category, NoConvergence) for x in w)
    assert not m.converged


def test_json_round_trip():
    X, y = random_problem(1, 30)
    m = train_svm(X, y, SvmParams(C=2.0, gamma=0.4))
    back = SvmModel.from_dict(json.loads(json.dumps(m.to_dict())))
    Z = np.random.default_rng(0).normal(size=(100, 3))
    np.testing.assert_array_equal(back.decision_function(Z), m.decision_function(Z))
    assert back.params == m.params
