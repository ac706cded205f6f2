"""SVR solver tests: oracle equivalence, KKT feasibility, weighting, search."""

import numpy as np
import pytest

from fffwidth.data import Dataset, ORIGIN_TARGET, derived_rng, fit_scaler
from fffwidth.errors import DidNotConverge, EmptyGrid, TooFewSamples, WeightMismatch
from fffwidth.svr import (
    SvrModel,
    SvrParams,
    default_param_grid,
    dual_objective,
    fit_weighted_svr,
    gram,
    grid_search_cv,
    predict,
    rbf_kernel,
)

from qp_oracle import reference_predict, solve_svr_dual_reference


def make_dataset(n, seed=0, h=0.7):
    rng = derived_rng(seed)
    f = rng.uniform(150, 750, n)
    s = rng.uniform(350, 725, n)
    w = 0.9 * (f / s) ** 0.6 + 0.1 + rng.normal(0, 0.02, n)
    return Dataset(f, s, np.full(n, h), np.maximum(w, 0.0), [ORIGIN_TARGET] * n)


# Six-sample fixture solved independently by the projected-gradient reference
# solver; values frozen from that run (tight production tolerance reproduces
# the objective to ~1e-14 relative).
FROZEN = dict(
    f=np.array([200.0, 300.0, 400.0, 500.0, 600.0, 700.0]),
    s=np.array([400.0, 450.0, 500.0, 550.0, 600.0, 650.0]),
    w=np.array([0.62, 0.80, 0.95, 1.07, 1.18, 1.28]),
    params=SvrParams(c=10.0, epsilon=0.01, gamma=0.5),
    objective=0.10649599508941915,
    query_f=np.array([250.0, 650.0]),
    query_s=np.array([430.0, 620.0]),
    preds=np.array([0.70022053, 1.2434024]),
)


class TestKernel:
    def test_rbf_range_and_identity(self):
        assert rbf_kernel([1.0, 2.0], [1.0, 2.0], 0.5) == 1.0
        assert 0.0 < rbf_kernel([0.0, 0.0], [3.0, 4.0], 0.1) < 1.0

    def test_gram_symmetry(self):
        X = derived_rng(1).normal(size=(10, 2))
        K = gram(X, X, 0.7)
        assert np.allclose(K, K.T)
        assert np.allclose(np.diag(K), 1.0)

    def test_gram_positive_semidefinite(self):
        X = derived_rng(2).normal(size=(25, 2))
        K = gram(X, X, 1.3)
        # PSD up to numerical jitter: smallest eigenvalue above -1e-10
        assert np.linalg.eigvalsh(K).min() > -1e-10

    def test_gram_matches_scalar_kernel(self):
        X = derived_rng(3).normal(size=(4, 2))
        Z = derived_rng(4).normal(size=(3, 2))
        K = gram(X, Z, 0.9)
        for i in range(4):
            for j in range(3):
                assert K[i, j] == pytest.approx(rbf_kernel(X[i], Z[j], 0.9))


class TestParams:
    @pytest.mark.parametrize("kw", [
        dict(c=0.0, epsilon=0.01, gamma=1.0),
        dict(c=1.0, epsilon=-0.01, gamma=1.0),
        dict(c=1.0, epsilon=0.01, gamma=0.0),
    ])
    def test_invalid_rejected(self, kw):
        with pytest.raises(ValueError):
            SvrParams(**kw)

    def test_zero_epsilon_allowed(self):
        assert SvrParams(c=1.0, epsilon=0.0, gamma=1.0).epsilon == 0.0

    def test_default_grid_size_and_order(self):
        g = default_param_grid()
        assert len(g) == 48
        # c varies slowest so cheaper-regularization candidates win ties first
        assert g[0].c == 0.1 and g[-1].c == 100.0
        assert {p.c for p in g} == {0.1, 1.0, 10.0, 100.0}
        assert {p.gamma for p in g} == {0.01, 0.1, 1.0, 10.0}
        assert {p.epsilon for p in g} == {0.001, 0.01, 0.05}


class TestFrozenFixture:
    def fit(self):
        ds = Dataset(FROZEN["f"], FROZEN["s"], np.full(6, 0.7), FROZEN["w"],
                     [ORIGIN_TARGET] * 6)
        return ds, fit_weighted_svr(ds, None, FROZEN["params"], tol=1e-8)

    def test_objective(self):
        ds, model = self.fit()
        assert dual_objective(model, ds) == pytest.approx(
            FROZEN["objective"], rel=1e-9)

    def test_predictions(self):
        _, model = self.fit()
        got = model.predict_many(FROZEN["query_f"], FROZEN["query_s"])
        assert np.allclose(got, FROZEN["preds"], atol=1e-6)


class TestOracleEquivalence:
    def random_instance(self, rng):
        n = int(rng.integers(3, 9))
        X = rng.normal(size=(n, 2))
        y = rng.normal(size=n)
        c = float(rng.choice([0.5, 5.0, 50.0]))
        eps = float(rng.choice([0.0, 0.01, 0.1]))
        gamma = float(rng.choice([0.1, 1.0, 5.0]))
        weights = rng.uniform(0.2, 1.0, size=n)
        weights /= weights.sum()
        return X, y, SvrParams(c=c, epsilon=eps, gamma=gamma), weights

    def test_matches_reference_solver(self):
        rng = derived_rng(77)
        for _ in range(10):
            X, y, params, weights = self.random_instance(rng)
            n = len(y)
            f = np.abs(X[:, 0]) + 1.0
            s = np.abs(X[:, 1]) + 1.0
            ds = Dataset(f, s, np.ones(n), np.abs(y), [ORIGIN_TARGET] * n)
            model = fit_weighted_svr(ds, weights, params, tol=1e-8)

            scaler = fit_scaler(ds)
            Xs = scaler.transform(ds.features)
            K = gram(Xs, Xs, params.gamma)
            box = params.c * weights * n
            ym = float(np.mean(ds.w))
            ref = solve_svr_dual_reference(K, ds.w - ym, box, params.epsilon,
                                           max_iter=120000)

            ours = dual_objective(model, ds)
            scale = max(abs(ref["objective"]), 1e-12)
            assert abs(ours - ref["objective"]) / scale < 1e-6

            qf = np.array([1.2, 2.0, 3.1])
            qs = np.array([1.5, 1.1, 2.4])
            Xq = scaler.transform(np.stack([qf, qs], axis=1))
            ref_pred = reference_predict(Xs, ref["beta"], ref["bias"] + ym,
                                         Xq, params.gamma)
            assert np.allclose(model.predict_many(qf, qs), ref_pred, atol=1e-5)


class TestKktFeasibility:
    @pytest.mark.parametrize("seed,c", [(0, 1.0), (1, 10.0), (2, 100.0)])
    def test_box_and_equality_at_convergence(self, seed, c):
        ds = make_dataset(40, seed=seed)
        params = SvrParams(c=c, epsilon=0.01, gamma=0.5)
        weights = derived_rng(seed + 10).uniform(0.1, 1.0, 40)
        model = fit_weighted_svr(ds, weights, params)
        beta = model.dual_coef
        box = params.c * (weights / weights.sum()) * 40
        assert np.all(np.abs(beta) <= box + 1e-9)
        assert abs(beta.sum()) < 1e-9  # pairwise updates preserve the equality

    def test_objective_positive_at_solution(self):
        ds = make_dataset(25)
        model = fit_weighted_svr(ds, None, SvrParams(c=10.0, epsilon=0.01, gamma=0.5))
        assert dual_objective(model, ds) >= 0.0  # beta = 0 scores exactly 0


class TestWeighting:
    def test_weight_scale_invariance(self):
        # scaling all weights by a power of two must not change the fit bitwise
        ds = make_dataset(20)
        params = SvrParams(c=5.0, epsilon=0.01, gamma=0.8)
        w = derived_rng(5).uniform(0.1, 1.0, 20)
        a = fit_weighted_svr(ds, w, params)
        b = fit_weighted_svr(ds, w * 4.0, params)
        assert np.array_equal(a.dual_coef, b.dual_coef)
        assert a.bias == b.bias

    def test_upweighted_sample_fits_tighter(self):
        ds = make_dataset(15, seed=3)
        params = SvrParams(c=1.0, epsilon=0.001, gamma=0.5)
        uniform = fit_weighted_svr(ds, None, params)
        w = np.ones(15)
        w[4] = 200.0
        skewed = fit_weighted_svr(ds, w, params)
        res_u = abs(uniform.predict_many([ds.f[4]], [ds.s[4]])[0] - ds.w[4])
        res_s = abs(skewed.predict_many([ds.f[4]], [ds.s[4]])[0] - ds.w[4])
        assert res_s <= res_u + 1e-12

    @pytest.mark.parametrize("bad", [
        np.full(3, 1.0),                 # wrong length
        np.array([1.0, -0.5] + [1.0] * 13),  # negative
        np.zeros(15),                    # zero sum
    ])
    def test_invalid_weights(self, bad):
        ds = make_dataset(15)
        with pytest.raises(WeightMismatch):
            fit_weighted_svr(ds, bad, SvrParams(c=1.0, epsilon=0.01, gamma=1.0))


class TestFit:
    def test_too_few_samples(self):
        ds = make_dataset(5).subset([0])
        with pytest.raises(TooFewSamples):
            fit_weighted_svr(ds, None, SvrParams(c=1.0, epsilon=0.01, gamma=1.0))

    def test_interpolates_training_data_with_loose_tube(self):
        ds = make_dataset(12, seed=9)
        model = fit_weighted_svr(ds, None, SvrParams(c=100.0, epsilon=0.001, gamma=1.0))
        preds = model.predict_dataset(ds)
        assert np.max(np.abs(preds - ds.w)) < 0.05

    def test_constant_targets_give_constant_model(self):
        n = 8
        ds = Dataset(np.linspace(100, 800, n), np.linspace(400, 700, n),
                     np.full(n, 0.7), np.full(n, 0.9), [ORIGIN_TARGET] * n)
        model = fit_weighted_svr(ds, None, SvrParams(c=1.0, epsilon=0.01, gamma=1.0))
        assert np.allclose(model.predict_dataset(ds), 0.9, atol=1e-9)
        assert len(model.support_vectors) == 0

    def test_did_not_converge_carries_model(self):
        ds = make_dataset(30, seed=4)
        with pytest.raises(DidNotConverge) as err:
            fit_weighted_svr(ds, None, SvrParams(c=100.0, epsilon=0.001, gamma=1.0),
                             max_iter=3)
        assert err.value.iterations == 3
        assert err.value.max_violation > 0
        assert isinstance(err.value.model, SvrModel)

    def test_predict_scalar_helper(self):
        ds = make_dataset(10)
        model = fit_weighted_svr(ds, None, SvrParams(c=1.0, epsilon=0.01, gamma=0.5))
        assert predict(model, 400.0, 500.0) == pytest.approx(
            model.predict_many([400.0], [500.0])[0])


class TestSerialization:
    def test_round_trip_predictions(self):
        ds = make_dataset(18, seed=6)
        model = fit_weighted_svr(ds, None, SvrParams(c=10.0, epsilon=0.01, gamma=0.7))
        back = SvrModel.from_dict(model.to_dict())
        qf = np.linspace(150, 750, 9)
        qs = np.linspace(350, 725, 9)
        assert np.allclose(back.predict_many(qf, qs),
                           model.predict_many(qf, qs), atol=1e-12)

    def test_kind_tag(self):
        ds = make_dataset(6)
        model = fit_weighted_svr(ds, None, SvrParams(c=1.0, epsilon=0.01, gamma=1.0))
        assert model.to_dict()["kind"] == "svr"


class TestGridSearch:
    def test_empty_grid(self):
        with pytest.raises(EmptyGrid):
            grid_search_cv(make_dataset(10), None, [], k_folds=2)

    def test_too_few_samples_for_folds(self):
        with pytest.raises(TooFewSamples):
            grid_search_cv(make_dataset(3), None, default_param_grid(), k_folds=5)

    def test_first_wins_on_duplicate_candidates(self):
        ds = make_dataset(20)
        p1 = SvrParams(c=1.0, epsilon=0.01, gamma=0.5)
        p2 = SvrParams(c=1.0, epsilon=0.01, gamma=0.5)
        chosen = grid_search_cv(ds, None, [p1, p2], k_folds=4)
        assert chosen is p1

    def test_picks_obviously_better_candidate(self):
        ds = make_dataset(40, seed=8)
        good = SvrParams(c=10.0, epsilon=0.01, gamma=0.5)
        bad = SvrParams(c=0.1, epsilon=0.05, gamma=10.0)
        assert grid_search_cv(ds, None, [bad, good], k_folds=5) is good

    def test_deterministic_in_seed(self):
        ds = make_dataset(30, seed=2)
        grid = default_param_grid()[:6]
        assert grid_search_cv(ds, None, grid, seed=3) is grid_search_cv(
            ds, None, grid, seed=3)
