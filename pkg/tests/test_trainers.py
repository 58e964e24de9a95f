import numpy as np
import pytest

from helpers import separable_clusters
from smoothrank.data import Dataset, dissimilarity_matrix, make_xor
from smoothrank.master import DistanceColumns, build_bounded_master, solve_master
from smoothrank.metrics import auc_of
from smoothrank.trainers import (CgConfig, DistanceModel, LinearDistanceModel, PrototypeModel,
                                 _l2_subgradient, load_model, model_from_text, model_to_text,
                                 save_model, score, train_linear_baseline, train_prototype_cg)


def small_data(seed=0, n=24, d=2):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.where(X[:, 0] ** 2 + 0.5 * rng.normal(size=n) > 0.6, 1, -1)
    y[:2] = [1, -1]
    return Dataset(X, y)


class TestScore:
    def test_single_prototype(self):
        assert score(DistanceModel([[0.0, 0.0]], [1.0]), [3.0, 4.0]) == 5.0

    def test_zero_weights(self):
        m = DistanceModel([[0.0, 0.0], [1.0, 1.0]], [0.0, 0.0])
        assert np.all(m.decision_function(np.random.default_rng(0).normal(size=(5, 2))) == 0)

    def test_matrix_oracle(self, rng):
        Q, w, X = rng.normal(size=(4, 3)), rng.normal(size=4), rng.normal(size=(9, 3))
        m = DistanceModel(Q, w)
        np.testing.assert_allclose(m.decision_function(X), dissimilarity_matrix(Q, X) @ w,
                                   atol=1e-12, rtol=0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            DistanceModel([[0.0, 0.0]], [1.0]).decision_function([[1.0, 2.0, 3.0]])

    def test_invalid_models(self):
        with pytest.raises(ValueError):
            DistanceModel([[0.0]], [1.0, 2.0])
        with pytest.raises(ValueError):
            DistanceModel([[np.inf]], [1.0])


class TestConfig:
    def test_mode_parameters(self):
        with pytest.raises(ValueError):
            CgConfig("smooth")
        with pytest.raises(ValueError):
            CgConfig("bounded_cg", C=1.0, alpha_tol=1e-3)
        with pytest.raises(ValueError):
            CgConfig("nope", C=1.0)
        assert CgConfig("smooth", C=1.0).with_param(0.5).C == 0.5
        assert CgConfig("unbounded_cg", alpha_tol=1e-3).with_param(1e-4).alpha_tol == 1e-4


class TestColumnGeneration:
    def test_deterministic(self):
        ds = small_data()
        cfg = CgConfig("smooth", C=0.01, seed=3, max_iters=6)
        m1, h1 = train_prototype_cg(ds, cfg)
        m2, h2 = train_prototype_cg(ds, cfg)
        np.testing.assert_array_equal(m1.prototypes, m2.prototypes)
        np.testing.assert_array_equal(m1.weights, m2.weights)
        assert h1.column("train_auc") == h2.column("train_auc")
        assert h1.stop_reason == h2.stop_reason

    @pytest.mark.parametrize("mode,kw", [("smooth", dict(C=0.01)),
                                         ("bounded_cg", dict(alpha_tol=1e-5)),
                                         ("unbounded_cg", dict(alpha_tol=1e-5))])
    def test_one_prototype_per_iteration(self, mode, kw):
        ds = small_data(1)
        model, hist = train_prototype_cg(ds, CgConfig(mode, max_iters=5, **kw))
        assert [r.n_prototypes for r in hist.records] == [r.t for r in hist.records]
        assert model.n_prototypes == len(hist)
        assert hist.stop_reason

    @pytest.mark.parametrize("mode,kw", [("smooth", dict(C=0.01)),
                                         ("bounded_cg", dict(alpha_tol=1e-5))])
    def test_final_auc_matches_score(self, mode, kw):
        ds = small_data(2)
        model, hist = train_prototype_cg(ds, CgConfig(mode, max_iters=8, **kw))
        assert auc_of(model.decision_function(ds.features), ds.labels) == \
            hist.records[-1].train_auc

    def test_separable_converges_quickly(self):
        X, y = separable_clusters(seed=4)
        model, hist = train_prototype_cg(Dataset(X, y), CgConfig("smooth", C=0.01))
        assert hist.records[-1].train_auc == 1.0
        assert len(hist) <= 3
        assert hist.stop_reason == "auc_ratio"

    def test_dual_feasibility_each_iteration(self):
        ds = small_data(3)
        seen = []

        def cb(t, mp, sol):
            seen.append((t, sol.newest_residual, sol.pi.min(), sol.pi.max()))

        _, hist = train_prototype_cg(ds, CgConfig("smooth", C=0.001, max_iters=6), callback=cb)
        assert [s[0] for s in seen] == [r.t for r in hist.records]
        for _, res, lo, hi in seen:
            assert res <= 1e-6
            assert lo >= -1e-9 and hi <= 1 + 1e-9

    def test_huge_smoothing_freezes_weights(self):
        ds = small_data(5)
        _, hist = train_prototype_cg(ds, CgConfig("smooth", C=1e9, max_iters=5,
                                                  convergence_tol=0.0))
        ws = hist.column("weights")
        for prev, cur in zip(ws, ws[1:]):
            np.testing.assert_allclose(cur[:-1], prev, atol=1e-6, rtol=0)

    def test_test_auc_recorded(self):
        ds = make_xor(10, 0.1, 0)
        _, hist = train_prototype_cg(ds, CgConfig("smooth", C=0.01, max_iters=3), test=ds)
        assert all(r.test_auc is not None for r in hist.records)
        assert hist.max_drop() >= 0.0

    def test_single_class_rejected(self):
        with pytest.raises(Exception):
            train_prototype_cg(Dataset([[0.0], [1.0]], [1, 1]), CgConfig("smooth", C=0.1))


class TestBaselines:
    def test_linf_is_bounded_master(self):
        ds = small_data(6, n=16)
        model = train_linear_baseline(ds, "Linf", 1.0)
        cols = DistanceColumns.from_dataset(ds)
        for x in ds.features:
            cols.append(x)
        ref = solve_master(build_bounded_master(cols))
        Delta = cols.delta_matrix()
        xi = np.maximum(0, 1 - model.weights @ Delta).sum()
        assert xi == pytest.approx(ref.objective, abs=1e-8)
        assert np.all(np.abs(model.weights) <= 1 + 1e-9)

    def test_l1_large_c_separable(self):
        X, y = separable_clusters(n_per=8, seed=1)
        ds = Dataset(X, y)
        model = train_linear_baseline(ds, "L1", 1e6)
        D = dissimilarity_matrix(ds, ds)
        s = D @ model.weights
        xi = np.maximum(0, 1 - (s[ds.pos_idx][:, None] - s[ds.neg_idx][None, :]))
        assert xi.sum() == pytest.approx(0.0, abs=1e-6)

    def test_l2_marked_approximate(self):
        ds = small_data(7, n=12)
        model = train_linear_baseline(ds, "L2", 0.1)
        assert isinstance(model, LinearDistanceModel) and model.approximate
        assert [it for it, _ in model.checkpoints] == list(range(100, 2001, 100))

    @pytest.mark.parametrize("seed", range(20))
    def test_l2_checkpoints_non_increasing(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(8, 20))
        F = np.abs(rng.normal(size=(n, n)))
        pos = np.arange(n // 3)
        neg = np.arange(n // 3, n)
        _, cps = _l2_subgradient(F, pos, neg, C=float(10 ** rng.uniform(-3, 0)))
        vals = [v for _, v in cps]
        assert all(b <= a + 1e-12 * max(1.0, abs(a)) for a, b in zip(vals, vals[1:]))

    def test_bad_arguments(self):
        ds = small_data()
        with pytest.raises(ValueError):
            train_linear_baseline(ds, "L3", 1.0)
        with pytest.raises(ValueError):
            train_linear_baseline(ds, "L1", 0.0)


class TestSerialization:
    def test_round_trip_prototype_model(self, tmp_path, rng):
        m = PrototypeModel(rng.normal(size=(3, 2)) * 1e-7, rng.normal(size=3), mode="smooth",
                           C=0.01, seed=4)
        save_model(m, tmp_path / "m.txt")
        back = load_model(tmp_path / "m.txt")
        assert isinstance(back, PrototypeModel)
        np.testing.assert_array_equal(back.prototypes, m.prototypes)
        np.testing.assert_array_equal(back.weights, m.weights)
        assert (back.mode, back.C, back.seed) == ("smooth", 0.01, 4)

    def test_round_trip_linear(self, rng):
        m = LinearDistanceModel(rng.normal(size=(2, 2)), [1 / 3, -2 / 7], reg="L1", C=5.0)
        back = model_from_text(model_to_text(m))
        np.testing.assert_array_equal(back.weights, m.weights)
        assert back.reg == "L1"

    def test_versioned(self, rng):
        text = model_to_text(PrototypeModel([[1.0]], [2.0]))
        with pytest.raises(TypeError):
            model_to_text(DistanceModel([[1.0]], [2.0]))
        assert text.startswith("smoothrank-model 1")
        with pytest.raises(ValueError):
            model_from_text(text.replace("smoothrank-model 1", "smoothrank-model 9"))
