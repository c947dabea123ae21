import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogload import errors
from cogload.classifiers import (
    KINDS,
    ClassifierSpec,
    dump_model_json,
    fit,
    gini_importance,
    load_model,
    model_from_doc,
    model_to_doc,
    predict,
    save_model,
    standardize_fit,
)

LEVEL3 = ("low", "moderate", "high")


def blobs(n_per_class=20, p=4, sep=4.0, seed=0, classes=LEVEL3):
    # each class offset along its own axis so one-vs-rest stays separable
    rng = np.random.default_rng(seed)
    X, y = [], []
    for i, cls in enumerate(classes):
        mean = np.zeros(p)
        mean[i % p] = sep
        mean[(i + 1) % p] = -sep if i else sep
        X.append(rng.normal(mean, 1.0, size=(n_per_class, p)))
        y += [cls] * n_per_class
    return np.vstack(X), np.array(y, dtype=object)


ALL_SPECS = [
    ClassifierSpec("nb"),
    ClassifierSpec("dt"),
    ClassifierSpec("rf", {"n_trees": 15}),
    ClassifierSpec("logreg"),
    ClassifierSpec("svm_linear"),
    ClassifierSpec("svm_rbf"),
]


class TestSpec:
    def test_defaults_merged(self):
        spec = ClassifierSpec("nb", {"alpha": 2.0})
        assert spec.hyperparameters == {"alpha": 2.0, "n_bins": 10, "variant": "categorical"}

    def test_unknown_hyperparameter(self):
        with pytest.raises(errors.InvalidParams):
            ClassifierSpec("nb", {"depth": 3})

    @pytest.mark.parametrize("kind,hp", [
        ("nb", {"alpha": 0.0}),
        ("dt", {"criterion": "mse"}),
        ("svm_linear", {"C": -1.0}),
        ("svm_linear", {"kernel": "rbf"}),
        ("svm_rbf", {"kernel": "linear"}),
        ("logreg", {"penalty": "l1"}),
        ("rf", {"n_trees": 0}),
    ])
    def test_bad_values(self, kind, hp):
        with pytest.raises(errors.InvalidParams):
            ClassifierSpec(kind, hp)

    def test_bad_seed_and_kind(self):
        with pytest.raises(errors.InvalidParams):
            ClassifierSpec("nb", seed=-1)
        with pytest.raises(errors.InvalidParams):
            ClassifierSpec("gbm")


class TestStandardizer:
    def test_sample_sd_and_passthrough(self):
        X = np.array([[1.0, 7.0], [3.0, 7.0], [5.0, 7.0]])
        s = standardize_fit(X)
        np.testing.assert_allclose(s.shift, [3.0, 0.0])
        np.testing.assert_allclose(s.scale, [2.0, 1.0])
        Z = s.apply(X)
        np.testing.assert_allclose(Z[:, 1], 7.0)  # constant column untouched
        np.testing.assert_allclose(s.invert(Z), X)

    def test_only_margin_kinds_standardize(self):
        X, y = blobs(10)
        for spec in ALL_SPECS:
            m = fit(spec, X, y)
            expect = spec.kind in ("svm_linear", "svm_rbf", "logreg")
            assert (m.standardizer is not None) == expect, spec.kind


class TestFitPredict:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
    def test_separable_blobs(self, spec):
        X, y = blobs()
        m = fit(spec, X, y)
        assert (predict(m, X) == y).mean() >= 0.95
        assert m.classes == LEVEL3  # canonical level order, not alphabetical

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
    def test_deterministic_refit(self, spec):
        X, y = blobs(12, seed=3)
        assert dump_model_json(fit(spec, X, y)) == dump_model_json(fit(spec, X, y))

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
    def test_column_permutation_invariance(self, spec):
        X, y = blobs(12, p=5, seed=4)
        names = ("delta", "alpha", "echo", "bravo", "charlie")
        perm = np.array([3, 0, 4, 2, 1])
        m1 = fit(spec, X, y, names)
        m2 = fit(spec, X[:, perm], y, tuple(names[i] for i in perm))
        d1, d2 = model_to_doc(m1), model_to_doc(m2)
        d1.pop("schema"), d2.pop("schema")
        assert json.dumps(d1, sort_keys=True) == json.dumps(d2, sort_keys=True)
        assert (predict(m1, X) == predict(m2, X[:, perm])).all()

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
    def test_json_round_trip(self, spec, tmp_path):
        X, y = blobs(12, seed=5)
        m = fit(spec, X, y)
        clone = model_from_doc(model_to_doc(m))
        assert (predict(clone, X) == predict(m, X)).all()
        assert dump_model_json(clone) == dump_model_json(m)
        path = tmp_path / f"{spec.kind}.json"
        save_model(m, str(path))
        assert (predict(load_model(str(path)), X) == predict(m, X)).all()

    def test_degenerate_labels(self):
        X = np.zeros((5, 2))
        with pytest.raises(errors.DegenerateLabels):
            fit(ClassifierSpec("nb"), X, ["low"] * 5)

    def test_non_finite_rejected(self):
        X, y = blobs(5)
        X[0, 0] = np.nan
        with pytest.raises(errors.NonFiniteInput):
            fit(ClassifierSpec("dt"), X, y)

    def test_schema_mismatch_at_predict(self):
        X, y = blobs(8, p=3)
        m = fit(ClassifierSpec("dt"), X, y, ("a", "b", "c"))
        with pytest.raises(errors.SchemaMismatch):
            predict(m, X, ("a", "c", "b"))
        with pytest.raises(errors.SchemaMismatch):
            predict(m, X[:, :2])

    def test_non_level_labels_sorted(self):
        X, y = blobs(8, classes=("zeta", "alpha", "mid"))
        m = fit(ClassifierSpec("dt"), X, y)
        assert m.classes == ("alpha", "mid", "zeta")


class TestDecisionTree:
    def test_xor_needs_zero_gain_splits(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array(["low", "high", "high", "low"], dtype=object)
        m = fit(ClassifierSpec("dt"), X, y)
        assert (predict(m, X) == y).all()

    @given(st.integers(0, 2**32 - 1), st.integers(5, 40))
    @settings(max_examples=25)
    def test_pure_training_fit(self, seed, n):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, 3))
        y = rng.choice(np.array(LEVEL3, dtype=object), size=n)
        if len(set(map(str, y))) < 2:
            y[0] = "low" if str(y[1]) != "low" else "high"
        m = fit(ClassifierSpec("dt"), X, y)
        assert (predict(m, X) == y).all()

    def test_entropy_criterion_runs(self):
        X, y = blobs(10)
        m = fit(ClassifierSpec("dt", {"criterion": "entropy"}), X, y)
        assert (predict(m, X) == y).all()


class TestNaiveBayes:
    def test_unseen_bin_is_smoothed(self):
        X, y = blobs(15, seed=6)
        m = fit(ClassifierSpec("nb"), X, y)
        far = np.full((1, X.shape[1]), 1e6)
        assert predict(m, far)[0] in LEVEL3  # no zero-probability crash

    def test_gaussian_variant(self):
        X, y = blobs(15, seed=7)
        m = fit(ClassifierSpec("nb", {"variant": "gaussian"}), X, y)
        assert (predict(m, X) == y).mean() >= 0.95
        assert m.params["variant"] == "gaussian"

    def test_alpha_changes_model(self):
        X, y = blobs(6, sep=1.0, seed=8)
        a = dump_model_json(fit(ClassifierSpec("nb", {"alpha": 1.0}), X, y))
        b = dump_model_json(fit(ClassifierSpec("nb", {"alpha": 50.0}), X, y))
        assert a != b


class TestRandomForest:
    def test_seed_controls_bootstrap(self):
        X, y = blobs(12, seed=9)
        a = dump_model_json(fit(ClassifierSpec("rf", {"n_trees": 8}, seed=0), X, y))
        b = dump_model_json(fit(ClassifierSpec("rf", {"n_trees": 8}, seed=1), X, y))
        assert a != b

    def test_importances_normalized(self):
        X, y = blobs(15, p=6, seed=10)
        m = fit(ClassifierSpec("rf", {"n_trees": 12}), X, y)
        rep = gini_importance(m)
        assert sum(rep.importances.values()) == pytest.approx(1.0, abs=1e-9)
        assert sum(rep.group_percent.values()) == pytest.approx(100.0, abs=1e-6)
        assert all(v >= 0 for v in rep.importances.values())

    def test_informative_feature_wins(self):
        rng = np.random.default_rng(11)
        n = 90
        X = rng.normal(size=(n, 4))
        y = np.where(X[:, 2] > 0, "high", "low").astype(object)
        m = fit(ClassifierSpec("rf", {"n_trees": 30}), X, y,
                ("noise1", "noise2", "signal", "noise3"))
        rep = gini_importance(m)
        assert max(rep.importances, key=rep.importances.get) == "signal"

    def test_wrong_kind(self):
        X, y = blobs(8)
        with pytest.raises(errors.WrongKind):
            gini_importance(fit(ClassifierSpec("nb"), X, y))


class TestMarginModels:
    def test_logreg_separable(self):
        X, y = blobs(20, sep=6.0, seed=12)
        m = fit(ClassifierSpec("logreg", {"C": 10.0}), X, y)
        assert (predict(m, X) == y).all()

    def test_svm_rbf_nonlinear_rings(self):
        rng = np.random.default_rng(13)
        n = 60
        theta = rng.uniform(0, 2 * np.pi, n)
        r = np.concatenate([np.full(n // 2, 1.0), np.full(n // 2, 3.0)])
        r = r + rng.normal(0, 0.1, n)
        X = np.c_[r * np.cos(theta), r * np.sin(theta)]
        y = np.array(["low"] * (n // 2) + ["high"] * (n // 2), dtype=object)
        m = fit(ClassifierSpec("svm_rbf", {"C": 10.0}), X, y)
        assert (predict(m, X) == y).mean() >= 0.95

    def test_linear_svm_c_limits_weights(self):
        X, y = blobs(20, sep=2.0, seed=14, classes=("low", "high"))
        small = fit(ClassifierSpec("svm_linear", {"C": 0.01}), X, y)
        large = fit(ClassifierSpec("svm_linear", {"C": 100.0}), X, y)
        wn = lambda m: float(np.linalg.norm(np.asarray(m.params["weights"])))
        assert wn(small) < wn(large)
