"""Bandwidth selection by clustering quality of the sufficient predictors."""

import numpy as np
import pytest

from catsdr.data import LabeledDataset
from catsdr.errors import ParameterError
from catsdr.families import categorical
from catsdr.localfit import OptimizerConfig
from catsdr.simbench import SimConfig, generate_simulation
from catsdr.tuning import (
    KmeansResult,
    _skm_ratio,
    _standardize_curve,
    _weighted_from_parts,
    default_grid,
    kmeans,
    tune_kfold,
    tune_supervised,
    tune_unsupervised,
    tune_weighted,
)

CFG = OptimizerConfig(max_iters=60)
EXAMPLE_GRID = np.array([0.6, 1.01, 1.65, 4.0])


def _sim_pair(seed=0):
    cfg = SimConfig(
        n_per_cluster_train=30,
        n_per_cluster_tune=20,
        n_per_cluster_test=2,
        seed=seed,
    )
    train, tune, _, _ = generate_simulation(cfg)
    return train, tune


class TestKmeans:
    def test_wss_bss_decomposition(self):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((40, 3))
        tss = float(((pts - pts.mean(axis=0)) ** 2).sum())
        for k in (1, 2, 5, 40):
            res = kmeans(pts, k, seed=0)
            assert abs(res.wss + res.bss - tss) < 1e-8 * tss

    def test_k_equals_n_zero_wss(self):
        pts = np.random.default_rng(1).standard_normal((12, 2))
        res = kmeans(pts, 12, seed=0)
        assert res.wss < 1e-12

    def test_k_one_zero_bss(self):
        pts = np.random.default_rng(2).standard_normal((15, 2))
        res = kmeans(pts, 1, seed=0)
        tss = float(((pts - pts.mean(axis=0)) ** 2).sum())
        assert res.bss == 0.0
        assert abs(res.wss - tss) < 1e-10

    def test_two_blobs_assignment(self):
        rng = np.random.default_rng(3)
        a = rng.normal(0.0, 0.5, size=(10, 2))
        b = rng.normal(8.0, 0.5, size=(10, 2))
        res = kmeans(np.vstack([a, b]), 2, seed=0)
        first, second = res.assignment[:10], res.assignment[10:]
        assert len(set(first.tolist())) == 1
        assert len(set(second.tolist())) == 1
        assert first[0] != second[0]

    def test_k_validation(self):
        pts = np.zeros((5, 2))
        with pytest.raises(ParameterError):
            kmeans(pts, 6)
        with pytest.raises(ParameterError):
            kmeans(pts, 0)

    def test_seeded_determinism(self):
        pts = np.random.default_rng(4).standard_normal((30, 2))
        r1 = kmeans(pts, 3, seed=9)
        r2 = kmeans(pts, 3, seed=9)
        np.testing.assert_array_equal(r1.assignment, r2.assignment)
        assert r1.wss == r2.wss

    def test_vector_input_promoted(self):
        res = kmeans(np.array([0.0, 0.1, 5.0, 5.1]), 2, seed=0)
        assert res.centers.shape == (2, 1)
        assert isinstance(res, KmeansResult)


class TestSupervisedRatio:
    def test_mirrored_two_class_closed_form(self):
        # c_l = 1: SBSS falls back to the class-center spread, which for two
        # mirrored classes of equal size n_l at +/-mu is 2 n_l ||mu||^2
        rng = np.random.default_rng(5)
        mu = np.array([2.0, -1.0])
        n_l = 25
        pts = np.vstack(
            [mu + 0.3 * rng.standard_normal((n_l, 2)),
             -mu + 0.3 * rng.standard_normal((n_l, 2))]
        )
        # force exact mirroring of the class means
        pts[:n_l] += mu - pts[:n_l].mean(axis=0)
        pts[n_l:] += -mu - pts[n_l:].mean(axis=0)
        labels = np.repeat([1, 2], n_l)
        diags = []
        ratio = _skm_ratio(
            pts, labels, [1, 1], np.random.SeedSequence(0), diags
        )
        swss = (
            ((pts[:n_l] - mu) ** 2).sum() + ((pts[n_l:] + mu) ** 2).sum()
        )
        sbss = 2 * n_l * float(mu @ mu)
        assert abs(ratio - swss / sbss) < 1e-10
        assert diags == []

    def test_identical_class_contributes_zero_wss(self):
        pts = np.vstack([np.tile([3.0, 3.0], (8, 1)),
                         np.random.default_rng(6).standard_normal((8, 2))])
        labels = np.repeat([1, 2], 8)
        diags = []
        ratio = _skm_ratio(pts, labels, [1, 1], np.random.SeedSequence(0), diags)
        swss_other = ((pts[8:] - pts[8:].mean(axis=0)) ** 2).sum()
        grand = pts.mean(axis=0)
        sbss = 8 * ((pts[:8].mean(axis=0) - grand) ** 2).sum() + 8 * (
            (pts[8:].mean(axis=0) - grand) ** 2
        ).sum()
        assert abs(ratio - swss_other / sbss) < 1e-10

    def test_oversized_cluster_count_lowered_with_diagnostic(self):
        train, tune = _sim_pair()
        keep = np.concatenate(
            [np.flatnonzero(tune.labels == l)[:4] for l in (1, 2, 3)]
        )
        small_tune = tune.subset(keep)
        curve = tune_supervised(
            train, small_tune, [1.0], 2, clusters_per_class=9,
            config=CFG, seed=0,
        )
        assert any("lowered" in msg for msg in curve.diagnostics)

    def test_clusters_per_class_validation(self):
        train, tune = _sim_pair()
        with pytest.raises(ParameterError):
            tune_supervised(train, tune, [1.0], 2, [2, 2], config=CFG)
        with pytest.raises(ParameterError):
            tune_supervised(train, tune, [1.0], 2, [2, 0, 2], config=CFG)


class TestCurveHelpers:
    def test_standardize_exact_moments(self):
        curve = np.array([3.0, 9.0, 1.0, 7.0])
        out = _standardize_curve(curve)
        assert abs(out.mean()) < 1e-12
        assert abs(out.std() - 1.0) < 1e-12

    def test_standardize_keeps_infinities(self):
        curve = np.array([3.0, np.inf, 1.0, 7.0])
        out = _standardize_curve(curve)
        assert np.isinf(out[1])
        finite = out[np.isfinite(out)]
        assert abs(finite.mean()) < 1e-12

    def test_standardize_constant_curve(self):
        out = _standardize_curve(np.full(5, 4.2))
        np.testing.assert_array_equal(out, np.zeros(5))

    def test_identical_parts_select_same_argmin(self):
        curve = np.array([5.0, 2.0, 3.0, 8.0])
        weighted = _weighted_from_parts(curve, curve)
        assert np.argmin(weighted) == np.argmin(curve)

    def test_default_grid(self):
        grid = default_grid()
        assert grid.size == 20
        assert grid[0] == 0.3 and grid[-1] == 10.0
        assert np.all(np.diff(grid) > 0)


class TestTuneUnsupervised:
    def test_example_grid_prefers_midrange(self):
        train, tune = _sim_pair()
        curve = tune_unsupervised(
            train, tune, EXAMPLE_GRID, 2, k_total=6, config=CFG, seed=0
        )
        assert curve.ratio_km[1] < curve.ratio_km[0]
        assert curve.ratio_km[1] < curve.ratio_km[3]
        assert curve.method == "km"
        assert curve.h_selected in curve.grid

    def test_failed_grid_point_becomes_inf_with_diagnostic(self):
        train, tune = _sim_pair()
        curve = tune_unsupervised(
            train, tune, [0.05, 1.0], 2, k_total=6, config=CFG, seed=0
        )
        assert np.isinf(curve.ratio_km[0])
        assert np.isfinite(curve.ratio_km[1])
        assert any("estimation failed" in msg for msg in curve.diagnostics)
        assert curve.h_selected == 1.0

    def test_tune_equals_train_reproducible(self):
        train, _ = _sim_pair()
        a = tune_unsupervised(train, train, [1.0], 2, k_total=6, config=CFG, seed=3)
        b = tune_unsupervised(train, train, [1.0], 2, k_total=6, config=CFG, seed=3)
        assert np.isfinite(a.ratio_km[0])
        np.testing.assert_array_equal(a.ratio_km, b.ratio_km)

    def test_noise_labels_flat_curve(self):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((150, 5))
        labels = rng.integers(1, 4, size=150)
        labels[:3] = [1, 2, 3]
        data = LabeledDataset(X=X, labels=labels, family=categorical(3))
        tune = data.subset(np.arange(100, 150))
        train = data.subset(np.arange(100))
        curve = tune_unsupervised(
            train, tune, [0.8, 1.2, 2.0, 4.0], 2, k_total=3, config=CFG, seed=0
        )
        finite = curve.ratio_km[np.isfinite(curve.ratio_km)]
        assert finite.size >= 3
        assert finite.max() / finite.min() < 2.0

    def test_empty_and_unsorted_grid_rejected(self):
        train, tune = _sim_pair()
        with pytest.raises(ParameterError):
            tune_unsupervised(train, tune, [], 2, k_total=6, config=CFG)
        with pytest.raises(ParameterError):
            tune_unsupervised(train, tune, [2.0, 1.0], 2, k_total=6, config=CFG)


class TestTuneWeighted:
    def test_one_point_grid_selected(self):
        train, tune = _sim_pair()
        curve = tune_weighted(
            train, tune, [1.3], 2, k_total=6, clusters_per_class=2,
            config=CFG, seed=0,
        )
        assert curve.h_selected == 1.3
        assert curve.method == "wkm"

    def test_curves_all_populated(self):
        train, tune = _sim_pair()
        curve = tune_weighted(
            train, tune, [0.9, 1.4], 2, k_total=6, clusters_per_class=2,
            config=CFG, seed=0,
        )
        assert np.isfinite(curve.ratio_km).all()
        assert np.isfinite(curve.ratio_skm).all()
        assert np.isfinite(curve.ratio_weighted).all()

    def test_relabeling_invariance(self):
        # with one cluster per class every quantity is seed-free, so curves
        # must match exactly under a swap of label identities
        train, tune = _sim_pair()
        swap = {1: 2, 2: 1, 3: 3}
        relabeled_train = LabeledDataset(
            X=train.X,
            labels=np.array([swap[int(l)] for l in train.labels]),
            family=train.family,
        )
        relabeled_tune = LabeledDataset(
            X=tune.X,
            labels=np.array([swap[int(l)] for l in tune.labels]),
            family=tune.family,
        )
        kw = dict(d=2, k_total=6, clusters_per_class=1, config=CFG, seed=0)
        base = tune_weighted(train, tune, [1.0, 1.5], **kw)
        flip = tune_weighted(relabeled_train, relabeled_tune, [1.0, 1.5], **kw)
        np.testing.assert_allclose(base.ratio_skm, flip.ratio_skm, atol=1e-10)
        np.testing.assert_allclose(base.ratio_km, flip.ratio_km, atol=1e-10)
        assert base.h_selected == flip.h_selected


class TestTuneKfold:
    def test_folds_validation(self):
        train, _ = _sim_pair()
        with pytest.raises(ParameterError):
            tune_kfold(train, [1.0], 2, 6, 2, folds=1, config=CFG)

    def test_class_smaller_than_folds_rejected(self):
        X = np.random.default_rng(8).standard_normal((13, 4))
        labels = [1, 1, 1] + [2] * 10
        data = LabeledDataset(X=X, labels=labels, family=categorical(2))
        with pytest.raises(ParameterError, match="smallest class has 3"):
            tune_kfold(data, [1.0], 2, 4, 2, folds=4, config=CFG)

    def test_seeded_determinism_and_selection(self):
        train, _ = _sim_pair()
        kw = dict(d=2, k_total=6, clusters_per_class=2, folds=3, config=CFG)
        a = tune_kfold(train, [0.9, 1.4], seed=5, **kw)
        b = tune_kfold(train, [0.9, 1.4], seed=5, **kw)
        np.testing.assert_array_equal(a.ratio_weighted, b.ratio_weighted)
        assert a.h_selected == b.h_selected
        assert a.method == "kfold"
        assert a.h_selected in a.grid
