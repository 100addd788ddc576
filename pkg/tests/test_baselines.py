"""Comparison estimators: OPG, pairwise/per-label OPCG, regularized SIR."""

import numpy as np
import pytest

from catsdr.baselines import (
    BaselineSpec,
    fit_baseline,
    opg_fit,
    pl_opcg_fit,
    pw_opcg_fit,
    sir_fit,
)
from catsdr.data import LabeledDataset
from catsdr.errors import ParameterError
from catsdr.families import categorical
from catsdr.localfit import OptimizerConfig
from catsdr.opcg import opcg_fit
from catsdr.simbench import SimConfig, generate_simulation, true_basis
from catsdr.subspaces import projection_distance

CFG = OptimizerConfig(max_iters=80)


def _binary(seed=0, n=120, p=4):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    logit = 1.5 * X[:, 0] - 1.0 * X[:, 1]
    pr = 1.0 / (1.0 + np.exp(-logit))
    labels = 1 + (rng.random(n) < pr).astype(int)
    labels[:2] = [1, 2]
    return LabeledDataset(X=X, labels=labels, family=categorical(2))


def _three_class(seed=0, n=90, p=4):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    logits = np.column_stack([1.3 * X[:, 0], -1.1 * X[:, 1], np.zeros(n)])
    pr = np.exp(logits - logits.max(axis=1, keepdims=True))
    pr /= pr.sum(axis=1, keepdims=True)
    labels = 1 + np.array([rng.choice(3, p=row) for row in pr])
    labels[:3] = [1, 2, 3]
    return LabeledDataset(X=X, labels=labels, family=categorical(3))


def _sim(seed=0):
    cfg = SimConfig(
        n_per_cluster_train=50,
        n_per_cluster_tune=2,
        n_per_cluster_test=2,
        seed=seed,
    )
    return generate_simulation(cfg)[0]


class TestBaselineSpec:
    def test_h_required_for_gradient_methods(self):
        for method in ("opg", "pw_opcg", "pl_opcg"):
            with pytest.raises(ParameterError):
                BaselineSpec(method=method, d=2)
        BaselineSpec(method="sir", d=2)

    def test_tikhonov_nonnegative(self):
        with pytest.raises(ParameterError):
            BaselineSpec(method="sir", d=2, tikhonov=-1e-3)

    def test_unknown_method(self):
        with pytest.raises(ParameterError):
            BaselineSpec(method="pca", d=2)

    def test_dispatch_matches_direct_calls(self):
        data = _three_class()
        spec = BaselineSpec(method="pw_opcg", d=2, h=1.2)
        via_spec = fit_baseline(spec, data, CFG)
        direct = pw_opcg_fit(data, 1.2, 2, config=CFG)
        np.testing.assert_array_equal(via_spec.basis_std, direct.basis_std)


class TestOpg:
    def test_orthonormal_basis(self):
        fit = opg_fit(_three_class(), 1.2, 2)
        np.testing.assert_allclose(fit.basis.T @ fit.basis, np.eye(2), atol=1e-10)

    def test_linear_logodds_large_h_recovers_direction(self):
        # as h grows the local fits share all points, so the pooled slope
        # aligns with the single logistic direction
        rng = np.random.default_rng(1)
        n = 400
        X = rng.standard_normal((n, 4))
        beta = np.array([2.0, 0.0, 0.0, 0.0])
        pr = 1.0 / (1.0 + np.exp(-(X @ beta)))
        labels = 1 + (rng.random(n) < pr).astype(int)
        labels[:2] = [1, 2]
        data = LabeledDataset(X=X, labels=labels, family=categorical(2))
        fit = opg_fit(data, 50.0, 1)
        target = np.zeros((4, 1))
        target[0, 0] = 1.0
        assert projection_distance(fit.basis, target) < 0.25

    def test_noise_labels_match_permuted_floor(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((150, 4))
        labels = rng.integers(1, 3, size=150)
        labels[:2] = [1, 2]
        data = LabeledDataset(X=X, labels=labels, family=categorical(2))
        permuted = LabeledDataset(
            X=X, labels=rng.permutation(labels), family=categorical(2)
        )
        lead = opg_fit(data, 1.5, 2).eigenvalues[0]
        floor = opg_fit(permuted, 1.5, 2).eigenvalues[0]
        assert lead < 3.0 * floor

    def test_permutation_invariance(self):
        data = _three_class(3)
        rng = np.random.default_rng(4)
        perm = rng.permutation(data.n)
        permuted = LabeledDataset(
            X=data.X[perm], labels=data.labels[perm], family=data.family
        )
        a = opg_fit(data, 1.2, 2)
        b = opg_fit(permuted, 1.2, 2)
        np.testing.assert_allclose(
            a.basis_std @ a.basis_std.T, b.basis_std @ b.basis_std.T, atol=1e-8
        )


class TestPairwise:
    def test_binary_reduces_to_opcg(self):
        data = _binary(5)
        pw = pw_opcg_fit(data, 1.2, 2, config=CFG)
        plain = opcg_fit(data, 1.2, 2, config=CFG)
        np.testing.assert_allclose(
            pw.basis @ pw.basis.T, plain.basis @ plain.basis.T, atol=1e-8
        )

    def test_three_classes_pool_six_directions(self):
        fit = pw_opcg_fit(_three_class(6), 1.2, 2, config=CFG)
        assert any("3 pooled subproblems" in msg for msg in fit.diagnostics)

    def test_small_pair_skipped_with_diagnostic(self):
        # pair (1,2) holds 4 observations, below the 2(d+1)=6 floor
        rng = np.random.default_rng(7)
        X = rng.standard_normal((24, 4))
        labels = np.array([1] * 2 + [2] * 2 + [3] * 20)
        data = LabeledDataset(X=X, labels=labels, family=categorical(3))
        fit = pw_opcg_fit(data, 1.5, 2, config=CFG)
        assert any("skipped" in msg for msg in fit.diagnostics)


class TestPerLabel:
    def test_binary_reduces_to_opcg(self):
        # the two one-vs-rest problems are label flips of each other, so
        # their pooled projection matches plain binary OPCG
        data = _binary(8)
        pl = pl_opcg_fit(data, 1.2, 2, config=CFG)
        plain = opcg_fit(data, 1.2, 2, config=CFG)
        np.testing.assert_allclose(
            pl.basis @ pl.basis.T, plain.basis @ plain.basis.T, atol=1e-6
        )

    def test_three_classes_pool_six_directions(self):
        fit = pl_opcg_fit(_three_class(9), 1.2, 2, config=CFG)
        assert any("3 pooled subproblems" in msg for msg in fit.diagnostics)


class TestSir:
    def test_two_class_mean_shift_recovers_e1(self):
        rng = np.random.default_rng(10)
        n = 300
        mu = np.array([1.5, 0.0, 0.0, 0.0])
        X = rng.standard_normal((n, 4))
        labels = 1 + (rng.random(n) < 0.5).astype(int)
        X[labels == 2] += mu
        labels[:2] = [1, 2]
        data = LabeledDataset(X=X, labels=labels, family=categorical(2))
        fit = sir_fit(data, 1)
        target = np.zeros((4, 1))
        target[0, 0] = 1.0
        assert projection_distance(fit.basis, target) < 0.15

    def test_d_bounded_by_classes(self):
        data = _three_class(11)
        with pytest.raises(ParameterError):
            sir_fit(data, 3)
        with pytest.raises(ParameterError):
            sir_fit(data, 0)

    def test_tikhonov_continuity(self):
        data = _three_class(12)
        a = sir_fit(data, 2, tikhonov=0.0)
        b = sir_fit(data, 2, tikhonov=1e-12)
        np.testing.assert_allclose(
            a.basis_std @ a.basis_std.T, b.basis_std @ b.basis_std.T, atol=1e-6
        )

    def test_fails_on_symmetric_design(self):
        # cluster centers are arranged symmetrically, so slice means collapse
        # and SIR cannot see the subspace that OPCG finds
        train = _sim(0)
        sir_d = projection_distance(sir_fit(train, 2).basis, true_basis())
        opcg_d = projection_distance(
            opcg_fit(train, 1.0, 2, config=CFG, refine=0).basis, true_basis()
        )
        assert sir_d - opcg_d > 0.5


def test_all_baselines_return_orthonormal_bases():
    data = _sim(1)
    specs = [
        BaselineSpec(method="opg", d=2, h=1.0),
        BaselineSpec(method="pw_opcg", d=2, h=1.0),
        BaselineSpec(method="pl_opcg", d=2, h=1.0),
        BaselineSpec(method="sir", d=2),
    ]
    for spec in specs:
        fit = fit_baseline(spec, data, CFG)
        np.testing.assert_allclose(
            fit.basis.T @ fit.basis, np.eye(2), atol=1e-8
        )
