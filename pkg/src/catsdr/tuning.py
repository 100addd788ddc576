"""Bandwidth selection by clustering quality of the sufficient predictors.

A good bandwidth produces a projection whose tuning-set points form tight,
well-separated clusters; each criterion scores a candidate h by a
within-to-between sum-of-squares ratio and selects the minimizer.  Four
variants: unsupervised k-means on all projected points, supervised k-means
within each class, their standardized 50/50 combination, and a k-fold
version of the combination run entirely on the training set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .errors import ParameterError
from .localfit import OptimizerConfig
from .opcg import opcg_fit

__all__ = [
    "KmeansResult",
    "TuningCurve",
    "default_grid",
    "kmeans",
    "tune_unsupervised",
    "tune_supervised",
    "tune_weighted",
    "tune_kfold",
]

LLOYD_MAX_ITERS = 100
DEFAULT_RESTARTS = 10


@dataclass(frozen=True)
class KmeansResult:
    """Best-of-restarts Lloyd solution with its sum-of-squares split."""

    centers: np.ndarray
    assignment: np.ndarray
    wss: float
    bss: float


@dataclass(frozen=True)
class TuningCurve:
    """Ratio curves over the bandwidth grid and the selected minimizer."""

    grid: np.ndarray
    ratio_km: np.ndarray
    ratio_skm: np.ndarray
    ratio_weighted: np.ndarray
    h_selected: float
    method: str
    diagnostics: tuple = ()


def default_grid(low: float = 0.3, high: float = 10.0, size: int = 20) -> np.ndarray:
    """Log-spaced bandwidth grid spanning under- to over-smoothed regimes."""
    return np.geomspace(low, high, size)


def _kmeanspp_centers(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining mass at the chosen centers; any point works
            centers[j:] = points[rng.integers(n, size=k - j)]
            break
        centers[j] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(points, centers, max_iters):
    n, k = points.shape[0], centers.shape[0]
    assignment = np.full(n, -1)
    for _ in range(max_iters):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assignment = d2.argmin(axis=1)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for j in range(k):
            mask = assignment == j
            if mask.any():
                centers[j] = points[mask].mean(axis=0)
            else:
                # re-seed an emptied cluster at the worst-fit point
                centers[j] = points[d2.min(axis=1).argmax()]
    wss = float(((points - centers[assignment]) ** 2).sum())
    return centers, assignment, wss


def kmeans(points: np.ndarray, k: int, restarts: int = DEFAULT_RESTARTS,
           seed=None) -> KmeansResult:
    """Best of `restarts` k-means++ seeded Lloyd runs, scored by WSS."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} must satisfy 1 <= k <= n={n}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        centers = _kmeanspp_centers(points, k, rng)
        centers, assignment, wss = _lloyd(points, centers, LLOYD_MAX_ITERS)
        if best is None or wss < best[2]:
            best = (centers, assignment, wss)
    centers, assignment, wss = best
    grand = points.mean(axis=0)
    counts = np.bincount(assignment, minlength=k).astype(float)
    bss = float((counts[:, None] * (centers - grand) ** 2).sum())
    return KmeansResult(centers=centers, assignment=assignment, wss=wss, bss=bss)


def _ratio(wss: float, bss: float) -> float:
    if bss <= 0:
        return float("inf")
    return wss / bss


def _resolve_clusters_per_class(clusters_per_class, m: int):
    if np.isscalar(clusters_per_class):
        counts = [int(clusters_per_class)] * m
    else:
        counts = [int(c) for c in clusters_per_class]
    if len(counts) != m:
        raise ParameterError(
            f"clusters_per_class needs one entry per class: got {len(counts)}, m={m}"
        )
    if any(c < 1 for c in counts):
        raise ParameterError("clusters_per_class entries must be >= 1")
    return counts


def _km_ratio(proj, k_total, seed):
    res = kmeans(proj, k_total, seed=seed)
    return _ratio(res.wss, res.bss)


def _skm_ratio(proj, labels, clusters, seed_seq, diagnostics):
    m = len(clusters)
    children = seed_seq.spawn(m)
    swss = 0.0
    sbss = 0.0
    means = []
    counts = []
    for l in range(1, m + 1):
        pts = proj[labels == l]
        c_l = clusters[l - 1]
        if c_l > pts.shape[0]:
            diagnostics.append(
                f"class {l}: clusters_per_class {c_l} lowered to {pts.shape[0]}"
            )
            c_l = pts.shape[0]
        res = kmeans(pts, c_l, seed=children[l - 1])
        swss += res.wss
        sbss += res.bss
        means.append(pts.mean(axis=0))
        counts.append(pts.shape[0])
    if all(c == 1 for c in clusters):
        # single cluster per class has no within-class separation to score;
        # use the spread of the class centers about the grand mean instead
        means = np.asarray(means)
        counts = np.asarray(counts, dtype=float)
        grand = (counts[:, None] * means).sum(axis=0) / counts.sum()
        sbss = float((counts[:, None] * (means - grand) ** 2).sum())
    return _ratio(swss, sbss)


def _standardize_curve(curve: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance over the finite grid entries; +inf stays put."""
    out = np.array(curve, dtype=float)
    finite = np.isfinite(out)
    if not finite.any():
        return out
    vals = out[finite]
    sd = vals.std()
    if sd == 0:
        out[finite] = 0.0
    else:
        out[finite] = (vals - vals.mean()) / sd
    return out


def _scan_grid(data_train, data_tune, grid, d, k_total, clusters, config, seed,
               want_km: bool, want_skm: bool):
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ParameterError("bandwidth grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ParameterError("bandwidth grid must be ascending")
    ratio_km = np.full(grid.size, np.nan)
    ratio_skm = np.full(grid.size, np.nan)
    diagnostics = []
    seed_seq = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    children = seed_seq.spawn(grid.size)
    for i, h in enumerate(grid):
        try:
            # single-pass fits: the scan ranks bandwidths, and refinement
            # re-measures weights on the projection, blurring exactly the
            # h-dependence being compared
            fit = opcg_fit(data_train, float(h), d, config=config, refine=0)
        except Exception as exc:
            diagnostics.append(f"h={h:g}: estimation failed: {exc}")
            if want_km:
                ratio_km[i] = float("inf")
            if want_skm:
                ratio_skm[i] = float("inf")
            continue
        proj = data_tune.X @ fit.basis
        point_seeds = children[i].spawn(2)
        if want_km:
            ratio_km[i] = _km_ratio(proj, k_total, point_seeds[0])
        if want_skm:
            ratio_skm[i] = _skm_ratio(
                proj, data_tune.labels, clusters, point_seeds[1], diagnostics
            )
    return grid, ratio_km, ratio_skm, diagnostics


def _select(grid, curve):
    return float(grid[int(np.argmin(curve))])


def tune_unsupervised(data_train, data_tune, grid, d: int, k_total: int,
                      config: OptimizerConfig | None = None,
                      seed=None) -> TuningCurve:
    """Bandwidth by k-means WSS/BSS of the projected tuning points."""
    grid, ratio_km, ratio_skm, diags = _scan_grid(
        data_train, data_tune, grid, d, k_total, None, config, seed,
        want_km=True, want_skm=False,
    )
    return TuningCurve(
        grid=grid,
        ratio_km=ratio_km,
        ratio_skm=ratio_skm,
        ratio_weighted=np.full(grid.size, np.nan),
        h_selected=_select(grid, ratio_km),
        method="km",
        diagnostics=tuple(diags),
    )


def tune_supervised(data_train, data_tune, grid, d: int, clusters_per_class,
                    config: OptimizerConfig | None = None,
                    seed=None) -> TuningCurve:
    """Bandwidth by per-class k-means, ratios aggregated over classes."""
    clusters = _resolve_clusters_per_class(clusters_per_class, data_tune.m)
    grid, ratio_km, ratio_skm, diags = _scan_grid(
        data_train, data_tune, grid, d, 0, clusters, config, seed,
        want_km=False, want_skm=True,
    )
    return TuningCurve(
        grid=grid,
        ratio_km=ratio_km,
        ratio_skm=ratio_skm,
        ratio_weighted=np.full(grid.size, np.nan),
        h_selected=_select(grid, ratio_skm),
        method="skm",
        diagnostics=tuple(diags),
    )


def _weighted_from_parts(ratio_km, ratio_skm):
    return 0.5 * _standardize_curve(ratio_km) + 0.5 * _standardize_curve(ratio_skm)


def tune_weighted(data_train, data_tune, grid, d: int, k_total: int,
                  clusters_per_class, config: OptimizerConfig | None = None,
                  seed=None) -> TuningCurve:
    """Even split of the standardized unsupervised and supervised curves."""
    clusters = _resolve_clusters_per_class(clusters_per_class, data_tune.m)
    grid, ratio_km, ratio_skm, diags = _scan_grid(
        data_train, data_tune, grid, d, k_total, clusters, config, seed,
        want_km=True, want_skm=True,
    )
    weighted = _weighted_from_parts(ratio_km, ratio_skm)
    return TuningCurve(
        grid=grid,
        ratio_km=ratio_km,
        ratio_skm=ratio_skm,
        ratio_weighted=weighted,
        h_selected=_select(grid, weighted),
        method="wkm",
        diagnostics=tuple(diags),
    )


def _stratified_folds(labels, folds, rng):
    """Round-robin assignment within each shuffled class; every fold gets at
    least one point of every class when class counts are >= folds."""
    assignment = np.empty(labels.shape[0], dtype=int)
    for l in np.unique(labels):
        idx = np.flatnonzero(labels == l)
        rng.shuffle(idx)
        assignment[idx] = np.arange(idx.size) % folds
    return assignment


def tune_kfold(data_train, grid, d: int, k_total: int, clusters_per_class,
               folds: int = 3, config: OptimizerConfig | None = None,
               seed=None) -> TuningCurve:
    """Weighted criterion averaged over stratified folds of the training set."""
    if folds < 2:
        raise ParameterError(f"folds={folds} must be >= 2")
    m = data_train.m
    clusters = _resolve_clusters_per_class(clusters_per_class, m)
    counts = np.bincount(data_train.labels, minlength=m + 1)[1:]
    if counts.min() < folds:
        raise ParameterError(
            f"every class needs >= folds={folds} observations for stratified "
            f"folds; smallest class has {int(counts.min())}"
        )
    ss = np.random.SeedSequence(seed)
    fold_seed, *scan_seeds = ss.spawn(folds + 1)
    assignment = _stratified_folds(
        data_train.labels, folds, np.random.default_rng(fold_seed)
    )
    for f in range(folds):
        held = assignment == f
        if len(np.unique(data_train.labels[held])) < m:
            raise ParameterError(f"fold {f} is missing a class")
    grid = np.asarray(grid, dtype=float)
    km_sum = np.zeros(grid.size)
    skm_sum = np.zeros(grid.size)
    weighted_sum = np.zeros(grid.size)
    diagnostics = []
    for f in range(folds):
        held = assignment == f
        train_f = data_train.subset(~held)
        tune_f = data_train.subset(held)
        _, ratio_km, ratio_skm, diags = _scan_grid(
            train_f, tune_f, grid, d, k_total, clusters, config, scan_seeds[f],
            want_km=True, want_skm=True,
        )
        km_sum += ratio_km
        skm_sum += ratio_skm
        weighted_sum += _weighted_from_parts(ratio_km, ratio_skm)
        diagnostics.extend(f"fold {f}: {msg}" for msg in diags)
    weighted = weighted_sum / folds
    return TuningCurve(
        grid=grid,
        ratio_km=km_sum / folds,
        ratio_skm=skm_sum / folds,
        ratio_weighted=weighted,
        h_selected=_select(grid, weighted),
        method="kfold",
        diagnostics=tuple(diagnostics),
    )
