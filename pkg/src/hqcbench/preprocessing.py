"""Fold-local feature transforms and stratified cross-validation machinery.

Standardization and PCA are fitted strictly on the training rows of one fold
and then applied unchanged to monitor and test rows; nothing here ever sees
test data at fit time. Fold construction is deterministic given a seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA_FLOOR = 1e-8


class DataSplitError(ValueError):
    """Labels or sizes make the requested split impossible."""


@dataclass
class StandardizerFit:
    """Per-feature training mean and population std (floored at 1e-8)."""

    mu: np.ndarray
    sigma: np.ndarray


def fit_standardizer(x_train: np.ndarray) -> StandardizerFit:
    x_train = np.asarray(x_train, dtype=np.float64)
    if x_train.ndim != 2 or x_train.shape[0] < 2:
        raise DataSplitError(f"standardizer needs >= 2 training rows, got shape {x_train.shape}")
    mu = x_train.mean(axis=0)
    sigma = np.maximum(x_train.std(axis=0), SIGMA_FLOOR)
    return StandardizerFit(mu, sigma)


def standardize(fit: StandardizerFit, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return ((x - fit.mu) / fit.sigma).astype(np.float32)


@dataclass
class PCAFit:
    """Orthonormal principal directions of the (centered) training matrix.

    components has shape (d, r) with sign-normalized columns: each column is
    flipped so its largest-magnitude entry is positive, making the fit
    deterministic. explained_variance_ratio uses (n-1) variance scaling.
    """

    components: np.ndarray
    r: int
    explained_variance_ratio: np.ndarray
    mean: np.ndarray


def fit_pca(x_train: np.ndarray, n_components: int | None = None,
            variance: float | None = None) -> PCAFit:
    """Thin-SVD PCA; pass exactly one of n_components or a variance fraction."""
    if (n_components is None) == (variance is None):
        raise ValueError("specify exactly one of n_components or variance")
    x_train = np.asarray(x_train, dtype=np.float64)
    n, d = x_train.shape
    mean = x_train.mean(axis=0)
    _, s, vt = np.linalg.svd(x_train - mean, full_matrices=False)
    ev = s**2 / max(n - 1, 1)
    total = ev.sum()
    ratio = ev / total if total > 0 else np.zeros_like(ev)

    if n_components is not None:
        r = int(n_components)
        if not 1 <= r <= min(d, n):
            raise ValueError(f"n_components must be in [1, min(d={d}, n={n})], got {r}")
    else:
        if not 0.0 < variance <= 1.0:
            raise ValueError(f"variance fraction must be in (0, 1], got {variance}")
        r = int(np.searchsorted(np.cumsum(ratio), variance - 1e-12) + 1)
        r = min(r, len(ratio))

    components = vt[:r].T.copy()
    for col in range(r):
        peak = np.argmax(np.abs(components[:, col]))
        if components[peak, col] < 0:
            components[:, col] = -components[:, col]
    return PCAFit(components, r, ratio[:r], mean)


def pca_project(fit: PCAFit, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return ((x - fit.mean) @ fit.components).astype(np.float32)


def pca_reconstruct(fit: PCAFit, projected: np.ndarray) -> np.ndarray:
    return (np.asarray(projected, dtype=np.float64) @ fit.components.T + fit.mean).astype(np.float32)


@dataclass
class FoldPlan:
    """Index sets of one cross-validation fold; train/monitor/test are disjoint."""

    fold_index: int
    train_idx: np.ndarray
    monitor_idx: np.ndarray
    test_idx: np.ndarray
    seed: int
    monitor_skipped: bool = False


def _class_counts(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise DataSplitError("empty label array")
    num_classes = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=num_classes)
    if labels.min() < 0 or (counts == 0).any():
        raise DataSplitError("labels must be contiguous 0..C-1 with every class present")
    return counts


def stratified_kfold(labels: np.ndarray, k_requested: int = 5, seed: int = 0) -> list[FoldPlan]:
    """Deterministic stratified K-fold with K capped at the smallest class count.

    Samples of each class are shuffled once and dealt round-robin, so
    per-class test counts across folds differ by at most one and every test
    fold contains each class at least once.
    """
    labels = np.asarray(labels)
    counts = _class_counts(labels)
    k = min(int(k_requested), int(counts.min()))
    if k < 2:
        raise DataSplitError(
            f"cannot cross-validate: smallest class has {counts.min()} sample(s)")
    rng = np.random.default_rng(seed)
    assignments = np.empty(labels.shape[0], dtype=np.int64)
    for cls in range(len(counts)):
        idx = np.flatnonzero(labels == cls)
        idx = rng.permutation(idx)
        assignments[idx] = np.arange(idx.size) % k
    plans = []
    for fold in range(k):
        test = np.flatnonzero(assignments == fold)
        train = np.flatnonzero(assignments != fold)
        plans.append(FoldPlan(fold, train, np.array([], dtype=np.int64), test, seed))
    return plans


def monitor_split(train_idx: np.ndarray, labels: np.ndarray, fraction: float = 0.10,
                  seed: int = 0) -> tuple[np.ndarray, np.ndarray, bool]:
    """Carve a stratified monitor slice out of a training index set.

    Returns (inner_train_idx, monitor_idx, skipped). The split is skipped
    (monitor empty, flag True) when any class cannot keep at least one
    sample on each side.
    """
    train_idx = np.asarray(train_idx)
    sub_labels = np.asarray(labels)[train_idx]
    classes, counts = np.unique(sub_labels, return_counts=True)
    if counts.min() < 2:
        return train_idx, np.array([], dtype=np.int64), True
    rng = np.random.default_rng(seed)
    monitor_parts = []
    for cls, count in zip(classes, counts):
        take = int(round(fraction * count))
        take = min(max(take, 1), count - 1)
        members = train_idx[sub_labels == cls]
        monitor_parts.append(rng.permutation(members)[:take])
    monitor = np.sort(np.concatenate(monitor_parts))
    inner = np.setdiff1d(train_idx, monitor)
    return inner, monitor, False


def plan_folds(labels: np.ndarray, k_requested: int, monitor_fraction: float,
               fold_seed: int, monitor_seeds: list[int]) -> list[FoldPlan]:
    """K-fold plans with the monitor slice already carved out of each train set."""
    plans = stratified_kfold(labels, k_requested, fold_seed)
    for plan in plans:
        if monitor_fraction <= 0:
            plan.monitor_skipped = True
            continue
        inner, monitor, skipped = monitor_split(
            plan.train_idx, labels, monitor_fraction, monitor_seeds[plan.fold_index])
        plan.train_idx = inner
        plan.monitor_idx = monitor
        plan.monitor_skipped = skipped
    return plans
