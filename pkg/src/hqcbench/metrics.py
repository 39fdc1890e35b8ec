"""Test-fold evaluation metrics and NaN-safe cross-fold aggregation.

Precision/recall/F1 use the zero-division convention: a class whose
denominator is zero contributes 0 to the macro average. ROC-AUC is the
Mann-Whitney rank statistic (ties contribute 1/2) and is reported as NaN
when a fold lacks one of the classes; aggregation excludes NaN folds from
the mean and uses the sample (n-1) standard deviation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

METRIC_KEYS = ("accuracy", "precision", "recall", "f1", "roc_auc")


def accuracy(pred_labels: np.ndarray, true_labels: np.ndarray) -> float:
    pred_labels = np.asarray(pred_labels)
    true_labels = np.asarray(true_labels)
    if pred_labels.shape != true_labels.shape or pred_labels.size == 0:
        raise ValueError("predictions and labels must be equal-length and non-empty")
    return float((pred_labels == true_labels).mean())


def macro_prf1(pred_labels: np.ndarray, true_labels: np.ndarray,
               num_classes: int) -> tuple[float, float, float]:
    """Unweighted per-class precision/recall/F1 means over all ``num_classes``."""
    pred_labels = np.asarray(pred_labels)
    true_labels = np.asarray(true_labels)
    precisions = np.zeros(num_classes)
    recalls = np.zeros(num_classes)
    f1s = np.zeros(num_classes)
    for cls in range(num_classes):
        tp = int(((pred_labels == cls) & (true_labels == cls)).sum())
        fp = int(((pred_labels == cls) & (true_labels != cls)).sum())
        fn = int(((pred_labels != cls) & (true_labels == cls)).sum())
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn) if tp + fn > 0 else 0.0
        precisions[cls] = p
        recalls[cls] = r
        f1s[cls] = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return float(precisions.mean()), float(recalls.mean()), float(f1s.mean())


def _tied_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank span."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc_binary(scores: np.ndarray, true_labels: np.ndarray) -> float:
    """Mann-Whitney AUC; NaN when either class is absent."""
    scores = np.asarray(scores, dtype=np.float64)
    true_labels = np.asarray(true_labels)
    pos = true_labels == 1
    n_pos = int(pos.sum())
    n_neg = scores.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = _tied_ranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_auc_ovr_macro(prob_matrix: np.ndarray, true_labels: np.ndarray) -> float:
    """One-vs-rest AUC averaged over classes with both positives and negatives."""
    prob_matrix = np.asarray(prob_matrix, dtype=np.float64)
    true_labels = np.asarray(true_labels)
    aucs = []
    for cls in range(prob_matrix.shape[1]):
        auc = roc_auc_binary(prob_matrix[:, cls], (true_labels == cls).astype(np.int64))
        if not np.isnan(auc):
            aucs.append(auc)
    return float(np.mean(aucs)) if aucs else float("nan")


@dataclass
class RunReport:
    """Per-fold metric records plus NaN-safe mean/std aggregates."""

    dataset: str
    model: str
    seed: int
    fold_records: list[dict] = field(default_factory=list)
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)
    folds_used: dict[str, int] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "model": self.model,
            "seed": self.seed,
            "folds": self.fold_records,
            "mean": self.mean,
            "std": self.std,
            "folds_used": self.folds_used,
            "provenance": self.provenance,
        }


def aggregate_folds(fold_records: list[dict], dataset: str = "", model: str = "",
                    seed: int = 0) -> RunReport:
    """Aggregate per-fold metrics, excluding NaN entries from mean and std."""
    if not fold_records:
        raise ValueError("need at least one fold record")
    report = RunReport(dataset, model, seed, fold_records=list(fold_records))
    for key in METRIC_KEYS:
        values = np.array([rec[key] for rec in fold_records], dtype=np.float64)
        defined = values[~np.isnan(values)]
        report.folds_used[key] = int(defined.size)
        if defined.size == 0:
            report.mean[key] = float("nan")
            report.std[key] = float("nan")
        else:
            report.mean[key] = float(defined.mean())
            report.std[key] = float(defined.std(ddof=1)) if defined.size > 1 else 0.0
    return report


def format_mean_std(mean: float, std: float, digits: int = 3) -> str:
    if np.isnan(mean):
        return "undefined"
    return f"{mean:.{digits}f} ± {std:.{digits}f}"
