"""Summary emission: per-dataset tables and the accuracy bar chart.

Tables report mean +- std for every metric with the best-F1 row bolded and
name the best fusion variant per dataset. The figure plots mean accuracy in
percent with std error bars, clipped to the 70-100% band; the quantum-only
baseline is omitted from the plot (it would compress the scale) but stays
in the tables.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import METRIC_KEYS, RunReport, format_mean_std
from .models import FUSION_KINDS
from .runner import load_reports

PLOT_YLIM = (70.0, 100.0)
PLOT_EXCLUDED_MODELS = ("quantum_only",)


def best_fusion(reports: list[RunReport]) -> RunReport | None:
    """The fusion report with the highest mean F1, or None if no fusion ran."""
    fusion = [r for r in reports if r.model in FUSION_KINDS and not np.isnan(r.mean.get("f1", np.nan))]
    if not fusion:
        return None
    return max(fusion, key=lambda r: r.mean["f1"])


def dataset_table_markdown(dataset: str, reports: list[RunReport]) -> str:
    """One markdown table; the row with the best mean F1 is bolded."""
    rows = [r for r in reports if r.dataset == dataset]
    f1s = [r.mean.get("f1", float("nan")) for r in rows]
    best_idx = int(np.nanargmax(f1s)) if not all(np.isnan(v) for v in f1s) else -1
    lines = [
        f"### {dataset}",
        "",
        "| Model | Accuracy | Precision | Recall | F1 | ROC-AUC |",
        "|---|---|---|---|---|---|",
    ]
    for i, report in enumerate(rows):
        cells = [format_mean_std(report.mean[k], report.std[k]) for k in METRIC_KEYS]
        name = f"**{report.model}**" if i == best_idx else report.model
        if i == best_idx:
            cells = [f"**{c}**" for c in cells]
        lines.append("| " + " | ".join([name] + cells) + " |")
    chosen = best_fusion(rows)
    if chosen is not None:
        lines.append("")
        lines.append(f"Best fusion by mean F1: `{chosen.model}` ({chosen.mean['f1']:.3f})")
    lines.append("")
    return "\n".join(lines)


def build_accuracy_figure(reports: list[RunReport]):
    """Grouped accuracy bars (percent, std error bars), y-axis clipped to 70-100."""
    datasets = sorted({r.dataset for r in reports})
    models = sorted({r.model for r in reports if r.model not in PLOT_EXCLUDED_MODELS})
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(datasets), 4.0))
    width = 0.8 / max(1, len(models))
    x = np.arange(len(datasets))
    by_key = {(r.dataset, r.model): r for r in reports}
    for j, model in enumerate(models):
        heights, errors = [], []
        for dataset in datasets:
            report = by_key.get((dataset, model))
            if report is None or np.isnan(report.mean["accuracy"]):
                heights.append(np.nan)
                errors.append(0.0)
            else:
                heights.append(100.0 * report.mean["accuracy"])
                errors.append(100.0 * report.std["accuracy"])
        offset = (j - (len(models) - 1) / 2) * width
        ax.bar(x + offset, heights, width=width, yerr=errors, capsize=2, label=model)
    ax.set_xticks(x)
    ax.set_xticklabels(datasets)
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(*PLOT_YLIM)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    return fig, ax


def emit_summary(results_dir: str | Path, out_dir: str | Path | None = None) -> dict[str, Path]:
    """Write summary.md, summary.csv, and accuracy.svg from aggregated results."""
    results_dir = Path(results_dir)
    out = Path(out_dir) if out_dir is not None else results_dir
    out.mkdir(parents=True, exist_ok=True)
    reports = load_reports(results_dir)
    if not reports:
        raise FileNotFoundError(f"no aggregated result files (*__*.json) in {results_dir}")

    datasets = sorted({r.dataset for r in reports})
    md_parts = ["# Benchmark summary", ""]
    for dataset in datasets:
        md_parts.append(dataset_table_markdown(dataset, reports))
    md_path = out / "summary.md"
    md_path.write_text("\n".join(md_parts))

    csv_path = out / "summary.csv"
    with open(csv_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["dataset", "model"]
                        + [f"{k}_mean" for k in METRIC_KEYS]
                        + [f"{k}_std" for k in METRIC_KEYS])
        for report in sorted(reports, key=lambda r: (r.dataset, r.model)):
            writer.writerow([report.dataset, report.model]
                            + [report.mean[k] for k in METRIC_KEYS]
                            + [report.std[k] for k in METRIC_KEYS])

    fig, _ = build_accuracy_figure(reports)
    svg_path = out / "accuracy.svg"
    fig.savefig(svg_path, format="svg")
    plt.close(fig)
    return {"markdown": md_path, "csv": csv_path, "figure": svg_path}
