"""Benchmark orchestration: dataset x model x fold jobs with full seeding.

Each job trains one (dataset, model, fold) triple with randomness derived
from the root seed and the job key, so results are independent of execution
order and worker count. Jobs may run in a fork-based process pool; all
results are written by the parent through a single serialized writer.

Outputs per (dataset, model): one aggregated JSON document; plus one flat
CSV of per-fold rows across the whole run, and a failures.json when any job
raised. Files contain no timestamps, so identically-seeded runs are
byte-identical.
"""
from __future__ import annotations

import csv
import json
import math
import multiprocessing
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .datasets import RawDataset, prepare_dataset
from .metrics import RunReport, aggregate_folds
from .models import default_spec
from .preprocessing import FoldPlan, plan_folds
from .quantum import CircuitConfig
from .seeding import seed_everything
from .training import evaluate_fold, train_fold

CSV_FIELDS = ("dataset", "model", "fold", "accuracy", "precision", "recall",
              "f1", "roc_auc", "epochs_ran")


@dataclass
class JobSpec:
    dataset: str
    model_kind: str
    fold_index: int
    seed: int


@dataclass
class BenchmarkResult:
    reports: list[RunReport] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


# worker context, populated before forking so the pool inherits it
_CONTEXT: dict = {}


def _nan_to_none(obj):
    """Undefined metrics serialize as JSON null (json's NaN literal is non-standard)."""
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_nan_to_none(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and math.isnan(obj):
        return None
    return obj


def _none_to_nan(obj):
    if isinstance(obj, dict):
        return {k: _none_to_nan(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_none_to_nan(v) for v in obj]
    if obj is None:
        return float("nan")
    return obj


def _run_job(job: JobSpec) -> tuple[dict, list[dict]]:
    config: RunConfig = _CONTEXT["config"]
    data: RawDataset = _CONTEXT["datasets"][job.dataset]
    fold: FoldPlan = _CONTEXT["folds"][job.dataset][job.fold_index]
    model_cfg = next(m for m in config.models if m.kind == job.model_kind)
    spec = default_spec(
        job.model_kind, data.num_classes,
        circuit=CircuitConfig(config.qubits, config.layers), **model_cfg.overrides)
    artifacts = train_fold(fold, spec, data, job.seed,
                           epochs=config.epochs, batch_size=config.batch_size)
    record = evaluate_fold(artifacts, data, fold.test_idx, data.num_classes)
    record["fold"] = job.fold_index
    history = [{"dataset": job.dataset, "model": job.model_kind, "fold": job.fold_index, **row}
               for row in artifacts.history]
    return record, history


def _run_job_guarded(job: JobSpec) -> tuple[JobSpec, dict | None, list[dict], str | None]:
    try:
        record, history = _run_job(job)
        return job, record, history, None
    except Exception:
        return job, None, [], traceback.format_exc()


def run_benchmark(config: RunConfig, out_dir: str | Path | None = None) -> BenchmarkResult:
    """Run the configured grid and persist results; partial results survive failures."""
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tree = seed_everything(config.seed)

    datasets: dict[str, RawDataset] = {}
    folds: dict[str, list[FoldPlan]] = {}
    for ds_cfg in config.datasets:
        data = prepare_dataset(ds_cfg.name, ds_cfg.data_dir, cap=ds_cfg.subsample_cap,
                               seed=tree.derive(ds_cfg.name, "subsample"))
        datasets[ds_cfg.name] = data
        monitor_seeds = [tree.derive(ds_cfg.name, "monitor", f) for f in range(config.k_folds)]
        folds[ds_cfg.name] = plan_folds(data.y, config.k_folds, config.monitor_fraction,
                                        tree.derive(ds_cfg.name, "folds"), monitor_seeds)

    jobs = [
        JobSpec(ds_cfg.name, model_cfg.kind, plan.fold_index,
                tree.derive(ds_cfg.name, model_cfg.kind, plan.fold_index, "train"))
        for ds_cfg in config.datasets
        for model_cfg in config.models
        for plan in folds[ds_cfg.name]
    ]

    _CONTEXT.clear()
    _CONTEXT.update(config=config, datasets=datasets, folds=folds)
    if config.workers > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(config.workers) as pool:
            outcomes = pool.map(_run_job_guarded, jobs)
    else:
        outcomes = [_run_job_guarded(job) for job in jobs]
    _CONTEXT.clear()

    result = BenchmarkResult()
    by_pair: dict[tuple[str, str], list[dict]] = {}
    history_rows: list[dict] = []
    for job, record, history, error in outcomes:
        if error is not None:
            result.failures.append({"dataset": job.dataset, "model": job.model_kind,
                                    "fold": job.fold_index, "error": error})
            continue
        by_pair.setdefault((job.dataset, job.model_kind), []).append(record)
        history_rows.extend(history)

    config_hash = config.config_hash()
    for ds_cfg in config.datasets:
        for model_cfg in config.models:
            records = by_pair.get((ds_cfg.name, model_cfg.kind))
            if not records:
                continue
            records.sort(key=lambda r: r["fold"])
            report = aggregate_folds(records, dataset=ds_cfg.name, model=model_cfg.kind,
                                     seed=config.seed)
            report.provenance = datasets[ds_cfg.name].provenance
            result.reports.append(report)
            doc = report.to_dict()
            doc["config_hash"] = config_hash
            path = out / f"{ds_cfg.name}__{model_cfg.kind}.json"
            path.write_text(json.dumps(_nan_to_none(doc), sort_keys=True, indent=2) + "\n")

    _write_flat_csv(out / "results.csv", result.reports)
    _write_history_csv(out / "history.csv", history_rows)
    if result.failures:
        (out / "failures.json").write_text(
            json.dumps(result.failures, sort_keys=True, indent=2) + "\n")
    return result


def _write_flat_csv(path: Path, reports: list[RunReport]) -> None:
    rows = []
    for report in reports:
        for record in report.fold_records:
            rows.append({"dataset": report.dataset, "model": report.model,
                         **{k: record[k] for k in CSV_FIELDS if k in record}})
    rows.sort(key=lambda r: (r["dataset"], r["model"], r["fold"]))
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS)
        writer.writeheader()
        writer.writerows(rows)


def _write_history_csv(path: Path, rows: list[dict]) -> None:
    fields = ("dataset", "model", "fold", "epoch", "train_loss", "monitor", "lr")
    rows = sorted(rows, key=lambda r: (r["dataset"], r["model"], r["fold"], r["epoch"]))
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def load_reports(results_dir: str | Path) -> list[RunReport]:
    """Re-load aggregated reports written by ``run_benchmark``."""
    reports = []
    for path in sorted(Path(results_dir).glob("*__*.json")):
        doc = _none_to_nan(json.loads(path.read_text()))
        report = RunReport(doc["dataset"], doc["model"], doc.get("seed", 0),
                           fold_records=doc["folds"], mean=doc["mean"], std=doc["std"],
                           folds_used=doc.get("folds_used", {}),
                           provenance=doc.get("provenance", {}))
        reports.append(report)
    return reports
