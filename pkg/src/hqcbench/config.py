"""Benchmark run configuration: a human-editable JSON document.

Schema (all keys optional unless noted):

    {
      "seed": 0,
      "out_dir": "results",
      "k_folds": 5,
      "monitor_fraction": 0.10,
      "epochs": 30,
      "batch_size": 64,
      "qubits": 9,
      "layers": 3,
      "workers": 1,
      "datasets": [                      # required, non-empty
        {"name": "wine", "data_dir": "data", "subsample_cap": null}
      ],
      "models": ["best_classical", "quantum_only"]   # required, non-empty;
      # entries may also be objects: {"kind": "midfusion_attn", "latent_dim": 64,
      #   "num_heads": 4, "dropout": 0.1, "classical_pca": true}
    }

The out_dir can be overridden by the HQCBENCH_OUT environment variable or
the --out CLI flag. ``config_hash`` of the canonical serialized form is
stamped into every results file.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .datasets import RECIPES, dataset_files
from .models import MODEL_KINDS


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class DatasetConfig:
    name: str
    data_dir: str = "data"
    subsample_cap: int | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "data_dir": self.data_dir, "subsample_cap": self.subsample_cap}


@dataclass
class ModelConfig:
    kind: str
    overrides: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.overrides}


_ALLOWED_MODEL_OVERRIDES = {"latent_dim", "num_heads", "dropout", "classical_pca", "trunk_depth"}


@dataclass
class RunConfig:
    datasets: list[DatasetConfig]
    models: list[ModelConfig]
    seed: int = 0
    out_dir: str = "results"
    k_folds: int = 5
    monitor_fraction: float = 0.10
    epochs: int = 30
    batch_size: int = 64
    qubits: int = 9
    layers: int = 3
    workers: int = 1

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = set(doc) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw_datasets = doc.get("datasets")
        if not raw_datasets:
            raise ConfigError("config must list at least one dataset")
        datasets = []
        for entry in raw_datasets:
            if isinstance(entry, str):
                entry = {"name": entry}
            unknown = set(entry) - {"name", "data_dir", "subsample_cap"}
            if unknown:
                raise ConfigError(f"unknown dataset keys: {sorted(unknown)}")
            if "name" not in entry:
                raise ConfigError("dataset entry missing 'name'")
            datasets.append(DatasetConfig(**entry))
        raw_models = doc.get("models")
        if not raw_models:
            raise ConfigError("config must list at least one model")
        models = []
        for entry in raw_models:
            if isinstance(entry, str):
                models.append(ModelConfig(entry))
                continue
            if not isinstance(entry, dict) or "kind" not in entry:
                raise ConfigError(f"model entry must be a kind string or an object with 'kind': {entry!r}")
            overrides = {k: v for k, v in entry.items() if k != "kind"}
            unknown = set(overrides) - _ALLOWED_MODEL_OVERRIDES
            if unknown:
                raise ConfigError(f"unknown model override keys: {sorted(unknown)}")
            models.append(ModelConfig(entry["kind"], overrides))
        scalars = {k: doc[k] for k in doc if k not in ("datasets", "models")}
        return cls(datasets=datasets, models=models, **scalars)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "out_dir": self.out_dir,
            "k_folds": self.k_folds,
            "monitor_fraction": self.monitor_fraction,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "qubits": self.qubits,
            "layers": self.layers,
            "workers": self.workers,
            "datasets": [d.to_dict() for d in self.datasets],
            "models": [m.to_dict() for m in self.models],
        }

    def config_hash(self) -> str:
        """Hash of the experiment identity; out_dir and workers do not affect results."""
        doc = self.to_dict()
        doc.pop("out_dir")
        doc.pop("workers")
        canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    def validate(self) -> list[str]:
        """All problems found, empty when the config is runnable."""
        problems: list[str] = []
        if self.k_folds < 2:
            problems.append(f"k_folds must be >= 2, got {self.k_folds}")
        if not 0.0 <= self.monitor_fraction < 1.0:
            problems.append(f"monitor_fraction must be in [0, 1), got {self.monitor_fraction}")
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            problems.append(f"batch_size must be >= 1, got {self.batch_size}")
        if not 2 <= self.qubits <= 12:
            problems.append(f"qubits must be in [2, 12], got {self.qubits}")
        if self.layers < 1:
            problems.append(f"layers must be >= 1, got {self.layers}")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        for ds in self.datasets:
            if ds.name not in RECIPES:
                problems.append(f"unknown dataset {ds.name!r}; known: {sorted(RECIPES)}")
                continue
            for path in dataset_files(ds.name, ds.data_dir):
                if not path.exists():
                    problems.append(f"{ds.name}: missing data file {path}")
            if ds.subsample_cap is not None and ds.subsample_cap < 1:
                problems.append(f"{ds.name}: subsample_cap must be positive")
        for model in self.models:
            if model.kind not in MODEL_KINDS:
                problems.append(f"unknown model kind {model.kind!r}; known: {sorted(MODEL_KINDS)}")
                continue
            latent = model.overrides.get("latent_dim", 64)
            heads = model.overrides.get("num_heads", 4)
            if latent % heads != 0:
                problems.append(f"{model.kind}: latent_dim {latent} not divisible by num_heads {heads}")
        return problems
