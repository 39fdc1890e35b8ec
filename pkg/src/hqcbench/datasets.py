"""Benchmark dataset ingestion from local files.

Loaders read CSV tables (configurable delimiter/header/label column, with
optional one-hot target columns) and IDX image files (big-endian,
magic-checked), then apply the per-dataset preparation recipe: class
filtering with label remapping and seeded stratified subsampling. The
library never fetches anything over the network; ``scripts/fetch_data.py``
materializes the expected files.

Every prepared dataset carries a provenance dict recording the source file,
filters, and seeds, and is checked against the expected (N bound, d, C).
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class DatasetError(ValueError):
    """Malformed file or invalid preparation request."""


@dataclass
class CsvSchema:
    """How to read one CSV file.

    label_column indexes the single class column; onehot_label_columns
    instead names a block of 0/1 indicator columns converted to a class
    index via argmax. Exactly one of the two must be set.
    """

    delimiter: str = ","
    has_header: bool = True
    label_column: int | None = -1
    onehot_label_columns: list[int] | None = None


@dataclass
class RawDataset:
    """Feature matrix (float32), contiguous integer labels, and provenance."""

    name: str
    X: np.ndarray
    y: np.ndarray
    num_features: int
    num_classes: int
    provenance: dict = field(default_factory=dict)


def _finalize(name: str, X: np.ndarray, labels: np.ndarray, provenance: dict) -> RawDataset:
    X = np.asarray(X, dtype=np.float32)
    if X.size == 0:
        raise DatasetError(f"{name}: empty dataset")
    if not np.isfinite(X).all():
        raise DatasetError(f"{name}: features contain NaN or Inf")
    labels = np.asarray(labels, dtype=np.int64)
    original = np.unique(labels)
    remap = {int(old): new for new, old in enumerate(original)}
    y = np.array([remap[int(v)] for v in labels], dtype=np.int64)
    if (original != np.arange(original.size)).any():
        provenance = dict(provenance, label_remap={int(k): int(v) for k, v in remap.items()})
    return RawDataset(name, X, y, X.shape[1], int(original.size), provenance)


def load_csv(path: str | Path, schema: CsvSchema | None = None, name: str | None = None) -> RawDataset:
    """Parse a numeric CSV into features + labels; errors carry line numbers."""
    schema = schema or CsvSchema()
    path = Path(path)
    rows: list[list[float]] = []
    labels: list[int] = []
    onehot_rows: list[list[float]] = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle, delimiter=schema.delimiter)
        for line_no, row in enumerate(reader, start=1):
            if schema.has_header and line_no == 1:
                continue
            if not row or all(cell.strip() == "" for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise DatasetError(f"{path}: line {line_no}: non-numeric value ({exc})") from None
            if schema.onehot_label_columns is not None:
                label_cols = set(c % len(values) for c in schema.onehot_label_columns)
                onehot_rows.append([values[c] for c in sorted(label_cols)])
                rows.append([v for c, v in enumerate(values) if c not in label_cols])
            else:
                label_col = schema.label_column % len(values)
                label_val = values[label_col]
                if label_val != int(label_val):
                    raise DatasetError(f"{path}: line {line_no}: non-integer label {label_val}")
                labels.append(int(label_val))
                rows.append([v for c, v in enumerate(values) if c != label_col])
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DatasetError(f"{path}: inconsistent row widths {sorted(widths)}")
    provenance = {"source": str(path), "rows_read": len(rows)}
    if schema.onehot_label_columns is not None:
        y = onehot_to_index(np.asarray(onehot_rows), provenance)
    else:
        y = np.asarray(labels)
    return _finalize(name or path.stem, np.asarray(rows), y, provenance)


def _read_exact(handle, count: int, path: Path) -> bytes:
    data = handle.read(count)
    if len(data) != count:
        raise DatasetError(f"{path}: truncated file (wanted {count} bytes, got {len(data)})")
    return data


def load_idx_images(images_path: str | Path, labels_path: str | Path,
                    name: str = "idx") -> RawDataset:
    """Load IDX image/label pairs; pixels are flattened row-major and scaled to [0, 1]."""
    images_path = Path(images_path)
    labels_path = Path(labels_path)
    with open(images_path, "rb") as handle:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(handle, 16, images_path))
        if magic != IDX_IMAGES_MAGIC:
            raise DatasetError(f"{images_path}: bad magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}")
        pixels = np.frombuffer(_read_exact(handle, count * rows * cols, images_path), dtype=np.uint8)
    with open(labels_path, "rb") as handle:
        magic, label_count = struct.unpack(">II", _read_exact(handle, 8, labels_path))
        if magic != IDX_LABELS_MAGIC:
            raise DatasetError(f"{labels_path}: bad magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}")
        labels = np.frombuffer(_read_exact(handle, label_count, labels_path), dtype=np.uint8)
    if count != label_count:
        raise DatasetError(f"image count {count} != label count {label_count}")
    X = pixels.reshape(count, rows * cols).astype(np.float32) / 255.0
    provenance = {"source": str(images_path), "labels_source": str(labels_path),
                  "image_shape": [int(rows), int(cols)]}
    return _finalize(name, X, labels.astype(np.int64), provenance)


def onehot_to_index(onehot: np.ndarray, provenance: dict | None = None) -> np.ndarray:
    """Argmax over indicator columns; ties break to the lowest index and are flagged."""
    onehot = np.asarray(onehot, dtype=np.float64)
    row_max = onehot.max(axis=1)
    if (row_max <= 0).any():
        bad = int(np.flatnonzero(row_max <= 0)[0])
        raise DatasetError(f"one-hot row {bad} has no positive entry")
    ties = int(((onehot == row_max[:, None]).sum(axis=1) > 1).sum())
    if provenance is not None and ties:
        provenance["onehot_tie_rows"] = ties
    return onehot.argmax(axis=1).astype(np.int64)


def filter_classes(ds: RawDataset, keep: set[int]) -> RawDataset:
    """Keep rows of the given classes, remapped to 0..len(keep)-1 ascending.

    ``keep`` is expressed in the source file's original labels: when loading
    remapped non-contiguous labels (recorded in provenance), the keep set is
    translated through that mapping, so recipes like "classes {1,2,3} as
    labeled in the repository" select the right rows.
    """
    keep = sorted(int(k) for k in keep)
    if not keep:
        raise DatasetError("keep set is empty")
    remap = ds.provenance.get("label_remap")
    if remap is not None:
        missing = [k for k in keep if k not in remap]
        if missing:
            raise DatasetError(
                f"{ds.name}: classes {missing} absent (original labels: {sorted(remap)})")
        current_keep = [remap[k] for k in keep]
    else:
        present = set(np.unique(ds.y).tolist())
        missing = [k for k in keep if k not in present]
        if missing:
            raise DatasetError(
                f"{ds.name}: classes {missing} absent (labels present: {sorted(present)})")
        current_keep = keep
    mask = np.isin(ds.y, current_keep)
    provenance = dict(ds.provenance, class_filter=keep)
    out = _finalize(ds.name, ds.X[mask], ds.y[mask], provenance)
    # provenance keeps the original-label frame: compose load remap with the filter
    out.provenance["label_remap"] = {orig: i for i, orig in enumerate(keep)}
    return out


def stratified_subsample(ds: RawDataset, cap: int, seed: int) -> RawDataset:
    """Deterministic subsample of at most ``cap`` rows preserving class proportions.

    Per-class quotas come from largest-remainder rounding of the exact
    proportional counts (each class keeps at least one row), so every class
    count lands within one sample of its exact share.
    """
    if cap < ds.num_classes:
        raise DatasetError(f"cap {cap} is below the class count {ds.num_classes}")
    n = ds.X.shape[0]
    if n <= cap:
        return ds
    counts = np.bincount(ds.y, minlength=ds.num_classes)
    exact = counts * (cap / n)
    quotas = np.maximum(np.floor(exact).astype(np.int64), 1)
    remainders = exact - np.floor(exact)
    shortfall = cap - int(quotas.sum())
    if shortfall > 0:
        order = np.lexsort((np.arange(ds.num_classes), -remainders))
        for cls in order[:shortfall]:
            quotas[cls] += 1
    elif shortfall < 0:
        order = np.lexsort((np.arange(ds.num_classes), remainders))
        for cls in order:
            if shortfall == 0:
                break
            if quotas[cls] > 1:
                quotas[cls] -= 1
                shortfall += 1
    rng = np.random.default_rng(seed)
    chosen = []
    for cls in range(ds.num_classes):
        members = np.flatnonzero(ds.y == cls)
        chosen.append(rng.permutation(members)[:quotas[cls]])
    idx = np.sort(np.concatenate(chosen))
    provenance = dict(ds.provenance, subsample_cap=int(cap), subsample_seed=int(seed),
                      subsampled_from=int(n))
    return _finalize(ds.name, ds.X[idx], ds.y[idx], provenance)


# ---------------------------------------------------------------------------
# benchmark suite recipes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetRecipe:
    """Files, filters, and expected post-preparation shape of one benchmark dataset."""

    name: str
    files: tuple[str, ...]
    keep_classes: tuple[int, ...] | None
    default_cap: int | None
    onehot_labels: int  # number of trailing one-hot target columns, 0 for plain label
    expected_n: int     # upper bound after preparation
    expected_d: int
    expected_c: int


RECIPES: dict[str, DatasetRecipe] = {
    "wine": DatasetRecipe("wine", ("wine.csv",), None, None, 0, 178, 13, 3),
    "breastcancer": DatasetRecipe("breastcancer", ("breastcancer.csv",), None, None, 0, 569, 30, 2),
    "covertype": DatasetRecipe("covertype", ("covertype.csv",), (1, 2, 3), 5000, 0, 5000, 54, 3),
    "fashionmnist": DatasetRecipe(
        "fashionmnist",
        ("fashion-mnist-train-images-idx3-ubyte", "fashion-mnist-train-labels-idx1-ubyte"),
        (0, 1, 2), 3000, 0, 3000, 784, 3),
    "steel": DatasetRecipe("steel", ("steel.csv",), None, None, 7, 1941, 27, 7),
}


def dataset_files(name: str, data_dir: str | Path) -> list[Path]:
    recipe = RECIPES.get(name)
    if recipe is None:
        raise DatasetError(f"unknown dataset {name!r}; known: {sorted(RECIPES)}")
    return [Path(data_dir) / f for f in recipe.files]


def prepare_dataset(name: str, data_dir: str | Path, cap: int | None = None,
                    seed: int = 0) -> RawDataset:
    """Load and prepare one benchmark dataset from ``data_dir``."""
    recipe = RECIPES.get(name)
    if recipe is None:
        raise DatasetError(f"unknown dataset {name!r}; known: {sorted(RECIPES)}")
    paths = dataset_files(name, data_dir)
    for path in paths:
        if not path.exists():
            raise DatasetError(
                f"{name}: missing file {path}; run scripts/fetch_data.py to materialize it")
    if name == "fashionmnist":
        ds = load_idx_images(paths[0], paths[1], name=name)
    elif recipe.onehot_labels:
        width = recipe.expected_d + recipe.onehot_labels
        schema = CsvSchema(onehot_label_columns=list(range(width - recipe.onehot_labels, width)))
        ds = load_csv(paths[0], schema, name=name)
    else:
        ds = load_csv(paths[0], name=name)
    if recipe.keep_classes is not None:
        ds = filter_classes(ds, set(recipe.keep_classes))
    effective_cap = cap if cap is not None else recipe.default_cap
    if effective_cap is not None:
        ds = stratified_subsample(ds, effective_cap, seed)
    expected_n = min(recipe.expected_n, effective_cap) if effective_cap else recipe.expected_n
    if ds.num_features != recipe.expected_d or ds.num_classes != recipe.expected_c:
        raise DatasetError(
            f"{name}: prepared shape (d={ds.num_features}, C={ds.num_classes}) does not match "
            f"expected (d={recipe.expected_d}, C={recipe.expected_c}); wrong source file?")
    if ds.X.shape[0] > expected_n:
        raise DatasetError(f"{name}: {ds.X.shape[0]} rows exceeds expected bound {expected_n}")
    return ds
