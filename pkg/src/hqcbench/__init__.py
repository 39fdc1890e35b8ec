"""Hybrid quantum-classical fusion benchmark.

A self-contained stack: a numpy reverse-mode autodiff engine, a
differentiable statevector circuit simulator with adjoint gradients,
fold-local preprocessing with stratified cross-validation, the six fusion
model families, and a benchmark driver that reproduces the reference
results on small tabular datasets.
"""

from .autodiff import Tensor, no_grad
from .datasets import RawDataset, prepare_dataset
from .metrics import RunReport, aggregate_folds
from .models import ModelSpec, build_model, default_spec
from .preprocessing import FoldPlan, stratified_kfold
from .quantum import CircuitConfig, QuantumParams, qnode_forward, readout
from .seeding import SeedTree, seed_everything
from .training import evaluate_fold, train_fold

__all__ = [
    "Tensor", "no_grad",
    "RawDataset", "prepare_dataset",
    "RunReport", "aggregate_folds",
    "ModelSpec", "build_model", "default_spec",
    "FoldPlan", "stratified_kfold",
    "CircuitConfig", "QuantumParams", "qnode_forward", "readout",
    "SeedTree", "seed_everything",
    "evaluate_fold", "train_fold",
]

__version__ = "0.1.0"
