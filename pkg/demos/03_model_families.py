"""The model families side by side on a toy task.

Each model maps (classical features, quantum features) to logits. The fusion
variants differ in where the two branches meet: at the input (early), at the
logits (late), in a shared latent (mid/deep), or through attention over
readout tokens.

Run from the repo root:  python demos/03_model_families.py
"""
import numpy as np

from hqcbench import autodiff as ad
from hqcbench.datasets import _finalize
from hqcbench.models import MODEL_KINDS, default_spec, build_model
from hqcbench.preprocessing import plan_folds
from hqcbench.quantum import CircuitConfig
from hqcbench.training import evaluate_fold, train_fold

rng = np.random.default_rng(0)

# --- every family produces logits from the same branch inputs ---------------------
circuit = CircuitConfig(num_qubits=3, num_layers=1)
x_c = rng.uniform(-1, 1, (4, 5)).astype(np.float32)
x_q = rng.uniform(-1, 1, (4, 3)).astype(np.float32)
print(f"{'kind':<20} {'params':>7}  logits")
for kind in sorted(MODEL_KINDS):
    spec = default_spec(kind, num_classes=3, circuit=circuit, latent_dim=16, num_heads=4)
    model = build_model(spec, 5, np.random.default_rng(1), np.random.default_rng(2))
    logits = model.forward(x_c, x_q)
    n_params = sum(p.size for p in model.parameters())
    print(f"{kind:<20} {n_params:>7}  {np.round(logits.value[0], 3)}")

# --- the late-fusion gate interpolates between branches ---------------------------
spec = default_spec("late_fusion", num_classes=2, circuit=circuit, latent_dim=16)
model = build_model(spec, 5, np.random.default_rng(3), np.random.default_rng(4))
for gate in (-4.0, 0.0, 4.0):
    model.gate.value[...] = gate
    alpha = ad.sigmoid(model.gate).value[0]
    print(f"\ngate a={gate:+.0f} -> alpha={alpha:.3f} "
          f"(weight on the classical branch)")

# --- training one fold end to end --------------------------------------------------
# Two interleaved half-moons; solvable by the fused models, hard for a linear head.
angles = rng.uniform(0, np.pi, 300)
upper = np.column_stack([np.cos(angles), np.sin(angles)])
lower = np.column_stack([1 - np.cos(angles), -np.sin(angles) + 0.3])
X = np.concatenate([upper, lower]).astype(np.float32) + rng.normal(0, 0.08, (600, 2)).astype(np.float32)
y = np.array([0] * 300 + [1] * 300)
data = _finalize("moons", X, y, {})

fold = plan_folds(data.y, 5, 0.10, 0, [1, 2, 3, 4, 5])[0]
spec = default_spec("midfusion_attn", 2, circuit=CircuitConfig(2, 2), latent_dim=16)
artifacts = train_fold(fold, spec, data, seed=7, epochs=20)
record = evaluate_fold(artifacts, data, fold.test_idx, 2)
print(f"\nmidfusion_attn on moons: accuracy {record['accuracy']:.3f}, "
      f"f1 {record['f1']:.3f}, stopped after epoch {record['epochs_ran']}")
