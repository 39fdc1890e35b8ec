"""The benchmark model families: classical, quantum, and fusion architectures.

Every model maps a pair of branch inputs to logits: ``x_c`` are the
classical-branch features (standardized, optionally PCA-reduced) and ``x_q``
the quantum-branch features (standardized + PCA to the qubit count). Binary
tasks use a single-logit head, multi-class tasks C logits. The circuit
readout enters the autodiff graph through ``quantum_readout``, which runs
the statevector simulator forward in float64 and routes upstream gradients
through one adjoint sweep.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import quantum as qt
from .autodiff import Linear, LayerNorm, Tensor, TransformerBlock


class ModelConfigError(ValueError):
    """Inconsistent model specification."""


@dataclass
class ModelSpec:
    """Declarative configuration of one model family."""

    kind: str
    num_classes: int
    latent_dim: int = 64
    num_heads: int = 4
    dropout: float = 0.10
    trunk_depth: int = 2
    circuit: qt.CircuitConfig = field(default_factory=qt.CircuitConfig)
    classical_pca: bool = True

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ModelConfigError(f"unknown model kind {self.kind!r}; known: {sorted(MODEL_KINDS)}")
        if self.num_classes < 2:
            raise ModelConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.latent_dim % self.num_heads != 0:
            raise ModelConfigError(
                f"latent_dim {self.latent_dim} not divisible by num_heads {self.num_heads}")
        if self.trunk_depth not in (2, 3, 4):
            raise ModelConfigError(f"trunk_depth must be 2, 3, or 4, got {self.trunk_depth}")
        if not 0.0 <= self.dropout < 1.0:
            raise ModelConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def out_dim(self) -> int:
        return 1 if self.num_classes == 2 else self.num_classes


def quantum_readout(features: np.ndarray, weights: Tensor, scales: Tensor,
                    config: qt.CircuitConfig) -> Tensor:
    """Differentiable circuit readout: (B, Q) features -> (B, 2Q) float32 tensor."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ModelConfigError(f"quantum features must be a (B, Q) batch, got shape {feats.shape}")
    params = qt.QuantumParams(weights.value.astype(np.float64), scales.value.astype(np.float64))
    sim = qt.simulate_batch(feats, params, config)
    # readouts re-enter the graph at the parameter precision (float32 in training)
    out = Tensor(qt.readout_from_amplitudes(sim.amplitudes, config.num_qubits).astype(weights.dtype))
    if ad.grad_enabled() and (weights.requires_grad or scales.requires_grad):
        out.requires_grad = True
        out._parents = tuple(p for p in (weights, scales) if p.requires_grad)

        def backward():
            _, d_weights, d_scales = qt.adjoint_gradients(
                sim, feats, params, out.grad.astype(np.float64))
            if weights.requires_grad:
                weights.grad += d_weights.astype(weights.dtype)
            if scales.requires_grad:
                scales.grad += d_scales.astype(scales.dtype)

        out._backward = backward
    return out


class MlpTrunk:
    """Stack of Linear -> (LayerNorm) -> GELU -> Dropout blocks at a fixed width."""

    def __init__(self, in_dim: int, width: int, depth: int, layernorm: bool,
                 dropout_p: float, rng: np.random.Generator):
        self.dropout_p = dropout_p
        self.blocks: list[tuple[Linear, LayerNorm | None]] = []
        dim = in_dim
        for _ in range(depth):
            lin = Linear(dim, width, rng)
            norm = LayerNorm(width) if layernorm else None
            self.blocks.append((lin, norm))
            dim = width

    def __call__(self, x: Tensor, training: bool, rng: np.random.Generator) -> Tensor:
        for lin, norm in self.blocks:
            x = lin(x)
            if norm is not None:
                x = norm(x)
            x = ad.gelu(x)
            x = ad.dropout(x, self.dropout_p, training, rng)
        return x

    def parameters(self) -> list[Tensor]:
        params: list[Tensor] = []
        for lin, norm in self.blocks:
            params.extend(lin.parameters())
            if norm is not None:
                params.extend(norm.parameters())
        return params


class Model:
    """Base: parameter registry, snapshots, and the forward contract."""

    kind: str = ""
    uses_quantum: bool = False

    def __init__(self, spec: ModelSpec, dropout_rng: np.random.Generator):
        self.spec = spec
        self._dropout_rng = dropout_rng
        self._params: list[Tensor] = []

    def _register(self, *sources) -> None:
        for src in sources:
            if isinstance(src, Tensor):
                self._params.append(src)
            else:
                self._params.extend(src.parameters())

    def parameters(self) -> list[Tensor]:
        return list(self._params)

    def zero_grad(self) -> None:
        for p in self._params:
            p.zero_grad()

    def snapshot(self) -> list[np.ndarray]:
        return [p.value.copy() for p in self._params]

    def restore(self, snap: list[np.ndarray]) -> None:
        for p, saved in zip(self._params, snap):
            p.value[...] = saved

    def forward(self, x_c: np.ndarray | None, x_q: np.ndarray | None,
                training: bool = False) -> Tensor:
        raise NotImplementedError

    def _quantum_features(self, x_q: np.ndarray) -> Tensor:
        if x_q is None:
            raise ModelConfigError(f"{self.kind} needs quantum-branch features")
        return quantum_readout(x_q, self.circuit_weights, self.circuit_scales, self.spec.circuit)

    def _init_circuit(self, rng: np.random.Generator) -> None:
        params = qt.init_quantum_params(self.spec.circuit, rng)
        self.circuit_weights = Tensor(params.weights.astype(np.float32), requires_grad=True)
        self.circuit_scales = Tensor(params.scales.astype(np.float32), requires_grad=True)
        self._register(self.circuit_weights, self.circuit_scales)


class ClassicalModel(Model):
    """MLP on classical features; depth 2 plain or depth 3 with LayerNorm."""

    def __init__(self, spec: ModelSpec, in_dim_c: int, rng, dropout_rng, deep: bool):
        super().__init__(spec, dropout_rng)
        depth = 3 if deep else 2
        self.trunk = MlpTrunk(in_dim_c, spec.latent_dim, depth, deep, spec.dropout, rng)
        self.head = Linear(spec.latent_dim, spec.out_dim, rng)
        self._register(self.trunk, self.head)

    def forward(self, x_c, x_q, training=False):
        h = self.trunk(Tensor(x_c), training, self._dropout_rng)
        return self.head(h)


class QuantumOnlyModel(Model):
    """Circuit readout followed by a linear head, or a deeper MLP head."""

    uses_quantum = True

    def __init__(self, spec: ModelSpec, in_dim_c: int, rng, dropout_rng, deep: bool):
        super().__init__(spec, dropout_rng)
        self._init_circuit(rng)
        feat_dim = 2 * spec.circuit.num_qubits
        self.trunk = MlpTrunk(feat_dim, spec.latent_dim, 3, True, spec.dropout, rng) if deep else None
        self.head = Linear(spec.latent_dim if deep else feat_dim, spec.out_dim, rng)
        if self.trunk is not None:
            self._register(self.trunk)
        self._register(self.head)

    def forward(self, x_c, x_q, training=False):
        z = self._quantum_features(x_q)
        if self.trunk is not None:
            z = self.trunk(z, training, self._dropout_rng)
        return self.head(z)


class EarlyFusionModel(Model):
    """Classifier on the concatenation of raw standardized features and the readout."""

    uses_quantum = True

    def __init__(self, spec: ModelSpec, in_dim_c: int, rng, dropout_rng):
        super().__init__(spec, dropout_rng)
        self._init_circuit(rng)
        self.trunk = MlpTrunk(in_dim_c + 2 * spec.circuit.num_qubits, spec.latent_dim, 2,
                              False, spec.dropout, rng)
        self.head = Linear(spec.latent_dim, spec.out_dim, rng)
        self._register(self.trunk, self.head)

    def forward(self, x_c, x_q, training=False):
        z = self._quantum_features(x_q)
        u = ad.concat([Tensor(x_c), z], axis=1)
        return self.head(self.trunk(u, training, self._dropout_rng))


class LateFusionModel(Model):
    """Convex logit mix of a classical MLP and a linear quantum head, alpha = sigmoid(a)."""

    uses_quantum = True

    def __init__(self, spec: ModelSpec, in_dim_c: int, rng, dropout_rng, deep: bool):
        super().__init__(spec, dropout_rng)
        self._init_circuit(rng)
        depth = 3 if deep else 2
        self.trunk_c = MlpTrunk(in_dim_c, spec.latent_dim, depth, deep, spec.dropout, rng)
        self.head_c = Linear(spec.latent_dim, spec.out_dim, rng)
        self.head_q = Linear(2 * spec.circuit.num_qubits, spec.out_dim, rng)
        self.gate = Tensor(np.zeros(1, dtype=np.float32), requires_grad=True)
        self._register(self.trunk_c, self.head_c, self.head_q, self.gate)

    def forward(self, x_c, x_q, training=False):
        logits_c = self.head_c(self.trunk_c(Tensor(x_c), training, self._dropout_rng))
        logits_q = self.head_q(self._quantum_features(x_q))
        alpha = ad.sigmoid(self.gate)
        return ad.add(ad.mul(alpha, logits_c), ad.mul(1.0 - alpha, logits_q))


class MidFusionLinearModel(Model):
    """Gated mixing of affine branch projections in a shared latent space."""

    uses_quantum = True

    def __init__(self, spec: ModelSpec, in_dim_c: int, rng, dropout_rng):
        super().__init__(spec, dropout_rng)
        self._init_circuit(rng)
        self.proj_c = Linear(in_dim_c, spec.latent_dim, rng)
        self.proj_q = Linear(2 * spec.circuit.num_qubits, spec.latent_dim, rng)
        self.gate = Tensor(np.zeros(1, dtype=np.float32), requires_grad=True)
        self.head = Linear(spec.latent_dim, spec.out_dim, rng)
        self._register(self.proj_c, self.proj_q, self.gate, self.head)

    def forward(self, x_c, x_q, training=False):
        h_c = self.proj_c(Tensor(x_c))
        h_q = self.proj_q(self._quantum_features(x_q))
        alpha = ad.sigmoid(self.gate)
        mixed = ad.add(ad.mul(alpha, h_c), ad.mul(1.0 - alpha, h_q))
        return self.head(mixed)


class MidFusionAttnModel(Model):
    """Token-based fusion: a classical CLS token attends over readout tokens.

    Each readout scalar is embedded with a shared affine map plus a learned
    per-position identity embedding; one pre-norm transformer block mixes the
    sequence and the head reads the refined CLS token.
    """

    uses_quantum = True

    def __init__(self, spec: ModelSpec, in_dim_c: int, rng, dropout_rng, deep: bool):
        super().__init__(spec, dropout_rng)
        self._init_circuit(rng)
        d = spec.latent_dim
        self.deep = deep
        if deep:
            self.cls_trunk = MlpTrunk(in_dim_c, d, 3, True, spec.dropout, rng)
        else:
            self.cls_proj = Linear(in_dim_c, d, rng)
        num_tokens = 2 * spec.circuit.num_qubits
        self.token_proj = Linear(1, d, rng)
        self.token_ids = Tensor(
            rng.uniform(-0.02, 0.02, size=(num_tokens, d)).astype(np.float32), requires_grad=True)
        self.block = TransformerBlock(d, spec.num_heads, rng)
        self.head = Linear(d, spec.out_dim, rng)
        self._register(self.cls_trunk if deep else self.cls_proj,
                       self.token_proj, self.token_ids, self.block, self.head)

    def forward(self, x_c, x_q, training=False):
        z = self._quantum_features(x_q)  # (B, M)
        batch, num_tokens = z.shape
        d = self.spec.latent_dim
        tokens = self.token_proj(ad.reshape(z, (batch, num_tokens, 1)))
        tokens = ad.add(tokens, self.token_ids)
        if self.deep:
            cls = self.cls_trunk(Tensor(x_c), training, self._dropout_rng)
        else:
            cls = self.cls_proj(Tensor(x_c))
        sequence = ad.concat([ad.reshape(cls, (batch, 1, d)), tokens], axis=1)
        refined = self.block(sequence)
        return self.head(refined[:, 0, :])


class DeepFusionModel(Model):
    """Deeper per-branch extractors before the gated latent mixing."""

    uses_quantum = True

    def __init__(self, spec: ModelSpec, in_dim_c: int, rng, dropout_rng):
        super().__init__(spec, dropout_rng)
        self._init_circuit(rng)
        d = spec.latent_dim
        self.trunk_c = MlpTrunk(in_dim_c, d, spec.trunk_depth, True, spec.dropout, rng)
        self.trunk_q = MlpTrunk(2 * spec.circuit.num_qubits, d, 2, True, spec.dropout, rng)
        self.gate = Tensor(np.zeros(1, dtype=np.float32), requires_grad=True)
        self.head = Linear(d, spec.out_dim, rng)
        self._register(self.trunk_c, self.trunk_q, self.gate, self.head)

    def forward(self, x_c, x_q, training=False):
        h_c = self.trunk_c(Tensor(x_c), training, self._dropout_rng)
        h_q = self.trunk_q(self._quantum_features(x_q), training, self._dropout_rng)
        alpha = ad.sigmoid(self.gate)
        mixed = ad.add(ad.mul(alpha, h_c), ad.mul(1.0 - alpha, h_q))
        return self.head(mixed)


# kind -> (builder, uses_quantum, spec overrides)
MODEL_KINDS: dict[str, dict] = {
    "classical": dict(quantum=False),
    "best_classical": dict(quantum=False),
    "classical_deep": dict(quantum=False),  # alias of best_classical
    "quantum_only": dict(quantum=True),
    "quantum_deep_head": dict(quantum=True),
    "early_fusion": dict(quantum=True, classical_pca=False),
    "late_fusion": dict(quantum=True),
    "late_fusion_deep": dict(quantum=True),
    "midfusion_linear": dict(quantum=True),
    "midfusion_attn": dict(quantum=True),
    "midfusion_attn_deep": dict(quantum=True),
    "deep_fusion": dict(quantum=True, trunk_depth=3),
    "very_deep_fusion": dict(quantum=True, trunk_depth=4),
}

FUSION_KINDS = (
    "early_fusion", "late_fusion", "late_fusion_deep", "midfusion_linear",
    "midfusion_attn", "midfusion_attn_deep", "deep_fusion", "very_deep_fusion",
)


def model_uses_quantum(kind: str) -> bool:
    if kind not in MODEL_KINDS:
        raise ModelConfigError(f"unknown model kind {kind!r}; known: {sorted(MODEL_KINDS)}")
    return MODEL_KINDS[kind]["quantum"]


def default_spec(kind: str, num_classes: int, circuit: qt.CircuitConfig | None = None,
                 **overrides) -> ModelSpec:
    """ModelSpec with the per-kind defaults applied (explicit overrides win)."""
    if kind not in MODEL_KINDS:
        raise ModelConfigError(f"unknown model kind {kind!r}; known: {sorted(MODEL_KINDS)}")
    fields = {k: v for k, v in MODEL_KINDS[kind].items() if k != "quantum"}
    fields.update(overrides)
    if circuit is not None:
        fields["circuit"] = circuit
    return ModelSpec(kind=kind, num_classes=num_classes, **fields)


def build_model(spec: ModelSpec, in_dim_c: int, init_rng: np.random.Generator,
                dropout_rng: np.random.Generator) -> Model:
    kind = spec.kind
    if kind == "classical":
        model = ClassicalModel(spec, in_dim_c, init_rng, dropout_rng, deep=False)
    elif kind in ("best_classical", "classical_deep"):
        model = ClassicalModel(spec, in_dim_c, init_rng, dropout_rng, deep=True)
    elif kind == "quantum_only":
        model = QuantumOnlyModel(spec, in_dim_c, init_rng, dropout_rng, deep=False)
    elif kind == "quantum_deep_head":
        model = QuantumOnlyModel(spec, in_dim_c, init_rng, dropout_rng, deep=True)
    elif kind == "early_fusion":
        model = EarlyFusionModel(spec, in_dim_c, init_rng, dropout_rng)
    elif kind == "late_fusion":
        model = LateFusionModel(spec, in_dim_c, init_rng, dropout_rng, deep=False)
    elif kind == "late_fusion_deep":
        model = LateFusionModel(spec, in_dim_c, init_rng, dropout_rng, deep=True)
    elif kind == "midfusion_linear":
        model = MidFusionLinearModel(spec, in_dim_c, init_rng, dropout_rng)
    elif kind == "midfusion_attn":
        model = MidFusionAttnModel(spec, in_dim_c, init_rng, dropout_rng, deep=False)
    elif kind == "midfusion_attn_deep":
        model = MidFusionAttnModel(spec, in_dim_c, init_rng, dropout_rng, deep=True)
    elif kind in ("deep_fusion", "very_deep_fusion"):
        model = DeepFusionModel(spec, in_dim_c, init_rng, dropout_rng)
    else:  # pragma: no cover - guarded by ModelSpec validation
        raise ModelConfigError(f"unknown model kind {kind!r}")
    model.kind = kind
    return model


def logits_to_predictions(logits: np.ndarray, num_classes: int) -> np.ndarray:
    """Class labels from raw logits; binary threshold is 0.5 on sigmoid(logit)."""
    if num_classes == 2:
        return (logits.reshape(-1) > 0).astype(np.int64)
    return logits.argmax(axis=1).astype(np.int64)


def logits_to_probabilities(logits: np.ndarray, num_classes: int) -> np.ndarray:
    """Probability matrix (N, C) from raw logits."""
    logits = np.asarray(logits, dtype=np.float64)
    if num_classes == 2:
        p1 = 1.0 / (1.0 + np.exp(-logits.reshape(-1)))
        return np.stack([1.0 - p1, p1], axis=1)
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
