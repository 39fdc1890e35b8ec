"""Differentiable statevector simulation of the angle-encoded entangling circuit.

The circuit acts on Q qubits: bounded angle encoding theta = pi*tanh(s*x)
loaded through single-qubit Y rotations, followed by L entangling layers
(per-qubit Euler rotations RZ-RY-RZ and a CNOT ring with layer-dependent
range), and a readout of the Q single-qubit Z expectations plus the Q
nearest-neighbour ZZ ring correlations.

Simulation runs in complex128 on amplitude arrays of shape (batch, 2**Q);
wire 0 is the most significant basis-index bit. Gradients with respect to
inputs, scales, and rotation weights come from a single adjoint sweep that
walks the gate list backwards, un-applying each unitary from a ket/bra pair.
A parameter-shift evaluator is provided as an independent test oracle only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 12
NORM_TOL = 1e-10


class CircuitError(ValueError):
    """Invalid circuit configuration or operand shapes."""


@dataclass(frozen=True)
class CircuitConfig:
    """Width and depth of the variational circuit."""

    num_qubits: int = 9
    num_layers: int = 3

    def __post_init__(self):
        if not 2 <= self.num_qubits <= MAX_QUBITS:
            raise CircuitError(
                f"num_qubits must be in [2, {MAX_QUBITS}] (ring correlations need >= 2 wires), "
                f"got {self.num_qubits}")
        if self.num_layers < 1:
            raise CircuitError(f"num_layers must be >= 1, got {self.num_layers}")


@dataclass
class QuantumParams:
    """Trainable circuit parameters: Euler angles (L, Q, 3) and per-wire scales (Q,)."""

    weights: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.scales = np.asarray(self.scales, dtype=np.float64)
        if self.weights.ndim != 3 or self.weights.shape[2] != 3:
            raise CircuitError(f"weights must have shape (L, Q, 3), got {self.weights.shape}")
        if self.scales.shape != (self.weights.shape[1],):
            raise CircuitError(
                f"scales must have shape ({self.weights.shape[1]},), got {self.scales.shape}")


def init_quantum_params(config: CircuitConfig, rng: np.random.Generator) -> QuantumParams:
    """Weights uniform in a small neighbourhood of zero; scales start at one."""
    weights = rng.uniform(-0.01, 0.01, size=(config.num_layers, config.num_qubits, 3))
    return QuantumParams(weights, np.ones(config.num_qubits))


def encode_angles(features: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Bounded angle encoding theta = pi * tanh(scales * features), in (-pi, pi)."""
    features = np.asarray(features, dtype=np.float64)
    scales = np.asarray(scales, dtype=np.float64)
    if features.shape[-1] != scales.shape[0]:
        raise CircuitError(
            f"feature dim {features.shape[-1]} does not match scale dim {scales.shape[0]}")
    return np.pi * np.tanh(scales * features)


# ---------------------------------------------------------------------------
# batched gate kernels on amplitude arrays of shape (B, 2**Q)
# ---------------------------------------------------------------------------

_cnot_perm_cache: dict[tuple[int, int, int], np.ndarray] = {}
_z_diag_cache: dict[int, np.ndarray] = {}


def _apply_ry(amps: np.ndarray, wire: int, angle, num_qubits: int) -> np.ndarray:
    a = amps.reshape(amps.shape[0], 1 << wire, 2, 1 << (num_qubits - wire - 1))
    half = np.multiply(angle, 0.5)
    c, s = np.cos(half), np.sin(half)
    if np.ndim(c):  # per-sample angles
        c = c.reshape(-1, 1, 1)
        s = s.reshape(-1, 1, 1)
    out = np.empty_like(a)
    out[:, :, 0, :] = c * a[:, :, 0, :] - s * a[:, :, 1, :]
    out[:, :, 1, :] = s * a[:, :, 0, :] + c * a[:, :, 1, :]
    return out.reshape(amps.shape)


def _apply_rz(amps: np.ndarray, wire: int, angle, num_qubits: int) -> np.ndarray:
    a = amps.reshape(amps.shape[0], 1 << wire, 2, 1 << (num_qubits - wire - 1))
    half = np.multiply(angle, 0.5)
    phase = np.cos(half) - 1j * np.sin(half)  # exp(-i*angle/2)
    if np.ndim(phase):
        phase = phase.reshape(-1, 1, 1)
    out = np.empty_like(a)
    out[:, :, 0, :] = phase * a[:, :, 0, :]
    out[:, :, 1, :] = np.conj(phase) * a[:, :, 1, :]
    return out.reshape(amps.shape)


def _cnot_perm(num_qubits: int, control: int, target: int) -> np.ndarray:
    key = (num_qubits, control, target)
    perm = _cnot_perm_cache.get(key)
    if perm is None:
        idx = np.arange(1 << num_qubits)
        cmask = 1 << (num_qubits - 1 - control)
        tmask = 1 << (num_qubits - 1 - target)
        perm = np.where(idx & cmask, idx ^ tmask, idx)
        _cnot_perm_cache[key] = perm
    return perm


def _apply_cnot(amps: np.ndarray, control: int, target: int, num_qubits: int) -> np.ndarray:
    return amps[:, _cnot_perm(num_qubits, control, target)]


def _z_diagonals(num_qubits: int) -> np.ndarray:
    """Rows 0..Q-1: diagonal of Z_j; rows Q..2Q-1: diagonal of Z_j Z_{(j+1) mod Q}."""
    diag = _z_diag_cache.get(num_qubits)
    if diag is None:
        idx = np.arange(1 << num_qubits)
        z = np.empty((2 * num_qubits, 1 << num_qubits))
        for j in range(num_qubits):
            bits = (idx >> (num_qubits - 1 - j)) & 1
            z[j] = 1.0 - 2.0 * bits
        for j in range(num_qubits):
            z[num_qubits + j] = z[j] * z[(j + 1) % num_qubits]
        _z_diag_cache[num_qubits] = z
        diag = z
    return diag


def _entangler_range(layer: int, num_qubits: int) -> int:
    return (layer % (num_qubits - 1)) + 1


def _circuit_ops(angles: np.ndarray, weights: np.ndarray, num_qubits: int) -> list[tuple]:
    """Flat gate list: ('ry'|'rz', wire, angle, tag) and ('cnot', control, target, None).

    Tags identify which parameter an angle belongs to: ('enc', j) for the
    per-sample encoding rotation on wire j, ('w', l, q, p) for weight
    entries. angles has shape (B, Q).
    """
    ops: list[tuple] = []
    for j in range(num_qubits):
        ops.append(("ry", j, angles[:, j], ("enc", j)))
    for l in range(weights.shape[0]):
        for q in range(num_qubits):
            ops.append(("rz", q, weights[l, q, 0], ("w", l, q, 0)))
            ops.append(("ry", q, weights[l, q, 1], ("w", l, q, 1)))
            ops.append(("rz", q, weights[l, q, 2], ("w", l, q, 2)))
        r = _entangler_range(l, num_qubits)
        for i in range(num_qubits):
            ops.append(("cnot", i, (i + r) % num_qubits, None))
    return ops


def _apply_op(amps: np.ndarray, op: tuple, num_qubits: int, shift: float = 0.0) -> np.ndarray:
    kind, a, b, _ = op
    if kind == "ry":
        return _apply_ry(amps, a, np.add(b, shift) if shift else b, num_qubits)
    if kind == "rz":
        return _apply_rz(amps, a, np.add(b, shift) if shift else b, num_qubits)
    return _apply_cnot(amps, a, b, num_qubits)


@dataclass
class BatchSimulation:
    """Final amplitudes and encoding angles of one batched circuit evaluation."""

    amplitudes: np.ndarray  # (B, 2**Q) complex128
    angles: np.ndarray      # (B, Q) float64
    config: CircuitConfig


def simulate_batch(features: np.ndarray, params: QuantumParams, config: CircuitConfig) -> BatchSimulation:
    """Run the full circuit on a (B, Q) feature batch."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    q = config.num_qubits
    if features.shape[1] != q:
        raise CircuitError(f"expected {q} features per sample, got {features.shape[1]}")
    if params.weights.shape[:2] != (config.num_layers, q):
        raise CircuitError(
            f"weights shape {params.weights.shape} does not match config "
            f"(L={config.num_layers}, Q={q})")
    angles = encode_angles(features, params.scales)
    amps = np.zeros((features.shape[0], 1 << q), dtype=np.complex128)
    amps[:, 0] = 1.0
    for op in _circuit_ops(angles, params.weights, q):
        amps = _apply_op(amps, op, q)
    norm_err = np.abs((np.abs(amps) ** 2).sum(axis=1) - 1.0).max()
    if norm_err > NORM_TOL:
        raise CircuitError(f"statevector norm drifted by {norm_err:.3e}")
    return BatchSimulation(amps, angles, config)


def readout_from_amplitudes(amps: np.ndarray, num_qubits: int) -> np.ndarray:
    """Z and ring-ZZ expectations, shape (B, 2Q), values in [-1, 1]."""
    probs = (amps.real**2 + amps.imag**2)
    return probs @ _z_diagonals(num_qubits).T


def qnode_forward_batch(features: np.ndarray, params: QuantumParams, config: CircuitConfig) -> np.ndarray:
    sim = simulate_batch(features, params, config)
    return readout_from_amplitudes(sim.amplitudes, config.num_qubits)


def qnode_forward(features: np.ndarray, params: QuantumParams, config: CircuitConfig) -> np.ndarray:
    """Readout vector (2Q,) for a single sample."""
    return qnode_forward_batch(np.asarray(features)[None, :], params, config)[0]


# ---------------------------------------------------------------------------
# adjoint-mode gradients
# ---------------------------------------------------------------------------

def adjoint_gradients(
    sim: BatchSimulation,
    features: np.ndarray,
    params: QuantumParams,
    upstream: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients of sum_k upstream[:, k] * z[:, k] from a cached forward pass.

    Returns (d_features (B, Q), d_weights (L, Q, 3), d_scales (Q,)); weight and
    scale gradients are summed over the batch. The weighted observable is
    diagonal in the computational basis, so the bra starts as an elementwise
    product; each parametrized rotation U satisfies dU/dtheta = U(theta+pi)/2,
    which lets the sweep reuse the plain gate kernels.
    """
    config = sim.config
    q = config.num_qubits
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    upstream = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    if upstream.shape != (features.shape[0], 2 * q):
        raise CircuitError(f"upstream must have shape (B, {2 * q}), got {upstream.shape}")

    m_diag = upstream @ _z_diagonals(q)  # (B, 2**Q)
    bra = m_diag * sim.amplitudes
    ket = sim.amplitudes

    d_weights = np.zeros_like(params.weights)
    d_angles = np.zeros_like(sim.angles)
    for op in reversed(_circuit_ops(sim.angles, params.weights, q)):
        kind, wire, angle, tag = op
        if kind == "cnot":
            ket = _apply_cnot(ket, wire, angle, q)
            bra = _apply_cnot(bra, wire, angle, q)
            continue
        inv = ("ry", wire, np.negative(angle), None) if kind == "ry" else ("rz", wire, np.negative(angle), None)
        ket = _apply_op(ket, inv, q)
        dket = 0.5 * _apply_op(ket, (kind, wire, angle, None), q, shift=np.pi)
        contrib = 2.0 * np.einsum("bi,bi->b", np.conj(bra), dket).real
        if tag[0] == "enc":
            d_angles[:, tag[1]] = contrib
        else:
            _, l, qq, p = tag
            d_weights[l, qq, p] = contrib.sum()
        bra = _apply_op(bra, inv, q)

    # chain rule through theta = pi * tanh(scales * features)
    t = np.tanh(params.scales * features)
    d_pre = d_angles * np.pi * (1.0 - t * t)
    d_features = d_pre * params.scales
    d_scales = (d_pre * features).sum(axis=0)
    return d_features, d_weights, d_scales


def qnode_backward_batch(
    features: np.ndarray,
    params: QuantumParams,
    config: CircuitConfig,
    upstream: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    sim = simulate_batch(features, params, config)
    return adjoint_gradients(sim, features, params, upstream)


def qnode_backward(
    features: np.ndarray,
    params: QuantumParams,
    config: CircuitConfig,
    upstream: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Single-sample gradients (d_features (Q,), d_weights, d_scales)."""
    dx, dw, ds = qnode_backward_batch(
        np.asarray(features)[None, :], params, config, np.asarray(upstream)[None, :])
    return dx[0], dw, ds


def parameter_shift_grad(
    features: np.ndarray,
    params: QuantumParams,
    config: CircuitConfig,
    output_index: int,
) -> np.ndarray:
    """Test oracle: d z[output_index] / d weights via +-pi/2 angle shifts."""
    shape = params.weights.shape
    grad = np.zeros(shape)
    for index in np.ndindex(shape):
        shifted = params.weights.copy()
        shifted[index] += np.pi / 2
        plus = qnode_forward(features, QuantumParams(shifted, params.scales), config)[output_index]
        shifted[index] -= np.pi
        minus = qnode_forward(features, QuantumParams(shifted, params.scales), config)[output_index]
        grad[index] = 0.5 * (plus - minus)
    return grad


# ---------------------------------------------------------------------------
# single-state API
# ---------------------------------------------------------------------------

class StateVector:
    """Pure state of ``num_qubits`` qubits; amplitudes indexed with wire 0 as MSB."""

    def __init__(self, amplitudes: np.ndarray, num_qubits: int):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << num_qubits,):
            raise CircuitError(
                f"expected {1 << num_qubits} amplitudes for {num_qubits} qubits, "
                f"got {amplitudes.shape}")
        self.amplitudes = amplitudes
        self.num_qubits = num_qubits

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, num_qubits)

    def norm_squared(self) -> float:
        return float((np.abs(self.amplitudes) ** 2).sum())

    def _check_wire(self, wire: int) -> None:
        if not 0 <= wire < self.num_qubits:
            raise CircuitError(f"wire {wire} out of range for {self.num_qubits} qubits")


def apply_ry(state: StateVector, wire: int, angle: float) -> StateVector:
    state._check_wire(wire)
    out = _apply_ry(state.amplitudes[None, :], wire, float(angle), state.num_qubits)
    return StateVector(out[0], state.num_qubits)


def apply_rz(state: StateVector, wire: int, angle: float) -> StateVector:
    state._check_wire(wire)
    out = _apply_rz(state.amplitudes[None, :], wire, float(angle), state.num_qubits)
    return StateVector(out[0], state.num_qubits)


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    state._check_wire(control)
    state._check_wire(target)
    if control == target:
        raise CircuitError("control and target wires must differ")
    out = _apply_cnot(state.amplitudes[None, :], control, target, state.num_qubits)
    return StateVector(out[0], state.num_qubits)


def strongly_entangling_layers(state: StateVector, weights: np.ndarray) -> StateVector:
    """Apply L layers of per-qubit RZ-RY-RZ rotations plus a CNOT ring.

    Layer l entangles control i with target (i + r) mod Q for every wire i,
    where r = (l mod (Q-1)) + 1.
    """
    weights = np.asarray(weights, dtype=np.float64)
    q = state.num_qubits
    if weights.ndim != 3 or weights.shape[1] != q or weights.shape[2] != 3:
        raise CircuitError(f"weights must have shape (L, {q}, 3), got {weights.shape}")
    amps_out = state.amplitudes[None, :]
    for l in range(weights.shape[0]):
        for wire in range(q):
            amps_out = _apply_rz(amps_out, wire, weights[l, wire, 0], q)
            amps_out = _apply_ry(amps_out, wire, weights[l, wire, 1], q)
            amps_out = _apply_rz(amps_out, wire, weights[l, wire, 2], q)
        r = _entangler_range(l, q)
        for i in range(q):
            amps_out = _apply_cnot(amps_out, i, (i + r) % q, q)
    return StateVector(amps_out[0], q)


def readout(state: StateVector) -> np.ndarray:
    """Expectations [<Z_0>..<Z_{Q-1}>, <Z_0 Z_1>..<Z_{Q-1} Z_0>], each in [-1, 1]."""
    return readout_from_amplitudes(state.amplitudes[None, :], state.num_qubits)[0]


def expectation_z(state: StateVector, wire: int) -> float:
    state._check_wire(wire)
    probs = np.abs(state.amplitudes) ** 2
    return float(probs @ _z_diagonals(state.num_qubits)[wire])


def expectation_zz(state: StateVector, wire_a: int, wire_b: int) -> float:
    state._check_wire(wire_a)
    state._check_wire(wire_b)
    diags = _z_diagonals(state.num_qubits)
    probs = np.abs(state.amplitudes) ** 2
    return float(probs @ (diags[wire_a] * diags[wire_b]))
