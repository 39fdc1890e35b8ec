"""Tour of the statevector circuit: encoding, entangling layers, readout, gradients.

Run from the repo root:  python demos/01_circuit_and_gradients.py
"""
import numpy as np

from hqcbench import quantum as qt

# --- bounded angle encoding ---------------------------------------------------
# Features map to rotation angles through pi*tanh(s*x): smooth, trainable via s,
# and safely inside (-pi, pi) so the 2pi-periodicity of rotations cannot alias.
x = np.array([-3.0, -0.5, 0.0, 0.5, 3.0])
scales = np.ones(5)
print("features:", x)
print("angles:  ", np.round(qt.encode_angles(x, scales), 4))

# --- building a state gate by gate ---------------------------------------------
state = qt.StateVector.zero(2)
state = qt.apply_ry(state, 0, np.pi / 2)   # superpose wire 0
state = qt.apply_cnot(state, 0, 1)         # entangle -> Bell state
print("\nBell amplitudes:", np.round(state.amplitudes, 4))
print("readout [Z0, Z1, Z0Z1, Z1Z0]:", np.round(qt.readout(state), 4))
# individual Z expectations vanish, the ZZ correlation is exactly +1

# --- the full variational circuit ----------------------------------------------
config = qt.CircuitConfig(num_qubits=4, num_layers=2)
rng = np.random.default_rng(0)
params = qt.init_quantum_params(config, rng)
features = rng.uniform(-1, 1, 4)
z = qt.qnode_forward(features, params, config)
print(f"\n{config.num_qubits}-qubit readout vector (2Q = {z.size} features):")
print(np.round(z, 4))

# --- three ways to the same gradient --------------------------------------------
# The adjoint sweep walks the gate list backwards in one pass; the parameter-shift
# rule evaluates the circuit at +-pi/2 shifts; finite differences are the blunt
# instrument. All three must agree. (Weights spread away from the near-zero init
# so the gradients are visibly nonzero.)
params = qt.QuantumParams(rng.uniform(-np.pi, np.pi, params.weights.shape), params.scales)
upstream = rng.standard_normal(2 * config.num_qubits)
dx, dw, ds = qt.qnode_backward(features, params, config, upstream)

shift = sum(upstream[k] * qt.parameter_shift_grad(features, params, config, k)
            for k in range(2 * config.num_qubits))
print("\nadjoint vs parameter-shift, max |diff|:", np.abs(dw - shift).max())

h = 1e-6
index = (1, 2, 0)
wp, wm = params.weights.copy(), params.weights.copy()
wp[index] += h
wm[index] -= h
fd = (upstream @ qt.qnode_forward(features, qt.QuantumParams(wp, params.scales), config)
      - upstream @ qt.qnode_forward(features, qt.QuantumParams(wm, params.scales), config)) / (2 * h)
print(f"finite difference at weight {index}: {fd:+.8f}  adjoint: {dw[index]:+.8f}")

# Batched evaluation is where the simulator earns its keep: one vectorized pass
# per gate over the whole batch.
batch = rng.uniform(-1, 1, (256, 4))
z_batch = qt.qnode_forward_batch(batch, params, config)
print("\nbatched readout shape:", z_batch.shape)
