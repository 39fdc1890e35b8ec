"""Reverse-mode automatic differentiation over dense real numpy arrays.

Small engine in the micrograd style, scaled up to n-d arrays: each ``Tensor``
wraps a value buffer and a same-shape gradient buffer, ops record a backward
closure, and ``Tensor.backward`` walks the graph once in reverse topological
order. The op set is exactly what the benchmark models need (matmul with
numpy batch broadcasting, GELU, LayerNorm, dropout, softmax and a pre-norm
transformer block); it is not a general tensor library.

The engine is dtype-generic: training code uses float32 buffers throughout,
while gradient-check oracles run the same ops on float64 inputs.
"""
from __future__ import annotations

import contextlib
import math
from typing import Callable, Sequence

import numpy as np

DEFAULT_DTYPE = np.float32
LAYERNORM_EPS = 1e-5

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block (eval-mode forwards)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """Dense real array with a gradient buffer and backward-graph linkage."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False, dtype=None):
        arr = np.asarray(value)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(DEFAULT_DTYPE)
        self.value = arr
        self.grad = np.zeros_like(arr)
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def dtype(self):
        return self.value.dtype

    @property
    def size(self) -> int:
        return self.value.size

    def zero_grad(self) -> None:
        self.grad[...] = 0

    def item(self) -> float:
        return float(self.value.reshape(-1)[0])

    def backward(self) -> None:
        """Backpropagate from a scalar loss, seeding its gradient with 1."""
        if self.value.size != 1:
            raise ValueError(f"backward requires a scalar loss, got shape {self.shape}")
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node._backward is not None:
                node._backward()

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    # arithmetic sugar; scalars and arrays are wrapped as constants
    def __add__(self, other):
        return add(self, _wrap(other, self.dtype))

    def __radd__(self, other):
        return add(_wrap(other, self.dtype), self)

    def __sub__(self, other):
        return sub(self, _wrap(other, self.dtype))

    def __rsub__(self, other):
        return sub(_wrap(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _wrap(other, self.dtype))

    def __rmul__(self, other):
        return mul(_wrap(other, self.dtype), self)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("tensor/tensor division is not supported; multiply by a reciprocal")
        return mul(self, _wrap(1.0 / other, self.dtype))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, axes: Sequence[int]):
        return transpose(self, axes)

    def sum(self, axis=None, keepdims: bool = False):
        return reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return reduce_mean(self, axis=axis, keepdims=keepdims)


def _wrap(x, dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _make(value: np.ndarray, parents: Sequence[Tensor], backward: Callable[[], None]) -> Tensor:
    out = Tensor(value)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(p for p in parents if p.requires_grad)
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise and structural ops
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    out_val = a.value + b.value

    def backward():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad, a.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(out.grad, b.shape)

    out = _make(out_val, (a, b), backward)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_val = a.value - b.value

    def backward():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad, a.shape)
        if b.requires_grad:
            b.grad -= _unbroadcast(out.grad, b.shape)

    out = _make(out_val, (a, b), backward)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_val = a.value * b.value

    def backward():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad * b.value, a.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(out.grad * a.value, b.shape)

    out = _make(out_val, (a, b), backward)
    return out


def neg(a: Tensor) -> Tensor:
    def backward():
        a.grad -= out.grad

    out = _make(-a.value, (a,), backward)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes with numpy batch broadcasting."""
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul operands must have at least 2 dimensions")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    out_val = a.value @ b.value

    def backward():
        g = out.grad
        if a.requires_grad:
            a.grad += _unbroadcast(g @ np.swapaxes(b.value, -1, -2), a.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(np.swapaxes(a.value, -1, -2) @ g, b.shape)

    out = _make(out_val, (a, b), backward)
    return out


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def backward():
        a.grad += out.grad.reshape(a.shape)

    out = _make(a.value.reshape(shape), (a,), backward)
    return out


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward():
        a.grad += out.grad.transpose(inverse)

    out = _make(a.value.transpose(axes), (a,), backward)
    return out


def getitem(a: Tensor, idx) -> Tensor:
    def backward():
        a.grad[idx] += out.grad

    out = _make(a.value[idx], (a,), backward)
    return out


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = list(tensors)
    out_val = np.concatenate([t.value for t in parts], axis=axis)
    sizes = [t.shape[axis] for t in parts]
    offsets = np.cumsum([0] + sizes)

    def backward():
        for t, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * out_val.ndim
                sl[axis] = slice(start, stop)
                t.grad += out.grad[tuple(sl)]

    out = _make(out_val, parts, backward)
    return out


def reduce_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out_val = a.value.sum(axis=axis, keepdims=keepdims)

    def backward():
        g = out.grad
        if not keepdims and axis is not None:
            g = np.expand_dims(g, axis)
        a.grad += np.broadcast_to(g, a.shape)

    out = _make(out_val, (a,), backward)
    return out


def reduce_mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.size if axis is None else np.prod([a.shape[ax] for ax in np.atleast_1d(axis)])
    return mul(reduce_sum(a, axis=axis, keepdims=keepdims), _wrap(1.0 / count, a.dtype))


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------

def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.value)

    def backward():
        a.grad += out.grad * (1.0 - t * t)

    out = _make(t, (a,), backward)
    return out


def exp(a: Tensor) -> Tensor:
    e = np.exp(a.value)

    def backward():
        a.grad += out.grad * e

    out = _make(e, (a,), backward)
    return out


def log(a: Tensor) -> Tensor:
    def backward():
        a.grad += out.grad / a.value

    out = _make(np.log(a.value), (a,), backward)
    return out


def sigmoid(a: Tensor) -> Tensor:
    s = _sigmoid_value(a.value)

    def backward():
        a.grad += out.grad * s * (1.0 - s)

    out = _make(s, (a,), backward)
    return out


def _sigmoid_value(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(a: Tensor) -> Tensor:
    x = a.value
    val = np.maximum(x, 0) + np.log1p(np.exp(-np.abs(x)))

    def backward():
        a.grad += out.grad * _sigmoid_value(x)

    out = _make(val, (a,), backward)
    return out


def gelu(a: Tensor) -> Tensor:
    """GELU, tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))."""
    x = a.value
    inner = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(inner)
    val = 0.5 * x * (1.0 + t)

    def backward():
        d_inner = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
        d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner
        a.grad += out.grad * d

    out = _make(val, (a,), backward)
    return out


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.value - a.value.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward():
        g = out.grad
        a.grad += s * (g - (g * s).sum(axis=axis, keepdims=True))

    out = _make(s, (a,), backward)
    return out


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.value - a.value.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    val = shifted - lse

    def backward():
        g = out.grad
        a.grad += g - np.exp(val) * g.sum(axis=axis, keepdims=True)

    out = _make(val, (a,), backward)
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYERNORM_EPS) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    v = x.value
    mu = v.mean(axis=-1, keepdims=True)
    centered = v - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    val = xhat * gain.value + bias.value

    def backward():
        g = out.grad
        if gain.requires_grad:
            gain.grad += _unbroadcast(g * xhat, gain.shape)
        if bias.requires_grad:
            bias.grad += _unbroadcast(g, bias.shape)
        if x.requires_grad:
            dxhat = g * gain.value
            m1 = dxhat.mean(axis=-1, keepdims=True)
            m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
            x.grad += inv * (dxhat - m1 - xhat * m2)

    out = _make(val, (x, gain, bias), backward)
    return out


def dropout(x: Tensor, p: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)

    def backward():
        x.grad += out.grad * keep

    out = _make(x.value * keep, (x,), backward)
    return out


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

def init_linear_weight(out_dim: int, in_dim: int, rng: np.random.Generator, dtype=DEFAULT_DTYPE) -> np.ndarray:
    bound = 1.0 / math.sqrt(in_dim)
    return rng.uniform(-bound, bound, size=(out_dim, in_dim)).astype(dtype)


class Linear:
    """Affine map x @ W.T + b with weight (out, in) and bias (out,)."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, dtype=DEFAULT_DTYPE):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Tensor(init_linear_weight(out_dim, in_dim, rng, dtype), requires_grad=True)
        self.bias = Tensor(np.zeros(out_dim, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        wt = transpose(self.weight, (1, 0))
        return add(matmul(x, wt), self.bias)

    def parameters(self) -> list[Tensor]:
        return [self.weight, self.bias]


class LayerNorm:
    """Learnable last-axis normalization."""

    def __init__(self, dim: int, dtype=DEFAULT_DTYPE):
        self.gain = Tensor(np.ones(dim, dtype=dtype), requires_grad=True)
        self.bias = Tensor(np.zeros(dim, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias)

    def parameters(self) -> list[Tensor]:
        return [self.gain, self.bias]


class TransformerBlock:
    """Pre-norm self-attention block: two residual sub-blocks.

    T' = T + MHSA(LN(T)); T'' = T' + FFN(LN(T')) where the FFN expands the
    width by a factor of 4 with a GELU in between. Attention is scaled
    dot-product with scale 1/sqrt(D/H). The block itself is deterministic
    (no internal dropout). Inputs may be (S, D) or batched (B, S, D).

    After each call ``attn_weights`` holds the most recent softmax weights
    with shape (B, H, S, S).
    """

    def __init__(self, dim: int, num_heads: int, rng: np.random.Generator, dtype=DEFAULT_DTYPE):
        if dim % num_heads != 0:
            raise ValueError(f"model dim {dim} must be divisible by head count {num_heads}")
        self.dim = dim
        self.num_heads = num_heads
        self.head_dim = dim // num_heads
        self.ln_attn = LayerNorm(dim, dtype)
        self.proj_q = Linear(dim, dim, rng, dtype)
        self.proj_k = Linear(dim, dim, rng, dtype)
        self.proj_v = Linear(dim, dim, rng, dtype)
        self.proj_out = Linear(dim, dim, rng, dtype)
        self.ln_ffn = LayerNorm(dim, dtype)
        self.ffn_in = Linear(dim, 4 * dim, rng, dtype)
        self.ffn_out = Linear(4 * dim, dim, rng, dtype)
        self.attn_weights: np.ndarray | None = None

    def __call__(self, tokens: Tensor) -> Tensor:
        squeeze = tokens.ndim == 2
        if squeeze:
            tokens = reshape(tokens, (1,) + tokens.shape)
        batch, seq, dim = tokens.shape
        h, hd = self.num_heads, self.head_dim

        normed = self.ln_attn(tokens)
        q = self._split_heads(self.proj_q(normed), batch, seq)
        k = self._split_heads(self.proj_k(normed), batch, seq)
        v = self._split_heads(self.proj_v(normed), batch, seq)

        scores = mul(matmul(q, transpose(k, (0, 1, 3, 2))), _wrap(1.0 / math.sqrt(hd), tokens.dtype))
        weights = softmax(scores, axis=-1)
        self.attn_weights = weights.value
        context = matmul(weights, v)  # (B, H, S, hd)
        context = reshape(transpose(context, (0, 2, 1, 3)), (batch, seq, dim))
        attended = add(tokens, self.proj_out(context))

        ffn = self.ffn_out(gelu(self.ffn_in(self.ln_ffn(attended))))
        out = add(attended, ffn)
        if squeeze:
            out = reshape(out, (seq, dim))
        return out

    def _split_heads(self, x: Tensor, batch: int, seq: int) -> Tensor:
        return transpose(reshape(x, (batch, seq, self.num_heads, self.head_dim)), (0, 2, 1, 3))

    def parameters(self) -> list[Tensor]:
        params: list[Tensor] = []
        for layer in (self.ln_attn, self.proj_q, self.proj_k, self.proj_v,
                      self.proj_out, self.ln_ffn, self.ffn_in, self.ffn_out):
            params.extend(layer.parameters())
        return params
