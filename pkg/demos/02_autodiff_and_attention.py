"""The numpy autodiff engine: tensors, backprop, and the transformer block.

Run from the repo root:  python demos/02_autodiff_and_attention.py
"""
import numpy as np

from hqcbench import autodiff as ad
from hqcbench.autodiff import Linear, Tensor, TransformerBlock

rng = np.random.default_rng(1)

# --- a tiny computation graph ----------------------------------------------------
x = Tensor(np.array([3.0]), requires_grad=True)
loss = ad.mul(x, x)  # x^2
loss.backward()
print("d(x^2)/dx at x=3:", x.grad[0])

# --- an MLP layer with GELU, trained by hand for a few steps ----------------------
layer = Linear(2, 1, rng)
inputs = rng.uniform(-1, 1, (64, 2)).astype(np.float32)
targets = (inputs[:, :1] + 2 * inputs[:, 1:]).astype(np.float32)
for step in range(200):
    pred = layer(Tensor(inputs))
    err = ad.sub(pred, Tensor(targets))
    loss = ad.reduce_mean(ad.mul(err, err))
    for p in layer.parameters():
        p.zero_grad()
    loss.backward()
    for p in layer.parameters():
        p.value -= 0.1 * p.grad
print("learned weights (target [1, 2]):", np.round(layer.weight.value, 3))

# --- dropout is inverted: eval mode is the exact identity -------------------------
drop_in = Tensor(np.ones(8, dtype=np.float32))
print("train-mode dropout:", ad.dropout(drop_in, 0.5, True, rng).value)
print("eval-mode dropout: ", ad.dropout(drop_in, 0.5, False, rng).value)

# --- the pre-norm attention block --------------------------------------------------
# T' = T + MHSA(LN(T)), T'' = T' + FFN(LN(T')); scaled dot-product with H heads.
block = TransformerBlock(dim=16, num_heads=4, rng=rng)
tokens = Tensor(rng.uniform(-1, 1, (5, 16)).astype(np.float32), requires_grad=True)
out = block(tokens)
print("\nblock output shape:", out.shape)
print("attention weight rows sum to:", block.attn_weights.sum(-1).round(6).flatten()[:5])

# identical tokens attend uniformly
same = Tensor(np.tile(rng.uniform(-1, 1, 16).astype(np.float32), (6, 1)))
block(same)
print("uniform weights on identical tokens:", np.allclose(block.attn_weights, 1 / 6))

# gradients flow to every token through attention + residuals
ad.reduce_sum(out[0]).backward()
print("CLS-loss gradient reaches last token:", np.abs(tokens.grad[-1]).max() > 0)
