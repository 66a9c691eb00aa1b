"""Scalar spherical quantization on random latents.

Shows the K=2 sign case, the reconstruction error as K grows, and the
small-codebook collisions that come from renormalizing.
"""

import numpy as np

from vfrtok.ssq import SsqConfig, dequantize, entropy_loss, enumerate_codebook, quantize, soft_quantize

rng = np.random.default_rng(0)
z = rng.standard_normal((2000, 32))
u = z / np.linalg.norm(z, axis=1, keepdims=True)

for K in (2, 3, 4, 8):
    cfg = SsqConfig(L=32, K=K)
    q = dequantize(quantize(z, cfg), cfg)
    cos = (q * u).sum(1).mean()
    print(f"K={K}: {cfg.bits_per_token:5.1f} bits/token, mean cosine to input {cos:.4f}")

cb = enumerate_codebook(SsqConfig(L=3, K=4))
print(f"L=3 K=4: {len(cb)} index tuples, {cb.collisions} share a direction with another")

cfg = SsqConfig(L=32, K=4, temperature=0.05)
sharp, _ = entropy_loss(soft_quantize(u[:256], cfg), cfg)
blurry, _ = entropy_loss(soft_quantize(u[:256], SsqConfig(L=32, K=4, temperature=1.0)), cfg)
print(f"entropy penalty: sharp assignments {sharp:.3f}, blurry {blurry:.3f}")
