"""Retrieval-augmented decoding with an IVF index over continuous latents.

The pool is the continuous latents themselves; queries are their quantized
versions. Lower tau swaps more tokens back to a continuous neighbour.
"""

import numpy as np

from vfrtok.pipeline import synth_clustered_latents
from vfrtok.rad import RadConfig, brute_force_nearest, build_index, query_nearest, rad_apply
from vfrtok.ssq import SsqConfig, dequantize, quantize

pool, _ = synth_clustered_latents(n_clusters=20, M=2000, L=16, spread=0.03, seed=0)
index = build_index(pool, n_list=32, seed=0)
sizes = np.diff(index.list_offsets)
print(f"{index.n_list} lists, sizes {sizes.min()}..{sizes.max()}")

# recall of the approximate search against an exhaustive scan
q = pool.vectors[:200] + 0.05 * np.random.default_rng(1).standard_normal((200, 16))
for n_probe in (1, 4, 32):
    hits = sum(query_nearest(index, pool, v, n_probe)[0] == brute_force_nearest(pool, v)[0] for v in q)
    print(f"n_probe={n_probe:>2}: recall {hits / len(q):.2f}")

cfg = SsqConfig(L=16, K=4)
zq = dequantize(quantize(pool.vectors, cfg), cfg)
for tau in (90, 95, 97, 99):
    res = rad_apply(zq, index, pool, RadConfig(tau=tau, n_probe=4))
    err = np.linalg.norm(res.latents - pool.vectors, axis=1).mean()
    print(f"tau={tau}: replaced {res.num_replaced:4d}/{len(pool)}, mean error {err:.4f}")
