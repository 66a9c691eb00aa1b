"""Learn chunk boundaries from a planted period and decode them back.

A per-frame logit is fitted to boundaries every 4 frames. The fitted hazards
are then decoded greedily at a few thresholds, with and without a max_gap cap.
"""

import numpy as np

from vfrtok import BoundaryDecodeConfig, decode_boundaries, fit_hazard_logits, next_boundary_distribution
from vfrtok.pipeline import synth_periodic

T = 64
_, planted = synth_periodic(T, period=4)
print("planted ends:", planted.ends[:8], "...")

h = fit_hazard_logits(planted, T)
print("hazard on frames 0..7:", np.round(h.probs[:8], 3))

for tau in (0.3, 0.5, 0.9):
    got = decode_boundaries(h, BoundaryDecodeConfig(tau_h=tau))
    print(f"tau_h={tau}: {len(got)} chunks, exact={got == planted}")

# a flat hazard never fires at tau=0.5, so max_gap does all the work
flat = np.full(T, 0.2)
capped = decode_boundaries(flat, BoundaryDecodeConfig(tau_h=0.5, min_gap=2, max_gap=6))
print("flat hazard, max_gap=6:", capped.ends)

# where will the next boundary fall if a chunk opens at frame 10?
P, surv = next_boundary_distribution(flat, 10, 8)
print("next-boundary pmf:", np.round(P, 3), "survival", round(surv, 3))
