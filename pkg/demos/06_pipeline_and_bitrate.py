"""End to end on toy frames: encode, decode in all three modes, report rates."""

import numpy as np

from vfrtok.core import compute_rates
from vfrtok.hazard import BoundaryDecodeConfig, HazardSequence
from vfrtok.pipeline import ClassDurationModel, PipelineConfig, decode, encode, rate_report
from vfrtok.ssq import SsqConfig

rng = np.random.default_rng(0)
T, D = 500, 40
x = rng.standard_normal((T, D))
hazard = HazardSequence(rng.normal(-1.5, 1.5, T))
boundary = BoundaryDecodeConfig(tau_h=0.5, min_gap=2, max_gap=8)

res = encode(x, PipelineConfig(ssq=SsqConfig(L=8, K=4), boundary=boundary), hazard=hazard)
tokens = res.tokens
print(f"{T} frames -> {tokens.num_tokens} tokens")
r = rate_report(tokens, T, max_duration=boundary.max_gap)
print(f"token rate {r.frame_rate_hz:.1f} Hz, {r.bitrate_kbps:.3f} kbps, {r.total_bps / 1000:.3f} kbps with durations")

model = ClassDurationModel.fit([tokens])
for mode in ("durations", "length", "tokens"):
    cfg = PipelineConfig(ssq=SsqConfig(L=8, K=4), boundary=boundary, mode=mode)
    out = decode(tokens, cfg, D, target_T=T, duration_model=model)
    print(f"{mode:>9}: {out.num_frames} frames decoded")

# reference operating points, 32 streams of 4 levels
for hz in (14.4, 17.5, 9.0, 6.2):
    print(f"{hz:>5} Hz -> {compute_rates(hz, 32, 4).bitrate_kbps:.4f} kbps")
