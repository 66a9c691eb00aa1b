"""Turn a character alignment into chunk targets, then pool and unpool frames."""

import numpy as np

from vfrtok.chunking import alignment_to_targets, downsample, format_alignment, parse_alignment, upsample
from vfrtok.pipeline import synth_alignment

spans = synth_alignment(10, seed=3)
text = format_alignment(spans)
print(text)

spans = parse_alignment(text)
T = spans[-1].end + 1
tg = alignment_to_targets(spans)
print("labels:   ", tg.labels)
print("durations:", tg.durations)

# silences are folded into the following character, so the chunk count drops
print(f"{len(spans)} spans -> {len(tg.labels)} chunks over {T} frames")

x = np.random.default_rng(0).standard_normal((T, 4))
pooled = downsample(x, tg.boundaries)
back = upsample(pooled, tg.durations)
ends = tg.boundaries.as_array()
print("pooled shape", pooled.shape, "| chunk-end frames survive:", np.array_equal(back[ends], x[ends]))
