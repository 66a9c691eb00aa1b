"""Variable-frame-rate speech tokenization on plain numeric sequences.

Boundary hazards, negative-binomial durations, dynamic chunking, scalar
spherical quantization and retrieval-augmented decoding, with a toy linear
codec that wires them together.
"""

from .chunking import AlignmentSpan, alignment_to_targets, downsample, upsample
from .core import (
    BoundarySet,
    CodecRates,
    FrameSequence,
    TokenSequence,
    boundaries_to_durations,
    compute_rates,
    durations_to_boundaries,
)
from .duration import DurationParams, decode_budget, decode_free, duration_nll, fit_duration_params, nb_log_pmf
from .hazard import (
    BoundaryDecodeConfig,
    BoundaryTargets,
    HazardSequence,
    decode_boundaries,
    fit_hazard_logits,
    hazard_nll,
    next_boundary_distribution,
)
from .rad import IvfIndex, LatentPool, RadConfig, build_index, query_nearest, rad_apply
from .ssq import SsqConfig, dequantize, entropy_loss, enumerate_codebook, quantize, soft_quantize

__version__ = "0.1.0"
