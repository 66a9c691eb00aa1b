"""Toy end-to-end codec and synthetic corpora.

The neural compressor is replaced by a fixed seeded linear projection so the
chunking, quantization, duration and retrieval steps can be exercised on plain
arrays. Three decoding modes differ only in where durations come from:

``"durations"``  durations are transmitted with the tokens
``"length"``     only the utterance length is known; budget-constrained decoding
``"tokens"``     nothing but tokens; free decoding
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import chunking, ssq
from .core import (
    BoundarySet,
    CodecRates,
    FrameSequence,
    TokenSequence,
    boundaries_to_durations,
    compute_rates,
    token_rate,
)
from .duration import DurationParams, decode_budget, decode_free, fit_duration_params, sample_nb
from .errors import InvalidConfig, ModeMismatch
from .hazard import BoundaryDecodeConfig, decode_boundaries
from .rad import IvfIndex, LatentPool, RadConfig, RadResult, rad_apply

MODES = ("durations", "length", "tokens")


@dataclass(frozen=True)
class ToyCompressor:
    """Seeded orthonormal projection ``D -> L`` with its transpose as decompressor."""

    in_dim: int
    latent_dim: int
    seed: int = 0
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.in_dim < 1 or self.latent_dim < 1:
            raise InvalidConfig("compressor dimensions must be positive")
        rng = np.random.default_rng(self.seed)
        big, small = max(self.in_dim, self.latent_dim), min(self.in_dim, self.latent_dim)
        q, r = np.linalg.qr(rng.standard_normal((big, small)))
        q = q * np.sign(np.diag(r))
        w = q if self.in_dim >= self.latent_dim else q.T
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def compress(self, x) -> np.ndarray:
        """Project frames and place every row on the unit sphere."""
        return ssq.normalize(np.asarray(x, dtype=np.float64) @ self.weights)

    def decompress(self, z) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) @ self.weights.T


@dataclass(frozen=True)
class PipelineConfig:
    ssq: ssq.SsqConfig = ssq.SsqConfig()
    boundary: BoundaryDecodeConfig = BoundaryDecodeConfig()
    mode: str = "durations"
    compressor_seed: int = 0
    d_min: int = 1
    rad: RadConfig | None = None
    identity_quantizer: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidConfig(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class EncodeResult:
    tokens: TokenSequence
    boundaries: BoundarySet
    latents: np.ndarray


@dataclass(frozen=True)
class DecodeResult:
    frames: FrameSequence
    durations: np.ndarray
    latents: np.ndarray
    rad: RadResult | None = None

    @property
    def num_frames(self) -> int:
        return self.frames.num_frames


class ClassDurationModel:
    """Desk-scale duration predictor: one free mean per distinct token.

    Unseen tokens fall back to the corpus-wide mean excess duration.
    """

    def __init__(self, table: dict, fallback: float, alpha: float = 1.0, d_min: int = 1):
        self.table = dict(table)
        self.fallback = float(fallback)
        self.alpha = alpha
        self.d_min = d_min

    @classmethod
    def fit(cls, corpus, d_min: int = 1) -> ClassDurationModel:
        samples: dict[bytes, list[int]] = {}
        for t in corpus:
            if t.durations is None:
                raise ModeMismatch("fitting a duration model needs token sequences with durations")
            for row, d in zip(t.indices, t.durations):
                samples.setdefault(row.astype(np.uint8).tobytes(), []).append(d)
        fit = fit_duration_params({k: np.array(v) for k, v in samples.items()}, d_min=d_min)
        table = dict(zip(fit.classes, fit.params.mu_free))
        everything = np.concatenate([np.array(v) for v in samples.values()]) - d_min
        return cls(table, everything.mean(), fit.params.alpha, d_min)

    def __call__(self, tokens: TokenSequence) -> DurationParams:
        mu = [self.table.get(row.astype(np.uint8).tobytes(), self.fallback) for row in tokens.indices]
        return DurationParams(np.array(mu), alpha=self.alpha, d_min=self.d_min)


def _frames(x) -> FrameSequence:
    return x if isinstance(x, FrameSequence) else FrameSequence(np.asarray(x))


def encode(
    x,
    cfg: PipelineConfig = PipelineConfig(),
    boundaries: BoundarySet | None = None,
    hazard=None,
) -> EncodeResult:
    """Frames to tokens: boundaries, compression, last-frame pooling, SSQ.

    Boundaries are taken as given, or decoded from ``hazard`` with
    ``cfg.boundary``. Side information is attached according to ``cfg.mode``.
    """
    x = _frames(x)
    T = x.num_frames
    if boundaries is None:
        if hazard is None:
            raise InvalidConfig("encode needs either boundaries or a hazard sequence")
        if len(hazard) != T:
            raise InvalidConfig(f"hazard has {len(hazard)} frames, features have {T}")
        boundaries = decode_boundaries(hazard, cfg.boundary)
    durations = boundaries_to_durations(boundaries, T)
    comp = ToyCompressor(x.dim, cfg.ssq.L, cfg.compressor_seed)
    latents = chunking.downsample(comp.compress(x.data), boundaries)
    indices = ssq.quantize(latents, cfg.ssq)
    tokens = TokenSequence(
        indices,
        cfg.ssq.K,
        durations=tuple(durations) if cfg.mode == "durations" else None,
        total_frames=T if cfg.mode == "length" else None,
    )
    return EncodeResult(tokens, boundaries, latents)


def resolve_durations(
    tokens: TokenSequence,
    mode: str,
    target_T: int | None = None,
    duration_model=None,
    d_min: int = 1,
) -> np.ndarray:
    if mode == "durations":
        if tokens.durations is None:
            raise ModeMismatch("tokens+durations decoding needs transmitted durations")
        return np.asarray(tokens.durations, dtype=np.int64)
    if duration_model is not None:
        params = duration_model(tokens)
    else:
        params = DurationParams(np.zeros(tokens.num_tokens), d_min=d_min)
    if mode == "length":
        T = target_T if target_T is not None else tokens.total_frames
        if T is None:
            raise ModeMismatch("tokens+length decoding needs a target length")
        return decode_budget(params, T)
    if mode == "tokens":
        return decode_free(params)
    raise InvalidConfig(f"unknown mode {mode!r}")


def decode(
    tokens: TokenSequence,
    cfg: PipelineConfig,
    out_dim: int,
    target_T: int | None = None,
    duration_model=None,
    latents=None,
    index: IvfIndex | None = None,
    pool: LatentPool | None = None,
    frame_rate_hz: float = 50.0,
) -> DecodeResult:
    """Tokens back to ``out_dim``-wide frames.

    ``latents`` replaces dequantization when ``cfg.identity_quantizer`` is set.
    Retrieval runs when ``cfg.rad`` is set and an index and pool are given.
    """
    durations = resolve_durations(tokens, cfg.mode, target_T, duration_model, cfg.d_min)
    if cfg.identity_quantizer:
        if latents is None:
            raise ModeMismatch("identity quantizer needs the continuous latents")
        z = np.asarray(latents, dtype=np.float64)
    else:
        z = ssq.dequantize(tokens.indices, cfg.ssq)
    rad = None
    if cfg.rad is not None and index is not None and pool is not None:
        rad = rad_apply(z, index, pool, cfg.rad)
        z = rad.latents
    comp = ToyCompressor(out_dim, z.shape[1], cfg.compressor_seed)
    frames = chunking.upsample(comp.decompress(z), durations)
    return DecodeResult(FrameSequence(frames, frame_rate_hz), durations, z, rad)


def rate_report(
    tokens: TokenSequence,
    num_frames: int,
    base_rate_hz: float = 50.0,
    max_duration: int | None = None,
) -> CodecRates:
    """Rates for a token stream covering ``num_frames`` base frames.

    Duration side info is sized for ``max_duration`` (the decoder's ``max_gap``),
    or the longest transmitted duration when no cap is configured.
    """
    if max_duration is None:
        max_duration = max(tokens.durations) if tokens.durations else 1
    rate = token_rate(tokens.num_tokens, num_frames, base_rate_hz)
    return compute_rates(rate, tokens.num_streams, tokens.levels, max_duration)


# synthetic corpora


def synth_periodic(T: int, period: int, dim: int = 8, seed: int = 0, frame_rate_hz: float = 50.0):
    """Gaussian frames with a chunk end every ``period`` frames (and at ``T - 1``)."""
    rng = np.random.default_rng(seed)
    x = FrameSequence(rng.standard_normal((T, dim)), frame_rate_hz)
    ends = list(range(period - 1, T - 1, period)) + [T - 1]
    return x, BoundarySet(tuple(ends))


def synth_nb_durations(mu: float, alpha: float, n: int, seed: int = 0, d_min: int = 0) -> np.ndarray:
    """``d_min`` plus seeded NB(mu, alpha) excess durations."""
    return d_min + sample_nb(mu, alpha, n, seed)


def synth_alignment(n_chars: int, seed: int = 0, mu: float = 3.0, alpha: float = 0.5, p_silence: float = 0.2):
    """Character spans with NB durations and occasional silences between them."""
    rng = np.random.default_rng(seed)
    letters = "abcdefghijklmnopqrstuvwxyz"
    spans = []
    pos = 0
    dur = iter(1 + sample_nb(mu, alpha, 2 * n_chars + 1, seed + 1))
    for i in range(n_chars):
        if rng.random() < p_silence:
            d = next(dur)
            spans.append(chunking.AlignmentSpan(chunking.SILENCE, pos, pos + d - 1))
            pos += d
        d = next(dur)
        spans.append(chunking.AlignmentSpan(letters[rng.integers(len(letters))], pos, pos + d - 1))
        pos += d
    return spans


def synth_clustered_latents(
    n_clusters: int, M: int, L: int = 32, spread: float = 0.05, seed: int = 0
) -> tuple[LatentPool, np.ndarray]:
    """Unit-norm latents scattered around ``n_clusters`` random directions.

    Returns the pool and the generating cluster of every row.
    """
    rng = np.random.default_rng(seed)
    centers = ssq.normalize(rng.standard_normal((n_clusters, L)))
    labels = np.arange(M) % n_clusters
    pts = centers[labels] + spread * rng.standard_normal((M, L))
    return LatentPool(ssq.normalize(pts)), labels


def synth_generate(kind: str, seed: int = 0, **params):
    """Dispatch to ``synth_periodic``, ``synth_nb_durations`` or ``synth_clustered_latents``."""
    makers = {
        "periodic": synth_periodic,
        "nb-durations": synth_nb_durations,
        "clustered-latents": synth_clustered_latents,
        "alignment": synth_alignment,
    }
    if kind not in makers:
        raise InvalidConfig(f"unknown synthetic corpus {kind!r}; choose from {sorted(makers)}")
    return makers[kind](seed=seed, **params)
