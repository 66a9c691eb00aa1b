"""Shared value types, boundary/duration conversions and bitrate accounting.

Boundaries are stored as inclusive chunk-end frame indices. Chunk ``i`` spans
frames ``ends[i-1] + 1 .. ends[i]`` with an implicit ``ends[-1] == -1``, and the
last end is always ``T - 1`` so every frame belongs to exactly one chunk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBoundaries, InvalidDurations, InvalidInput, InvalidRateInputs, InvalidToken


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrameSequence:
    """A ``T x D`` block of frame-level features at a fixed base rate."""

    data: np.ndarray
    frame_rate_hz: float = 50.0

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float32, copy=True)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidInput(f"frame data must be a non-empty T x D array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidInput("frame data contains non-finite values")
        if not (self.frame_rate_hz > 0 and math.isfinite(self.frame_rate_hz)):
            raise InvalidInput(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def num_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.num_frames / self.frame_rate_hz

    def __eq__(self, other):
        if not isinstance(other, FrameSequence):
            return NotImplemented
        return self.frame_rate_hz == other.frame_rate_hz and np.array_equal(self.data, other.data)


@dataclass(frozen=True)
class BoundarySet:
    """Strictly increasing inclusive chunk-end indices; the last one is ``T - 1``."""

    ends: tuple[int, ...]

    def __post_init__(self):
        ends = tuple(int(e) for e in self.ends)
        if not ends:
            raise InvalidBoundaries("a boundary set needs at least one chunk end")
        if ends[0] < 0:
            raise InvalidBoundaries(f"negative boundary index {ends[0]}")
        for a, b in zip(ends, ends[1:]):
            if b <= a:
                raise InvalidBoundaries(f"boundaries must be strictly increasing, got {a} then {b}")
        object.__setattr__(self, "ends", ends)

    @property
    def num_chunks(self) -> int:
        return len(self.ends)

    @property
    def num_frames(self) -> int:
        return self.ends[-1] + 1

    def validate(self, T: int) -> None:
        if self.ends[-1] != T - 1:
            raise InvalidBoundaries(f"last boundary must be T-1={T - 1}, got {self.ends[-1]}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.ends, dtype=np.int64)

    def __len__(self):
        return len(self.ends)


@dataclass(frozen=True)
class TokenSequence:
    """``N`` tokens of ``L`` per-stream level indices, each in ``[0, K)``.

    ``durations`` and ``total_frames`` are the optional side information used
    by the tokens+durations and tokens+utterance-length decoding modes.
    """

    indices: np.ndarray
    levels: int
    durations: tuple[int, ...] | None = None
    total_frames: int | None = None

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64, copy=True)
        if idx.ndim != 2 or idx.shape[1] < 1:
            raise InvalidInput(f"token indices must be N x L with L >= 1, got shape {idx.shape}")
        if self.levels < 2:
            raise InvalidInput(f"levels per stream must be >= 2, got {self.levels}")
        if idx.size and (idx.min() < 0 or idx.max() >= self.levels):
            raise InvalidToken(f"token index outside [0, {self.levels})")
        object.__setattr__(self, "indices", _frozen(idx))
        if self.durations is not None:
            d = tuple(int(v) for v in self.durations)
            if len(d) != idx.shape[0]:
                raise InvalidDurations(f"{len(d)} durations for {idx.shape[0]} tokens")
            if any(v < 1 for v in d):
                raise InvalidDurations("durations must be >= 1")
            object.__setattr__(self, "durations", d)
        if self.total_frames is not None:
            if self.total_frames < 0:
                raise InvalidInput("total_frames must be non-negative")
            object.__setattr__(self, "total_frames", int(self.total_frames))

    @property
    def num_tokens(self) -> int:
        return self.indices.shape[0]

    @property
    def num_streams(self) -> int:
        return self.indices.shape[1]

    def __eq__(self, other):
        if not isinstance(other, TokenSequence):
            return NotImplemented
        return (
            self.levels == other.levels
            and self.durations == other.durations
            and self.total_frames == other.total_frames
            and np.array_equal(self.indices, other.indices)
        )


@dataclass(frozen=True)
class CodecRates:
    frame_rate_hz: float
    bits_per_token: float
    bitrate_bps: float
    duration_overhead_bps: float = 0.0

    @property
    def bitrate_kbps(self) -> float:
        return self.bitrate_bps / 1000.0

    @property
    def total_bps(self) -> float:
        return self.bitrate_bps + self.duration_overhead_bps


def boundaries_to_durations(b: BoundarySet | list[int], T: int) -> np.ndarray:
    """Chunk lengths from end indices: ``d_i = e_i - e_{i-1}`` with ``e_0 = -1``."""
    if not isinstance(b, BoundarySet):
        b = BoundarySet(tuple(b))
    if b.ends[-1] >= T:
        raise InvalidBoundaries(f"boundary index {b.ends[-1]} out of range for T={T}")
    b.validate(T)
    ends = b.as_array()
    return np.diff(ends, prepend=-1)


def durations_to_boundaries(d) -> BoundarySet:
    d = np.asarray(d)
    if d.ndim != 1 or d.size == 0:
        raise InvalidDurations("durations must be a non-empty 1-D sequence")
    if np.any(d != np.round(d)):
        raise InvalidDurations("durations must be integers")
    d = d.astype(np.int64)
    if np.any(d <= 0):
        raise InvalidDurations(f"durations must be >= 1, got min {d.min()}")
    return BoundarySet(tuple((np.cumsum(d) - 1).tolist()))


def compute_rates(tokens_per_second: float, L: int, K: int, max_duration: int = 1) -> CodecRates:
    """Token bitrate plus fixed-width duration side-info overhead.

    Each token costs ``L * log2(K)`` bits; a transmitted duration costs
    ``ceil(log2(max_duration))`` bits.
    """
    if not tokens_per_second > 0:
        raise InvalidRateInputs(f"tokens_per_second must be positive, got {tokens_per_second}")
    if L < 1:
        raise InvalidRateInputs(f"L must be >= 1, got {L}")
    if K < 2:
        raise InvalidRateInputs(f"K must be >= 2, got {K}")
    if max_duration < 1:
        raise InvalidRateInputs(f"max_duration must be >= 1, got {max_duration}")
    bits = L * math.log2(K)
    overhead_bits = math.ceil(math.log2(max_duration)) if max_duration > 1 else 0
    return CodecRates(
        frame_rate_hz=float(tokens_per_second),
        bits_per_token=bits,
        bitrate_bps=tokens_per_second * bits,
        duration_overhead_bps=float(tokens_per_second * overhead_bits),
    )


def token_rate(num_tokens: int, num_frames: int, base_rate_hz: float) -> float:
    """Empirical tokens per second for ``num_tokens`` covering ``num_frames`` base frames."""
    return num_tokens / (num_frames / base_rate_hz)
