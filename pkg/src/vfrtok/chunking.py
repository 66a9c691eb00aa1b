"""Dynamic down/upsampling and chunk targets from character alignments."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import BoundarySet, FrameSequence, boundaries_to_durations
from .errors import FormatError, InvalidAlignment, InvalidBoundaries, InvalidDurations

SILENCE = "SIL"


def _rows(x) -> tuple[np.ndarray, float | None]:
    if isinstance(x, FrameSequence):
        return x.data, x.frame_rate_hz
    a = np.asarray(x)
    return (a[:, None] if a.ndim == 1 else a), None


def downsample(x, b: BoundarySet):
    """Keep the last frame of every chunk."""
    data, rate = _rows(x)
    if b.ends[-1] != data.shape[0] - 1:
        raise InvalidBoundaries(f"boundaries cover {b.num_frames} frames, sequence has {data.shape[0]}")
    out = data[b.as_array()]
    return FrameSequence(out, rate) if rate is not None else out


def upsample(z, durations):
    """Repeat token row ``i`` ``durations[i]`` times."""
    data, rate = _rows(z)
    d = np.asarray(durations)
    if d.ndim != 1 or d.size != data.shape[0]:
        raise InvalidDurations(f"{d.size} durations for {data.shape[0]} tokens")
    if np.any(d < 1) or np.any(d != np.round(d)):
        raise InvalidDurations("durations must be positive integers")
    out = np.repeat(data, d.astype(np.int64), axis=0)
    return FrameSequence(out, rate) if rate is not None else out


@dataclass(frozen=True)
class AlignmentSpan:
    label: str
    start: int
    end: int

    @property
    def is_silence(self) -> bool:
        return self.label == SILENCE


@dataclass(frozen=True)
class AlignmentTargets:
    boundaries: BoundarySet
    labels: tuple[str, ...]
    all_silence: bool = False

    @property
    def durations(self) -> np.ndarray:
        return boundaries_to_durations(self.boundaries, self.boundaries.num_frames)


def check_tiling(spans) -> int:
    if not spans:
        raise InvalidAlignment("no alignment spans")
    pos = 0
    for s in spans:
        if s.start != pos or s.end < s.start:
            raise InvalidAlignment(f"span {s.label!r} [{s.start}, {s.end}] does not continue the tiling at {pos}")
        pos = s.end + 1
    return pos


def alignment_to_targets(spans) -> AlignmentTargets:
    """Chunk ends and labels after folding silences into their neighbours.

    A silence span joins the next non-silence span (the chunk starts where the
    silence starts). Silence at the end of the utterance has no successor and
    joins the previous chunk instead. Input made only of silence becomes one
    silence chunk with ``all_silence`` set.
    """
    T = check_tiling(spans)
    ends: list[int] = []
    labels: list[str] = []
    for s in spans:
        if s.is_silence:
            continue
        ends.append(s.end)
        labels.append(s.label)
    if not ends:
        return AlignmentTargets(BoundarySet((T - 1,)), (SILENCE,), all_silence=True)
    # trailing silence extends the last chunk
    ends[-1] = T - 1
    return AlignmentTargets(BoundarySet(tuple(ends)), tuple(labels))


def parse_alignment(text: str) -> list[AlignmentSpan]:
    """Parse ``label<TAB>start<TAB>end`` lines; blank lines are skipped."""
    spans = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"expected 3 tab-separated fields, got {len(parts)}", lineno)
        label, start, end = parts
        try:
            spans.append(AlignmentSpan(label, int(start), int(end)))
        except ValueError as e:
            raise FormatError(f"bad frame index: {e}", lineno) from e
    return spans


def format_alignment(spans) -> str:
    return "".join(f"{s.label}\t{s.start}\t{s.end}\n" for s in spans)


def read_alignment(path: str | os.PathLike) -> list[AlignmentSpan]:
    with open(path, encoding="utf-8") as f:
        return parse_alignment(f.read())


def write_alignment(path: str | os.PathLike, spans) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_alignment(spans))
