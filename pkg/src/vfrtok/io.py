"""Binary file formats for frame and token sequences.

All integers are little-endian and there is no padding.

``DYCF``: magic | u32 T | u32 D | f32 frame_rate | T*D f32 row-major

``DYCT``: magic | u32 N | u16 L | u16 K | u8 flags | N*L u8 indices
| [N u32 durations if flags & 1] | [u32 total_frames if flags & 2]
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .core import FrameSequence, TokenSequence
from .errors import FormatError, VfrError

FRAME_MAGIC = b"DYCF"
TOKEN_MAGIC = b"DYCT"

_FRAME_HEADER = struct.Struct("<4sIIf")
_TOKEN_HEADER = struct.Struct("<4sIHHB")

FLAG_DURATIONS = 0x01
FLAG_TOTAL_FRAMES = 0x02


def _need(buf: bytes, offset: int, size: int, what: str) -> None:
    if len(buf) < offset + size:
        raise FormatError(f"truncated {what}: need {size} bytes, have {max(len(buf) - offset, 0)}", offset)


def encode_frames(x: FrameSequence) -> bytes:
    T, D = x.data.shape
    header = _FRAME_HEADER.pack(FRAME_MAGIC, T, D, x.frame_rate_hz)
    return header + np.ascontiguousarray(x.data, dtype="<f4").tobytes()


def decode_frames(buf: bytes) -> FrameSequence:
    _need(buf, 0, _FRAME_HEADER.size, "frame header")
    magic, T, D, rate = _FRAME_HEADER.unpack_from(buf, 0)
    if magic != FRAME_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {FRAME_MAGIC!r}", 0)
    if T == 0 or D == 0:
        raise FormatError(f"empty payload (T={T}, D={D})", 4)
    off = _FRAME_HEADER.size
    n = T * D * 4
    _need(buf, off, n, "frame payload")
    if len(buf) != off + n:
        raise FormatError(f"{len(buf) - off - n} trailing bytes after frame payload", off + n)
    data = np.frombuffer(buf, dtype="<f4", count=T * D, offset=off).reshape(T, D)
    try:
        return FrameSequence(data.astype(np.float32), frame_rate_hz=float(rate))
    except VfrError as e:
        raise FormatError(str(e), off) from e


def encode_tokens(t: TokenSequence) -> bytes:
    if t.levels > 256:
        raise FormatError(f"K={t.levels} does not fit the u8 index field")
    if t.num_streams > 0xFFFF or t.levels > 0xFFFF:
        raise FormatError("L or K does not fit u16")
    flags = 0
    if t.durations is not None:
        flags |= FLAG_DURATIONS
    if t.total_frames is not None:
        flags |= FLAG_TOTAL_FRAMES
    parts = [
        _TOKEN_HEADER.pack(TOKEN_MAGIC, t.num_tokens, t.num_streams, t.levels, flags),
        np.ascontiguousarray(t.indices, dtype=np.uint8).tobytes(),
    ]
    if t.durations is not None:
        parts.append(np.asarray(t.durations, dtype="<u4").tobytes())
    if t.total_frames is not None:
        parts.append(struct.pack("<I", t.total_frames))
    return b"".join(parts)


def decode_tokens(buf: bytes) -> TokenSequence:
    _need(buf, 0, _TOKEN_HEADER.size, "token header")
    magic, N, L, K, flags = _TOKEN_HEADER.unpack_from(buf, 0)
    if magic != TOKEN_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {TOKEN_MAGIC!r}", 0)
    if N == 0 or L == 0:
        raise FormatError(f"empty payload (N={N}, L={L})", 4)
    if K < 2:
        raise FormatError(f"K must be >= 2, got {K}", 10)
    if flags & ~(FLAG_DURATIONS | FLAG_TOTAL_FRAMES):
        raise FormatError(f"unknown flag bits 0x{flags:02x}", 12)
    off = _TOKEN_HEADER.size
    _need(buf, off, N * L, "token indices")
    idx = np.frombuffer(buf, dtype=np.uint8, count=N * L, offset=off).reshape(N, L)
    bad = np.flatnonzero(idx.ravel() >= K)
    if bad.size:
        raise FormatError(f"token index {idx.ravel()[bad[0]]} out of range for K={K}", off + int(bad[0]))
    off += N * L
    durations = None
    if flags & FLAG_DURATIONS:
        _need(buf, off, 4 * N, "durations")
        d = np.frombuffer(buf, dtype="<u4", count=N, offset=off)
        zero = np.flatnonzero(d == 0)
        if zero.size:
            raise FormatError("zero duration", off + 4 * int(zero[0]))
        durations = tuple(int(v) for v in d)
        off += 4 * N
    total = None
    if flags & FLAG_TOTAL_FRAMES:
        _need(buf, off, 4, "total_frames")
        (total,) = struct.unpack_from("<I", buf, off)
        off += 4
    if len(buf) != off:
        raise FormatError(f"{len(buf) - off} trailing bytes", off)
    return TokenSequence(idx.astype(np.int64), levels=K, durations=durations, total_frames=total)


def write_frames(path: str | os.PathLike, x: FrameSequence) -> None:
    with open(path, "wb") as f:
        f.write(encode_frames(x))


def read_frames(path: str | os.PathLike) -> FrameSequence:
    with open(path, "rb") as f:
        return decode_frames(f.read())


def write_tokens(path: str | os.PathLike, t: TokenSequence) -> None:
    with open(path, "wb") as f:
        f.write(encode_tokens(t))


def read_tokens(path: str | os.PathLike) -> TokenSequence:
    with open(path, "rb") as f:
        return decode_tokens(f.read())
