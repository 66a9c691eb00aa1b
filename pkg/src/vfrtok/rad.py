"""Retrieval-augmented decoding over an inverted-file (IVF) index.

A pool of unit-norm continuous latents is partitioned by k-means into
``n_list`` inverted lists. A query probes the ``n_probe`` closest centroids and
scans only those lists. During decoding, a quantized latent is swapped for its
retrieved continuous neighbour when ``100 * cosine >= tau``.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidConfig, InvalidInput, NoCandidate

INDEX_MAGIC = b"DYCI"
INDEX_VERSION = 1
# magic | version | n_list | L | M | n_probe | iterations | train_size | seed
_INDEX_HEADER = struct.Struct("<4sIIIIIIIQ")

UNIT_NORM_TOL = 1e-5


@dataclass(frozen=True)
class LatentPool:
    vectors: np.ndarray
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.array(self.vectors, dtype=np.float64, copy=True)
        if v.ndim != 2 or v.shape[0] < 1:
            raise InvalidInput(f"pool must be a non-empty M x L array, got shape {v.shape}")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise InvalidInput("pool vectors must be unit norm")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        ids = self.ids if self.ids is not None else tuple(str(i) for i in range(v.shape[0]))
        if len(ids) != v.shape[0]:
            raise InvalidInput(f"{len(ids)} ids for {v.shape[0]} vectors")
        object.__setattr__(self, "ids", tuple(ids))

    @classmethod
    def from_unnormalized(cls, vectors, ids=None) -> LatentPool:
        v = np.asarray(vectors, dtype=np.float64)
        return cls(v / np.linalg.norm(v, axis=1, keepdims=True), ids)

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def _cosines(vectors: np.ndarray, q: np.ndarray) -> np.ndarray:
    # row-wise reduction so a row's score does not depend on which rows sit beside it
    return (vectors * q).sum(axis=1)


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    return (x * x).sum(1)[:, None] - 2.0 * x @ c.T + (c * c).sum(1)[None, :]


def kmeans(x: np.ndarray, k: int, iterations: int = 25, seed: int = 0) -> np.ndarray:
    """Lloyd's algorithm from a k-means++ start.

    An emptied cluster is re-seeded with the point currently farthest from its
    assigned centroid (lowest index on ties).
    """
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    closest = _sq_dists(x, centroids[:1])[:, 0]
    for j in range(1, k):
        w = np.maximum(closest, 0.0)
        total = w.sum()
        pick = rng.choice(n, p=w / total) if total > 0 else int(rng.integers(n))
        centroids[j] = x[pick]
        closest = np.minimum(closest, _sq_dists(x, centroids[j : j + 1])[:, 0])
    for _ in range(iterations):
        d = _sq_dists(x, centroids)
        assign = np.argmin(d, axis=1)
        counts = np.bincount(assign, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, assign, x)
        for j in np.flatnonzero(counts == 0):
            own = d[np.arange(n), assign]
            far = int(np.argmax(own))
            sums[j] = x[far]
            counts[j] = 1
            # the moved point no longer pulls on its old centroid
            sums[assign[far]] -= x[far]
            counts[assign[far]] -= 1
            assign[far] = j
            d[far] = 0.0
        nonempty = counts > 0
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
    return centroids


@dataclass(frozen=True)
class IvfIndex:
    centroids: np.ndarray
    list_offsets: np.ndarray
    list_ids: np.ndarray
    n_probe: int = 1
    seed: int = 0
    iterations: int = 25
    train_size: int = 0

    @property
    def n_list(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    @property
    def num_vectors(self) -> int:
        return self.list_ids.size

    def inverted_list(self, j: int) -> np.ndarray:
        return self.list_ids[self.list_offsets[j] : self.list_offsets[j + 1]]

    def assignments(self) -> np.ndarray:
        out = np.empty(self.num_vectors, dtype=np.int64)
        for j in range(self.n_list):
            out[self.inverted_list(j)] = j
        return out

    def to_bytes(self) -> bytes:
        header = _INDEX_HEADER.pack(
            INDEX_MAGIC,
            INDEX_VERSION,
            self.n_list,
            self.dim,
            self.num_vectors,
            self.n_probe,
            self.iterations,
            self.train_size,
            self.seed,
        )
        return b"".join(
            [
                header,
                np.ascontiguousarray(self.centroids, dtype="<f8").tobytes(),
                np.ascontiguousarray(self.list_offsets, dtype="<u4").tobytes(),
                np.ascontiguousarray(self.list_ids, dtype="<u4").tobytes(),
            ]
        )

    @classmethod
    def from_bytes(cls, buf: bytes) -> IvfIndex:
        if len(buf) < _INDEX_HEADER.size:
            raise FormatError("truncated index header", 0)
        magic, version, n_list, L, M, n_probe, iters, train, seed = _INDEX_HEADER.unpack_from(buf, 0)
        if magic != INDEX_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {INDEX_MAGIC!r}", 0)
        if version != INDEX_VERSION:
            raise FormatError(f"unsupported index version {version}", 4)
        if n_list == 0 or L == 0 or M == 0:
            raise FormatError("empty index", 8)
        off = _INDEX_HEADER.size
        need = off + 8 * n_list * L + 4 * (n_list + 1) + 4 * M
        if len(buf) != need:
            raise FormatError(f"index payload is {len(buf)} bytes, expected {need}", min(len(buf), need))
        centroids = np.frombuffer(buf, "<f8", n_list * L, off).reshape(n_list, L).copy()
        off += 8 * n_list * L
        offsets = np.frombuffer(buf, "<u4", n_list + 1, off).astype(np.int64)
        off += 4 * (n_list + 1)
        ids = np.frombuffer(buf, "<u4", M, off).astype(np.int64)
        if offsets[0] != 0 or offsets[-1] != M or np.any(np.diff(offsets) < 0):
            raise FormatError("inconsistent list offsets", _INDEX_HEADER.size + 8 * n_list * L)
        if np.any(ids >= M):
            raise FormatError("vector id out of range", off)
        return cls(centroids, offsets, ids, n_probe, seed, iters, train)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path: str | os.PathLike) -> IvfIndex:
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())


def build_index(
    pool: LatentPool,
    n_list: int,
    kmeans_train_size: int | None = None,
    seed: int = 0,
    n_probe: int = 1,
    iterations: int = 25,
) -> IvfIndex:
    """Train coarse centroids on a seeded subsample and file every pool vector."""
    M = len(pool)
    if not 1 <= n_list <= M:
        raise InvalidConfig(f"n_list={n_list} must lie in [1, {M}]")
    train_size = M if kmeans_train_size is None else kmeans_train_size
    if not n_list <= train_size <= M:
        raise InvalidConfig(f"kmeans_train_size={train_size} must lie in [n_list, {M}]")
    if not 1 <= n_probe <= n_list:
        raise InvalidConfig(f"n_probe={n_probe} must lie in [1, n_list]")
    rng = np.random.default_rng(seed)
    sample = np.sort(rng.choice(M, size=train_size, replace=False)) if train_size < M else np.arange(M)
    centroids = kmeans(pool.vectors[sample], n_list, iterations, seed=int(rng.integers(2**32)))
    assign = np.argmin(_sq_dists(pool.vectors, centroids), axis=1)
    order = np.argsort(assign, kind="stable")
    offsets = np.concatenate([[0], np.cumsum(np.bincount(assign, minlength=n_list))])
    return IvfIndex(centroids, offsets, order, n_probe, seed, iterations, train_size)


def query_nearest(index: IvfIndex, pool: LatentPool, q, n_probe: int | None = None) -> tuple[int, float]:
    """Best (pool row, cosine) among the ``n_probe`` closest lists; ties go to the lowest row."""
    n_probe = index.n_probe if n_probe is None else n_probe
    if not 1 <= n_probe <= index.n_list:
        raise InvalidConfig(f"n_probe={n_probe} must lie in [1, {index.n_list}]")
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    d = _sq_dists(q[None], index.centroids)[0]
    probe = np.argsort(d, kind="stable")[:n_probe]
    cand = np.sort(np.concatenate([index.inverted_list(j) for j in probe]))
    if cand.size == 0:
        raise NoCandidate("all probed inverted lists are empty")
    sims = _cosines(pool.vectors[cand], q)
    best = int(np.argmax(sims))
    return int(cand[best]), float(sims[best])


def brute_force_nearest(pool: LatentPool, q) -> tuple[int, float]:
    sims = _cosines(pool.vectors, np.asarray(q, dtype=np.float64).reshape(-1))
    best = int(np.argmax(sims))
    return best, float(sims[best])


@dataclass(frozen=True)
class RadConfig:
    tau: float = 97.0
    n_probe: int = 16

    def __post_init__(self):
        if self.n_probe < 1:
            raise InvalidConfig(f"n_probe must be >= 1, got {self.n_probe}")


@dataclass(frozen=True)
class RadResult:
    latents: np.ndarray
    replaced: np.ndarray
    similarity: np.ndarray
    neighbor: np.ndarray

    @property
    def num_replaced(self) -> int:
        return int(self.replaced.sum())


def rad_apply(latents, index: IvfIndex, pool: LatentPool, cfg: RadConfig = RadConfig()) -> RadResult:
    """Swap each row for its retrieved pool latent when ``100 * cosine >= tau``."""
    z = np.array(latents, dtype=np.float64, copy=True)
    n_probe = min(cfg.n_probe, index.n_list)
    N = z.shape[0]
    replaced = np.zeros(N, dtype=bool)
    sims = np.full(N, np.nan)
    nbr = np.full(N, -1, dtype=np.int64)
    for i in range(N):
        try:
            j, s = query_nearest(index, pool, z[i], n_probe)
        except NoCandidate:
            continue
        sims[i], nbr[i] = s, j
        if 100.0 * s >= cfg.tau:
            z[i] = pool.vectors[j]
            replaced[i] = True
    return RadResult(z, replaced, sims, nbr)


def read_ids(path: str | os.PathLike) -> tuple[str, ...]:
    with open(path, encoding="utf-8") as f:
        return tuple(line.rstrip("\n") for line in f if line.strip())


def write_ids(path: str | os.PathLike, ids) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.writelines(f"{i}\n" for i in ids)
