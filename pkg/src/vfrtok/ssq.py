"""Scalar spherical quantization (SSQ).

Latents are projected onto the unit sphere, then every coordinate is snapped
to one of ``K`` evenly spaced levels spanning ``[-1/sqrt(L), 1/sqrt(L)]``. The
token is the tuple of per-dimension level indices, so the implicit codebook
has ``K**L`` entries without ever being stored. ``K = 2`` gives binary
spherical quantization (sign bits scaled by ``1/sqrt(L)``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax, xlogy

from .errors import DegenerateCode, DegenerateInput, InvalidConfig, InvalidToken, TooLarge

MAX_ENUMERATION = 2**20


@dataclass(frozen=True)
class SsqConfig:
    L: int = 32
    K: int = 4
    entropy_weight: float = 0.1
    temperature: float = 0.1

    def __post_init__(self):
        if self.L < 1:
            raise InvalidConfig(f"L must be >= 1, got {self.L}")
        if self.K < 2:
            raise InvalidConfig(f"K must be >= 2, got {self.K}")
        if self.entropy_weight < 0 or not self.temperature > 0:
            raise InvalidConfig("entropy_weight must be >= 0 and temperature > 0")

    @property
    def levels(self) -> np.ndarray:
        # integer numerators keep the grid exactly symmetric about zero
        k = np.arange(self.K)
        return (2 * k - (self.K - 1)) / ((self.K - 1) * np.sqrt(self.L))

    @property
    def spacing(self) -> float:
        return 2.0 / ((self.K - 1) * np.sqrt(self.L))

    @property
    def codebook_size(self) -> int:
        return self.K**self.L

    @property
    def bits_per_token(self) -> float:
        return self.L * np.log2(self.K)


def normalize(z, eps: float = 0.0) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    norm = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(norm <= eps):
        raise DegenerateInput("cannot project the zero vector onto the sphere")
    return z / norm


def snap(u, cfg: SsqConfig) -> np.ndarray:
    """Nearest level index for already-normalized coordinates; ties go low."""
    u = np.asarray(u, dtype=np.float64)
    dist = np.abs(u[..., None] - cfg.levels)
    return np.argmin(dist, axis=-1)


def quantize(z, cfg: SsqConfig) -> np.ndarray:
    """Level indices for raw latents of shape ``(..., L)``."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != cfg.L:
        raise InvalidConfig(f"latent has {z.shape[-1]} dims, quantizer expects L={cfg.L}")
    if not np.all(np.isfinite(z)):
        raise DegenerateInput("latent contains non-finite values")
    return snap(normalize(z), cfg)


def dequantize(indices, cfg: SsqConfig) -> np.ndarray:
    """Unit-norm embedding of level indices of shape ``(..., L)``."""
    idx = np.asarray(indices)
    if idx.shape[-1] != cfg.L:
        raise InvalidConfig(f"token has {idx.shape[-1]} streams, quantizer expects L={cfg.L}")
    if idx.size and (idx.min() < 0 or idx.max() >= cfg.K or np.any(idx != np.round(idx))):
        raise InvalidToken(f"index outside [0, {cfg.K})")
    g = cfg.levels[idx.astype(np.int64)]
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise DegenerateCode("all-middle code has no direction (odd K)")
    return g / norm


def soft_quantize(z, cfg: SsqConfig) -> np.ndarray:
    """Per-dimension level probabilities, shape ``(..., L, K)``."""
    z = np.asarray(z, dtype=np.float64)
    return softmax(-((z[..., None] - cfg.levels) ** 2) / cfg.temperature, axis=-1)


def entropy_loss(probs, cfg: SsqConfig) -> tuple[float, np.ndarray]:
    """Factorized entropy regularizer on a batch of soft assignments.

    ``probs`` has shape ``(B, L, K)``. The loss is
    ``entropy_weight * sum_d [mean_b H(p_bd) - H(mean_b p_bd)]``: low when each
    sample commits to one level and the batch as a whole spreads over all of
    them. Returns the loss and its gradient w.r.t. ``probs``.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim == 2:
        p = p[None]
    B = p.shape[0]
    p_bar = p.mean(axis=0)
    per_sample = -xlogy(p, p).sum(axis=-1).mean(axis=0)
    codebook = -xlogy(p_bar, p_bar).sum(axis=-1)
    loss = cfg.entropy_weight * float(np.sum(per_sample - codebook))
    with np.errstate(divide="ignore"):
        grad = cfg.entropy_weight * (np.log(p_bar)[None] - np.log(p)) / B
    return loss, grad.reshape(np.shape(probs))


def entropy_loss_latents(z, cfg: SsqConfig) -> tuple[float, np.ndarray]:
    """``entropy_loss`` of ``soft_quantize(z)`` with the gradient w.r.t. ``z`` (shape ``(B, L)``)."""
    z = np.asarray(z, dtype=np.float64)
    diff = z[..., None] - cfg.levels
    logits = -(diff**2) / cfg.temperature
    p = softmax(logits, axis=-1)
    loss, g_p = entropy_loss(p, cfg)
    # softmax backward, then d logits / d z
    g_logits = p * (g_p - np.sum(g_p * p, axis=-1, keepdims=True))
    g_z = np.sum(g_logits * (-2.0 * diff / cfg.temperature), axis=-1)
    return loss, g_z


@dataclass(frozen=True)
class Codebook:
    """Exhaustive listing of a small implicit codebook.

    ``degenerate`` marks index tuples with no direction (odd ``K``, all
    middle); their ``codes`` rows are zero. ``collisions`` counts tuples whose
    embedding repeats an earlier tuple's (positive scalar multiples), and
    ``non_idempotent`` counts tuples that do not survive a
    dequantize/quantize round trip.
    """

    indices: np.ndarray
    codes: np.ndarray
    degenerate: np.ndarray
    collisions: int
    non_idempotent: int

    def __len__(self):
        return self.indices.shape[0]


def enumerate_codebook(cfg: SsqConfig, decimals: int = 12) -> Codebook:
    if cfg.K**cfg.L > MAX_ENUMERATION:
        raise TooLarge(f"codebook has {cfg.K}^{cfg.L} entries, cap is {MAX_ENUMERATION}")
    idx = np.array(list(itertools.product(range(cfg.K), repeat=cfg.L)), dtype=np.int64)
    g = cfg.levels[idx]
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    degenerate = norm[:, 0] == 0
    codes = np.divide(g, norm, out=np.zeros_like(g), where=norm > 0)
    live = ~degenerate
    distinct = np.unique(np.round(codes[live], decimals), axis=0).shape[0]
    collisions = int(live.sum()) - distinct
    back = snap(codes[live], cfg)
    non_idem = int(np.sum(np.any(back != idx[live], axis=-1)))
    return Codebook(idx, codes, degenerate, collisions, non_idem)
