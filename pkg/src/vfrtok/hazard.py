"""Discrete-time hazard model for chunk boundaries.

Each frame carries a boundary probability ``h_t``. Starting a chunk at frame
``t``, the chance that its boundary lands ``k`` frames later is
``prod_{i<k}(1 - h_{t+i}) * h_{t+k}``. Training maximises this likelihood over
the target chunks; decoding thresholds (or samples) ``h_t`` under minimum and
maximum chunk-length constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import expit, log_expit

from .core import BoundarySet, boundaries_to_durations
from .errors import FitDiverged, InvalidConfig, InvalidTargets

PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class HazardSequence:
    """Boundary logits and the matching probabilities ``sigmoid(logits)``."""

    logits: np.ndarray
    probs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        z = np.array(self.logits, dtype=np.float64, copy=True).reshape(-1)
        if z.size < 1:
            raise InvalidConfig("hazard sequence must have at least one frame")
        if not np.all(np.isfinite(z)):
            raise InvalidConfig("hazard logits must be finite")
        z.setflags(write=False)
        p = expit(z)
        p.setflags(write=False)
        object.__setattr__(self, "logits", z)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_probs(cls, probs) -> HazardSequence:
        p = np.clip(np.asarray(probs, dtype=np.float64).reshape(-1), PROB_CLAMP, 1.0 - PROB_CLAMP)
        return cls(np.log(p) - np.log1p(-p))

    def __len__(self):
        return self.logits.size


@dataclass(frozen=True)
class BoundaryTargets:
    """Ground-truth chunks as (start frame, offset of its boundary) pairs."""

    starts: tuple[int, ...]
    offsets: tuple[int, ...]

    @classmethod
    def from_boundaries(cls, b: BoundarySet | list[int]) -> BoundaryTargets:
        if not isinstance(b, BoundarySet):
            b = BoundarySet(tuple(b))
        d = boundaries_to_durations(b, b.num_frames)
        starts = np.concatenate([[0], np.asarray(b.ends[:-1]) + 1])
        return cls(tuple(int(s) for s in starts), tuple(int(k) for k in d - 1))

    def check_tiling(self, T: int) -> None:
        if len(self.starts) != len(self.offsets) or not self.starts:
            raise InvalidTargets("targets need matching, non-empty starts and offsets")
        pos = 0
        for s, k in zip(self.starts, self.offsets):
            if s != pos or k < 0:
                raise InvalidTargets(f"chunk starting at {s} (offset {k}) does not continue the tiling at {pos}")
            pos = s + k + 1
        if pos != T:
            raise InvalidTargets(f"targets cover [0, {pos}) but the sequence has {T} frames")

    def indicator(self, T: int) -> np.ndarray:
        self.check_tiling(T)
        b = np.zeros(T)
        b[np.asarray(self.starts) + np.asarray(self.offsets)] = 1.0
        return b


@dataclass(frozen=True)
class BoundaryDecodeConfig:
    tau_h: float = 0.5
    min_gap: int = 1
    max_gap: int | None = None
    mode: Literal["greedy", "sample"] = "greedy"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tau_h < 1.0:
            raise InvalidConfig(f"tau_h must lie in (0, 1), got {self.tau_h}")
        if self.min_gap < 1:
            raise InvalidConfig(f"min_gap must be >= 1, got {self.min_gap}")
        if self.max_gap is not None and self.max_gap < self.min_gap:
            raise InvalidConfig(f"max_gap={self.max_gap} is below min_gap={self.min_gap}")
        if self.mode not in ("greedy", "sample"):
            raise InvalidConfig(f"unknown decode mode {self.mode!r}")


def _as_hazard(h) -> HazardSequence:
    return h if isinstance(h, HazardSequence) else HazardSequence.from_probs(h)


def next_boundary_distribution(h, t: int, horizon: int) -> tuple[np.ndarray, float]:
    """Next-boundary offset probabilities from chunk start ``t``.

    Returns ``(P, survival)`` where ``P[k]`` is the probability the boundary
    sits at ``t + k`` for ``k < horizon`` and ``survival`` is the mass left
    with no boundary inside the horizon.
    """
    h = _as_hazard(h)
    T = len(h)
    if not 0 <= t < T:
        raise IndexError(f"frame {t} out of range for T={T}")
    if horizon < 0 or t + horizon > T:
        raise IndexError(f"horizon {horizon} from frame {t} runs past T={T}")
    p = h.probs[t : t + horizon]
    alive = np.cumprod(np.concatenate([[1.0], 1.0 - p]))
    return alive[:-1] * p, float(alive[-1])


def hazard_nll(h, targets: BoundaryTargets) -> tuple[float, np.ndarray]:
    """Negative log-likelihood of the target chunks and its gradient w.r.t. the logits."""
    h = _as_hazard(h)
    T = len(h)
    targets.check_tiling(T)
    z = h.logits
    log_stop = log_expit(z)
    log_cont = log_expit(-z)
    # prefix sums of log(1 - h) let each chunk cost O(1)
    cont_cum = np.concatenate([[0.0], np.cumsum(log_cont)])
    nll = 0.0
    grad = h.probs.copy()
    for s, k in zip(targets.starts, targets.offsets):
        nll -= cont_cum[s + k] - cont_cum[s] + log_stop[s + k]
        grad[s + k] -= 1.0
    return float(nll), grad


def decode_boundaries(h, cfg: BoundaryDecodeConfig = BoundaryDecodeConfig()) -> BoundarySet:
    """Scan frames left to right, emitting chunk ends.

    A frame may close the current chunk once the chunk holds at least
    ``min_gap`` frames. Greedy mode closes it when ``h_t >= tau_h``; sample mode
    when a uniform draw falls below ``h_t``. Reaching ``max_gap`` frames forces a
    close, and the final frame always closes the last chunk.

    Sample mode draws one uniform per frame up front from
    ``numpy.random.default_rng(cfg.seed)``, so draw ``t`` belongs to frame ``t``
    regardless of which frames turn out to be eligible.
    """
    h = _as_hazard(h)
    p = h.probs
    T = p.size
    if cfg.mode == "sample":
        fire = np.random.default_rng(cfg.seed).random(T) < p
    else:
        fire = p >= cfg.tau_h
    ends = []
    last = -1
    for t in range(T):
        length = t - last
        if t == T - 1:
            ends.append(t)
        elif length >= cfg.min_gap and fire[t]:
            ends.append(t)
            last = t
        elif cfg.max_gap is not None and length >= cfg.max_gap:
            ends.append(t)
            last = t
    return BoundarySet(tuple(ends))


def fit_hazard_logits(
    targets: BoundaryTargets | BoundarySet,
    T: int,
    steps: int = 500,
    lr: float = 1.0,
) -> HazardSequence:
    """Fit one free logit per frame to the targets by plain gradient descent.

    Stands in for training a boundary network: on separable synthetic targets
    the fitted hazards approach 1 on boundary frames and 0 elsewhere.
    """
    if isinstance(targets, BoundarySet):
        targets = BoundaryTargets.from_boundaries(targets)
    targets.check_tiling(T)
    z = np.zeros(T)
    prev = np.inf
    rising = 0
    for _ in range(steps):
        nll, grad = hazard_nll(HazardSequence(z), targets)
        if not np.isfinite(nll):
            raise FitDiverged("hazard NLL became non-finite")
        rising = rising + 1 if nll > prev else 0
        if rising >= 10:
            raise FitDiverged(f"hazard NLL increased for {rising} consecutive steps (lr={lr})")
        prev = nll
        z = z - lr * grad
    return HazardSequence(z)
