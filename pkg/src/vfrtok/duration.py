"""Negative-binomial duration model.

Each token ``i`` has a free mean ``mu_free_i``; its duration is
``d_min + y_i`` with ``y_i ~ NB(mean=mu_free_i, dispersion=alpha)``, i.e.
``r = 1/alpha``, ``p = r / (r + mu)``, variance ``mu + alpha * mu**2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln, softplus

from .errors import BudgetInfeasible, InvalidConfig, InvalidDurations, InvalidInput

DEFAULT_LAMBDA = 0.05
DEFAULT_EPSILON = 1e-8
ALPHA_FLOOR = 1e-4
QUOTA_DECIMALS = 9


@dataclass(frozen=True)
class DurationParams:
    mu_free: np.ndarray
    alpha: float = 1.0
    d_min: int = 1
    lam: float = DEFAULT_LAMBDA
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        mu = np.array(self.mu_free, dtype=np.float64, copy=True).reshape(-1)
        if np.any(~np.isfinite(mu)) or np.any(mu < 0):
            raise InvalidConfig("mu_free must be finite and non-negative")
        if not self.alpha > 0:
            raise InvalidConfig(f"alpha must be positive, got {self.alpha}")
        if self.d_min < 1:
            raise InvalidConfig(f"d_min must be >= 1, got {self.d_min}")
        if self.lam < 0 or not self.epsilon > 0:
            raise InvalidConfig("lambda must be >= 0 and epsilon > 0")
        mu.setflags(write=False)
        object.__setattr__(self, "mu_free", mu)

    @classmethod
    def from_raw(cls, raw, **kwargs) -> DurationParams:
        """Map unconstrained network outputs to free means via softplus."""
        return cls(softplus(np.asarray(raw, dtype=np.float64)), **kwargs)

    @property
    def num_tokens(self) -> int:
        return self.mu_free.size

    @property
    def mean_durations(self) -> np.ndarray:
        return self.d_min + self.mu_free


def nb_log_pmf(y, mu, alpha):
    """Log pmf of NB with mean ``mu`` and dispersion ``alpha``; broadcasts.

    ``mu == 0`` is the point mass at zero.
    """
    y = np.asarray(y, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(y < 0):
        raise InvalidInput("NB support is y >= 0")
    if np.any(alpha <= 0) or np.any(mu < 0):
        raise InvalidInput("NB needs mu >= 0 and alpha > 0")
    r = 1.0 / alpha
    log1p_am = np.log1p(alpha * mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        y_term = np.where(y > 0, y * (np.log(alpha * mu) - log1p_am), 0.0)
    out = gammaln(y + r) - gammaln(r) - gammaln(y + 1) - r * log1p_am + y_term
    out = np.where((mu == 0) & (y > 0), -np.inf, out)
    return out if out.ndim else float(out)


def _nb_grads(y, mu, alpha):
    """d/dmu and d/dalpha of the NB log pmf, elementwise."""
    r = 1.0 / alpha
    one_am = 1.0 + alpha * mu
    with np.errstate(divide="ignore", invalid="ignore"):
        y_over_mu = np.where(y > 0, y / mu, 0.0)
    d_mu = y_over_mu - (1.0 + alpha * y) / one_am
    d_alpha = (np.log1p(alpha * mu) - (digamma(y + r) - digamma(r))) / alpha**2 + (y - mu) / (alpha * one_am)
    return d_mu, d_alpha


def _check_durations(d, d_min: int, n: int | None = None) -> np.ndarray:
    d = np.asarray(d)
    if d.ndim != 1 or (n is not None and d.size != n):
        raise InvalidDurations(f"expected {n} durations, got shape {d.shape}")
    if np.any(d != np.round(d)):
        raise InvalidDurations("durations must be integers")
    if np.any(d < d_min):
        raise InvalidDurations(f"durations must be >= d_min={d_min}")
    return d.astype(np.int64)


def duration_nll(params: DurationParams, durations, T: int) -> tuple[float, np.ndarray, float]:
    """NB negative log-likelihood plus the normalized length penalty.

    Returns ``(loss, d_loss/d_mu_free, d_loss/d_alpha)``. The penalty is
    ``lam * ((sum(mu_free) - T_free) / (T_free + eps))**2`` with
    ``T_free = T - N * d_min``.
    """
    N = params.num_tokens
    d = _check_durations(durations, params.d_min, N)
    t_free = T - N * params.d_min
    if t_free < 0:
        raise BudgetInfeasible(f"T={T} cannot hold {N} tokens of at least {params.d_min} frames")
    y = (d - params.d_min).astype(np.float64)
    mu = params.mu_free
    logp = nb_log_pmf(y, mu, params.alpha)
    g_mu, g_alpha = _nb_grads(y, mu, params.alpha)
    denom = t_free + params.epsilon
    gap = (mu.sum() - t_free) / denom
    loss = -np.sum(logp) + params.lam * gap**2
    grad_mu = -g_mu + 2.0 * params.lam * gap / denom
    return float(loss), grad_mu, float(-np.sum(g_alpha))


def decode_free(params: DurationParams) -> np.ndarray:
    """``d_min + round(mu_free)`` with round-half-to-even; total is ``result.sum()``."""
    return params.d_min + np.rint(params.mu_free).astype(np.int64)


def apportion(weights, total: int) -> np.ndarray:
    """Largest-remainder split of ``total`` integer units proportional to ``weights``.

    Floors first, then hands the leftover units to the largest fractional
    parts; equal remainders go to the lower index. All-zero weights split
    uniformly.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = w.size
    if n and w.max() > 0:
        # keeps the sum finite for huge weights and the ratios finite for subnormal ones
        w = w / w.max()
    s = w.sum()
    quotas = np.full(n, total / n) if s <= 0 else (w / s) * total
    # snap away ulp noise so rescaled weights give identical floors and ties
    quotas = np.round(quotas, QUOTA_DECIMALS)
    base = np.floor(quotas).astype(np.int64)
    # guard against quotas drifting past total by an ulp
    while base.sum() > total:
        base[np.argmax(base)] -= 1
    rest = total - int(base.sum())
    frac = np.round(quotas - base, QUOTA_DECIMALS)
    order = np.lexsort((np.arange(n), -frac))
    base[order[:rest]] += 1
    return base


def decode_budget(params: DurationParams, T: int) -> np.ndarray:
    """Durations that sum exactly to ``T``, each at least ``d_min``."""
    N = params.num_tokens
    t_free = T - N * params.d_min
    if t_free < 0:
        raise BudgetInfeasible(f"T={T} cannot hold {N} tokens of at least {params.d_min} frames")
    return params.d_min + apportion(params.mu_free, t_free)


@dataclass(frozen=True)
class DurationFit:
    params: DurationParams
    classes: tuple
    degenerate: bool


def fit_duration_params(
    samples,
    steps: int = 200,
    lr: float = 0.5,
    d_min: int = 1,
    lam: float = DEFAULT_LAMBDA,
) -> DurationFit:
    """Fit per-class free means and one shared dispersion.

    ``samples`` maps a class key to an array of observed durations (a plain
    sequence is treated as a single class). Free means are the sample means of
    the excess durations; ``alpha`` is fit by gradient descent on the mean NLL
    in log-space with the length penalty off. Data showing no over-dispersion
    pins ``alpha`` at ``ALPHA_FLOOR`` and sets ``degenerate``.
    """
    if not isinstance(samples, dict):
        samples = {0: samples}
    classes = tuple(samples)
    ys, mus = [], []
    for key in classes:
        d = _check_durations(np.asarray(samples[key]).reshape(-1), d_min)
        if d.size == 0:
            raise InvalidDurations(f"class {key!r} has no samples")
        y = (d - d_min).astype(np.float64)
        ys.append(y)
        mus.append(y.mean())
    mu_free = np.array(mus)
    y_all = np.concatenate(ys)
    mu_all = np.concatenate([np.full(y.size, m) for y, m in zip(ys, mus)])

    resid_var = np.sum((y_all - mu_all) ** 2) / max(y_all.size - len(classes), 1)
    if resid_var <= y_all.mean():
        params = DurationParams(mu_free, alpha=ALPHA_FLOOR, d_min=d_min, lam=lam)
        return DurationFit(params, classes, degenerate=True)

    # method-of-moments start, then descend on log(alpha)
    log_a = np.log(max((resid_var - mu_all.mean()) / max(np.mean(mu_all**2), 1e-12), ALPHA_FLOOR))
    n = y_all.size
    for _ in range(steps):
        a = np.exp(log_a)
        _, g_alpha = _nb_grads(y_all, mu_all, a)
        step = lr * (-g_alpha.sum() / n) * a
        log_a -= step
        if abs(step) < 1e-12:
            break
    alpha = max(float(np.exp(log_a)), ALPHA_FLOOR)
    params = DurationParams(mu_free, alpha=alpha, d_min=d_min, lam=lam)
    return DurationFit(params, classes, degenerate=alpha <= ALPHA_FLOOR)


def sample_nb(mu: float, alpha: float, size: int, seed: int = 0) -> np.ndarray:
    """Seeded NB draws with mean ``mu`` and variance ``mu + alpha * mu**2``."""
    r = 1.0 / alpha
    return np.random.default_rng(seed).negative_binomial(r, r / (r + mu), size=size)
