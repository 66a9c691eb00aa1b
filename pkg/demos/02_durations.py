"""Negative binomial durations: fit, then decode with and without a frame budget."""

import numpy as np

from vfrtok.duration import DurationParams, decode_budget, decode_free, fit_duration_params, sample_nb

rng = np.random.default_rng(0)

# two token classes, one short and steady, one long and bursty
samples = {
    "short": 1 + sample_nb(2.0, 0.2, 4000, seed=1),
    "long": 1 + sample_nb(8.0, 0.2, 4000, seed=2),
}
fit = fit_duration_params(samples)
for cls, mu in zip(fit.classes, fit.params.mu_free):
    print(f"{cls:>5}: mu_free={mu:.2f}")
print(f"shared alpha={fit.params.alpha:.3f} (true 0.2)")

mu = rng.choice(fit.params.mu_free, size=12)
params = DurationParams(mu, alpha=fit.params.alpha)
free = decode_free(params)
print("free decode:  ", free, "sum", free.sum())

# pretend the utterance is 20% longer than the model expects
T = int(round(1.2 * free.sum()))
budget = decode_budget(params, T)
print("budget decode:", budget, "sum", budget.sum(), "target", T)
