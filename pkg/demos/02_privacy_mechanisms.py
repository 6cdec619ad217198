"""
Laplace and exponential mechanisms
==================================

Degree counts leave a device only after Laplace noise; walk vertices are
replaced by surrogates drawn with the exponential mechanism.
"""

import numpy as np

from fedwalk.privacy import exponential_probabilities, exponential_sample, noise_counts, random_source

rng = random_source(1)

# Noise of scale 1/eps: smaller eps, wider spread, same mean
counts = np.array([4.0, 0.0, 2.0])
for eps in (0.5, 2.0, np.inf):
    draws = np.array([noise_counts(counts, eps, rng) for _ in range(20_000)])
    print(f"eps={eps}: mean {np.round(draws.mean(axis=0), 2)}  std {np.round(draws.std(axis=0), 2)}")

# Neighbouring inputs differ by one count; their output densities stay within e^eps
eps = 1.0
a = noise_counts(np.full(200_000, 1.0), eps, rng)
b = noise_counts(np.full(200_000, 0.0), eps, rng)
ha, _ = np.histogram(a, np.linspace(-3, 4, 15))
hb, _ = np.histogram(b, np.linspace(-3, 4, 15))
full = (ha > 5000) & (hb > 5000)  # sparse tail bins are dominated by sampling error
print("max density ratio %.3f vs e^eps %.3f" % (np.max(np.maximum(ha / hb, hb / ha)[full]), np.exp(eps)))

# Exponential mechanism: higher score, exponentially more likely
scores = np.array([0.0, -1.0, -3.0])
for eps in (0.0, 1.0, 5.0):
    print(f"eps={eps}: probabilities {np.round(exponential_probabilities(scores, eps), 3)}")
picks = np.bincount([exponential_sample(scores, 1.0, rng) for _ in range(10_000)], minlength=3)
print("empirical at eps=1:", np.round(picks / picks.sum(), 3))
