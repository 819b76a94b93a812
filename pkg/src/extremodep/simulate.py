"""Synthetic data generators used by the test oracles and the CLI.

The bivariate/multivariate symmetric logistic sampler goes through the
positive-stable construction, which gives exact unit-Frechet margins and
the closed-form Pickands function A(t) = (sum t_j^(1/a))^a.
"""

from __future__ import annotations

import numpy as np


def positive_stable(alpha, n, rng):
    """Positive alpha-stable variates (Laplace transform exp(-s^alpha))."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    u = rng.uniform(0.0, np.pi, size=n)
    w = rng.exponential(size=n)
    return (np.power(np.sin((1.0 - alpha) * u) / w, (1.0 - alpha) / alpha)
            * np.sin(alpha * u) / np.power(np.sin(u), 1.0 / alpha))


def rlogistic_maxima(n, d, alpha, seed=0):
    """Multivariate symmetric-logistic maxima with unit-Frechet margins.

    alpha in (0, 1]: 1 is independence, small values are strong dependence.
    """
    rng = np.random.default_rng(seed)
    if alpha == 1.0:
        return 1.0 / rng.exponential(size=(n, d))
    s = positive_stable(alpha, n, rng)
    w = rng.exponential(size=(n, d))
    return np.power(s[:, None] / w, alpha)


def logistic_pickands(t, alpha):
    """Closed-form bivariate logistic Pickands function."""
    t = np.asarray(t, dtype=float)
    return np.power(np.power(t, 1.0 / alpha) + np.power(1.0 - t, 1.0 / alpha), alpha)


def planted_clusters(n, sizes, alpha_within, seed=0):
    """Concatenate independent logistic blocks: strong dependence inside
    each block, independence across blocks. Returns (data, labels)."""
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for c, d in enumerate(sizes):
        blocks.append(rlogistic_maxima(n, d, alpha_within,
                                       seed=rng.integers(0, 2**63 - 1)))
        labels.extend([c] * d)
    return np.hstack(blocks), np.asarray(labels)
