"""Central-difference derivatives for likelihood curvature estimates."""

from __future__ import annotations

import numpy as np


def _steps(x, rel_step):
    x = np.asarray(x, dtype=float)
    return rel_step * (1.0 + np.abs(x))


def gradient(f, x, rel_step=1e-5):
    """Central-difference gradient of scalar f at x."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, rel_step)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h[i])
    return g


def hessian(f, x, rel_step=1e-5):
    """Central-difference Hessian of scalar f at x, symmetrized."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = _steps(x, rel_step)
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


def score_matrix(f_perobs, x, rel_step=1e-5):
    """Per-observation score vectors by central differences.

    f_perobs(x) must return the vector of per-observation log densities;
    the result has one row per observation and one column per parameter.
    """
    x = np.asarray(x, dtype=float)
    h = _steps(x, rel_step)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        cols.append((f_perobs(x + e) - f_perobs(x - e)) / (2.0 * h[i]))
    return np.column_stack(cols)
