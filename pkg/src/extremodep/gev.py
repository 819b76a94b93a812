"""Univariate GEV primitives.

Distribution/quantile functions with a numerically continuous Gumbel
branch, maximum-likelihood fitting of block maxima, block-maxima
extraction, and rank-based or parametric transforms to the unit-Frechet
scale used by all dependence estimators in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize, stats

from ._numdiff import hessian

GUMBEL_EPS = 1e-8  # |gamma| below this switches to the Gumbel limit


@dataclass(frozen=True)
class GevParams:
    """Location/scale/shape triple of a generalized extreme-value law."""

    mu: float
    sigma: float
    gamma: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.mu, self.sigma, self.gamma])):
            raise ValueError("GEV parameters must be finite")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def standardized(self, x):
        """Support expression 1 + gamma (x - mu) / sigma."""
        return 1.0 + self.gamma * (np.asarray(x, dtype=float) - self.mu) / self.sigma

    def as_tuple(self):
        return (self.mu, self.sigma, self.gamma)


def gev_cdf(x, p: GevParams):
    """GEV distribution function; 0/1 outside the support by shape sign."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite x in gev_cdf")
    if abs(p.gamma) < GUMBEL_EPS:
        out = np.exp(-np.exp(-(x - p.mu) / p.sigma))
    else:
        t = p.standardized(x)
        out = np.where(
            t > 0,
            np.exp(-np.power(np.clip(t, 1e-300, None), -1.0 / p.gamma)),
            0.0 if p.gamma > 0 else 1.0,
        )
    return float(out) if out.ndim == 0 else out


def gev_pdf(x, p: GevParams):
    """GEV density, zero outside the support."""
    x = np.asarray(x, dtype=float)
    if abs(p.gamma) < GUMBEL_EPS:
        u = (x - p.mu) / p.sigma
        out = np.exp(-u - np.exp(-u)) / p.sigma
    else:
        t = p.standardized(x)
        tc = np.clip(t, 1e-300, None)
        out = np.where(
            t > 0,
            np.power(tc, -1.0 / p.gamma - 1.0) * np.exp(-np.power(tc, -1.0 / p.gamma)) / p.sigma,
            0.0,
        )
    return float(out) if out.ndim == 0 else out


def gev_quantile(q, p: GevParams):
    """Inverse of gev_cdf on (0, 1)."""
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0.0) | (q >= 1.0)):
        raise ValueError("quantile level must lie strictly in (0, 1)")
    w = -np.log(q)
    if abs(p.gamma) < GUMBEL_EPS:
        out = p.mu - p.sigma * np.log(w)
    else:
        out = p.mu + p.sigma * (np.power(w, -p.gamma) - 1.0) / p.gamma
    return float(out) if out.ndim == 0 else out


def gev_loglik(x, mu, sigma, gamma):
    """GEV log likelihood of a sample; -inf outside the support."""
    x = np.asarray(x, dtype=float)
    if sigma <= 0:
        return -np.inf
    if abs(gamma) < GUMBEL_EPS:
        u = (x - mu) / sigma
        return float(-x.size * np.log(sigma) - np.sum(u) - np.sum(np.exp(-u)))
    t = 1.0 + gamma * (x - mu) / sigma
    if np.any(t <= 0):
        return -np.inf
    logt = np.log(t)
    return float(
        -x.size * np.log(sigma)
        - (1.0 + 1.0 / gamma) * np.sum(logt)
        - np.sum(np.exp(-logt / gamma))
    )


def gev_rvs(n, p: GevParams, rng):
    """Draw n variates by inverse transform."""
    return gev_quantile(rng.uniform(size=n), p)


class GevFit(NamedTuple):
    params: GevParams
    se: np.ndarray
    loglik: float


def _moment_start(x):
    s = np.std(x, ddof=1)
    sigma0 = s * np.sqrt(6.0) / np.pi
    mu0 = np.mean(x) - 0.5772156649 * sigma0
    return np.array([mu0, np.log(sigma0), 0.1])


def gev_fit_mle(x) -> GevFit:
    """Fit a GEV by maximum likelihood.

    Runs a Nelder-Mead search on (mu, log sigma, gamma) followed by a
    BFGS polish; standard errors come from the inverse observed
    information at the optimum. Requires at least 20 finite observations
    and non-degenerate data.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 20:
        raise ValueError(f"need at least 20 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in sample")
    if np.ptp(x) <= 0:
        raise ValueError("degenerate (constant) sample")

    def nll(v):
        return -gev_loglik(x, v[0], np.exp(v[1]), v[2])

    res = optimize.minimize(nll, _moment_start(x), method="Nelder-Mead",
                            options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
    res = optimize.minimize(nll, res.x, method="BFGS",
                            options={"gtol": 1e-8, "maxiter": 500})
    if not np.isfinite(res.fun):
        raise RuntimeError(f"GEV MLE failed to converge: {res.message}")
    mu, sigma, gamma = res.x[0], float(np.exp(res.x[1])), res.x[2]
    params = GevParams(mu, sigma, gamma)

    def nll_nat(v):
        return -gev_loglik(x, v[0], v[1], v[2])

    H = hessian(nll_nat, np.array([mu, sigma, gamma]))
    try:
        cov = np.linalg.inv(H)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se = np.full(3, np.nan)
    return GevFit(params=params, se=se, loglik=float(-res.fun))


def block_maxima(series, block_size):
    """Maxima over consecutive blocks; a trailing partial block is dropped."""
    series = np.asarray(series, dtype=float).ravel()
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    k = series.size // block_size
    if k == 0:
        raise ValueError(f"block_size {block_size} exceeds series length {series.size}")
    return series[: k * block_size].reshape(k, block_size).max(axis=1)


def empirical_cdf(x):
    """Rank-based empirical cdf using ranks/(n+1) (ties get average ranks)."""
    x = np.asarray(x, dtype=float)
    return stats.rankdata(x, method="average") / (x.size + 1.0)


def to_unit_frechet(data, mode="empirical", params=None):
    """Transform columns of data to the unit-Frechet scale.

    mode="empirical" applies y = 1/(1 - Fhat(x)) with Fhat the rank-based
    empirical cdf; mode="parametric" applies y = (1 + gamma (x-mu)/sigma)^(1/gamma)
    with one GevParams per column and errors on points outside the support.
    """
    arr = np.asarray(data, dtype=float)
    one_dim = arr.ndim == 1
    mat = arr.reshape(-1, 1) if one_dim else arr
    out = np.empty_like(mat)
    if mode == "empirical":
        for j in range(mat.shape[1]):
            out[:, j] = 1.0 / (1.0 - empirical_cdf(mat[:, j]))
    elif mode == "parametric":
        if params is None or len(params) != mat.shape[1]:
            raise ValueError("parametric mode needs one GevParams per column")
        for j, pj in enumerate(params):
            if abs(pj.gamma) < GUMBEL_EPS:
                out[:, j] = np.exp((mat[:, j] - pj.mu) / pj.sigma)
            else:
                t = pj.standardized(mat[:, j])
                if np.any(t <= 0):
                    raise ValueError(f"column {j}: point outside GEV support")
                out[:, j] = np.power(t, 1.0 / pj.gamma)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out[:, 0] if one_dim else out


@dataclass(frozen=True)
class BlockMaximaSeries:
    """Componentwise block maxima with their extraction bookkeeping."""

    values: np.ndarray  # (k, d)
    block_size: int
    source_length: int

    @classmethod
    def from_raw(cls, data, block_size):
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        cols = [block_maxima(data[:, j], block_size) for j in range(data.shape[1])]
        vals = np.column_stack(cols)
        return cls(values=vals, block_size=block_size,
                   source_length=vals.shape[0] * block_size)
