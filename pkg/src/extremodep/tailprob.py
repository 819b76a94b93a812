"""Stable-tail and tail-copula evaluation, joint tail probabilities,
return levels, semi-parametric simulation and Monte-Carlo failure
probabilities.

Dependence objects can be a BernsteinAngular distribution, a parametric
angular model or a Bernstein Pickands function; integrals against the
angular measure use fixed Gauss-Legendre rules with endpoint atoms
handled exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .angular import ParametricAngularModel, angular_density
from .gev import GUMBEL_EPS, GevParams
from .madogram import BernsteinPickands
from .npbayes import (BernsteinAngular, PosteriorChain, bernstein_joint_survival,
                      h_density)

QUAD_NODES = 512


@lru_cache(maxsize=8)
def _gl_nodes(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _angular_integral(fn, dep, nodes=QUAD_NODES):
    """Integral of fn(points) against the angular probability measure,
    times the dimension d (atoms included exactly for Bernstein H)."""
    if isinstance(dep, BernsteinAngular):
        w, wt = _gl_nodes(nodes)
        pts = np.column_stack([w, 1.0 - w])
        dens = h_density(w, dep)
        interior = np.sum(wt * dens * fn(pts))
        atom0 = dep.p0 * fn(np.array([[0.0, 1.0]]))[0]
        atom1 = dep.p1 * fn(np.array([[1.0, 0.0]]))[0]
        return 2.0 * (interior + atom0 + atom1)
    if isinstance(dep, ParametricAngularModel):
        d = dep.dim
        if d == 2:
            w, wt = _gl_nodes(nodes)
            pts = np.column_stack([w, 1.0 - w])
            dens = angular_density(dep, pts)
            return 2.0 * np.sum(wt * dens * fn(pts))
        if d == 3:
            a, wa = _gl_nodes(64)
            b, wb = _gl_nodes(64)
            A, B = np.meshgrid(a, b, indexing="ij")
            w1 = A.ravel()
            w2 = (B * (1.0 - A)).ravel()
            w3 = 1.0 - w1 - w2
            pts = np.column_stack([w1, w2, np.clip(w3, 1e-300, None)])
            jac = (1.0 - w1)
            wt = np.outer(wa, wb).ravel() * jac
            dens = angular_density(dep, pts)
            return 3.0 * np.sum(wt * dens * fn(pts))
        raise NotImplementedError("angular quadrature implemented for d in {2, 3}")
    raise TypeError(f"unsupported dependence object {type(dep)!r}")


def stable_tail_L(x, dep):
    """Stable-tail dependence function L(x) = d * int max_j(x_j w_j) dH(w)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    if isinstance(dep, BernsteinPickands):
        s = x.sum()
        if s == 0:
            return 0.0
        t = x[1:] / s
        val = dep(t[0] if dep.dim == 2 else t[None, :])
        return float(s * np.atleast_1d(val)[0])
    return float(_angular_integral(lambda pts: (pts * x).max(axis=1), dep))


def tail_copula_R(x, dep):
    """Tail copula R(x) = d * int min_j(x_j w_j) dH(w)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    if isinstance(dep, BernsteinPickands):
        if dep.dim != 2:
            raise NotImplementedError("R from a Pickands object is bivariate only")
        return float(x.sum() - stable_tail_L(x, dep))
    return float(_angular_integral(lambda pts: (pts * x).min(axis=1), dep))


def joint_tail_probability(q, dep, kind="or"):
    """Approximate P(at least one / all components exceed their marginal
    (1-q_j)-quantiles) by L(q) or R(q)."""
    q = np.asarray(q, dtype=float)
    if np.any(q > 0.1):
        warnings.warn("tail approximation is intended for small marginal "
                      "probabilities (q <= 0.1)", stacklevel=2)
    if kind == "or":
        return stable_tail_L(q, dep)
    if kind == "and":
        return tail_copula_R(q, dep)
    raise ValueError("kind must be 'or' or 'and'")


# ---------------------------------------------------------------------------
# Marginal transform helpers
# ---------------------------------------------------------------------------

def frechet_threshold(u, p: GevParams):
    """u* = (1 + gamma (u - mu)/sigma)^(1/gamma), the unit-Frechet image."""
    if abs(p.gamma) < GUMBEL_EPS:
        return float(np.exp((u - p.mu) / p.sigma))
    t = p.standardized(u)
    if np.any(np.asarray(t) <= 0):
        raise ValueError("threshold outside the GEV support")
    return float(np.power(t, 1.0 / p.gamma)) if np.isscalar(t) else np.power(t, 1.0 / p.gamma)


def frechet_to_margin(z, p: GevParams):
    """Inverse transform from the unit-Frechet scale to GEV data units."""
    z = np.asarray(z, dtype=float)
    if abs(p.gamma) < GUMBEL_EPS:
        return p.mu + p.sigma * np.log(z)
    return p.mu + p.sigma * (np.power(z, p.gamma) - 1.0) / p.gamma


@dataclass(frozen=True)
class FailureRegion:
    """Bivariate or/and exceedance region with Frechet-scale thresholds."""

    thresholds: tuple
    kind: str
    margins: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("or", "and"):
            raise ValueError("kind must be 'or' or 'and'")
        u = tuple(float(v) for v in self.thresholds)
        object.__setattr__(self, "thresholds", u)

    @property
    def frechet_thresholds(self):
        if self.margins is None:
            u = self.thresholds
        else:
            u = tuple(frechet_threshold(v, p) for v, p in zip(self.thresholds, self.margins))
        if any(v <= 0 for v in u):
            raise ValueError("Frechet thresholds must be positive")
        return u

    def contains(self, z1, z2):
        u1, u2 = self.frechet_thresholds
        if self.kind == "or":
            return (z1 > u1) | (z2 > u2)
        return (z1 > u1) & (z2 > u2)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_angular(m: BernsteinAngular, n, seed=0):
    """Draw from H: atoms with probabilities p0/p1, and the continuous
    part through its exact representation as a Beta mixture."""
    rng = np.random.default_rng(seed)
    kappa = m.kappa
    weights = np.concatenate([[m.p0], np.diff(m.eta), [m.p1]])
    weights = np.clip(weights, 0.0, None)
    weights /= weights.sum()
    comp = rng.choice(weights.size, size=n, p=weights)
    out = np.empty(n)
    out[comp == 0] = 0.0
    out[comp == weights.size - 1] = 1.0
    for j in range(kappa - 1):
        mask = comp == j + 1
        cnt = int(mask.sum())
        if cnt:
            out[mask] = rng.beta(j + 1, kappa - 1 - j, size=cnt)
    return out


def _draw_frechet_points(m, n, rng):
    """z = 2 r (w, 1-w) with r unit Pareto and w from H."""
    w = sample_angular(m, n, seed=rng)
    r = 1.0 / rng.uniform(size=n)
    return np.column_stack([2.0 * r * w, 2.0 * r * (1.0 - w)])


def _sample_maxima_frechet(m: BernsteinAngular, n, rng):
    """Bivariate GEV with unit-Frechet margins by conditional inversion."""
    beta = np.concatenate([[1.0], 1.0 + np.cumsum((2.0 * m.eta - 1.0) / m.kappa)])
    kappa = m.kappa
    from .npbayes import _bern_eval  # local import to keep module deps one-way

    z1 = -1.0 / np.log(rng.uniform(size=n))
    u2 = rng.uniform(size=n)
    x1 = 1.0 / z1

    def cond_cdf(logz2):
        x2 = np.exp(-logz2)
        r = x1 + x2
        v = x2 / r
        A = _bern_eval(v, beta)
        A1 = _bern_eval(v, kappa * np.diff(beta))
        return np.exp(-r * A + x1) * (A - v * A1)

    lo = np.full(n, -46.0)
    hi = np.full(n, 46.0)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        too_low = cond_cdf(mid) < u2
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    return np.column_stack([z1, np.exp(0.5 * (lo + hi))])


def sample_bivariate(m: BernsteinAngular, n, seed=0, kind="maxima",
                     exceed_type="or", threshold=None, margins=None):
    """Generate bivariate maxima or threshold exceedances.

    kind="maxima" draws from the bivariate GEV with dependence m by
    numerical conditional inversion on the unit-Frechet scale.
    kind="exceed" draws z = 2 r (w, 1-w) and keeps points inside the
    requested failure region, with thresholds interpreted in data units
    when margins are supplied. Errors out if the acceptance rate falls
    below 1e-5.
    """
    rng = np.random.default_rng(seed)
    if kind == "maxima":
        z = _sample_maxima_frechet(m, n, rng)
    elif kind == "exceed":
        if threshold is None:
            raise ValueError("exceed sampling requires a threshold pair")
        region = FailureRegion(thresholds=threshold, kind=exceed_type,
                               margins=tuple(margins) if margins else None)
        out = np.empty((n, 2))
        got, tried = 0, 0
        while got < n:
            batch = max(4 * (n - got), 2000)
            z = _draw_frechet_points(m, batch, rng)
            keep = region.contains(z[:, 0], z[:, 1])
            take = min(int(keep.sum()), n - got)
            out[got:got + take] = z[keep][:take]
            got += take
            tried += batch
            if tried >= 200_000 and got / tried < 1e-5:
                raise RuntimeError(
                    f"exceedance acceptance rate below 1e-5 ({got}/{tried})")
        z = out
    else:
        raise ValueError("kind must be 'maxima' or 'exceed'")
    if margins is not None:
        z = np.column_stack([frechet_to_margin(z[:, j], margins[j]) for j in range(2)])
    return z


# ---------------------------------------------------------------------------
# Failure probabilities (empirical, on a threshold grid)
# ---------------------------------------------------------------------------

class FailureProbGrid(NamedTuple):
    u1: np.ndarray
    u2: np.ndarray
    p_or: np.ndarray | None
    se_or: np.ndarray | None
    p_and: np.ndarray | None
    se_and: np.ndarray | None
    n: int


def failure_probability(m: BernsteinAngular, margins, u1_grid, u2_grid,
                        kind="both", N=50_000, seed=0):
    """Monte-Carlo estimates of P(or-region) and P(and-region) over a
    threshold grid, with one shared sample of N spectral points."""
    if N < 1000:
        raise ValueError("N must be at least 1000")
    rng = np.random.default_rng(seed)
    u1_grid = np.atleast_1d(np.asarray(u1_grid, dtype=float))
    u2_grid = np.atleast_1d(np.asarray(u2_grid, dtype=float))
    z = _draw_frechet_points(m, N, rng)
    u1s = np.array([frechet_threshold(u, margins[0]) for u in u1_grid])
    u2s = np.array([frechet_threshold(u, margins[1]) for u in u2_grid])
    exc1 = z[:, 0][:, None] > u1s[None, :]   # (N, n1)
    exc2 = z[:, 1][:, None] > u2s[None, :]   # (N, n2)

    def grid_mean(op):
        out = np.empty((u1s.size, u2s.size))
        for i in range(u1s.size):
            e1 = exc1[:, i]
            for j in range(u2s.size):
                out[i, j] = op(e1, exc2[:, j]).mean()
        return out

    p_or = se_or = p_and = se_and = None
    if kind in ("or", "both"):
        p_or = grid_mean(np.logical_or)
        se_or = np.sqrt(p_or * (1.0 - p_or) / N)
    if kind in ("and", "both"):
        p_and = grid_mean(np.logical_and)
        se_and = np.sqrt(p_and * (1.0 - p_and) / N)
    if kind not in ("or", "and", "both"):
        raise ValueError("kind must be 'or', 'and' or 'both'")
    return FailureProbGrid(u1=u1_grid, u2=u2_grid, p_or=p_or, se_or=se_or,
                           p_and=p_and, se_and=se_and, n=N)


# ---------------------------------------------------------------------------
# Joint return levels from a posterior chain
# ---------------------------------------------------------------------------

class ReturnLevelCurve(NamedTuple):
    p: np.ndarray
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    free_index: int
    n_no_solution: int


def _tail_R(m: BernsteinAngular, x1, x2):
    # closed form through the Beta-mixture representation
    return bernstein_joint_survival(m, 1.0 / x1, 1.0 / x2)


def joint_return_level(chain: PosteriorChain, burn, p, fixed, cred=0.95, thin=1):
    """Per posterior sample, solve R(x_free, x_fixed) = p on the Frechet
    scale and map back through that sample's margin.

    fixed is a pair with exactly one None marking the free component; the
    other entry is a data-unit threshold. Returns pointwise posterior
    mean and central credible band over the grid of p values.
    """
    fixed = tuple(fixed)
    if sum(v is None for v in fixed) != 1:
        raise ValueError("exactly one component must be free (None)")
    free = 0 if fixed[0] is None else 1
    other = 1 - free
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((p_arr <= 0) | (p_arr >= 1)):
        raise ValueError("p must lie in (0, 1)")
    idx = chain.post_burn(burn, thin)
    th_all = (chain.th1, chain.th2)
    levels = np.full((idx.size, p_arr.size), np.nan)
    no_solution = 0
    for row, i in enumerate(idx):
        m = chain.angular(i)
        th_fix = GevParams(*th_all[other][i])
        th_free = GevParams(*th_all[free][i])
        try:
            x_fix = 1.0 / frechet_threshold(fixed[other], th_fix)
        except ValueError:
            no_solution += p_arr.size
            continue
        for c, pv in enumerate(p_arr):
            args = (lambda xf: _tail_R(m, xf, x_fix)) if free == 0 else \
                   (lambda xf: _tail_R(m, x_fix, xf))
            hi = max(1e3 * x_fix, 1e3 * pv)
            if args(hi) < pv:
                no_solution += 1
                continue
            lo_b, hi_b = np.log(min(pv, x_fix) * 1e-12), np.log(hi)
            for _ in range(100):
                mid = 0.5 * (lo_b + hi_b)
                if args(np.exp(mid)) < pv:
                    lo_b = mid
                else:
                    hi_b = mid
            x_free = np.exp(0.5 * (lo_b + hi_b))
            levels[row, c] = frechet_to_margin(1.0 / x_free, th_free)
    if np.all(np.isnan(levels)):
        raise ValueError("no posterior sample admits a solution")
    alpha = (1.0 - cred) / 2.0
    mean = np.nanmean(levels, axis=0)
    lo = np.nanquantile(levels, alpha, axis=0)
    hi = np.nanquantile(levels, 1.0 - alpha, axis=0)
    return ReturnLevelCurve(p=p_arr, mean=mean, lo=lo, hi=hi,
                            free_index=free, n_no_solution=no_solution)
