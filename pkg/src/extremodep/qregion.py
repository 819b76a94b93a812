"""Extreme bivariate quantile regions from posterior samples.

The angular basic density inverse q*, the basic set S (the unbounded
level set of the limiting joint density, whose boundary sits at radius
1/q*(w) in pseudo-polar coordinates), its exponent-measure size xi(S),
and the data-scale region obtained by rescaling S with the marginal GEV
parameters of each posterior sample.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .gev import GevParams
from .npbayes import PosteriorChain, h_density
from .tailprob import _gl_nodes

DEFAULT_WGRID = np.linspace(0.005, 0.995, 100)


def q_star(w, gamma, h):
    """Inverse of the angular basic density,
    (2 w^(1-g1) (1-w)^(1-g2) h(w) / (g1 g2))^(-1/(1+g1+g2)).

    Requires heavy-tailed margins (both shape parameters positive);
    returns +inf where the angular density vanishes.
    """
    g1, g2 = float(gamma[0]), float(gamma[1])
    if g1 <= 0 or g2 <= 0:
        raise ValueError("q_star needs positive marginal shape parameters")
    w = np.atleast_1d(np.asarray(w, dtype=float))
    hv = np.atleast_1d(h(w) if callable(h) else np.asarray(h, dtype=float))
    if np.any(hv < 0):
        raise ValueError("angular density must be nonnegative")
    base = 2.0 / (g1 * g2) * np.power(w, 1.0 - g1) * np.power(1.0 - w, 1.0 - g2) * hv
    out = np.where(base > 0, np.power(np.where(base > 0, base, 1.0),
                                      -1.0 / (1.0 + g1 + g2)), np.inf)
    return out if out.size > 1 else float(out[0])


def xi_S(gamma, h, nodes=512):
    """Size of the basic set, 2 * int q_star(w) h(w) dw by Gauss-Legendre."""
    w, wt = _gl_nodes(nodes)
    hv = np.atleast_1d(h(w) if callable(h) else np.asarray(h, dtype=float))
    qs = q_star(w, gamma, hv)
    integrand = np.where(hv > 0, qs * hv, 0.0)
    val = 2.0 * float(np.sum(wt * integrand))
    if not np.isfinite(val) or val <= 0:
        raise ValueError("xi(S) quadrature failed (non-integrable density?)")
    return val


@dataclass(frozen=True)
class BasicSet:
    """Boundary polyline of S in pseudo-polar form (radius 1/q*)."""

    boundary: np.ndarray  # (n, 2)
    xi_s: float

    def __post_init__(self):
        if self.xi_s <= 0:
            raise ValueError("xi_s must be positive")


def basic_set(gamma, h, wgrid=None):
    wgrid = DEFAULT_WGRID if wgrid is None else np.asarray(wgrid, dtype=float)
    qs = np.atleast_1d(q_star(wgrid, gamma, h))
    radius = np.where(np.isfinite(qs), 1.0 / qs, 0.0)
    boundary = np.column_stack([radius * wgrid, radius * (1.0 - wgrid)])
    return BasicSet(boundary=boundary, xi_s=xi_S(gamma, h))


def _region_boundary(theta1: GevParams, theta2: GevParams, s_boundary, xi_s, p, k, N):
    """Data-scale image of the basic-set boundary under the rescaling map."""
    scale = k * xi_s / (N * p)
    out = np.empty_like(s_boundary)
    for j, th in enumerate((theta1, theta2)):
        xj = scale * s_boundary[:, j]
        out[:, j] = th.mu + th.sigma * (np.power(xj, th.gamma) - 1.0) / th.gamma
    return out


@dataclass
class QuantileRegion:
    """Aggregated boundary polylines of an estimated extreme region."""

    p: float
    boundary_lo: np.ndarray
    boundary_mean: np.ndarray
    boundary_hi: np.ndarray


@dataclass
class QuantileRegionResult:
    wgrid: np.ndarray
    ghat: np.ndarray            # (3, n): 5% quantile, mean, 95% quantile of q*
    Shat: list                  # three (n, 2) basic-set boundaries from ghat rows
    nuShat: np.ndarray          # (3,) summary of xi(S)
    nuShat_post: np.ndarray
    regions: dict               # p -> QuantileRegion
    k: int
    N: int
    n_skipped: int
    mean_margins: tuple
    mean_xi_s: float

    def membership(self, y, p):
        """Membership of data-scale points in the posterior-mean region.

        Uses the posterior-mean margins, mean xi(S) and the mean q* curve:
        a point belongs to the region when its pseudo-polar radius on the
        rescaled Frechet-type scale reaches the basic-set boundary 1/q*.
        """
        y = np.atleast_2d(np.asarray(y, dtype=float))
        th1, th2 = self.mean_margins
        scale = self.k * self.mean_xi_s / (self.N * p)
        x = np.empty_like(y)
        for j, th in enumerate((th1, th2)):
            t = th.standardized(y[:, j])
            x[:, j] = np.where(t > 0, np.power(np.clip(t, 1e-300, None),
                                               1.0 / th.gamma), 0.0) / scale
        r = x.sum(axis=1)
        ok = r > 0
        w = np.where(ok, x[:, 0] / np.where(ok, r, 1.0), 0.5)
        qbar = np.interp(w, self.wgrid, self.ghat[1])
        thresh = np.where(np.isfinite(qbar) & (qbar > 0), 1.0 / qbar, np.inf)
        return ok & (r >= thresh)


def quantile_region(chain: PosteriorChain, burn, p, k, N, thin=1, wgrid=None,
                    cred=0.90):
    """Posterior 5%/mean/95% summaries of q*, S, xi(S) and the extreme
    quantile regions for each target probability.

    Per posterior sample the angular density (continuous part only), q*,
    xi(S) and the rescaled region boundary are computed; samples with a
    nonpositive marginal shape are skipped and counted. Atom mass above
    0.1 triggers a warning since the region construction ignores it.
    """
    p_list = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((p_list <= 0) | (p_list >= 1)):
        raise ValueError("p must lie in (0, 1)")
    if not 0 < k < N:
        raise ValueError("need 0 < k < N")
    wgrid = DEFAULT_WGRID if wgrid is None else np.asarray(wgrid, dtype=float)
    idx = chain.post_burn(burn, thin)
    qq = (1.0 - cred) / 2.0

    qstars, xis, used = [], [], []
    boundaries = {pv: [] for pv in p_list}
    atom_warned = False
    skipped = 0
    for i in idx:
        g1, g2 = chain.th1[i, 2], chain.th2[i, 2]
        if g1 <= 0 or g2 <= 0:
            skipped += 1
            continue
        m = chain.angular(i)
        if m.p0 + m.p1 > 0.1 and not atom_warned:
            warnings.warn("angular atoms carry more than 0.1 mass; the region "
                          "construction uses the continuous part only", stacklevel=2)
            atom_warned = True
        h = lambda w, mm=m: h_density(w, mm)
        gamma = (g1, g2)
        qs = np.atleast_1d(q_star(wgrid, gamma, h))
        xi = xi_S(gamma, h)
        radius = np.where(np.isfinite(qs), 1.0 / qs, 0.0)
        s_boundary = np.column_stack([radius * wgrid, radius * (1.0 - wgrid)])
        th1 = GevParams(*chain.th1[i])
        th2 = GevParams(*chain.th2[i])
        for pv in p_list:
            boundaries[pv].append(_region_boundary(th1, th2, s_boundary, xi, pv, k, N))
        qstars.append(qs)
        xis.append(xi)
        used.append(i)
    if not used:
        raise ValueError("no usable posterior samples (all shapes nonpositive)")
    if skipped > 0.05 * idx.size:
        warnings.warn(f"{skipped}/{idx.size} posterior samples skipped "
                      "(nonpositive shape)", stacklevel=2)

    qmat = np.vstack(qstars)
    finite = np.where(np.isfinite(qmat), qmat, np.nan)
    ghat = np.vstack([np.nanquantile(finite, qq, axis=0),
                      np.nanmean(finite, axis=0),
                      np.nanquantile(finite, 1.0 - qq, axis=0)])
    Shat = []
    for row in ghat:
        radius = np.where(np.isfinite(row) & (row > 0), 1.0 / row, 0.0)
        Shat.append(np.column_stack([radius * wgrid, radius * (1.0 - wgrid)]))
    xis = np.asarray(xis)
    nuShat = np.array([np.quantile(xis, qq), xis.mean(), np.quantile(xis, 1.0 - qq)])

    regions = {}
    for pv in p_list:
        stack = np.stack(boundaries[pv])  # (M, n, 2)
        regions[float(pv)] = QuantileRegion(
            p=float(pv),
            boundary_lo=np.quantile(stack, qq, axis=0),
            boundary_mean=stack.mean(axis=0),
            boundary_hi=np.quantile(stack, 1.0 - qq, axis=0),
        )

    used = np.asarray(used)
    mean_margins = (GevParams(*chain.th1[used].mean(axis=0)),
                    GevParams(*chain.th2[used].mean(axis=0)))
    return QuantileRegionResult(wgrid=wgrid, ghat=ghat, Shat=Shat, nuShat=nuShat,
                                nuShat_post=xis, regions=regions, k=int(k), N=int(N),
                                n_skipped=skipped, mean_margins=mean_margins,
                                mean_xi_s=float(xis.mean()))
