"""Nonparametric Pickands dependence estimation.

Multivariate madogram pilot estimator, Bernstein-Bezier projection under
shape constraints (convexity and the pointwise bounds that make a
dependence function valid), extremal coefficients, and k-medoids
clustering of sites on a madogram dissimilarity.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .qp import solve_qp

EARTH_RADIUS_KM = 6371.0088


# ---------------------------------------------------------------------------
# Bernstein basis machinery
# ---------------------------------------------------------------------------

def bern_basis_1d(t, kappa):
    """Design matrix of the univariate Bernstein basis of degree kappa."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    j = np.arange(kappa + 1)
    coef = np.array([math.comb(kappa, int(m)) for m in j], dtype=float)
    tt = t[:, None]
    return coef * np.power(tt, j) * np.power(1.0 - tt, kappa - j)


def multiindices(kappa, d):
    """Multi-indices alpha with |alpha| = kappa, lexicographic in the free coords."""
    if d == 2:
        j = np.arange(kappa + 1)
        return np.column_stack([j, kappa - j])
    if d == 3:
        out = [(i, j, kappa - i - j) for i in range(kappa + 1) for j in range(kappa + 1 - i)]
        return np.array(out, dtype=int)
    raise NotImplementedError("Bernstein machinery implemented for d in {2, 3}")


def bernstein_basis(t, alpha, kappa):
    """Single multivariate Bernstein basis value b_alpha(t, kappa).

    t holds the d-1 free simplex coordinates; alpha is a d-vector of
    nonnegative integers summing to kappa.
    """
    alpha = np.asarray(alpha, dtype=int)
    if alpha.sum() != kappa or np.any(alpha < 0):
        raise ValueError(f"invalid multi-index {alpha} for degree {kappa}")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = alpha.size
    if t.size != d - 1:
        raise ValueError("t must hold the d-1 free coordinates")
    last = 1.0 - t.sum()
    if last < -1e-12 or np.any(t < -1e-12):
        raise ValueError("t outside the simplex")
    coef = math.factorial(kappa)
    for a in alpha:
        coef //= math.factorial(int(a))
    val = float(coef)
    for j in range(d - 1):
        val *= t[j] ** alpha[j]
    val *= max(last, 0.0) ** alpha[-1]
    return val


def bern_basis_simplex(points, kappa, d):
    """Design matrix of the simplex Bernstein basis at the given points.

    points has shape (U, d-1); columns are the free coordinates.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    idx = multiindices(kappa, d)
    last = 1.0 - points.sum(axis=1)
    cols = []
    for alpha in idx:
        coef = math.factorial(kappa)
        for a in alpha:
            coef //= math.factorial(int(a))
        col = float(coef) * np.ones(points.shape[0])
        for j in range(d - 1):
            col = col * np.power(points[:, j], alpha[j])
        col = col * np.power(np.clip(last, 0.0, None), alpha[-1])
        cols.append(col)
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# Grids and the Pickands representation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimplexGrid:
    """Evaluation points in R = {t in [0,1]^(d-1): sum(t) <= 1}."""

    points: np.ndarray
    dim: int

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[1] != self.dim - 1:
            raise ValueError("points must have d-1 columns")
        if np.any(pts < -1e-12) or np.any(pts.sum(axis=1) > 1.0 + 1e-12):
            raise ValueError("grid point outside the unit simplex domain")
        object.__setattr__(self, "points", pts)

    @classmethod
    def default(cls, d, resolution=None):
        """Equispaced grid: 101 points on [0,1] for d=2, a triangular
        lattice of ~500 points for d=3. Contains vertices and barycenter."""
        if d == 2:
            n = 101 if resolution is None else resolution
            return cls(np.linspace(0.0, 1.0, n)[:, None], 2)
        if d == 3:
            m = 30 if resolution is None else resolution
            pts = [(i / m, j / m) for i in range(m + 1) for j in range(m + 1 - i)]
            return cls(np.asarray(pts), 3)
        raise NotImplementedError("grids implemented for d in {2, 3}")

    @property
    def size(self):
        return self.points.shape[0]

    def full_coords(self):
        """All d simplex coordinates, appending 1 - sum(t)."""
        last = 1.0 - self.points.sum(axis=1, keepdims=True)
        return np.hstack([self.points, np.clip(last, 0.0, None)])


@dataclass(frozen=True)
class BernsteinPickands:
    """Pickands dependence function in Bernstein-Bezier form."""

    kappa: int
    beta: np.ndarray
    dim: int = 2

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        expected = multiindices(self.kappa, self.dim).shape[0]
        if beta.size != expected:
            raise ValueError(f"beta must have {expected} entries for kappa={self.kappa}, d={self.dim}")
        object.__setattr__(self, "beta", beta)

    def __call__(self, t):
        if self.dim == 2:
            return bern_basis_1d(t, self.kappa) @ self.beta
        return bern_basis_simplex(t, self.kappa, self.dim) @ self.beta

    def deriv(self, t, order=1):
        """First or second derivative (bivariate only), from coefficient
        differences so the result is exact degree reduction."""
        if self.dim != 2:
            raise NotImplementedError("derivatives only for the bivariate form")
        b = self.beta
        if order == 1:
            d1 = self.kappa * np.diff(b)
            return bern_basis_1d(t, self.kappa - 1) @ d1
        if order == 2:
            d2 = self.kappa * (self.kappa - 1) * np.diff(b, 2)
            return bern_basis_1d(t, self.kappa - 2) @ d2
        raise ValueError("order must be 1 or 2")

    def satisfies_constraints(self, tol=1e-8, grid=None):
        """Check the validity bounds (and convexity when bivariate)."""
        grid = grid or SimplexGrid.default(self.dim)
        vals = self(grid.points if self.dim > 2 else grid.points[:, 0])
        lower = grid.full_coords().max(axis=1)
        ok = bool(np.all(vals >= lower - tol) and np.all(vals <= 1.0 + tol))
        if self.dim == 2:
            ok = ok and bool(np.all(np.diff(self.beta, 2) >= -tol))
            ok = ok and abs(self.beta[0] - 1.0) <= tol and abs(self.beta[-1] - 1.0) <= tol
        return ok


def extremal_coefficient(A: BernsteinPickands):
    """Effective number of independent maxima, d * A(1/d, ..., 1/d)."""
    d = A.dim
    bary = np.full((1, d - 1), 1.0 / d)
    val = A(bary[:, 0] if d == 2 else bary)
    return float(d * np.atleast_1d(val)[0])


# ---------------------------------------------------------------------------
# Madogram estimator
# ---------------------------------------------------------------------------

def _ecdf_matrix(data):
    data = np.asarray(data, dtype=float)
    k = data.shape[0]
    F = np.empty_like(data)
    for j in range(data.shape[1]):
        F[:, j] = stats.rankdata(data[:, j], method="average") / (k + 1.0)
    return F


def madogram_pickands(data, grid: SimplexGrid):
    """Madogram-based pilot estimate of the Pickands dependence function.

    data holds componentwise maxima (k rows, d columns); margins are
    replaced by their empirical cdfs. Coordinates with t_j = 0 use the
    convention F^(1/0) = 0 for F < 1, which makes vertices exact.
    """
    data = np.asarray(data, dtype=float)
    k, d = data.shape
    if k < 2 or d < 2:
        raise ValueError("need at least 2 rows and 2 columns")
    if grid.dim != d:
        raise ValueError("grid dimension does not match data")
    F = _ecdf_matrix(data)
    logF = np.log(F)
    T = grid.full_coords()
    out = np.empty(grid.size)
    for u in range(grid.size):
        t = T[u]
        powd = np.zeros((k, d))
        pos = t > 0
        if np.any(pos):
            powd[:, pos] = np.exp(logF[:, pos] / t[pos])
        nu = np.mean(powd.max(axis=1) - powd.mean(axis=1))
        c = np.mean(t / (1.0 + t))
        out[u] = (nu + c) / (1.0 - nu - c)
    return out


# ---------------------------------------------------------------------------
# Constrained Bernstein projection (beed)
# ---------------------------------------------------------------------------

def _project_bivariate(Ahat, tgrid, kappa):
    U = tgrid.size
    B = bern_basis_1d(tgrid, kappa)
    # beta_0 = beta_kappa = 1 eliminated; free variables are beta_1..beta_{kappa-1}
    Bf = B[:, 1:-1]
    y = Ahat - B[:, 0] - B[:, -1]
    H = 2.0 * (Bf.T @ Bf) / U
    H[np.diag_indices_from(H)] += 1e-10 * (1.0 + np.trace(H) / H.shape[0])
    c = -2.0 * (Bf.T @ y) / U

    m = kappa - 1
    rows, rhs = [], []
    # discrete convexity of the full coefficient vector
    for j in range(1, kappa):
        row = np.zeros(m)
        r = 0.0
        for off, w in ((-1, 1.0), (0, -2.0), (1, 1.0)):
            idx = j + off
            if idx in (0, kappa):
                r -= w  # fixed endpoint contributes to the rhs
            else:
                row[idx - 1] += w
        rows.append(row)
        rhs.append(r)
    # endpoint slopes |A'| <= 1, required for the lower Pickands bound
    e1 = np.zeros(m); e1[0] = 1.0
    rows.append(e1); rhs.append(1.0 - 1.0 / kappa)
    ek = np.zeros(m); ek[-1] = 1.0
    rows.append(ek); rhs.append(1.0 - 1.0 / kappa)
    # nonnegativity (slack, but cheap)
    for j in range(m):
        e = np.zeros(m); e[j] = 1.0
        rows.append(e); rhs.append(0.0)

    res = solve_qp(H, c, np.array(rows), np.array(rhs), np.ones(m))
    beta = np.concatenate([[1.0], res.x, [1.0]])
    return BernsteinPickands(kappa=kappa, beta=beta, dim=2)


def _project_trivariate(Ahat, grid, kappa):
    U = grid.size
    B = bern_basis_simplex(grid.points, kappa, 3)
    idx = multiindices(kappa, 3)
    corner = np.any(idx == kappa, axis=1)
    free = ~corner
    Bf = B[:, free]
    y = Ahat - B[:, corner].sum(axis=1)
    H = 2.0 * (Bf.T @ Bf) / U
    H[np.diag_indices_from(H)] += 1e-10 * (1.0 + np.trace(H) / H.shape[0])
    c = -2.0 * (Bf.T @ y) / U

    # pointwise lower bound rows (upper bound A <= 1 follows from the
    # coefficient box since the basis is a nonnegative partition of unity)
    lower = grid.full_coords().max(axis=1)
    rhs = lower - B[:, corner].sum(axis=1)
    keep = np.linalg.norm(Bf, axis=1) > 1e-12  # vertex rows are degenerate
    m = int(free.sum())
    G = np.vstack([Bf[keep], np.eye(m), -np.eye(m)])
    h = np.concatenate([rhs[keep], np.zeros(m), -np.ones(m)])

    res = solve_qp(H, c, G, h, np.ones(m))
    beta = np.empty(idx.shape[0])
    beta[corner] = 1.0
    beta[free] = res.x
    return BernsteinPickands(kappa=kappa, beta=beta, dim=3)


def beed_project(Ahat, grid: SimplexGrid, kappa, d=None):
    """Project a pilot Pickands estimate onto the constrained Bernstein family.

    Minimizes the mean squared deviation from Ahat on the grid subject to
    the coefficient constraints that enforce validity; the start A == 1 is
    always feasible so the program cannot fail by construction.
    """
    d = d or grid.dim
    Ahat = np.asarray(Ahat, dtype=float)
    if Ahat.size != grid.size:
        raise ValueError("Ahat length must match grid size")
    if not np.all(np.isfinite(Ahat)):
        raise ValueError("Ahat must be finite")
    if d == 2:
        if kappa < 3:
            raise ValueError("bivariate projection needs kappa >= 3")
        return _project_bivariate(Ahat, grid.points[:, 0], kappa)
    if d == 3:
        if kappa <= d:
            raise ValueError("need kappa > d")
        return _project_trivariate(Ahat, grid, kappa)
    raise NotImplementedError("projection implemented for d in {2, 3}")


def beed(data, kappa, grid: SimplexGrid | None = None):
    """Madogram pilot followed by constrained projection."""
    data = np.asarray(data, dtype=float)
    grid = grid or SimplexGrid.default(data.shape[1])
    Ahat = madogram_pickands(data, grid)
    return beed_project(Ahat, grid, kappa)


# ---------------------------------------------------------------------------
# Pairwise extremal coefficients and clustering
# ---------------------------------------------------------------------------

def great_circle_km(lon1, lat1, lon2, lat2):
    """Haversine distance in kilometers."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlam = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dphi / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(a))


def _looks_like_lonlat(coords):
    lon, lat = coords[:, 0], coords[:, 1]
    return bool(np.all(np.abs(lat) <= 90.0) and np.all((lon >= -180.0) & (lon <= 360.0)))


def _pair_eta(args):
    data, i, j, kappa, grid = args
    sub = data[:, [i, j]]
    half = SimplexGrid(np.array([[0.5]]), 2)
    eta_raw = 2.0 * madogram_pickands(sub, half)[0]
    A = beed(sub, kappa, grid)
    return i, j, eta_raw, extremal_coefficient(A)


def pairwise_extremal_coeffs(data, coords, kappa=10, geodesic=None, threads=1):
    """Raw and projected pairwise extremal coefficients against distance.

    coords has one (x, y) row per site; distances are great-circle km when
    the coordinates look like lon/lat (or geodesic=True), Euclidean
    otherwise. Returns a list of (i, j, distance, eta_raw, eta_projected).
    """
    data = np.asarray(data, dtype=float)
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0]
    if n < 2:
        raise ValueError("need at least 2 sites")
    if data.shape[1] != n:
        raise ValueError("one data column per site required")
    uniq = {tuple(np.round(c, 12)) for c in coords}
    if len(uniq) < n:
        import warnings

        warnings.warn("duplicate site coordinates present", stacklevel=2)
    use_geo = _looks_like_lonlat(coords) if geodesic is None else geodesic
    grid = SimplexGrid.default(2)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    tasks = [(data, i, j, kappa, grid) for i, j in pairs]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_pair_eta, tasks))
    else:
        results = [_pair_eta(t) for t in tasks]
    out = []
    for i, j, eta_raw, eta_proj in results:
        if use_geo:
            dist = float(great_circle_km(coords[i, 0], coords[i, 1],
                                         coords[j, 0], coords[j, 1]))
        else:
            dist = float(np.hypot(*(coords[i] - coords[j])))
        out.append((i, j, dist, float(eta_raw), float(eta_proj)))
    return out


def madogram_dissimilarity(data):
    """Pairwise bivariate madogram distances between site columns."""
    data = np.asarray(data, dtype=float)
    F = _ecdf_matrix(data)
    n = data.shape[1]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = 0.5 * np.mean(np.abs(F[:, i] - F[:, j]))
    return D


def _pam(D, K, order):
    n = D.shape[0]
    # BUILD
    medoids = [int(np.argmin(D.sum(axis=0)))]
    while len(medoids) < K:
        best_gain, best = -np.inf, None
        current = D[:, medoids].min(axis=1)
        for cand in order:
            if cand in medoids:
                continue
            gain = np.sum(np.clip(current - D[:, cand], 0.0, None))
            if gain > best_gain:
                best_gain, best = gain, int(cand)
        medoids.append(best)
    # SWAP
    improved = True
    while improved:
        improved = False
        cost = D[:, medoids].min(axis=1).sum()
        best_delta, best_swap = -1e-12, None
        for mi, m in enumerate(medoids):
            others = [x for k, x in enumerate(medoids) if k != mi]
            for cand in order:
                if cand in medoids:
                    continue
                trial = others + [int(cand)]
                new_cost = D[:, trial].min(axis=1).sum()
                if cost - new_cost > best_delta:
                    best_delta, best_swap = cost - new_cost, (mi, int(cand))
        if best_swap is not None:
            medoids[best_swap[0]] = best_swap[1]
            improved = True
    medoids = sorted(medoids)
    labels = np.argmin(D[:, medoids], axis=1)
    return labels, np.asarray(medoids, dtype=int)


def pam_cluster_madogram(data, K, seed=0):
    """k-medoids (PAM BUILD+SWAP) on the madogram dissimilarity.

    Deterministic for a given seed; the seed fixes the candidate scan
    order used to break exact ties.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[1]
    if not 2 <= K <= n:
        raise ValueError(f"K must be in [2, {n}]")
    D = madogram_dissimilarity(data)
    order = np.random.default_rng(seed).permutation(n)
    return _pam(D, K, order)
