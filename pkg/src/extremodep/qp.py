"""Dense primal active-set solver for small convex quadratic programs.

Solves  min_x  0.5 x'Hx + c'x   subject to  Gx >= h,
given a feasible starting point. Intended for shape-constrained
least-squares problems with a few dozen variables and up to a few
hundred inequality rows; everything is solved with dense linear algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class QpResult:
    x: np.ndarray
    active: np.ndarray
    n_iter: int
    kkt_residual: float


class QpError(RuntimeError):
    pass


def _kkt_step(H, g, G_active):
    """Direction/multipliers for the equality-constrained subproblem.

    Stationarity for constraints Gx >= h is H p + g - G_W' lambda = 0 with
    lambda >= 0 at optimality, hence the -G_W' block.
    """
    n = H.shape[0]
    k = G_active.shape[0]
    KKT = np.zeros((n + k, n + k))
    KKT[:n, :n] = H
    if k:
        KKT[:n, n:] = -G_active.T
        KKT[n:, :n] = G_active
    rhs = np.concatenate([-g, np.zeros(k)])
    try:
        sol = np.linalg.solve(KKT, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
    return sol[:n], sol[n:]


def solve_qp(H, c, G, h, x0, tol=1e-10, max_iter=2000):
    """Minimize 0.5 x'Hx + c'x over {x: Gx >= h} starting from feasible x0.

    H must be symmetric positive semidefinite (add a small ridge upstream
    if it is rank deficient). Raises QpError on an infeasible start or a
    failure to converge within max_iter working-set changes.
    """
    H = np.asarray(H, dtype=float)
    c = np.asarray(c, dtype=float)
    x = np.array(x0, dtype=float)
    n = x.size
    if G is None or len(G) == 0:
        G = np.zeros((0, n))
        h = np.zeros(0)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)

    slack = G @ x - h if G.size else np.zeros(0)
    if slack.size and slack.min() < -1e-8:
        raise QpError(f"infeasible starting point (min slack {slack.min():.3e})")
    # greedy linearly independent subset of the rows active at the start,
    # so the first KKT systems stay nonsingular even for redundant geometry
    in_working = np.zeros(G.shape[0], dtype=bool)
    working: list[int] = []
    basis = np.zeros((0, n))
    for i in np.nonzero(slack <= 1e-12)[0] if slack.size else []:
        if len(working) >= n:
            break
        trial = np.vstack([basis, G[i]])
        if np.linalg.matrix_rank(trial, tol=1e-10) > basis.shape[0]:
            basis = trial
            working.append(int(i))
            in_working[i] = True

    for it in range(1, max_iter + 1):
        g = H @ x + c
        GW = G[working] if working else np.zeros((0, n))
        p, lam = _kkt_step(H, g, GW)

        if np.linalg.norm(p, ord=np.inf) <= tol * (1.0 + np.linalg.norm(x, ord=np.inf)):
            if not working or lam.min() >= -tol:
                resid = g - (GW.T @ lam) if working else g
                return QpResult(
                    x=x,
                    active=np.asarray(sorted(working), dtype=int),
                    n_iter=it,
                    kkt_residual=float(np.linalg.norm(resid, ord=np.inf)),
                )
            drop = working.pop(int(np.argmin(lam)))
            in_working[drop] = False
            continue

        # longest step along p that keeps all non-working rows feasible
        alpha = 1.0
        blocking = -1
        if G.size:
            gp = G @ p
            cand = (~in_working) & (gp < -tol)
            if np.any(cand):
                steps = (h[cand] - G[cand] @ x) / gp[cand]
                k = int(np.argmin(steps))
                if steps[k] < alpha:
                    alpha = max(float(steps[k]), 0.0)
                    blocking = int(np.nonzero(cand)[0][k])
        x = x + alpha * p
        if blocking >= 0:
            working.append(blocking)
            in_working[blocking] = True

    raise QpError(f"active-set solver did not converge in {max_iter} iterations")
