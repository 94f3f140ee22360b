"""Independent reference computations used to freeze expected values.

Nothing here calls the simplex solver or the certifier: LPs are solved by
brute-force vertex enumeration and the multiplier families are closed-form.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from extremal_certify.certify import MultiplierSet
from extremal_certify.linprog import EQ, GE, LE, LpProblem
from extremal_certify.model import Grid, LcProblem, MaxAffine, Polytope, PwaSum


def as_inequalities(lp: LpProblem):
    """``G z <= g`` covering rows, equalities (both ways) and finite bounds."""
    G, g = [], []
    for a, s, b in zip(lp.A, lp.senses, lp.rhs):
        if s in (LE, EQ):
            G.append(a)
            g.append(b)
        if s in (GE, EQ):
            G.append(-a)
            g.append(-b)
    eye = np.eye(lp.num_vars)
    for j in range(lp.num_vars):
        if np.isfinite(lp.upper[j]):
            G.append(eye[j])
            g.append(lp.upper[j])
        if np.isfinite(lp.lower[j]):
            G.append(-eye[j])
            g.append(-lp.lower[j])
    return np.array(G).reshape(-1, lp.num_vars), np.array(g)


def enumerate_bfs(lp: LpProblem, tol: float = 1e-9):
    """All basic feasible points of a (pointed) LP by active-set enumeration."""
    G, g = as_inequalities(lp)
    n = lp.num_vars
    pts = []
    for idx in itertools.combinations(range(G.shape[0]), n):
        sub = G[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        z = np.linalg.solve(sub, g[list(idx)])
        if np.all(G @ z <= g + tol * (1.0 + np.abs(g))):
            pts.append(z)
    return pts


def bfs_optimum(lp: LpProblem):
    """Optimal value over the basic feasible points, or ``None`` when there are none."""
    pts = enumerate_bfs(lp)
    if not pts:
        return None
    return min(float(lp.objective @ z) for z in pts)


def riding_grid_cost(N: int) -> Fraction:
    """Exact grid optimum of the riding instance: step * sum_{k<N/2} (1 - k*step)."""
    step = Fraction(2, N)
    return step * sum((1 - k * step for k in range(N // 2)), Fraction(0))


def riding_multipliers(N: int, c: float) -> MultiplierSet:
    """Normal multipliers of the riding instance at its grid optimum.

    ``lambda0 = 1``, ``p_k = c + (k - N/2 - 1) * step``, gamma = -1, atoms
    ``mu_{N/2} = c`` and ``mu_k = step`` for ``N/2 < k < N``.  With interval
    costates ``qt_k = p_{k+1} - sum_{j<=k} mu_j`` this gives ``qt <= 0`` while
    ``u = -1`` and ``qt = 0`` on the riding arc.  Valid exactly for
    ``0 <= c <= step``.
    """
    M, step = N // 2, 2.0 / N
    k = np.arange(N + 1)
    p = (c + (k - M - 1) * step)[:, None]
    mu = np.where((k > M) & (k < N), step, 0.0)
    mu[M] = c
    theta = tuple(np.array([1.0]) for _ in range(N))
    # qt_k = p_{k+1} for k < M is balanced by the normal of -u <= 1
    nu = tuple(np.array([max(-p[kk + 1, 0], 0.0)]) if kk < M else np.zeros(0) for kk in range(N))
    return MultiplierSet(p=p, lambda0=1.0, mu=mu, gamma=-np.ones((N + 1, 1)), theta=theta,
                         nu=nu, omega=np.ones(1),
                         sigma=np.array([max(p[0, 0], 0.0), max(-p[0, 0], 0.0)]))


def example_l_threshold() -> float:
    """Continuous time before which ``4|p| <= 1`` fails for ``p' = 1 - 4p, p(1) = 0``."""
    return 1.0 - math.log(2.0) / 4.0


def example_l_discrete_margin(a: float, N: int) -> float:
    """Smallest ``1 - 4|p_k|``, ``k = 1..N``, along the backward recursion of the
    discrete normal system on ``[a, 1]``: ``p_N = 0``, ``p_k = (1 + 4 step) p_{k+1} - step``.

    The LP for that interval is feasible exactly when the margin is nonnegative.
    """
    step = (1.0 - a) / N
    p = 0.0
    worst = 1.0
    for _ in range(N):
        worst = min(worst, 1.0 - 4.0 * abs(p))
        p = (1.0 + 4.0 * step) * p - step
    return worst


def random_lc_problem(rng: np.random.Generator, N: int | None = None,
                      constrained: bool = True) -> LcProblem:
    """Small random linear-convex instance with a fixed initial state."""
    n = int(rng.integers(1, 3))
    m = int(rng.integers(1, 3))
    N = N or int(rng.integers(3, 7))
    A = rng.normal(scale=0.5, size=(n, n)).round(2)
    B = rng.normal(size=(n, m)).round(2)
    terms = [MaxAffine.affine(rng.normal(size=n + m).round(2))]
    for _ in range(int(rng.integers(1, 3))):
        terms.append(MaxAffine.abs_of(rng.normal(size=n + m).round(2), rng.uniform(0.2, 1.0)))
    U = Polytope.box(-np.ones(m), np.ones(m))
    x0 = rng.uniform(-0.5, 0.5, size=n).round(2)
    E = Polytope.from_constraints(2 * n, eq=[(np.eye(2 * n)[i], float(x0[i])) for i in range(n)])
    endpoint = PwaSum([MaxAffine.affine(np.concatenate([np.zeros(n), rng.normal(size=n).round(2)]))])
    state = None
    if constrained:
        d = rng.normal(size=n).round(2)
        e = float(-(d @ x0) - rng.uniform(0.05, 0.5))
        state = (d, e)
    return LcProblem(Grid(0.0, 1.0, N), A, B, PwaSum(terms), U, E, endpoint, state)
