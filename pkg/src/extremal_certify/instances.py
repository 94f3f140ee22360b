"""Built-in problem instances."""
from __future__ import annotations

import itertools

import numpy as np

from . import subdiff
from .model import (ControlProblem, ExtremalDataTable, Grid, LcProblem, MaxAffine,
                    Polytope, Process, PwaSum)


def riding_constraint(N: int = 64) -> LcProblem:
    """Minimize the integral of x on [0, 2] with x' = u, |u| <= 1, x(0) = 1, x >= 0.

    The optimum drives x to zero at t = 1 and rides the constraint after.
    """
    grid = Grid(0.0, 2.0, N)
    return LcProblem(
        grid, A=[[0.0]], B=[[1.0]],
        running_cost=PwaSum([MaxAffine.affine([1.0, 0.0])]),
        control_set=Polytope.box([-1.0], [1.0]),
        endpoint_set=Polytope.from_constraints(2, eq=[([1.0, 0.0], 1.0)]),
        state_constraint=([-1.0], 0.0),
    )


def riding_optimum(N: int) -> Process:
    """Closed-form grid optimum of :func:`riding_constraint` (``N`` even)."""
    if N % 2:
        raise ValueError("closed-form riding optimum needs an even N")
    half = N // 2
    step = 2.0 / N
    k = np.arange(N + 1)
    x = np.maximum(1.0 - k * step, 0.0)
    x[half:] = 0.0
    u = np.where(np.arange(N) < half, -1.0, 0.0)
    return Process(x[:, None], u[:, None])


def bang(N: int = 32) -> LcProblem:
    """Minimize x(1) with x' = u, |u| <= 1, x(0) = 0."""
    return LcProblem(
        Grid(0.0, 1.0, N), A=[[0.0]], B=[[1.0]],
        running_cost=PwaSum((), 2),
        control_set=Polytope.box([-1.0], [1.0]),
        endpoint_set=Polytope.from_constraints(2, eq=[([1.0, 0.0], 0.0)]),
        endpoint_cost=PwaSum([MaxAffine.affine([0.0, 1.0])]),
    )


def bang_optimum(N: int) -> Process:
    x = 0.0 - np.arange(N + 1) / N
    return Process(x[:, None], -np.ones((N, 1)))


def unreachable_endpoint(N: int = 16) -> LcProblem:
    """x' = u, |u| <= 1 on [0, 1] with x(0) = 0 and x(1) = 10: no admissible process."""
    return LcProblem(
        Grid(0.0, 1.0, N), A=[[0.0]], B=[[1.0]],
        running_cost=PwaSum((), 2),
        control_set=Polytope.box([-1.0], [1.0]),
        endpoint_set=Polytope.from_constraints(2, eq=[([1.0, 0.0], 0.0), ([0.0, 1.0], 10.0)]),
    )


class ExampleL(ControlProblem):
    """Minimize the integral of ``w1|x-u1| + w2|x-u2| + x`` subject to
    ``x' = 4 w1 u1 + 4 w2 u2``, ``x >= -1``, ``u1, u2 in [-1, 1]``,
    ``(w1, w2)`` in the unit simplex, ``x(0) = 0``; free ``x(b)``.

    Controls are ordered ``(u1, u2, w1, w2)``.  The dynamics are bilinear in
    the controls, so the extremal data table is derived by hand instead of
    compiled.
    """

    n = 1
    m = 4

    def __init__(self, grid: Grid | None = None):
        self.grid = grid if grid is not None else Grid(0.0, 1.0, 200)
        e = np.eye(4)
        self.U = Polytope.from_constraints(
            4,
            le=[(e[0], 1.0), (-e[0], 1.0), (e[1], 1.0), (-e[1], 1.0), (-e[2], 0.0), (-e[3], 0.0)],
            eq=[([0.0, 0.0, 1.0, 1.0], 1.0)],
        )
        self.E = Polytope.from_constraints(2, eq=[([1.0, 0.0], 0.0)])

    def dynamics(self, k, x, u):
        u1, u2, w1, w2 = np.ravel(u)
        return np.array([4.0 * (w1 * u1 + w2 * u2)])

    def running_cost(self, k, x, u):
        x = float(np.ravel(x)[0])
        u1, u2, w1, w2 = np.ravel(u)
        return float(w1 * abs(x - u1) + w2 * abs(x - u2) + x)

    def endpoint_cost(self, xa, xb):
        return 0.0

    def constraint_data(self, k):
        return np.array([-1.0]), -1.0

    def control_violation(self, k, u):
        return self.U.violation(u)

    def endpoint_violation(self, xa, xb):
        return self.E.violation(np.concatenate([np.ravel(xa), np.ravel(xb)]))

    def structure_issues(self) -> list[str]:
        return ["dynamics 4*w1*u1 + 4*w2*u2 are bilinear in the controls, "
                "so the problem is not linear-convex"]

    def zero_candidate(self) -> Process:
        N = self.grid.N
        u = np.tile([0.0, 0.0, 1.0, 0.0], (N, 1))
        return Process(np.zeros((N + 1, 1)), u)

    def improving_process(self, alpha: float) -> Process:
        """``(x, u1, u2, w1, w2) = (-4 alpha t, -alpha, 0, 1, 0)``."""
        t = self.grid.nodes - self.grid.a
        u = np.tile([-alpha, 0.0, 1.0, 0.0], (self.grid.N, 1))
        return Process((-4.0 * alpha * t)[:, None], u)

    @staticmethod
    def _kink_term(x, u, w, j, tol):
        """Clarke gradients of ``w |x - u|`` in ``(x, u1, u2, w1, w2)`` for pair ``j``."""
        gap = x - u
        out = []
        signs = (1.0, -1.0) if abs(gap) <= tol else (float(np.sign(gap)),)
        for s in signs:
            g = np.zeros(5)
            g[0] = w * s
            g[1 + j] = -w * s
            g[3 + j] = abs(gap)
            out.append(g)
        return np.array(out)

    def extremal_table(self, candidate: Process, gamma_mode: str = "sharp",
                       tol: float = 1e-9) -> ExtremalDataTable:
        candidate.check_dims(self)
        N = self.grid.N
        verts = self.U.vertices()
        Fx = np.zeros((N, 1, 1))
        Fu = np.zeros((N, 1, 4))
        lsub_x, lsub_u, ncone, ws_f, ws_L = [], [], [], [], []
        for k in range(N):
            x = float(candidate.x[k, 0])
            u1, u2, w1, w2 = candidate.u[k]
            Fu[k, 0] = [4.0 * w1, 4.0 * w2, 4.0 * u1, 4.0 * u2]
            t1 = self._kink_term(x, u1, w1, 0, tol)
            t2 = self._kink_term(x, u2, w2, 1, tol)
            lin = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
            gens = np.array([a + b + lin for a, b in itertools.product(t1, t2)])
            gens = subdiff.unique_rows(gens)
            lsub_x.append(gens[:, :1])
            lsub_u.append(gens[:, 1:])
            ncone.append(subdiff.normal_cone(self.U, candidate.u[k], 1e-9).points)
            samples = np.vstack([candidate.u[k][None, :], verts])
            ws_f.append(np.array([self.dynamics(k, x, s) for s in samples]))
            ws_L.append(np.array([self.running_cost(k, x, s) for s in samples]))
        h = np.array([self.constraint(k, candidate.x[k]) for k in range(N + 1)])
        gamma = tuple(subdiff.state_subdiff(self, k, candidate.x[k], gamma_mode).points
                      for k in range(N + 1))
        ends = np.array([candidate.x[0, 0], candidate.x[N, 0]])
        return ExtremalDataTable(
            grid=self.grid, n=1, m=4, Fx=Fx, Fu=Fu,
            lsub_x=tuple(lsub_x), lsub_u=tuple(lsub_u), ncone=tuple(ncone),
            h=h, h_offset=np.full(N + 1, -1.0), gamma=gamma,
            ws_f=tuple(ws_f), ws_L=tuple(ws_L),
            endpoint_lsub=np.zeros((1, 2)),
            endpoint_ncone=subdiff.normal_cone(self.E, ends, 1e-9).points,
            label="Example (L), hand-derived table",
        )
