"""Problem data, candidate processes and the per-node extremal data table.

Everything lives on a uniform grid ``t_k = a + k*step``, ``k = 0..N``.
States are sampled at all ``N + 1`` nodes, controls on the ``N`` intervals
(left value held constant), and the cost integral is the matching left
Riemann sum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import subdiff
from .linprog import LE, LpProblem, Optimal, solve_lp


class ProblemClassError(ValueError):
    """The problem is outside the linear-convex class or inconsistent."""


class InadmissibleCandidate(ValueError):
    def __init__(self, report: "AdmissibilityReport"):
        super().__init__(
            f"candidate is not admissible (worst violation {report.max_violation:.3g} "
            f"> tol {report.tol:.3g})")
        self.report = report


@dataclass(frozen=True)
class Grid:
    a: float
    b: float
    N: int

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError(f"grid needs b > a, got [{self.a}, {self.b}]")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"grid needs an integer N >= 2, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def step(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def nodes(self) -> np.ndarray:
        return self.a + self.step * np.arange(self.N + 1)


class MaxAffine:
    """``z -> max_i (g_i . z + c_i)``."""

    def __init__(self, gradients, offsets):
        g = np.atleast_2d(np.asarray(gradients, dtype=float))
        c = np.atleast_1d(np.asarray(offsets, dtype=float)).ravel()
        if g.shape[0] == 0 or g.shape[0] != c.size:
            raise ValueError("a max-affine function needs one offset per (nonempty) piece")
        self.gradients = g
        self.offsets = c

    @classmethod
    def affine(cls, gradient, offset=0.0) -> "MaxAffine":
        return cls([gradient], [offset])

    @classmethod
    def abs_of(cls, direction, scale=1.0) -> "MaxAffine":
        """``scale * |direction . z|``."""
        v = scale * np.asarray(direction, dtype=float)
        return cls([v, -v], [0.0, 0.0])

    @property
    def dim(self) -> int:
        return self.gradients.shape[1]

    def piece_values(self, z) -> np.ndarray:
        return self.gradients @ np.asarray(z, dtype=float).ravel() + self.offsets

    def __call__(self, z) -> float:
        return float(self.piece_values(z).max())

    def __repr__(self):
        return f"MaxAffine({self.gradients.shape[0]} pieces, dim={self.dim})"


class PwaSum:
    """Sum of max-affine terms over a common argument."""

    def __init__(self, terms: Sequence[MaxAffine] = (), dim: int | None = None):
        terms = tuple(terms)
        dims = {t.dim for t in terms}
        if len(dims) > 1:
            raise ValueError(f"terms disagree on argument dimension: {sorted(dims)}")
        if dim is None:
            if not terms:
                raise ValueError("an empty PwaSum needs an explicit dim")
            dim = dims.pop()
        elif dims and dims.pop() != dim:
            raise ValueError("terms do not match the declared dimension")
        self.terms = terms
        self.dim = int(dim)

    def __call__(self, z) -> float:
        return float(sum(t(z) for t in self.terms))

    def plus(self, term: MaxAffine) -> "PwaSum":
        return PwaSum(self.terms + (term,), self.dim)

    def __repr__(self):
        return f"PwaSum({len(self.terms)} terms, dim={self.dim})"


class Polytope:
    """``{z : C z <= d}`` with lazily enumerated vertices."""

    def __init__(self, C, d, vertices=None):
        C = np.atleast_2d(np.asarray(C, dtype=float))
        d = np.atleast_1d(np.asarray(d, dtype=float)).ravel()
        if C.shape[0] != d.size:
            raise ValueError("polytope needs one right-hand side per row")
        self.C = C
        self.d = d
        self._vertices = None if vertices is None else np.atleast_2d(np.asarray(vertices, float))

    @classmethod
    def box(cls, lower, upper) -> "Polytope":
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        m = lo.size
        eye = np.eye(m)
        return cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @classmethod
    def from_constraints(cls, dim: int, le=(), eq=()) -> "Polytope":
        """Rows ``(a, b)`` meaning ``a.z <= b`` and equalities ``a.z == b``."""
        rows, rhs = [], []
        for a, b in le:
            rows.append(np.asarray(a, float))
            rhs.append(b)
        for a, b in eq:
            rows.append(np.asarray(a, float))
            rhs.append(b)
            rows.append(0.0 - np.asarray(a, float))
            rhs.append(0.0 - b)
        if not rows:
            return cls(np.zeros((0, dim)), np.zeros(0))
        return cls(np.array(rows), np.array(rhs, dtype=float))

    @property
    def dim(self) -> int:
        return self.C.shape[1]

    def violation(self, z) -> float:
        if self.C.shape[0] == 0:
            return 0.0
        return float(np.max(np.maximum(self.C @ np.asarray(z, float).ravel() - self.d, 0.0)))

    def contains(self, z, tol: float = 1e-9) -> bool:
        return self.violation(z) <= tol

    def vertices(self) -> np.ndarray:
        if self._vertices is None:
            self._vertices = subdiff.polytope_vertices(self.C, self.d)
        return self._vertices

    def is_nonempty(self) -> bool:
        lp = LpProblem(np.zeros(self.dim), self.C, [LE] * self.C.shape[0], self.d)
        return isinstance(solve_lp(lp), Optimal)

    def same_as(self, other: "Polytope") -> bool:
        return (self.C.shape == other.C.shape and np.array_equal(self.C, other.C)
                and np.array_equal(self.d, other.d))


@dataclass(frozen=True, eq=False)
class Process:
    """States ``x`` of shape ``(N+1, n)`` and controls ``u`` of shape ``(N, m)``."""

    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if u.ndim == 1:
            u = u[:, None]
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)

    def check_dims(self, problem: "ControlProblem"):
        N = problem.grid.N
        if self.x.shape != (N + 1, problem.n) or self.u.shape != (N, problem.m):
            raise ValueError(
                f"process shapes x{self.x.shape}, u{self.u.shape} do not match "
                f"x({N + 1}, {problem.n}), u({N}, {problem.m})")


class ControlProblem:
    """Pointwise data interface shared by every problem the engine handles."""

    grid: Grid
    n: int
    m: int
    is_linear_convex = False

    def dynamics(self, k: int, x, u) -> np.ndarray:
        raise NotImplementedError

    def running_cost(self, k: int, x, u) -> float:
        raise NotImplementedError

    def endpoint_cost(self, xa, xb) -> float:
        raise NotImplementedError

    def constraint_data(self, k: int) -> tuple[np.ndarray, float]:
        """``(d_k, e_k)`` with ``h(t_k, x) = d_k . x + e_k``."""
        raise NotImplementedError

    def constraint(self, k: int, x) -> float:
        d, e = self.constraint_data(k)
        return float(np.dot(d, x) + e)

    def control_violation(self, k: int, u) -> float:
        raise NotImplementedError

    def endpoint_violation(self, xa, xb) -> float:
        raise NotImplementedError

    def structure_issues(self) -> list[str]:
        return ["problem is not a linear-convex (LC) instance"]


def _per_node(value, count: int, shape: tuple, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape == shape:
        return np.broadcast_to(arr, (count,) + shape).copy()
    if arr.shape == (count,) + shape:
        return arr.copy()
    raise ProblemClassError(f"{name} has shape {arr.shape}; expected {shape} or {(count,) + shape}")


def _per_node_objects(value, count: int, kind, name: str) -> tuple:
    if isinstance(value, kind):
        return (value,) * count
    value = tuple(value)
    if len(value) != count:
        raise ProblemClassError(f"{name}: expected {count} per-node entries, got {len(value)}")
    return value


class LcProblem(ControlProblem):
    """Linear dynamics, piecewise-affine convex costs, one affine state
    constraint, polytopic control and endpoint sets.

    Per-node data may be passed once (time-invariant) or per node.  The state
    constraint is ``d_k . x + e_k <= 0`` at nodes ``0..N``; omitting it stores
    ``d = 0, e = -1`` (vacuous).  Weierstrass samples default to the vertices
    of each control set.
    """

    is_linear_convex = True

    def __init__(self, grid: Grid, A, B, running_cost, control_set, endpoint_set,
                 endpoint_cost: PwaSum | None = None, state_constraint=None,
                 weierstrass_samples=None):
        self.grid = grid
        N = grid.N
        A0 = np.asarray(A, dtype=float)
        B0 = np.asarray(B, dtype=float)
        n = A0.shape[-1]
        m = B0.shape[-1]
        self.n, self.m = n, m
        self.A = _per_node(A0, N, (n, n), "A")
        self.B = _per_node(B0, N, (n, m), "B")
        if state_constraint is None:
            d, e = np.zeros(n), -1.0
        else:
            d, e = state_constraint
        self.D = _per_node(d, N + 1, (n,), "state constraint d")
        self.E = _per_node(e, N + 1, (), "state constraint e")
        self.running = _per_node_objects(running_cost, N, PwaSum, "running cost")
        self.controls = _per_node_objects(control_set, N, Polytope, "control set")
        self.endpoint_set = endpoint_set
        self.endpoint = endpoint_cost if endpoint_cost is not None else PwaSum((), 2 * n)
        if weierstrass_samples is None:
            self.samples = tuple(U.vertices() for U in self.controls)
        elif isinstance(weierstrass_samples, np.ndarray) or (
                len(weierstrass_samples) and np.ndim(weierstrass_samples[0]) == 1):
            s = np.atleast_2d(np.asarray(weierstrass_samples, dtype=float))
            self.samples = (s,) * N
        else:
            self.samples = tuple(np.atleast_2d(np.asarray(s, dtype=float))
                                 for s in _per_node_objects(weierstrass_samples, N, np.ndarray,
                                                            "weierstrass samples"))
        issues = self.structure_issues()
        if issues:
            raise ProblemClassError("; ".join(issues))

    # -- pointwise interface -------------------------------------------------
    def dynamics(self, k, x, u):
        return self.A[k] @ np.asarray(x, float) + self.B[k] @ np.asarray(u, float)

    def running_cost(self, k, x, u):
        return self.running[k](np.concatenate([np.ravel(x), np.ravel(u)]))

    def endpoint_cost(self, xa, xb):
        return self.endpoint(np.concatenate([np.ravel(xa), np.ravel(xb)]))

    def constraint_data(self, k):
        return self.D[k], float(self.E[k])

    def control_violation(self, k, u):
        return self.controls[k].violation(u)

    def endpoint_violation(self, xa, xb):
        return self.endpoint_set.violation(np.concatenate([np.ravel(xa), np.ravel(xb)]))

    @property
    def has_state_constraint(self) -> bool:
        return bool(np.any(self.D != 0.0) or np.any(self.E > 0.0))

    # -- validation ----------------------------------------------------------
    def structure_issues(self) -> list[str]:
        n, m, N = self.n, self.m, self.grid.N
        issues = []
        for k in range(N):
            if self.running[k].dim != n + m:
                issues.append(f"running cost at node {k} has dim {self.running[k].dim} != {n + m}")
                break
        if self.endpoint.dim != 2 * n:
            issues.append(f"endpoint cost has dim {self.endpoint.dim} != {2 * n}")
        if self.endpoint_set.dim != 2 * n:
            issues.append(f"endpoint set has dim {self.endpoint_set.dim} != {2 * n}")
        seen: dict[int, bool] = {}
        for k, U in enumerate(self.controls):
            if U.dim != m:
                issues.append(f"control set at node {k} has dim {U.dim} != {m}")
                break
            key = id(U)
            if key in seen:
                continue
            seen[key] = True
            if not U.is_nonempty():
                issues.append(f"control set at node {k} is empty")
        for k in range(N):
            S = self.samples[k]
            if S.shape[1] != m:
                issues.append(f"weierstrass samples at node {k} have dim {S.shape[1]} != {m}")
                break
            U = self.controls[k]
            bad = [i for i, s in enumerate(S) if not U.contains(s, 1e-9 * (1 + np.abs(U.d).max(initial=0)))]
            if bad:
                issues.append(f"weierstrass sample {bad[0]} at node {k} lies outside U")
                break
            V = U.vertices()
            missing = [v for v in V if not np.any(np.all(np.abs(S - v) <= 1e-9, axis=1))]
            if missing:
                issues.append(f"weierstrass samples at node {k} miss vertex {missing[0].tolist()}")
                break
        if not self.endpoint_set.is_nonempty():
            issues.append("endpoint set is empty")
        return issues

    def is_time_invariant(self) -> bool:
        return (np.all(self.A == self.A[0]) and np.all(self.B == self.B[0])
                and np.all(self.D == self.D[0]) and np.all(self.E == self.E[0])
                and all(r is self.running[0] for r in self.running)
                and all(U is self.controls[0] for U in self.controls)
                and all(np.array_equal(s, self.samples[0]) for s in self.samples))

    def regrid(self, N: int) -> "LcProblem":
        """Same time-invariant problem on a grid with ``N`` intervals."""
        if not self.is_time_invariant():
            raise ProblemClassError("only time-invariant problems can be regridded")
        state = (self.D[0], float(self.E[0])) if self.has_state_constraint else None
        return LcProblem(Grid(self.grid.a, self.grid.b, N), self.A[0], self.B[0],
                         self.running[0], self.controls[0], self.endpoint_set,
                         self.endpoint, state, self.samples[0])


@dataclass(frozen=True, eq=False)
class ExtremalDataTable:
    """Per-node data at a fixed candidate.

    Node arrays are indexed ``k = 0..N-1`` (intervals) except ``h``,
    ``h_offset`` and ``gamma`` which cover all ``N + 1`` nodes.

    ``Fx[k]`` (n x n) and ``Fu[k]`` (n x m) give ``d_x <q, f> = Fx^T q`` and
    ``d_u <q, f> = Fu^T q``.  ``lsub_x[k]``/``lsub_u[k]`` are the x- and
    u-parts of the generators of the joint running-cost subdifferential,
    ``ncone[k]`` the normal-cone generators of ``U_k`` at the candidate
    control.  ``ws_f[k]``/``ws_L[k]`` hold ``(f, L)`` at each sampled control
    with row 0 being the candidate's own pair.  ``endpoint_lsub`` and
    ``endpoint_ncone`` live in ``R^{2n}`` over ``(x_a, x_b)``.
    """

    grid: Grid
    n: int
    m: int
    Fx: np.ndarray
    Fu: np.ndarray
    lsub_x: tuple
    lsub_u: tuple
    ncone: tuple
    h: np.ndarray
    h_offset: np.ndarray
    gamma: tuple
    ws_f: tuple
    ws_L: tuple
    endpoint_lsub: np.ndarray
    endpoint_ncone: np.ndarray
    label: str = ""

    def __post_init__(self):
        N, n, m = self.grid.N, self.n, self.m
        problems = []
        if self.Fx.shape != (N, n, n):
            problems.append(f"Fx shape {self.Fx.shape}")
        if self.Fu.shape != (N, n, m):
            problems.append(f"Fu shape {self.Fu.shape}")
        for name, seq, width, count in (("lsub_x", self.lsub_x, n, N), ("lsub_u", self.lsub_u, m, N),
                                        ("ncone", self.ncone, m, N), ("gamma", self.gamma, n, N + 1),
                                        ("ws_f", self.ws_f, n, N)):
            if len(seq) != count or any(np.shape(a)[1:] != (width,) for a in seq):
                problems.append(f"{name} malformed")
        for k in range(N):
            if len(self.lsub_x[k]) == 0 or len(self.lsub_x[k]) != len(self.lsub_u[k]):
                problems.append(f"running-cost generators at node {k} empty or ragged")
                break
            if len(self.ws_f[k]) == 0 or len(self.ws_f[k]) != len(self.ws_L[k]):
                problems.append(f"weierstrass samples at node {k} empty or ragged")
                break
        if np.shape(self.h) != (N + 1,) or np.shape(self.h_offset) != (N + 1,):
            problems.append("h / h_offset must have N+1 entries")
        if self.endpoint_lsub.ndim != 2 or self.endpoint_lsub.shape[1] != 2 * n or len(self.endpoint_lsub) == 0:
            problems.append("endpoint cost generators malformed")
        if self.endpoint_ncone.ndim != 2 or self.endpoint_ncone.shape[1] != 2 * n:
            problems.append("endpoint normal-cone generators malformed")
        if problems:
            raise ValueError("malformed extremal data table: " + "; ".join(problems))

    def f_star(self, k: int) -> np.ndarray:
        return self.ws_f[k][0]

    def L_star(self, k: int) -> float:
        return float(self.ws_L[k][0])

    def tol_active(self, scale: float = 1e-6) -> np.ndarray:
        return scale * (1.0 + np.abs(self.h_offset))


@dataclass(frozen=True, eq=False)
class AdmissibilityReport:
    dynamics_residual: np.ndarray
    state_violation: np.ndarray
    control_violation: np.ndarray
    endpoint_violation: float
    h: np.ndarray
    tol: float

    @property
    def max_violation(self) -> float:
        return float(max(np.max(self.dynamics_residual, initial=0.0),
                         np.max(self.state_violation, initial=0.0),
                         np.max(self.control_violation, initial=0.0),
                         self.endpoint_violation))

    @property
    def admissible(self) -> bool:
        return self.max_violation <= self.tol

    def to_dict(self) -> dict:
        return {"admissible": self.admissible, "tol": self.tol,
                "max_violation": self.max_violation,
                "dynamics_residual": self.dynamics_residual.tolist(),
                "state_violation": self.state_violation.tolist(),
                "control_violation": self.control_violation.tolist(),
                "endpoint_violation": self.endpoint_violation}


def eval_cost(problem: ControlProblem, process: Process) -> float:
    """``l(x_0, x_N) + step * sum_{k<N} L_k(x_k, u_k)``."""
    process.check_dims(problem)
    N = problem.grid.N
    running = sum(problem.running_cost(k, process.x[k], process.u[k]) for k in range(N))
    return float(problem.endpoint_cost(process.x[0], process.x[N]) + problem.grid.step * running)


def check_admissible(problem: ControlProblem, process: Process, tol: float = 1e-7) -> AdmissibilityReport:
    process.check_dims(problem)
    N, step = problem.grid.N, problem.grid.step
    x, u = process.x, process.u
    dyn = np.array([np.max(np.abs(x[k + 1] - x[k] - step * problem.dynamics(k, x[k], u[k])))
                    for k in range(N)])
    h = np.array([problem.constraint(k, x[k]) for k in range(N + 1)])
    ctrl = np.array([problem.control_violation(k, u[k]) for k in range(N)])
    endp = float(problem.endpoint_violation(x[0], x[N]))
    return AdmissibilityReport(dyn, np.maximum(h, 0.0), ctrl, endp, h, tol)


def compile_table(problem: ControlProblem, candidate: Process, tol: float = 1e-7,
                  gamma_mode: str = "sharp") -> ExtremalDataTable:
    """Assemble the extremal data table of ``problem`` at ``candidate``.

    Problems outside the linear-convex class supply their own hand-derived
    table through an ``extremal_table`` method.
    """
    report = check_admissible(problem, candidate, tol)
    if not report.admissible:
        raise InadmissibleCandidate(report)
    if not isinstance(problem, LcProblem):
        return problem.extremal_table(candidate, gamma_mode=gamma_mode)
    N, n, m = problem.grid.N, problem.n, problem.m
    x, u = candidate.x, candidate.u
    lsub_x, lsub_u, ncone, ws_f, ws_L = [], [], [], [], []
    for k in range(N):
        z = np.concatenate([x[k], u[k]])
        G = subdiff.pwasum_subdiff(problem.running[k], z).points
        lsub_x.append(G[:, :n])
        lsub_u.append(G[:, n:])
        ncone.append(subdiff.normal_cone(problem.controls[k], u[k], tol).points)
        samples = np.vstack([u[k][None, :], problem.samples[k]])
        ws_f.append(np.array([problem.dynamics(k, x[k], s) for s in samples]))
        ws_L.append(np.array([problem.running_cost(k, x[k], s) for s in samples]))
    gamma = tuple(subdiff.state_subdiff(problem, k, x[k], gamma_mode).points for k in range(N + 1))
    h = np.array([problem.constraint(k, x[k]) for k in range(N + 1)])
    ends = np.concatenate([x[0], x[N]])
    return ExtremalDataTable(
        grid=problem.grid, n=n, m=m, Fx=problem.A.copy(), Fu=problem.B.copy(),
        lsub_x=tuple(lsub_x), lsub_u=tuple(lsub_u), ncone=tuple(ncone),
        h=h, h_offset=problem.E.copy(), gamma=gamma,
        ws_f=tuple(ws_f), ws_L=tuple(ws_L),
        endpoint_lsub=subdiff.pwasum_subdiff(problem.endpoint, ends).points,
        endpoint_ncone=subdiff.normal_cone(problem.endpoint_set, ends, tol).points,
        label="compiled LC table",
    )
