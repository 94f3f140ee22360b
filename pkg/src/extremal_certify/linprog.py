"""Dense linear programming core.

A bounded-variable primal simplex on a dense tableau.  Every solve ends in
one of three outcomes:

* :class:`Optimal` with a primal point, its objective value and one dual
  value per row,
* :class:`Infeasible` with a :class:`FarkasCertificate` that
  :func:`verify_farkas` can check without touching solver state,
* :class:`Unbounded` with an improving feasible ray.

Rows are ``a.x <= b``, ``a.x == b`` or ``a.x >= b``; variables carry
optional lower/upper bounds (``-inf``/``inf`` when absent).

Dual sign convention (minimisation): ``dual[i]`` is the sensitivity of the
optimal value to ``rhs[i]``, so it is ``<= 0`` on ``<=`` rows, ``>= 0`` on
``>=`` rows and free on equalities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

LE = "<="
EQ = "=="
GE = ">="
_SENSES = (LE, EQ, GE)

DEFAULT_TOL = 1e-9

# Consecutive degenerate pivots tolerated before switching to Bland's rule.
_DEGENERATE_STREAK = 30
_PIVOT_TOL = 1e-9
_MAX_REFACTORS = 10


class LpError(Exception):
    """Base class for linear-programming failures."""


class MalformedLpError(LpError, ValueError):
    """Inconsistent dimensions, bad relations or crossed bounds."""


class NumericalFailure(LpError):
    """Iteration limit hit or a result failed its a-posteriori check."""


@dataclass(frozen=True)
class LpRow:
    coeffs: np.ndarray
    relation: str
    rhs: float


class LpProblem:
    """``minimize c.x`` subject to rows and variable bounds.

    Rows are stored densely as a matrix ``A`` with parallel ``senses`` and
    ``rhs``.  Use :meth:`from_rows` to build from :class:`LpRow` items or
    ``(coeffs, relation, rhs)`` tuples, or :class:`LpBuilder` for larger
    structured programs.
    """

    def __init__(self, objective, A, senses, rhs, lower=None, upper=None):
        c = np.asarray(objective, dtype=float).ravel()
        n = c.size
        A = np.asarray(A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise MalformedLpError(
                f"row matrix has shape {A.shape}, expected (*, {n})")
        senses = tuple(senses)
        rhs = np.asarray(rhs, dtype=float).ravel()
        if len(senses) != A.shape[0] or rhs.size != A.shape[0]:
            raise MalformedLpError("senses/rhs length differs from row count")
        bad = [s for s in senses if s not in _SENSES]
        if bad:
            raise MalformedLpError(f"unknown relation {bad[0]!r}")
        lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float).ravel()
        upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float).ravel()
        if lower.size != n or upper.size != n:
            raise MalformedLpError("bound vectors must match the objective length")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise MalformedLpError("NaN bound")
        if np.any(lower > upper):
            j = int(np.flatnonzero(lower > upper)[0])
            raise MalformedLpError(f"variable {j}: lower {lower[j]} > upper {upper[j]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rhs)) and np.all(np.isfinite(c))):
            raise MalformedLpError("non-finite coefficient")
        self.objective = c
        self.A = A
        self.senses = senses
        self.rhs = rhs
        self.lower = lower
        self.upper = upper

    @classmethod
    def from_rows(cls, objective, rows: Iterable, bounds: Sequence | None = None) -> "LpProblem":
        """Build from ``(coeffs, relation, rhs)`` rows.

        ``bounds`` is a per-variable list of ``(lower, upper)`` pairs where
        ``None`` means unbounded on that side.  Omitted bounds mean free.
        """
        c = np.asarray(objective, dtype=float).ravel()
        n = c.size
        mats, senses, rhs = [], [], []
        for row in rows:
            if isinstance(row, LpRow):
                coeffs, rel, b = row.coeffs, row.relation, row.rhs
            else:
                coeffs, rel, b = row
            coeffs = np.asarray(coeffs, dtype=float).ravel()
            if coeffs.size != n:
                raise MalformedLpError(
                    f"row of length {coeffs.size}, objective has length {n}")
            mats.append(coeffs)
            senses.append(rel)
            rhs.append(float(b))
        A = np.array(mats).reshape(len(mats), n)
        lower = upper = None
        if bounds is not None:
            if len(bounds) != n:
                raise MalformedLpError("one (lower, upper) pair per variable required")
            lower = np.array([-np.inf if lo is None else lo for lo, _ in bounds], dtype=float)
            upper = np.array([np.inf if hi is None else hi for _, hi in bounds], dtype=float)
        return cls(c, A, senses, rhs, lower, upper)

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def rows(self) -> list[LpRow]:
        return [LpRow(self.A[i], self.senses[i], float(self.rhs[i]))
                for i in range(self.num_rows)]

    def row_violation(self, x) -> np.ndarray:
        """Per-row constraint violation at ``x`` (zero when satisfied)."""
        ax = self.A @ x
        s = np.array(self.senses)
        viol = np.zeros(self.num_rows)
        viol[s == LE] = np.maximum(ax - self.rhs, 0.0)[s == LE]
        viol[s == GE] = np.maximum(self.rhs - ax, 0.0)[s == GE]
        viol[s == EQ] = np.abs(ax - self.rhs)[s == EQ]
        return viol

    def bound_violation(self, x) -> np.ndarray:
        return np.maximum(self.lower - x, 0.0) + np.maximum(x - self.upper, 0.0)


@dataclass(frozen=True)
class FarkasCertificate:
    """Nonnegative multipliers proving a linear system has no solution.

    ``rows[i]`` multiplies row ``i`` written in its own direction: ``a.x <= b``
    for ``<=`` rows, ``-a.x <= -b`` for ``>=`` rows (both need weight
    ``>= 0``) and ``a.x == b`` for equalities (any sign).  ``lower[j]``
    multiplies ``-x_j <= -lower_j`` and ``upper[j]`` multiplies
    ``x_j <= upper_j``.  The weighted sum must read ``0.x <= c`` with
    ``c < 0``.
    """

    rows: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def to_dict(self) -> dict:
        return {"rows": self.rows.tolist(), "lower": self.lower.tolist(),
                "upper": self.upper.tolist()}


@dataclass(frozen=True)
class Optimal:
    x: np.ndarray
    value: float
    duals: np.ndarray
    iterations: int = 0


@dataclass(frozen=True)
class Infeasible:
    farkas: FarkasCertificate
    iterations: int = 0


@dataclass(frozen=True)
class Unbounded:
    ray: np.ndarray
    iterations: int = 0


LpOutcome = Union[Optimal, Infeasible, Unbounded]


def _as_certificate(lp: LpProblem, certificate) -> FarkasCertificate:
    if isinstance(certificate, Infeasible):
        certificate = certificate.farkas
    if isinstance(certificate, FarkasCertificate):
        rows = np.asarray(certificate.rows, dtype=float).ravel()
        lower = np.asarray(certificate.lower, dtype=float).ravel()
        upper = np.asarray(certificate.upper, dtype=float).ravel()
    else:
        rows = np.asarray(certificate, dtype=float).ravel()
        lower = np.zeros(lp.num_vars)
        upper = np.zeros(lp.num_vars)
    if rows.size != lp.num_rows or lower.size != lp.num_vars or upper.size != lp.num_vars:
        raise MalformedLpError(
            f"certificate has {rows.size} row weights / {lower.size}+{upper.size} bound "
            f"weights for an LP with {lp.num_rows} rows and {lp.num_vars} variables")
    return FarkasCertificate(rows, lower, upper)


def verify_farkas(lp: LpProblem, certificate, tol: float = DEFAULT_TOL) -> bool:
    """Check an infeasibility certificate against ``lp`` from scratch.

    ``certificate`` is a :class:`FarkasCertificate`, an :class:`Infeasible`
    outcome, or a bare sequence of row weights (bound weights taken as
    zero).  The weights are rescaled to unit max-norm, the implied
    inequality ``g.x <= c`` is formed, and the certificate is accepted iff
    ``g`` vanishes (relative to the magnitude of the summed terms) and
    ``c < -tol``.
    """
    cert = _as_certificate(lp, certificate)
    senses = np.array(lp.senses)
    w, zl, zu = cert.rows, cert.lower, cert.upper
    ineq = senses != EQ
    if np.any(w[ineq] < 0) or np.any(zl < 0) or np.any(zu < 0):
        return False
    if np.any(zl[~np.isfinite(lp.lower)] != 0) or np.any(zu[~np.isfinite(lp.upper)] != 0):
        return False
    norm = max(np.max(np.abs(w), initial=0.0), np.max(zl, initial=0.0), np.max(zu, initial=0.0))
    if norm == 0.0:
        return False
    w, zl, zu = w / norm, zl / norm, zu / norm
    sign = np.where(senses == GE, -1.0, 1.0)
    sw = sign * w
    coef = sw @ lp.A - zl + zu
    fin_lo = np.isfinite(lp.lower)
    fin_hi = np.isfinite(lp.upper)
    c = float(sw @ lp.rhs - zl[fin_lo] @ lp.lower[fin_lo] + zu[fin_hi] @ lp.upper[fin_hi])
    magnitude = np.abs(sw) @ np.abs(lp.A) + zl + zu
    scale = max(1.0, float(np.max(magnitude, initial=0.0)))
    return bool(np.max(np.abs(coef), initial=0.0) <= tol * scale and c < -tol)


class _Tableau:
    """Working state of the bounded-variable simplex.

    Columns are ``[structural | slack | artificial]``.  Row ``i`` reads
    ``A_i x + s_i (+ sigma_i a_i) = b_i``; slack bounds encode the relation.
    ``T`` holds ``B^-1 [A | I | Art]``.
    """

    AT_LOWER, AT_UPPER, FREE_ZERO, BASIC = 1, 2, 3, 0

    def __init__(self, lp: LpProblem, tol: float):
        self.lp = lp
        self.tol = tol
        M, n = lp.A.shape
        self.M, self.n = M, n
        senses = np.array(lp.senses)
        slo = np.where(senses == GE, -np.inf, 0.0)
        shi = np.where(senses == LE, np.inf, 0.0)

        x0 = np.where(np.isfinite(lp.lower), lp.lower,
                      np.where(np.isfinite(lp.upper), lp.upper, 0.0))
        s0 = lp.rhs - lp.A @ x0
        bscale = 1.0 + np.abs(lp.rhs)
        feasible = (s0 >= slo - tol * bscale) & (s0 <= shi + tol * bscale)
        s_clip = np.clip(s0, slo, shi)
        resid = s0 - s_clip
        art_rows = np.flatnonzero(~feasible)
        self.art_rows = art_rows
        self.sigma = np.where(resid[art_rows] >= 0, 1.0, -1.0)
        k = art_rows.size
        self.nz = n + M + k

        self.lo = np.concatenate([lp.lower, slo, np.zeros(k)])
        self.hi = np.concatenate([lp.upper, shi, np.full(k, np.inf)])
        self.first_art = n + M

        D = np.ones(M)
        D[art_rows] = self.sigma
        T = np.zeros((M, self.nz))
        T[:, :n] = D[:, None] * lp.A
        T[np.arange(M), n + np.arange(M)] = D
        T[art_rows, self.first_art + np.arange(k)] = 1.0
        self.T = T

        self.z = np.concatenate([x0, s_clip, np.abs(resid[art_rows])])
        self.state = np.full(self.nz, self.AT_LOWER, dtype=np.int8)
        free = ~np.isfinite(self.lo) & ~np.isfinite(self.hi)
        self.state[free] = self.FREE_ZERO
        at_up = ~np.isfinite(self.lo) & np.isfinite(self.hi)
        self.state[at_up] = self.AT_UPPER
        # slacks sit at whichever bound they were clipped to
        for i in range(M):
            j = n + i
            if s_clip[i] == shi[i] and np.isfinite(shi[i]) and not s_clip[i] == slo[i]:
                self.state[j] = self.AT_UPPER
            elif np.isfinite(slo[i]):
                self.state[j] = self.AT_LOWER
            else:
                self.state[j] = self.AT_UPPER
        self.basis = n + np.arange(M)
        self.basis[art_rows] = self.first_art + np.arange(k)
        self.state[self.basis] = self.BASIC
        self.iterations = 0

    # -- pricing -----------------------------------------------------------
    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        return cost - cost[self.basis] @ self.T

    def _eligible(self, d: np.ndarray, allowed: np.ndarray) -> np.ndarray:
        tol = self.tol
        st = self.state
        movable = self.hi > self.lo
        elig = ((st == self.AT_LOWER) & (d < -tol)) | ((st == self.AT_UPPER) & (d > tol)) \
            | ((st == self.FREE_ZERO) & (np.abs(d) > tol))
        return elig & movable & allowed

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_iter: int) -> tuple[str, int, int]:
        """Iterate to optimality.  Returns (status, entering, direction).

        Optimality claimed from the updated tableau is confirmed against
        reduced costs recomputed from the basis; on disagreement the tableau
        is refactorized and iteration resumes.
        """
        d = self.reduced_costs(cost)
        streak = 0
        refactors = 0
        while True:
            if self.iterations >= max_iter:
                raise NumericalFailure(f"simplex iteration limit {max_iter} exceeded")
            elig = self._eligible(d, allowed)
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                if not self._eligible(self.exact_reduced_costs(cost), allowed).any():
                    return "optimal", -1, 0
                if refactors >= _MAX_REFACTORS:
                    raise NumericalFailure("simplex tableau keeps drifting after refactorization")
                refactors += 1
                self.refactor()
                d = self.reduced_costs(cost)
                continue
            bland = streak >= _DEGENERATE_STREAK
            if bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])
            dirn = 1.0 if d[j] < 0 else -1.0
            if self.state[j] == self.AT_UPPER:
                dirn = -1.0
            elif self.state[j] == self.AT_LOWER:
                dirn = 1.0
            step = self._ratio_step(j, dirn, bland)
            self.iterations += 1
            if step is None:
                return "unbounded", j, int(dirn)
            t, r = step
            streak = streak + 1 if t <= self.tol else 0
            if r < 0:
                self._flip(j, dirn, t)
            else:
                self._pivot(r, j, dirn, t, d)

    def _ratio_step(self, j: int, dirn: float, bland: bool):
        """Harris two-pass ratio test: bound the step with a small feasibility
        allowance, then pick the largest pivot among rows blocking within it."""
        col = self.T[:, j]
        alpha = dirn * col
        beta = self.z[self.basis]
        lo_b = self.lo[self.basis]
        hi_b = self.hi[self.basis]
        pos = alpha > _PIVOT_TOL
        neg = alpha < -_PIVOT_TOL
        room = np.full(self.M, np.inf)
        room[pos] = (beta - lo_b)[pos]
        room[neg] = (hi_b - beta)[neg]
        mag = np.abs(alpha)
        blocking = np.flatnonzero(np.isfinite(room) & (pos | neg))
        t_flip = self.hi[j] - self.lo[j]
        if blocking.size == 0:
            if not np.isfinite(t_flip):
                return None
            return float(t_flip), -1
        slack = np.maximum(room[blocking], 0.0)
        a = mag[blocking]
        bound = np.minimum(np.abs(lo_b[blocking]), np.abs(hi_b[blocking]))
        delta = self.tol * (1.0 + np.where(np.isfinite(bound), bound, 0.0))
        t_max = float(np.min((slack + delta) / a))
        if t_flip <= t_max:
            return float(t_flip), -1
        ratios = slack / a
        ties = np.flatnonzero(ratios <= t_max)
        if bland:
            pick = ties[np.argmin(self.basis[blocking[ties]])]
        else:
            pick = ties[np.argmax(a[ties])]
        r = int(blocking[pick])
        return float(ratios[pick]), r

    def _flip(self, j: int, dirn: float, t: float):
        self.z[self.basis] -= t * dirn * self.T[:, j]
        if dirn > 0:
            self.z[j] = self.hi[j]
            self.state[j] = self.AT_UPPER
        else:
            self.z[j] = self.lo[j]
            self.state[j] = self.AT_LOWER

    def _pivot(self, r: int, j: int, dirn: float, t: float, d: np.ndarray):
        T = self.T
        col = T[:, j].copy()
        leaving = int(self.basis[r])
        self.z[self.basis] -= t * dirn * col
        self.z[j] += dirn * t
        if dirn * col[r] > 0:
            self.z[leaving] = self.lo[leaving]
            self.state[leaving] = self.AT_LOWER
        else:
            self.z[leaving] = self.hi[leaving]
            self.state[leaving] = self.AT_UPPER
        if not np.isfinite(self.z[leaving]):
            self.z[leaving] = 0.0
            self.state[leaving] = self.FREE_ZERO

        prow = T[r] / col[r]
        nzr = np.flatnonzero(col)
        nzr = nzr[nzr != r]
        nzc = np.flatnonzero(prow)
        if nzr.size:
            if nzc.size < 0.6 * self.nz:
                T[np.ix_(nzr, nzc)] -= np.outer(col[nzr], prow[nzc])
            else:
                T[nzr] -= np.outer(col[nzr], prow)
        prow[np.abs(prow) < 1e-15] = 0.0
        T[r] = prow
        dj = d[j]
        if dj != 0.0:
            d[nzc] -= dj * prow[nzc]
        d[j] = 0.0
        self.basis[r] = j
        self.state[j] = self.BASIC

    # -- exact re-solves on the final basis ---------------------------------
    def exact_reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        y = self.basis_duals(cost)
        d = cost.copy()
        d[:self.n] -= y @ self.lp.A
        d[self.n:self.first_art] -= y
        d[self.first_art:] -= y[self.art_rows] * self.sigma
        return d

    def refactor(self):
        """Rebuild ``T`` and the basic values from the basis matrix."""
        full = np.column_stack([self.column(j) for j in range(self.nz)])
        self.T = np.linalg.solve(self.basis_matrix(), full)
        self.T[np.abs(self.T) < 1e-14] = 0.0
        self.z = self.refined_values()

    def column(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.lp.A[:, j]
        e = np.zeros(self.M)
        if j < self.first_art:
            e[j - self.n] = 1.0
        else:
            a = j - self.first_art
            e[self.art_rows[a]] = self.sigma[a]
        return e

    def basis_matrix(self) -> np.ndarray:
        return np.column_stack([self.column(int(j)) for j in self.basis]) if self.M else np.zeros((0, 0))

    def refined_values(self) -> np.ndarray:
        """Recompute basic values from the basis with a direct solve."""
        z = self.z.copy()
        if self.M == 0:
            return z
        nonbasic = np.ones(self.nz, dtype=bool)
        nonbasic[self.basis] = False
        rhs = self.lp.rhs.copy()
        zn = np.where(nonbasic, z, 0.0)
        rhs -= self.lp.A @ zn[:self.n]
        rhs -= zn[self.n:self.first_art]
        if self.art_rows.size:
            rhs[self.art_rows] -= self.sigma * zn[self.first_art:]
        z[self.basis] = np.linalg.solve(self.basis_matrix(), rhs)
        return z

    def basis_duals(self, cost: np.ndarray) -> np.ndarray:
        if self.M == 0:
            return np.zeros(0)
        return np.linalg.solve(self.basis_matrix().T, cost[self.basis])


def solve_lp(lp: LpProblem, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> LpOutcome:
    """Solve ``lp`` by the two-phase bounded-variable simplex method.

    Pricing is Dantzig's rule until a run of degenerate pivots, after which
    Bland's smallest-index rule takes over until progress resumes; this
    keeps the anti-cycling guarantee while avoiding Bland's slow start.

    Raises :class:`NumericalFailure` on iteration overrun or when the final
    answer fails its own feasibility / certificate check.
    """
    if not isinstance(lp, LpProblem):
        raise MalformedLpError("solve_lp expects an LpProblem")
    tab = _Tableau(lp, tol)
    n, M = tab.n, tab.M
    if max_iter is None:
        max_iter = 50 * (tab.nz + M) + 1000

    # phase 1
    if tab.art_rows.size:
        cost1 = np.zeros(tab.nz)
        cost1[tab.first_art:] = 1.0
        allowed = np.ones(tab.nz, dtype=bool)
        tab.run(cost1, allowed, max_iter)
        z = tab.refined_values()
        infeas = float(np.sum(z[tab.first_art:]))
        if infeas > tol * (1.0 + np.max(np.abs(lp.rhs), initial=0.0)):
            cert = _farkas_from_phase1(tab, cost1)
            if not verify_farkas(lp, cert, tol):
                raise NumericalFailure("phase 1 ended infeasible but the Farkas "
                                       "certificate failed verification")
            return Infeasible(cert, tab.iterations)
        # artificials are pinned at zero for phase 2
        tab.hi[tab.first_art:] = 0.0
        tab.z[tab.first_art:] = 0.0

    cost = np.zeros(tab.nz)
    cost[:n] = lp.objective
    allowed = np.ones(tab.nz, dtype=bool)
    allowed[tab.first_art:] = False
    status, j, dirn = tab.run(cost, allowed, max_iter)
    if status == "unbounded":
        ray = _ray(tab, j, dirn)
        return Unbounded(ray, tab.iterations)

    z = tab.refined_values()
    x = z[:n]
    scale = 1.0 + np.max(np.abs(lp.rhs), initial=0.0)
    feas_tol = max(1e3 * tol, 1e-7) * scale
    if (np.max(lp.row_violation(x), initial=0.0) > feas_tol
            or np.max(lp.bound_violation(x), initial=0.0) > feas_tol):
        raise NumericalFailure("final basis is not primal feasible within tolerance")
    x = np.clip(x, lp.lower, lp.upper)
    y = tab.basis_duals(cost)
    return Optimal(x, float(lp.objective @ x), y, tab.iterations)


def _farkas_from_phase1(tab: _Tableau, cost1: np.ndarray) -> FarkasCertificate:
    lp = tab.lp
    y = tab.basis_duals(cost1)
    senses = np.array(lp.senses)
    g = y @ lp.A
    w = np.where(senses == GE, y, -y)
    w = np.where(senses == EQ, w, np.maximum(w, 0.0))
    zl = np.where(np.isfinite(lp.lower), np.maximum(-g, 0.0), 0.0)
    zu = np.where(np.isfinite(lp.upper), np.maximum(g, 0.0), 0.0)
    norm = max(np.max(np.abs(w), initial=0.0), np.max(zl, initial=0.0),
               np.max(zu, initial=0.0), 1e-300)
    return FarkasCertificate(w / norm, zl / norm, zu / norm)


def _ray(tab: _Tableau, j: int, dirn: int) -> np.ndarray:
    dz = np.zeros(tab.nz)
    dz[j] = dirn
    dz[tab.basis] = -dirn * tab.T[:, j]
    r = dz[:tab.n]
    lp = tab.lp
    nrm = np.max(np.abs(r))
    r = r / nrm if nrm > 0 else r
    if not is_improving_ray(lp, r, max(1e3 * tab.tol, 1e-7)):
        raise NumericalFailure("unbounded direction failed verification")
    return r


def is_improving_ray(lp: LpProblem, r, tol: float = 1e-7) -> bool:
    """True iff ``r`` is a recession direction of the feasible set with ``c.r < 0``."""
    r = np.asarray(r, dtype=float)
    ar = lp.A @ r
    s = np.array(lp.senses)
    ok = np.all(ar[s == LE] <= tol) and np.all(ar[s == GE] >= -tol) \
        and np.all(np.abs(ar[s == EQ]) <= tol)
    ok = ok and np.all(r[np.isfinite(lp.lower)] >= -tol) and np.all(r[np.isfinite(lp.upper)] <= tol)
    return bool(ok and lp.objective @ r < -tol)


def dual_objective(lp: LpProblem, duals) -> float:
    """Lagrangian dual value for ``duals`` with bound multipliers from reduced costs."""
    y = np.asarray(duals, dtype=float)
    d = lp.objective - y @ lp.A
    val = float(y @ lp.rhs)
    dtol = 1e-12 * (1.0 + np.abs(lp.objective))
    pos = d > dtol
    neg = d < -dtol
    with np.errstate(invalid="ignore"):
        val += float(np.sum(d[pos] * lp.lower[pos]) + np.sum(d[neg] * lp.upper[neg]))
    return val


class LpBuilder:
    """Incremental construction of structured LPs.

    Variables are allocated in named blocks; rows are given as
    ``{column: coefficient}`` mappings.
    """

    def __init__(self):
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._cost: list[float] = []
        self._rows: list[dict[int, float]] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []
        self.blocks: dict[str, np.ndarray] = {}
        self.row_tags: list[tuple] = []

    def add_vars(self, name: str, shape, lower=-np.inf, upper=np.inf, cost=0.0) -> np.ndarray:
        count = int(np.prod(shape)) if shape != () else 1
        start = len(self._lower)
        idx = np.arange(start, start + count).reshape(shape)
        self._lower.extend(np.broadcast_to(np.asarray(lower, dtype=float), (count,)).tolist()
                           if np.ndim(lower) else [float(lower)] * count)
        self._upper.extend(np.broadcast_to(np.asarray(upper, dtype=float), (count,)).tolist()
                           if np.ndim(upper) else [float(upper)] * count)
        self._cost.extend([float(cost)] * count)
        self.blocks[name] = idx
        return idx

    @property
    def num_vars(self) -> int:
        return len(self._lower)

    def set_bounds(self, j: int, lower=None, upper=None):
        if lower is not None:
            self._lower[j] = float(lower)
        if upper is not None:
            self._upper[j] = float(upper)

    def set_cost(self, j: int, value: float):
        self._cost[j] = float(value)

    def add_cost(self, j: int, delta: float):
        self._cost[j] += float(delta)

    def bounds(self, j: int) -> tuple[float, float]:
        return self._lower[j], self._upper[j]

    def add_row(self, coeffs: dict, relation: str, rhs: float, tag=None):
        row: dict[int, float] = {}
        for j, v in coeffs.items():
            if v != 0.0:
                row[int(j)] = row.get(int(j), 0.0) + float(v)
        self._rows.append(row)
        self._senses.append(relation)
        self._rhs.append(float(rhs))
        self.row_tags.append(tag)
        return len(self._rows) - 1

    def build(self) -> LpProblem:
        n = self.num_vars
        A = np.zeros((len(self._rows), n))
        for i, row in enumerate(self._rows):
            for j, v in row.items():
                A[i, j] += v
        return LpProblem(np.array(self._cost), A, self._senses, self._rhs,
                         np.array(self._lower), np.array(self._upper))
