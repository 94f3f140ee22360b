"""Euler transcription of linear-convex problems into a single LP.

Piecewise-affine costs enter in epigraph form: one scalar per max-affine
term, bounded below by each of its pieces.  Single-piece terms are linear
and go straight into the objective.  Coordinate rows of the control and
endpoint polytopes become variable bounds.

This module deliberately shares nothing with the certifier beyond the LP
core, so it can serve as an independent oracle.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .linprog import EQ, GE, LE, Infeasible, LpBuilder, LpProblem, Optimal, Unbounded, solve_lp
from .model import LcProblem, Process, ProblemClassError


class DirectInfeasible(RuntimeError):
    """No admissible process exists on this grid."""

    def __init__(self, message: str, farkas=None):
        super().__init__(message)
        self.farkas = farkas


class DirectUnbounded(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Transcription:
    """The LP plus the column/row maps needed to decode and inspect it.

    ``epigraph_rows`` maps ``(node, term)`` to ``{piece: row}`` for running
    terms (``node = -1`` for endpoint terms); pieces with a zero gradient are
    lower bounds and have no row.  ``state_rows[k]`` is ``-1`` at pruned nodes.
    """

    lp: LpProblem
    x: np.ndarray
    u: np.ndarray
    epigraph: dict
    epigraph_rows: dict
    state_rows: np.ndarray
    constant: float
    problem: LcProblem = field(repr=False)

    def decode(self, z: np.ndarray) -> Process:
        return Process(z[self.x], z[self.u])


def _bounds_and_rows(C: np.ndarray, d: np.ndarray, cols: np.ndarray):
    """Split ``C z <= d`` into per-column bounds and genuine rows."""
    lo = np.full(cols.size, -np.inf)
    hi = np.full(cols.size, np.inf)
    rows = []
    for a, b in zip(C, d):
        nz = np.flatnonzero(a)
        if nz.size == 1:
            j = nz[0]
            if a[j] > 0:
                hi[j] = min(hi[j], b / a[j])
            else:
                lo[j] = max(lo[j], b / a[j])
        elif nz.size == 0:
            if b < 0:
                rows.append(({}, b))  # 0 <= b < 0: keep it so the LP reports infeasible
        else:
            rows.append(({int(cols[j]): float(a[j]) for j in nz}, float(b)))
    return lo, hi, rows


def _add_term(builder: LpBuilder, term, arg_cols: np.ndarray, weight: float, name: str):
    """Epigraph of ``weight * term(z)``; returns ``(column or None, rows, constant)``."""
    G, c = term.gradients, term.offsets
    if G.shape[0] == 1:
        for j, g in zip(arg_cols, G[0]):
            if g != 0.0:
                builder.add_cost(int(j), weight * g)
        return None, {}, weight * float(c[0])
    flat = ~np.any(G != 0.0, axis=1)
    lower = float(np.max(c[flat])) if flat.any() else -np.inf
    s = int(builder.add_vars(name, (1,), lower=lower, cost=weight)[0])
    rows = {}
    for p in np.flatnonzero(~flat):
        coeffs = {s: 1.0}
        for j, g in zip(arg_cols, G[p]):
            if g != 0.0:
                coeffs[int(j)] = coeffs.get(int(j), 0.0) - g
        rows[int(p)] = builder.add_row(coeffs, GE, float(c[p]), (name, int(p)))
    return s, rows, 0.0


def transcribe(problem: LcProblem) -> Transcription:
    if not isinstance(problem, LcProblem):
        raise ProblemClassError("direct transcription needs a linear-convex problem")
    N, n, m, step = problem.grid.N, problem.n, problem.m, problem.grid.step
    B = LpBuilder()
    x = B.add_vars("x", (N + 1, n))
    u = B.add_vars("u", (N, m))

    for k in range(N):
        lo, hi, rows = _bounds_and_rows(problem.controls[k].C, problem.controls[k].d, u[k])
        for j in range(m):
            B.set_bounds(int(u[k, j]), lo[j], hi[j])
        for coeffs, b in rows:
            B.add_row(coeffs, LE, b, ("U", k))
    ends = np.concatenate([x[0], x[N]])
    lo, hi, rows = _bounds_and_rows(problem.endpoint_set.C, problem.endpoint_set.d, ends)
    for j, col in enumerate(ends):
        cur_lo, cur_hi = B.bounds(int(col))
        B.set_bounds(int(col), max(cur_lo, lo[j]), min(cur_hi, hi[j]))
    for coeffs, b in rows:
        B.add_row(coeffs, LE, b, ("E",))

    # x[k+1] - x[k] - step*(A x[k] + B u[k]) = 0
    for k in range(N):
        A, Bk = problem.A[k], problem.B[k]
        for i in range(n):
            row = {int(x[k + 1, i]): 1.0}
            row[int(x[k, i])] = row.get(int(x[k, i]), 0.0) - 1.0
            for j in np.flatnonzero(A[i]):
                row[int(x[k, j])] = row.get(int(x[k, j]), 0.0) - step * A[i, j]
            for j in np.flatnonzero(Bk[i]):
                row[int(u[k, j])] = -step * Bk[i, j]
            B.add_row(row, EQ, 0.0, ("dynamics", k, i))

    state_rows = np.full(N + 1, -1)
    for k in range(N + 1):
        d, e = problem.D[k], float(problem.E[k])
        if not np.any(d != 0.0) and e <= 0.0:
            continue
        state_rows[k] = B.add_row({int(x[k, j]): d[j] for j in np.flatnonzero(d)}, LE, -e,
                                  ("state", k))

    constant = 0.0
    epigraph, epi_rows = {}, {}
    for k in range(N):
        arg = np.concatenate([x[k], u[k]])
        for t, term in enumerate(problem.running[k].terms):
            s, rows, c = _add_term(B, term, arg, step, f"s{k}_{t}")
            constant += c
            if s is not None:
                epigraph[(k, t)] = s
                epi_rows[(k, t)] = rows
    for t, term in enumerate(problem.endpoint.terms):
        s, rows, c = _add_term(B, term, ends, 1.0, f"sl_{t}")
        constant += c
        if s is not None:
            epigraph[(-1, t)] = s
            epi_rows[(-1, t)] = rows
    return Transcription(B.build(), x, u, epigraph, epi_rows, state_rows, constant, problem)


@dataclass(frozen=True, eq=False)
class DirectSolution:
    process: Process
    cost: float
    duals: np.ndarray
    state_duals: np.ndarray
    transcription: Transcription
    iterations: int

    @property
    def max_h_violation(self) -> float:
        p = self.transcription.problem
        x = self.process.x
        h = np.einsum("kn,kn->k", p.D, x) + p.E
        return float(max(np.max(h), 0.0)) if p.has_state_constraint else 0.0


def solve_direct(problem: LcProblem, tol: float = 1e-9) -> DirectSolution:
    tr = transcribe(problem)
    out = solve_lp(tr.lp, tol=tol)
    if isinstance(out, Infeasible):
        raise DirectInfeasible(
            f"no admissible process on the grid N={problem.grid.N}", out.farkas)
    if isinstance(out, Unbounded):
        raise DirectUnbounded(f"cost is unbounded below on the grid N={problem.grid.N}")
    assert isinstance(out, Optimal)
    sd = np.zeros(problem.grid.N + 1)
    live = tr.state_rows >= 0
    sd[live] = out.duals[tr.state_rows[live]]
    return DirectSolution(tr.decode(out.x), float(out.value + tr.constant), out.duals, sd, tr,
                          out.iterations)


REFINEMENT_COLUMNS = ("N", "cost", "max_h_violation", "runtime")


def refinement_table(problem: LcProblem, grids, tol: float = 1e-9) -> list[dict]:
    """Direct solves of a time-invariant problem on several grids."""
    rows = []
    for N in grids:
        start = time.perf_counter()
        sol = solve_direct(problem.regrid(int(N)), tol)
        rows.append({"N": int(N), "cost": sol.cost, "max_h_violation": sol.max_h_violation,
                     "runtime": time.perf_counter() - start})
    return rows


def write_csv(path_or_file, rows: list[dict], columns) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            emit(fh)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)
