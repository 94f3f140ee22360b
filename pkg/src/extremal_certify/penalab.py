"""Penalized sequence of state-constraint-free problems.

Each weight ``i`` replaces the state constraint by the running-cost term
``i * max(0, d_k . x + e_k)``.  The report tracks the penalized optima
against the constrained optimum and compares the hinge-row LP duals, scaled
by ``i``, with the certifier's measure atoms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certify import CertifySettings, certify_extremal
from .direct import DirectSolution, solve_direct, write_csv
from .model import LcProblem, MaxAffine, ProblemClassError, compile_table

DEFAULT_WEIGHTS = tuple(4.0 ** j for j in range(6))
CSV_COLUMNS = ("weight", "penalized_cost", "gap", "max_hinge_activity", "dual_proxy_mass")


@dataclass(frozen=True)
class PenaltySchedule:
    weights: tuple = DEFAULT_WEIGHTS

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if not w:
            raise ValueError("penalty schedule is empty")
        if not all(np.isfinite(w)) or w[0] <= 0.0:
            raise ValueError("penalty weights must be finite and positive")
        if any(b <= a for a, b in zip(w, w[1:])):
            raise ValueError(f"penalty weights must be strictly increasing, got {w}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def parse(cls, text: str) -> "PenaltySchedule":
        return cls(tuple(float(t) for t in text.replace(" ", "").split(",") if t))


def hinge_term(d, e, weight: float, m: int) -> MaxAffine:
    d = np.asarray(d, dtype=float)
    g = np.concatenate([weight * d, np.zeros(m)])
    return MaxAffine([np.zeros_like(g), g], [0.0, weight * float(e)])


def penalize(problem: LcProblem, weight: float) -> LcProblem:
    """Drop the state constraint and charge ``weight * h+`` in the running cost.

    The hinge is the last term of every running cost.  Node ``N`` carries no
    running cost under the left Riemann sum, so the constraint at the final
    node is simply dropped.
    """
    if not isinstance(problem, LcProblem):
        raise ProblemClassError("penalization needs a linear-convex problem")
    if not weight > 0.0:
        raise ValueError(f"penalty weight must be positive, got {weight}")
    N, m = problem.grid.N, problem.m
    cache: dict = {}
    running = []
    for k in range(N):
        key = (id(problem.running[k]), problem.D[k].tobytes(), float(problem.E[k]))
        if key not in cache:
            cache[key] = problem.running[k].plus(hinge_term(problem.D[k], problem.E[k], weight, m))
        running.append(cache[key])
    if all(r is running[0] for r in running):
        running = running[0]
    A = problem.A[0] if np.all(problem.A == problem.A[0]) else problem.A
    B = problem.B[0] if np.all(problem.B == problem.B[0]) else problem.B
    controls = problem.controls[0] if all(U is problem.controls[0] for U in problem.controls) \
        else problem.controls
    same = all(np.array_equal(s, problem.samples[0]) for s in problem.samples)
    return LcProblem(problem.grid, A, B, running, controls, problem.endpoint_set,
                     problem.endpoint, None, problem.samples[0] if same else problem.samples)


def hinge_duals(problem: LcProblem, sol: DirectSolution, weight: float) -> np.ndarray:
    """``weight * |dual|`` of each node's hinge row in a penalized solve."""
    tr = sol.transcription
    out = np.zeros(problem.grid.N + 1)
    for k in range(problem.grid.N):
        t = len(tr.problem.running[k].terms) - 1
        rows = tr.epigraph_rows.get((k, t), {})
        if 1 in rows:
            out[k] = weight * abs(sol.duals[rows[1]])
    return out


@dataclass
class ScheduleReport:
    weights: list = field(default_factory=list)
    costs: list = field(default_factory=list)
    hinge_activity: list = field(default_factory=list)
    dual_proxy: list = field(default_factory=list)
    constrained_cost: float = float("nan")
    mu: np.ndarray | None = None
    error: str | None = None
    tol: float = 1e-9

    @property
    def complete(self) -> bool:
        return self.error is None

    @property
    def gaps(self) -> list:
        return [self.constrained_cost - c for c in self.costs]

    @property
    def nondecreasing(self) -> bool:
        return all(b >= a - self.tol for a, b in zip(self.costs, self.costs[1:]))

    @property
    def lower_bound(self) -> bool:
        return all(c <= self.constrained_cost + self.tol for c in self.costs)

    @property
    def gaps_shrinking(self) -> bool:
        g = self.gaps
        return all(b <= a + self.tol for a, b in zip(g, g[1:]))

    def rows(self) -> list[dict]:
        return [{"weight": w, "penalized_cost": c, "gap": g, "max_hinge_activity": a,
                 "dual_proxy_mass": float(np.sum(d))}
                for w, c, g, a, d in zip(self.weights, self.costs, self.gaps,
                                         self.hinge_activity, self.dual_proxy)]

    def write_csv(self, path_or_file) -> None:
        write_csv(path_or_file, self.rows(), CSV_COLUMNS)

    def to_dict(self) -> dict:
        return {"complete": self.complete, "error": self.error,
                "constrained_cost": self.constrained_cost, "nondecreasing": self.nondecreasing,
                "lower_bound": self.lower_bound, "gaps_shrinking": self.gaps_shrinking,
                "rows": self.rows(),
                "dual_proxy": [np.asarray(d).tolist() for d in self.dual_proxy],
                "certifier_mu": None if self.mu is None else self.mu.tolist()}


def run_schedule(problem: LcProblem, schedule: PenaltySchedule | None = None,
                 tol: float = 1e-9, settings: CertifySettings | None = None) -> ScheduleReport:
    """Solve the penalized sequence; on any failure return the partial report."""
    schedule = schedule or PenaltySchedule()
    report = ScheduleReport(tol=tol)
    try:
        base = solve_direct(problem, tol)
        report.constrained_cost = base.cost
        if problem.has_state_constraint:
            cert = certify_extremal(compile_table(problem, base.process), settings, classical=False)
            if cert.multipliers is not None:
                report.mu = cert.multipliers.mu
        for w in schedule.weights:
            pen = penalize(problem, w)
            sol = solve_direct(pen, tol)
            x = sol.process.x
            h = np.einsum("kn,kn->k", problem.D, x) + problem.E
            report.weights.append(w)
            report.costs.append(sol.cost)
            report.hinge_activity.append(float(np.max(np.maximum(h[:-1], 0.0), initial=0.0)))
            report.dual_proxy.append(hinge_duals(pen, sol, w))
    except Exception as exc:  # partial report by contract
        report.error = f"{type(exc).__name__}: {exc}"
    return report
