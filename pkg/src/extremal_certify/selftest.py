"""A compact property battery runnable without pytest."""
from __future__ import annotations

import itertools
import time
from typing import Callable

import numpy as np

from . import certify, direct, instances, penalab
from .linprog import GE, LE, Infeasible, LpProblem, Optimal, solve_lp, verify_farkas
from .model import Grid, compile_table, eval_cost


def enumerate_vertices_optimum(lp: LpProblem) -> float | None:
    """Minimum over basic feasible solutions of a bounded inequality LP."""
    rows = [(lp.A[i], lp.rhs[i]) if lp.senses[i] == LE else (-lp.A[i], -lp.rhs[i])
            for i in range(lp.num_rows)]
    n = lp.num_vars
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lp.upper[j]):
            rows.append((e, lp.upper[j]))
        if np.isfinite(lp.lower[j]):
            rows.append((-e, -lp.lower[j]))
    C = np.array([r[0] for r in rows])
    d = np.array([r[1] for r in rows])
    best = None
    for idx in itertools.combinations(range(len(rows)), n):
        sub = C[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        v = np.linalg.solve(sub, d[list(idx)])
        if np.all(C @ v <= d + 1e-9 * (1 + np.abs(d))):
            val = float(lp.objective @ v)
            best = val if best is None else min(best, val)
    return best


def random_bounded_lp(rng: np.random.Generator, max_vars: int = 3, max_rows: int = 6) -> LpProblem:
    n = int(rng.integers(1, max_vars + 1))
    k = int(rng.integers(1, max_rows + 1))
    A = rng.normal(size=(k, n)).round(3)
    x0 = rng.uniform(-1, 1, size=n)
    rhs = A @ x0 + rng.uniform(0.0, 1.0, size=k)
    senses = [LE] * k
    for i in range(k):
        if rng.random() < 0.3:
            A[i], rhs[i], senses[i] = -A[i], -rhs[i], GE
    lo = -rng.uniform(1.0, 3.0, size=n)
    hi = rng.uniform(1.0, 3.0, size=n)
    return LpProblem(rng.normal(size=n).round(3), A, senses, rhs, lo, hi)


def random_infeasible_lp(rng: np.random.Generator, n: int = 3, k: int = 4) -> LpProblem:
    """A feasible system plus one aggregated row violated everywhere on it."""
    A = rng.normal(size=(k, n))
    rhs = A @ rng.normal(size=n) + rng.uniform(0.1, 1.0, size=k)
    w = rng.uniform(0.2, 1.0, size=k)
    agg = w @ A
    bad = float(w @ rhs) + rng.uniform(0.5, 2.0)
    return LpProblem(np.zeros(n), np.vstack([A, -agg]), [LE] * (k + 1),
                     np.append(rhs, -bad))


def _lp_oracle(count: int, seed: int) -> str:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        lp = random_bounded_lp(rng)
        out = solve_lp(lp)
        ref = enumerate_vertices_optimum(lp)
        if ref is None:
            assert isinstance(out, Infeasible) and verify_farkas(lp, out.farkas)
            continue
        assert isinstance(out, Optimal), out
        worst = max(worst, abs(out.value - ref))
        assert worst <= 1e-8, worst
    return f"{count} LPs, worst gap {worst:.1e}"


def _farkas_roundtrip(count: int, seed: int) -> str:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        lp = random_infeasible_lp(rng)
        out = solve_lp(lp)
        assert isinstance(out, Infeasible) and verify_farkas(lp, out.farkas)
    return f"{count} certificates verified"


def _example_l(N: int) -> str:
    prob = instances.ExampleL(Grid(0.0, 1.0, N))
    cert = certify.certify_extremal(compile_table(prob, prob.zero_candidate()))
    assert cert.verdict == certify.NOT_EXTREMAL
    assert all(r.verified for r in cert.farkas_bundle)
    assert cert.classical.feasible and np.max(np.abs(cert.classical.multipliers.p)) <= 1e-7
    cost = eval_cost(prob, prob.improving_process(0.2))
    assert abs(cost + 0.15) <= 0.01, cost
    return f"NotExtremal with {len(cert.farkas_bundle)} certificates, family cost {cost:.4f}"


def _riding(N: int) -> str:
    prob = instances.riding_constraint(N)
    sol = direct.solve_direct(prob)
    assert abs(sol.cost - 0.5) <= 5.0 / N
    cert = certify.certify_extremal(compile_table(prob, sol.process))
    assert cert.verdict == certify.NORMAL_EXTREMAL and cert.weierstrass.passed
    suff = certify.sufficiency_certificate(prob, sol.process, cert.multipliers)
    return f"cost {sol.cost:.6f}, {suff.verdict}, gap {suff.gap:.1e}"


def _penalty(N: int) -> str:
    rep = penalab.run_schedule(instances.riding_constraint(N))
    assert rep.complete and rep.nondecreasing and rep.lower_bound
    assert rep.gaps[-1] <= 1e-3
    return f"final gap {rep.gaps[-1]:.1e}"


CHECKS: list[tuple[str, Callable[[], str]]] = [
    ("lp-oracle", lambda: _lp_oracle(200, 1)),
    ("farkas-roundtrip", lambda: _farkas_roundtrip(50, 2)),
    ("example-l", lambda: _example_l(64)),
    ("riding-sufficiency", lambda: _riding(32)),
    ("penalty-schedule", lambda: _penalty(32)),
]


def run(out=print) -> bool:
    ok = True
    for name, fn in CHECKS:
        start = time.perf_counter()
        try:
            detail = fn()
            status = "PASS"
        except Exception as exc:  # report every failure, keep going
            detail = f"{type(exc).__name__}: {exc}"
            status = "FAIL"
            ok = False
        out(f"{status} {name} ({time.perf_counter() - start:.2f}s): {detail}")
    return ok
