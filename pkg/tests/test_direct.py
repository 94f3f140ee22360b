import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from extremal_certify.direct import (REFINEMENT_COLUMNS, DirectInfeasible, refinement_table,
                                     solve_direct, transcribe, write_csv)
from extremal_certify.instances import bang, riding_constraint, unreachable_endpoint
from extremal_certify.linprog import LpProblem, Optimal, solve_lp
from extremal_certify.model import (Grid, LcProblem, MaxAffine, Polytope, ProblemClassError,
                                    PwaSum, check_admissible, eval_cost)
from extremal_certify.instances import ExampleL
from oracles import random_lc_problem, riding_grid_cost


@pytest.mark.parametrize("N", [16, 32, 64, 128, 256])
def test_riding_cost_matches_exact_grid_value(N):
    sol = solve_direct(riding_constraint(N))
    assert sol.cost == pytest.approx(float(riding_grid_cost(N)), abs=1e-9)
    assert abs(sol.cost - 0.5) <= 5.0 / N
    assert check_admissible(riding_constraint(N), sol.process).admissible


def test_riding_variable_count_is_linear():
    N = 32
    tr = transcribe(riding_constraint(N))
    assert tr.lp.num_vars <= N * (1 + 1 + 1) + 2
    assert np.all(tr.state_rows >= 0)


def test_vacuous_constraint_rows_pruned():
    prob = LcProblem(Grid(0.0, 1.0, 6), [[0.0]], [[1.0]], PwaSum((), 2), Polytope.box([-1.0], [1.0]),
                     Polytope.from_constraints(2, eq=[([1.0, 0.0], 0.0)]),
                     endpoint_cost=PwaSum([MaxAffine.affine([0.0, 1.0])]))
    tr = transcribe(prob)
    assert np.all(tr.state_rows == -1)


def test_bang_control():
    sol = solve_direct(bang(20))
    assert sol.cost == pytest.approx(-1.0)
    assert np.allclose(sol.process.u, -1.0)


def test_unreachable_endpoint_is_infeasible():
    with pytest.raises(DirectInfeasible) as err:
        solve_direct(unreachable_endpoint(16))
    assert err.value.farkas is not None


def test_non_lc_problem_rejected():
    with pytest.raises(ProblemClassError):
        transcribe(ExampleL(Grid(0.0, 1.0, 4)))


def _pinned_value(problem, process) -> float:
    """Minimize the transcription with x and u frozen at ``process``."""
    tr = transcribe(problem)
    lo, hi = tr.lp.lower.copy(), tr.lp.upper.copy()
    for cols, vals in ((tr.x, process.x), (tr.u, process.u)):
        lo[cols.ravel()] = vals.ravel()
        hi[cols.ravel()] = vals.ravel()
    lp = tr.lp
    out = solve_lp(LpProblem(lp.objective, lp.A, lp.senses, lp.rhs, lo, hi), tol=1e-9)
    assert isinstance(out, Optimal)
    return out.value + tr.constant


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_epigraph_exact_and_costs_consistent(seed):
    rng = np.random.default_rng(seed)
    prob = random_lc_problem(rng)
    sol = solve_direct(prob)
    assert check_admissible(prob, sol.process).admissible
    assert eval_cost(prob, sol.process) == pytest.approx(sol.cost, abs=1e-8)
    assert _pinned_value(prob, sol.process) == pytest.approx(eval_cost(prob, sol.process), abs=1e-8)
    # the state duals are supported on nodes where the constraint is active
    h = np.einsum("kn,kn->k", prob.D, sol.process.x) + prob.E
    assert np.all(np.abs(sol.state_duals[h < -1e-6 * (1 + np.abs(prob.E))]) <= 1e-9)
    assert np.all(sol.state_duals <= 1e-12)


def test_refinement_csv():
    rows = refinement_table(riding_constraint(8), [16, 32])
    buf = io.StringIO()
    write_csv(buf, rows, REFINEMENT_COLUMNS)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "N,cost,max_h_violation,runtime"
    assert lines[1].startswith("16,0.5625,0,") or lines[1].startswith("16,0.56249999")
    assert float(lines[2].split(",")[1]) == pytest.approx(float(riding_grid_cost(32)))
    assert rows[0]["cost"] >= rows[1]["cost"]


def test_grid_oracle_closed_form():
    from fractions import Fraction
    for N in (4, 16, 100):
        assert riding_grid_cost(N) == Fraction(1, 2) + Fraction(1, N)
