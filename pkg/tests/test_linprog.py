import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from extremal_certify.linprog import (EQ, GE, LE, FarkasCertificate, Infeasible, LpBuilder,
                                      LpProblem, MalformedLpError, NumericalFailure, Optimal,
                                      Unbounded, dual_objective, is_improving_ray, solve_lp,
                                      verify_farkas)
from extremal_certify.selftest import random_bounded_lp, random_infeasible_lp
from oracles import bfs_optimum


def test_single_active_bound():
    out = solve_lp(LpProblem.from_rows([1.0], [([1.0], GE, 3.0)]))
    assert isinstance(out, Optimal)
    assert out.x[0] == pytest.approx(3.0)
    assert out.value == pytest.approx(3.0)


def test_contradictory_rows_give_summing_certificate():
    lp = LpProblem.from_rows([0.0], [([1.0], LE, -1.0), ([1.0], GE, 1.0)])
    out = solve_lp(lp)
    assert isinstance(out, Infeasible)
    assert out.farkas.rows[0] == pytest.approx(out.farkas.rows[1])
    assert out.farkas.rows[0] > 0
    assert verify_farkas(lp, out.farkas)


def test_verify_farkas_weight_examples():
    lp = LpProblem.from_rows([0.0], [([1.0], LE, -1.0), ([1.0], GE, 1.0)])
    assert verify_farkas(lp, [1.0, 1.0])
    assert not verify_farkas(lp, [1.0, 0.0])


def test_polygon_value_matches_vertex_enumeration():
    lp = LpProblem.from_rows([-1.0, -1.0], [([1.0, 1.0], LE, 1.0)], [(0, 1), (0, 1)])
    out = solve_lp(lp)
    # the five basic feasible points of this polygon, enumerated by hand
    corners = [(0, 0), (1, 0), (0, 1), (1, 0), (0, 1)]
    assert out.value == pytest.approx(min(-a - b for a, b in corners))
    assert bfs_optimum(lp) == pytest.approx(-1.0)


def test_duals_follow_rhs_sensitivity_convention():
    lp = LpProblem.from_rows([1.0, 1.0], [([1.0, 0.0], GE, 2.0), ([0.0, 1.0], LE, -1.0),
                                           ([1.0, 1.0], EQ, 0.5)])
    out = solve_lp(lp)
    assert isinstance(out, Optimal)
    assert out.value == pytest.approx(0.5)
    assert dual_objective(lp, out.duals) == pytest.approx(out.value)


def test_unbounded_ray_is_improving():
    lp = LpProblem.from_rows([-1.0, 0.0], [([1.0, -1.0], LE, 1.0)], [(0, None), (0, None)])
    out = solve_lp(lp)
    assert isinstance(out, Unbounded)
    assert is_improving_ray(lp, out.ray)


@pytest.mark.parametrize("kwargs", [
    dict(objective=[1.0, 2.0], A=[[1.0]], senses=[LE], rhs=[1.0]),
    dict(objective=[1.0], A=[[1.0]], senses=[LE, LE], rhs=[1.0]),
    dict(objective=[1.0], A=[[1.0]], senses=["<"], rhs=[1.0]),
    dict(objective=[1.0], A=[[1.0]], senses=[LE], rhs=[1.0], lower=[2.0], upper=[1.0]),
    dict(objective=[np.nan], A=[[1.0]], senses=[LE], rhs=[1.0]),
])
def test_malformed_lp_rejected(kwargs):
    with pytest.raises(MalformedLpError):
        LpProblem(**kwargs)


def test_farkas_dimension_mismatch_rejected():
    lp = LpProblem.from_rows([0.0], [([1.0], LE, -1.0), ([1.0], GE, 1.0)])
    with pytest.raises(MalformedLpError):
        verify_farkas(lp, [1.0])
    with pytest.raises(MalformedLpError):
        verify_farkas(lp, FarkasCertificate(np.ones(2), np.zeros(3), np.zeros(1)))


def test_iteration_limit_is_explicit_failure():
    lp = LpProblem.from_rows([-1.0, -1.0, -1.0],
                             [([1.0, 2.0, 1.0], LE, 4.0), ([3.0, 1.0, 1.0], LE, 5.0)],
                             [(0, None)] * 3)
    with pytest.raises(NumericalFailure):
        solve_lp(lp, max_iter=1)


def test_equality_weights_may_be_negative():
    lp = LpProblem.from_rows([0.0], [([1.0], EQ, 1.0), ([1.0], EQ, 2.0)])
    out = solve_lp(lp)
    assert isinstance(out, Infeasible)
    assert verify_farkas(lp, out.farkas)
    assert verify_farkas(lp, [1.0, -1.0])
    assert not verify_farkas(lp, [-1.0, 1.0])


def test_bound_only_infeasibility_uses_bound_weights():
    lp = LpProblem.from_rows([1.0], [([1.0], LE, 0.0)], [(1.0, 2.0)])
    out = solve_lp(lp)
    assert isinstance(out, Infeasible)
    assert out.farkas.lower[0] > 0
    assert verify_farkas(lp, out.farkas)


def test_builder_blocks_and_tags():
    b = LpBuilder()
    x = b.add_vars("x", (2, 2), lower=0.0, upper=1.0, cost=-1.0)
    b.add_row({x[0, 0]: 1.0, x[1, 1]: 1.0}, LE, 1.0, "pair")
    lp = b.build()
    assert lp.num_vars == 4 and lp.num_rows == 1
    assert b.row_tags == ["pair"]
    assert solve_lp(lp).value == pytest.approx(-3.0)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_lp_matches_enumeration_and_duality(seed):
    lp = random_bounded_lp(np.random.default_rng(seed))
    out = solve_lp(lp)
    ref = bfs_optimum(lp)
    if ref is None:
        assert isinstance(out, Infeasible) and verify_farkas(lp, out.farkas)
        return
    assert isinstance(out, Optimal)
    assert out.value == pytest.approx(ref, abs=1e-8)
    assert dual_objective(lp, out.duals) == pytest.approx(out.value, abs=1e-8)
    assert np.max(lp.row_violation(out.x), initial=0.0) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 6))
def test_farkas_roundtrip_on_aggregated_infeasible_lps(seed, n, k):
    lp = random_infeasible_lp(np.random.default_rng(seed), n, k)
    out = solve_lp(lp)
    assert isinstance(out, Infeasible)
    assert verify_farkas(lp, out.farkas)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_verify_farkas_rejects_feasible_systems(seed):
    rng = np.random.default_rng(seed)
    lp = random_bounded_lp(rng)
    if bfs_optimum(lp) is None:
        return
    w = rng.uniform(0, 1, size=lp.num_rows)
    assert not verify_farkas(lp, FarkasCertificate(w, rng.uniform(0, 1, lp.num_vars),
                                                   rng.uniform(0, 1, lp.num_vars)))
