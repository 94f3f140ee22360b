import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from extremal_certify.instances import ExampleL
from extremal_certify.linprog import LE, LpBuilder, Optimal, solve_lp
from extremal_certify.model import Grid, LcProblem, MaxAffine, Polytope, PwaSum
from extremal_certify.subdiff import (GeneratorOverflow, GeneratorSet, PreconditionError,
                                      maxaffine_subdiff, normal_cone, pwasum_subdiff,
                                      state_subdiff)

ABS = MaxAffine([[1.0], [-1.0]], [0.0, 0.0])


def as_set(gs):
    return sorted(tuple(r) for r in np.round(gs.points, 12) + 0.0)


def test_abs_at_kink_and_smooth_point():
    assert as_set(maxaffine_subdiff(ABS, [0.0])) == [(-1.0,), (1.0,)]
    assert as_set(maxaffine_subdiff(ABS, [2.0])) == [(1.0,)]


def test_inactive_piece_dropped():
    f = MaxAffine([[2.0], [-1.0], [1.0]], [1.0, 1.0, 0.0])
    assert as_set(maxaffine_subdiff(f, [0.0])) == [(-1.0,), (2.0,)]


def test_sum_of_two_abs():
    g = pwasum_subdiff(PwaSum([ABS, ABS]), [0.0])
    assert as_set(g) == [(-2.0,), (0.0,), (2.0,)]
    assert g.contains([1.5]) and not g.contains([2.5])


def test_abs_plus_linear_shifts_hull():
    g = pwasum_subdiff(PwaSum([ABS, MaxAffine.affine([3.0])]), [0.0])
    assert as_set(g) == [(2.0,), (4.0,)]


def test_overflow_is_explicit():
    f = PwaSum([ABS] * 13)
    with pytest.raises(GeneratorOverflow, match="merge terms"):
        pwasum_subdiff(f, [0.0], max_generators=4096)


def test_box_normal_cones():
    box = Polytope.box([-1.0], [1.0])
    assert normal_cone(box, [0.0]).is_empty
    assert as_set(normal_cone(box, [1.0])) == [(1.0,)]
    with pytest.raises(PreconditionError):
        normal_cone(box, [1.5])


def test_box_vertex_gives_all_unit_normals():
    m = 3
    g = normal_cone(Polytope.box(-np.ones(m), np.ones(m)), np.ones(m))
    assert as_set(g) == sorted(tuple(r) for r in np.eye(m))
    assert g.conic


def test_simplex_vertex_cone():
    W = Polytope.from_constraints(2, le=[([-1.0, 0.0], 0.0), ([0.0, -1.0], 0.0)],
                                  eq=[([1.0, 1.0], 1.0)])
    assert as_set(normal_cone(W, [1.0, 0.0])) == [(-1.0, -1.0), (0.0, -1.0), (1.0, 1.0)]


def test_state_subdiff_modes():
    prob = ExampleL(Grid(0.0, 1.0, 8))
    for mode in ("bar", "sharp"):
        assert as_set(state_subdiff(prob, 3, [0.7], mode)) == [(-1.0,)]
    vacuous = LcProblem(Grid(0.0, 1.0, 4), [[0.0]], [[1.0]], PwaSum((), 2),
                        Polytope.box([-1.0], [1.0]), Polytope.box([-5, -5], [5, 5]))
    assert state_subdiff(vacuous, 0, [0.0], "sharp").is_empty
    assert as_set(state_subdiff(vacuous, 0, [0.0], "bar")) == [(0.0,)]
    plane = LcProblem(Grid(0.0, 1.0, 4), np.zeros((2, 2)), np.eye(2), PwaSum((), 4),
                      Polytope.box([-1, -1], [1, 1]), Polytope.box(-5 * np.ones(4), 5 * np.ones(4)),
                      state_constraint=([1.0, 0.0], -3.0))
    assert as_set(state_subdiff(plane, 2, [0.4, -0.2], "sharp")) == [(1.0, 0.0)]
    with pytest.raises(ValueError):
        state_subdiff(plane, 2, [0.0, 0.0], "limiting")


def test_example_l_kink_generators():
    # w1 |x - u1| at x = u1 = 0, w1 = 1: gradients (±1, ∓1) in (x, u1), zero on w1
    g = ExampleL._kink_term(0.0, 0.0, 1.0, 0, 1e-9)
    joint = sorted(tuple(r) for r in g[:, [0, 1, 3]] + 0.0)
    assert joint == [(-1.0, 1.0, 0.0), (1.0, -1.0, 0.0)]


def test_generator_set_shape_checked():
    with pytest.raises(ValueError):
        GeneratorSet(np.zeros(3))


def _random_maxaffine(rng, dim):
    k = int(rng.integers(1, 5))
    G = rng.normal(size=(k, dim)).round(2)
    # steep pieces make the function coercive so a minimizer exists
    G = np.vstack([G, 5 * np.eye(dim), -5 * np.eye(dim)])
    c = np.concatenate([rng.normal(size=k).round(2), -10 * np.ones(2 * dim)])
    return MaxAffine(G, c)


def _minimize(f: MaxAffine):
    b = LpBuilder()
    z = b.add_vars("z", f.dim, lower=-100.0, upper=100.0)
    t = b.add_vars("t", 1, cost=1.0)
    for g, c in zip(f.gradients, f.offsets):
        row = {int(z[i]): g[i] for i in range(f.dim)}
        row[int(t[0])] = -1.0
        b.add_row(row, LE, -c)
    out = solve_lp(b.build())
    assert isinstance(out, Optimal)
    return out.x[: f.dim]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_zero_in_subdifferential_at_minimizer(seed, dim):
    f = _random_maxaffine(np.random.default_rng(seed), dim)
    zstar = _minimize(f)
    assert maxaffine_subdiff(f, zstar, tol=1e-6).contains(np.zeros(dim), tol=1e-7)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-9, 1.0), st.floats(0.0, 1.0))
def test_shrinking_tolerance_never_adds_generators(seed, tol, shrink):
    rng = np.random.default_rng(seed)
    f = _random_maxaffine(rng, 2)
    z = rng.normal(size=2)
    big = set(as_set(maxaffine_subdiff(f, z, tol)))
    small = set(as_set(maxaffine_subdiff(f, z, tol * shrink)))
    assert small <= big


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sum_generators_decompose_termwise(seed):
    rng = np.random.default_rng(seed)
    terms = [MaxAffine.abs_of(rng.integers(-2, 3, size=2).astype(float)) for _ in range(3)]
    z = rng.integers(-1, 2, size=2).astype(float)
    parts = [maxaffine_subdiff(t, z).points for t in terms]
    sums = {tuple(np.round(a + b + c, 12) + 0.0) for a in parts[0] for b in parts[1] for c in parts[2]}
    assert set(as_set(pwasum_subdiff(PwaSum(terms), z))) == sums


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=3))
def test_modes_coincide_when_gradient_nonzero(d):
    d = np.array(d)
    if not np.any(d != 0):
        d[0] = 1.0
    n = d.size
    prob = LcProblem(Grid(0.0, 1.0, 3), np.zeros((n, n)), np.eye(n), PwaSum((), 2 * n),
                     Polytope.box(-np.ones(n), np.ones(n)),
                     Polytope.box(-5 * np.ones(2 * n), 5 * np.ones(2 * n)),
                     state_constraint=(d, -1.0))
    x = np.zeros(n)
    assert as_set(state_subdiff(prob, 1, x, "bar")) == as_set(state_subdiff(prob, 1, x, "sharp"))
