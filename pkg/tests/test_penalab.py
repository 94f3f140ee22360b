import io

import numpy as np
import pytest

from extremal_certify.instances import riding_constraint, unreachable_endpoint
from extremal_certify.model import (Grid, LcProblem, MaxAffine, Polytope, Process, PwaSum,
                                    eval_cost)
from extremal_certify.penalab import (CSV_COLUMNS, DEFAULT_WEIGHTS, PenaltySchedule, penalize,
                                      run_schedule)


def test_default_schedule_is_six_powers_of_four():
    assert DEFAULT_WEIGHTS == (1.0, 4.0, 16.0, 64.0, 256.0, 1024.0)
    assert PenaltySchedule().weights == DEFAULT_WEIGHTS


@pytest.mark.parametrize("text", ["1,1,2", "4,2", "0,1", "-1,2", "", "1,inf"])
def test_bad_schedules_rejected(text):
    with pytest.raises(ValueError):
        PenaltySchedule.parse(text)


def test_penalize_drops_constraint_and_adds_hinge():
    prob = riding_constraint(8)
    pen = penalize(prob, 1.0)
    assert not pen.has_state_constraint
    assert len(pen.running[0].terms) == len(prob.running[0].terms) + 1
    with pytest.raises(ValueError):
        penalize(prob, 0.0)


def test_hinge_values():
    N, w = 16, 3.0
    prob = riding_constraint(N)
    pen = penalize(prob, w)
    inside = Process(np.linspace(1.0, 0.2, N + 1)[:, None], np.zeros((N, 1)))
    assert eval_cost(pen, inside) == pytest.approx(eval_cost(prob, inside))
    # h = 0.5 on the unit-length arc [1, 2)
    x = np.zeros((N + 1, 1))
    x[N // 2:] = -0.5
    arc = Process(x, np.zeros((N, 1)))
    assert eval_cost(pen, arc) - eval_cost(prob, arc) == pytest.approx(0.5 * w)


def test_riding_schedule_converges():
    rep = run_schedule(riding_constraint(32), PenaltySchedule((1, 4, 16, 64, 256)))
    assert rep.complete and rep.nondecreasing and rep.lower_bound and rep.gaps_shrinking
    assert rep.gaps[-1] <= 1e-3
    # the hinge duals at the largest weight carry the certifier's measure
    proxy = rep.dual_proxy[-1]
    assert np.all(proxy[: 32 // 2] <= 1e-9)
    assert abs(proxy.sum() - rep.mu.sum()) <= 2.0 / 32 + 1e-9


def test_inactive_constraint_gives_constant_values():
    base = riding_constraint(16)
    prob = LcProblem(base.grid, [[0.0]], [[1.0]], base.running[0], base.controls[0],
                     base.endpoint_set, state_constraint=([-1.0], -10.0))
    rep = run_schedule(prob)
    assert rep.complete
    assert np.allclose(rep.costs, rep.constrained_cost, atol=1e-12)
    assert np.allclose(rep.gaps, 0.0, atol=1e-12)


def test_failure_gives_partial_report():
    rep = run_schedule(unreachable_endpoint(8))
    assert not rep.complete and "DirectInfeasible" in rep.error
    assert rep.costs == []


def test_csv_layout():
    rep = run_schedule(riding_constraint(8), PenaltySchedule((1, 2)))
    buf = io.StringIO()
    rep.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3 and lines[1].startswith("1,")
