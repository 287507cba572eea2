"""One-sided stepping guards and case-1b step shortening."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from rosevent.errors import MaxIterations, NoBracket, NotOrthogonal
from rosevent.onesided import (
    GuardMode,
    StageCase,
    classify_stage,
    guard_ros1_general,
    guard_ros1_orthogonal,
    guard_ros2_dense,
    resolve_case_1b,
    transversality,
)
from rosevent.problems import PiecewiseProblem, builtin
from rosevent.rosenbrock import GAMMA_ROS2, ros1_step, ros2_step


def scalar_problem(f1, h, *, jac=None, grad=None, hess=None):
    return PiecewiseProblem(
        dim=1, f1=f1, f2=lambda x: np.zeros(1), h=h,
        jac_f1=jac, grad_h=grad, hess_h=hess,
    )


def unit_speed(h, **kw):
    return scalar_problem(lambda x: np.array([1.0]), h,
                          jac=lambda x: np.zeros((1, 1)), **kw)


# Constant drift toward h = 1 - x^2 from x0 = -2: the series coefficients
# are exact because f is constant and h quadratic.
QUADRATIC_H = unit_speed(
    lambda x: 1.0 - x[0] ** 2,
    grad=lambda x: np.array([-2.0 * x[0]]),
    hess=lambda x: np.array([[-2.0]]),
)


def test_transversality_positive_when_approaching():
    problem = builtin("tent")
    assert abs(transversality(problem, [0.3]) - 1.0) <= 1e-9
    # field 2 is not consulted; a state above the level still reports f1
    assert abs(transversality(problem, [0.7]) - 1.0) <= 1e-9


# --- one-stage series guard --------------------------------------------------

def test_series_guard_passes_on_transversal_drift():
    report = guard_ros1_general(builtin("tent"), [0.3], 0.25, 1.0)
    assert report.mode is GuardMode.ROS1_GENERAL
    assert report.passed
    assert report.neumann_ok
    assert report.certified_sigma == 0.25
    assert abs(report.coefficients["a0"] - 1.0) <= 1e-9
    assert abs(report.coefficients["a1"]) <= 1e-6
    assert abs(report.coefficients["a2"]) <= 1e-6


def test_series_guard_certificate_exact_for_quadratic_h():
    # H'(sigma) = 4 - 2*sigma exactly, so the monotone window ends at 2
    report = guard_ros1_general(QUADRATIC_H, [-2.0], 3.0, 1.0)
    assert report.coefficients == {"a0": 4.0, "a1": -2.0, "a2": 0.0}
    assert not report.passed
    assert report.certified_sigma == 2.0
    assert report.neumann_ok

    # inside the window the same certificate passes at full size
    ok = guard_ros1_general(QUADRATIC_H, [-2.0], 0.5, 1.0)
    assert ok.passed
    assert ok.certified_sigma == 0.5


def test_series_guard_abstains_without_neumann_convergence():
    stiff = scalar_problem(
        lambda x: np.array([-100.0 * x[0]]),
        lambda x: x[0] - 2.0,
        jac=lambda x: np.array([[-100.0]]),
    )
    report = guard_ros1_general(stiff, [-1.0], 1.0, 1.0)
    assert not report.neumann_ok
    assert not report.passed
    assert report.certified_sigma == 0.0
    # the coefficients are still reported for diagnostics
    assert report.coefficients["a0"] == pytest.approx(100.0)


# --- one-stage orthogonal guard ----------------------------------------------

def test_orthogonal_guard_accepts_rotation_step_matrix():
    tau, gamma, angle = 0.5, 1.0, 0.3
    Q = np.array([[math.cos(angle), -math.sin(angle)],
                  [math.sin(angle), math.cos(angle)]])
    J = (np.eye(2) - Q) / (gamma * tau)
    b = np.array([1.0, 0.2])
    problem = PiecewiseProblem(
        dim=2,
        f1=lambda x: J @ x + b,
        f2=lambda x: np.zeros(2),
        h=lambda x: x[0] - 1.0,
        jac_f1=lambda x: J,
        grad_h=lambda x: np.array([1.0, 0.0]),
        hess_h=lambda x: np.zeros((2, 2)),
    )
    report = guard_ros1_orthogonal(problem, [0.0, 0.0], tau, gamma)
    assert report.mode is GuardMode.ROS1_ORTHOGONAL
    assert report.coefficients["gram_defect"] <= 1e-12
    assert report.coefficients["b0"] == pytest.approx(1.0)
    # h is linear, so b1 = -2*gamma*hx.(J^T f) and b2 = 0
    expected_b1 = -2.0 * gamma * float((J.T @ b)[0])
    assert report.coefficients["b1"] == pytest.approx(expected_b1, rel=1e-12)
    assert report.coefficients["b2"] == pytest.approx(0.0, abs=1e-12)
    assert report.passed
    assert report.certified_sigma == tau


def test_orthogonal_guard_matches_general_when_jacobian_vanishes():
    ga = guard_ros1_general(QUADRATIC_H, [-2.0], 0.5, 1.0)
    go = guard_ros1_orthogonal(QUADRATIC_H, [-2.0], 0.5, 1.0)
    assert go.coefficients["b0"] == ga.coefficients["a0"]
    assert go.coefficients["b1"] == ga.coefficients["a1"]
    assert go.coefficients["b2"] == ga.coefficients["a2"]
    assert go.passed == ga.passed
    assert go.certified_sigma == ga.certified_sigma


def test_orthogonal_guard_rejects_generic_step_matrix():
    with pytest.raises(NotOrthogonal, match="orthogonality"):
        guard_ros1_orthogonal(builtin("linear_test"), [1.0], 0.5, 1.0)


# --- stage classification ----------------------------------------------------

def test_classify_stage_cases():
    drift = unit_speed(lambda x: x[0] - 0.4)
    step = ros2_step(drift.f1, np.array([0.0]), 1.0, np.zeros((1, 1)))
    # internal stage x0 + k1 reaches 1.0 for the constant field, so both a
    # near and a far level are already trespassed at the internal stage
    assert classify_stage(drift, step) is StageCase.CASE_1B
    assert classify_stage(unit_speed(lambda x: x[0] - 0.9), step) is StageCase.CASE_1B
    assert classify_stage(unit_speed(lambda x: x[0] - 5.0), step) is StageCase.NO_EVENT

    grow = scalar_problem(lambda x: x.copy(), lambda x: x[0] - 2.6,
                          jac=lambda x: np.eye(1))
    gstep = ros2_step(grow.f1, np.array([1.0]), 1.0, np.eye(1))
    # internal stage 1 + sqrt(2) stays below 2.6 but the endpoint 2*sqrt(2)
    # lands past it
    assert classify_stage(grow, gstep) is StageCase.CASE_1A
    assert classify_stage(
        scalar_problem(lambda x: x.copy(), lambda x: x[0] - 5.0,
                       jac=lambda x: np.eye(1)), gstep) is StageCase.NO_EVENT


# --- case-1b shortening ------------------------------------------------------

def test_resolve_case_1b_places_internal_stage_on_surface():
    problem = unit_speed(lambda x: x[0] - 0.4)
    tally: list = []
    before = problem.counters.snapshot()[0]
    sigma, step = resolve_case_1b(problem, [0.0], 1.0, lu_tally=tally)
    after = problem.counters.snapshot()[0]

    assert abs(sigma - 0.4) <= 1e-9
    assert step.tau == sigma
    h_inner = float(problem.h(step.x0 + step.k1))
    assert -2e-12 <= h_inner <= 0.0
    # the completed short step ends at the surface for this field
    assert abs(step.x1[0] - 0.4) <= 1e-9
    # exactly two field evaluations: f(x0) once, then the second stage
    assert after[1] - before[1] == 2
    assert after[2] - before[2] == 0
    assert len(tally) >= 2


def test_resolve_case_1b_accounts_for_jacobian():
    problem = scalar_problem(lambda x: x.copy(), lambda x: x[0] - 1.1,
                             jac=lambda x: np.eye(1))
    sigma, step = resolve_case_1b(problem, [1.0], 1.0)
    # internal stage 1 + sigma/(1 - gamma*sigma) = 1.1
    expected = 0.1 / (1.0 + 0.1 * GAMMA_ROS2)
    assert abs(sigma - expected) <= 1e-9
    assert float(problem.h(step.x0 + step.k1)) <= 0.0


def test_resolve_case_1b_completed_step_can_fall_back_inside():
    problem = scalar_problem(
        lambda x: np.array([1.0 - 4.0 * x[0] ** 2]),
        lambda x: x[0] - 0.35,
        jac=lambda x: np.array([[-8.0 * x[0]]]),
    )
    sigma, step = resolve_case_1b(problem, [0.0], 0.5)
    assert abs(sigma - 0.35) <= 1e-6
    # second stage sees the slower field past the surface and pulls the
    # endpoint back to the safe side
    npt.assert_allclose(step.x1, [0.26425], rtol=0, atol=1e-5)
    assert float(problem.h(step.x1)) < 0.0


def test_resolve_case_1b_requires_actual_trespass():
    problem = unit_speed(lambda x: x[0] - 0.4)
    with pytest.raises(NoBracket, match="below the surface"):
        resolve_case_1b(problem, [0.5], 1.0)
    far = unit_speed(lambda x: x[0] - 5.0)
    with pytest.raises(NoBracket, match="does not trespass"):
        resolve_case_1b(far, [0.0], 1.0)


def test_resolve_case_1b_iteration_budget():
    problem = unit_speed(lambda x: x[0] - 1.0 / 3.0)
    with pytest.raises(MaxIterations):
        resolve_case_1b(problem, [0.0], 1.0, max_iter=3)


# --- two-stage dense-output guard --------------------------------------------

def test_dense_guard_passes_on_monotone_approach():
    problem = unit_speed(lambda x: x[0] - 2.0,
                         grad=lambda x: np.array([1.0]))
    step = ros2_step(problem.f1, np.array([0.0]), 0.8, np.zeros((1, 1)))
    report = guard_ros2_dense(problem, step)
    assert report.mode is GuardMode.ROS2_DENSE
    assert report.passed
    assert report.certified_sigma == step.tau
    assert report.coefficients["n_grid"] == 64.0
    assert report.coefficients["d_min"] == pytest.approx(0.8, rel=1e-12)
    # for a constant field k2 = -k1, so the theta-linear part vanishes
    assert abs(report.coefficients["m2"]) <= 1e-15
    assert report.coefficients["m1"] == pytest.approx(0.8, rel=1e-12)


def test_dense_guard_fails_immediately_on_stalled_flow():
    problem = scalar_problem(lambda x: np.zeros(1), lambda x: x[0] - 0.5,
                             jac=lambda x: np.zeros((1, 1)),
                             grad=lambda x: np.array([1.0]))
    step = ros2_step(problem.f1, np.array([0.0]), 1.0, np.zeros((1, 1)))
    report = guard_ros2_dense(problem, step)
    assert not report.passed
    assert report.certified_sigma == 0.0
    assert report.coefficients["d_min"] == 0.0


def test_dense_guard_catches_double_crossing_endpoint_detection_misses():
    # h = 0.04 - (x - 0.5)^2 dips positive inside the step while both
    # endpoints sit on the negative side
    problem = unit_speed(
        lambda x: 0.04 - (x[0] - 0.5) ** 2,
        grad=lambda x: np.array([-2.0 * (x[0] - 0.5)]),
    )
    step = ros2_step(problem.f1, np.array([0.0]), 0.8, np.zeros((1, 1)))
    assert float(problem.h(step.x0)) < 0.0
    assert float(problem.h(step.x1)) < 0.0  # endpoint comparison sees nothing
    report = guard_ros2_dense(problem, step)
    assert not report.passed
    assert report.coefficients["d_min"] < 0.0
    # d flips sign at x = 0.5, i.e. theta = 0.625: the certificate stops at
    # the last grid point before that
    assert report.certified_sigma == pytest.approx(0.8 * 39.0 / 63.0, rel=1e-12)
    assert 0.0 < report.certified_sigma < step.tau


def test_dense_guard_validates_inputs():
    problem = unit_speed(lambda x: x[0] - 2.0)
    one_stage = ros1_step(problem.f1, np.array([0.0]), 0.5, np.zeros((1, 1)))
    with pytest.raises(ValueError, match="two-stage"):
        guard_ros2_dense(problem, one_stage)
    two_stage = ros2_step(problem.f1, np.array([0.0]), 0.5, np.zeros((1, 1)))
    with pytest.raises(ValueError, match="n_grid"):
        guard_ros2_dense(problem, two_stage, n_grid=1)
