"""One-sided stepping guards for fields with model singularities.

Setting: the state sits in region 1 (h < 0) and moves toward the surface
h = 0, beyond which field 1 may be undefined (square roots, fractional
powers, table lookups). The guards below certify, from quantities available
at the step start, that h increases monotonically along the step family, so
the surface is approached from one side and never evaluated across.

For the one-stage method the certificate truncates the power series of
dH/dsigma, H(sigma) = h(x1(sigma)), keeping the terms through sigma^2 and
replacing the signs of the unknown coefficients by their worst case. The
general variant needs the Neumann series of (I - gamma*sigma*J)^(-1) to
converge (spectral radius of gamma*tau*J below one); the orthogonal variant
replaces the series by the identity (I - gamma*tau*J)^(-1) =
(I - gamma*tau*J)^T, valid when the step matrix is orthogonal.

For the two-stage method the guard checks positivity of

    d(theta) = grad h(X1(theta)) . dX1/dtheta(theta)

on a uniform theta grid of the dense output, and reports the two minima
m1 = min grad h(X1(theta)) . c*((2-6*gamma)*k1 - 2*gamma*k2) and
m2 = min grad h(X1(theta)) . 2*c*(k1 + k2), the theta-independent and
theta-linear parts of d, as diagnostics.

A two-stage step whose internal stage x0 + k1 would already trespass the
surface (case 1.b) is shortened before the second field evaluation ever
happens: bisection on g(sigma) = h(x0 + k1(sigma)) finds the largest safe
size, using one factorization per trial and no field evaluations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import linalg, problems, rosenbrock
from .errors import MaxIterations, NoBracket, NotOrthogonal

ORTHOGONALITY_TOL = 1e-8
DEFAULT_GUARD_GRID = 64


class GuardMode(enum.Enum):
    ROS1_GENERAL = "ros1"
    ROS1_ORTHOGONAL = "ros1-orth"
    ROS2_DENSE = "ros2-dense"


class StageCase(enum.Enum):
    NO_EVENT = "no-event"
    CASE_1A = "1a"      # internal stage on the safe side, endpoint at or past the surface
    CASE_1B = "1b"      # internal stage already past the surface


@dataclass(frozen=True)
class GuardReport:
    mode: GuardMode
    coefficients: dict
    passed: bool
    certified_sigma: float
    neumann_ok: bool


def transversality(problem: problems.PiecewiseProblem, x) -> float:
    """grad h . f1 at x: the speed at which the flow of field 1 approaches
    the surface. Positive means approach."""
    x = np.asarray(x, dtype=float)
    return float(problems.h_gradient(problem, x) @ problems.eval_field(problem, 1, x))


def _certified_sigma(a0: float, r1: float, r2: float, tau: float) -> float:
    # Largest sigma <= tau with a0 - sigma*r1 - sigma^2*r2 > 0.
    if a0 <= 0.0:
        return 0.0
    if r2 > 0.0:
        root = (-r1 + np.sqrt(r1 * r1 + 4.0 * r2 * a0)) / (2.0 * r2)
    elif r1 > 0.0:
        root = a0 / r1
    else:
        return tau
    return min(tau, float(root))


def guard_ros1_general(problem: problems.PiecewiseProblem, x0, tau: float,
                       gamma: float) -> GuardReport:
    """Truncated-series monotonicity certificate for the one-stage step.

    Coefficients of dH/dsigma = a0 + a1*sigma + a2*sigma^2 + ... are formed
    from f1, its Jacobian, and the gradient/Hessian of h at x0; the guard
    passes when a0 > 0 and the worst-case truncation
    a0 - tau*max(0, -a1) - tau^2*max(0, -a2) stays positive. Requires the
    Neumann series to converge; when the spectral-radius bound of
    gamma*tau*J reaches one the guard abstains (neumann_ok False, not
    passed).
    """
    x0 = np.asarray(x0, dtype=float)
    f = problems.eval_field(problem, 1, x0)
    hx = problems.h_gradient(problem, x0)
    hxx = problems.h_hessian(problem, x0)
    J = problems.field_jacobian(problem, 1, x0)

    neumann_ok = linalg.spectral_radius_bound(gamma * tau * J) < 1.0

    Jf = J @ f
    hxxf = hxx @ f
    a0 = float(hx @ f)
    a1 = float(f @ hxxf) + 2.0 * gamma * float(hx @ Jf)
    a2 = (
        3.0 * gamma * gamma * float(hx @ (J @ Jf))
        + 2.0 * gamma * float(f @ (hxx @ Jf))
        + gamma * float(Jf @ hxxf)
    )
    r1 = max(0.0, -a1)
    r2 = max(0.0, -a2)
    passed = bool(neumann_ok and a0 > 0.0 and a0 - tau * r1 - tau * tau * r2 > 0.0)
    return GuardReport(
        mode=GuardMode.ROS1_GENERAL,
        coefficients={"a0": a0, "a1": a1, "a2": a2},
        passed=passed,
        certified_sigma=_certified_sigma(a0, r1, r2, tau) if neumann_ok else 0.0,
        neumann_ok=neumann_ok,
    )


def guard_ros1_orthogonal(problem: problems.PiecewiseProblem, x0, tau: float,
                          gamma: float) -> GuardReport:
    """Variant of the one-stage guard for an orthogonal step matrix.

    Replaces the Neumann series by the transpose identity, so no spectral
    condition enters. Raises NotOrthogonal unless
    (I - gamma*tau*J)^T (I - gamma*tau*J) = I within ORTHOGONALITY_TOL in
    the induced infinity norm.
    """
    x0 = np.asarray(x0, dtype=float)
    J = problems.field_jacobian(problem, 1, x0)
    M = rosenbrock.step_matrix(J, tau, gamma)
    gram_defect = M.T @ M - np.eye(M.shape[0])
    defect = float(np.max(np.sum(np.abs(gram_defect), axis=1)))
    if defect > ORTHOGONALITY_TOL:
        raise NotOrthogonal(
            f"step matrix fails orthogonality check: defect {defect:.3e}"
        )

    f = problems.eval_field(problem, 1, x0)
    hx = problems.h_gradient(problem, x0)
    hxx = problems.h_hessian(problem, x0)

    Jtf = J.T @ f
    hxxf = hxx @ f
    b0 = float(hx @ f)
    b1 = float(f @ hxxf) - 2.0 * gamma * float(hx @ Jtf)
    b2 = 2.0 * gamma * float(f @ (hxx @ Jtf)) + gamma * float(hxxf @ Jtf)
    # dH/dsigma truncates to b0 + sigma*b1 - sigma^2*b2 here, so a positive
    # b2 is the harmful sign.
    r1 = max(0.0, -b1)
    r2 = max(0.0, b2)
    passed = bool(b0 > 0.0 and b0 - tau * r1 - tau * tau * r2 > 0.0)
    return GuardReport(
        mode=GuardMode.ROS1_ORTHOGONAL,
        coefficients={"b0": b0, "b1": b1, "b2": b2, "gram_defect": defect},
        passed=passed,
        certified_sigma=_certified_sigma(b0, r1, r2, tau),
        neumann_ok=True,
    )


def classify_stage(problem: problems.PiecewiseProblem, step: rosenbrock.RosenbrockStep) -> StageCase:
    """Sort a completed two-stage step taken from region 1 into the stage
    cases that drive one-sided handling."""
    h_inner = float(problem.h(step.x0 + step.k1))
    if h_inner > 0.0:
        return StageCase.CASE_1B
    if float(problem.h(step.x1)) >= 0.0:
        return StageCase.CASE_1A
    return StageCase.NO_EVENT


def resolve_case_1b(problem: problems.PiecewiseProblem, x0, tau: float,
                    h_tol: float = 1e-12, max_iter: int = 200,
                    lu_tally: list | None = None):
    """Shrink a two-stage step whose internal stage trespasses the surface.

    Bisection on g(sigma) = h(x0 + k1(sigma)) over (0, tau]: each trial
    refactors (I - gamma*sigma*J) and recomputes k1 from the already-known
    f(x0); the field is never evaluated at a new point during the search.
    Returns (sigma_bar, step) where the completed two-stage step of size
    sigma_bar has its internal stage on the safe side (g(sigma_bar) <= 0,
    |g| <= h_tol at termination).

    Raises NoBracket when the full-size internal stage does not actually
    trespass, and MaxIterations when the bisection budget runs out.
    """
    x0 = np.asarray(x0, dtype=float)
    gamma = rosenbrock.GAMMA_ROS2
    fx0 = problems.eval_field(problem, 1, x0)
    J = problems.field_jacobian(problem, 1, x0)

    def k1_of(sigma: float) -> np.ndarray:
        factors = linalg.lu_factor(rosenbrock.step_matrix(J, sigma, gamma))
        if lu_tally is not None:
            lu_tally.append(1)
        return linalg.lu_solve(factors, sigma * fx0)

    g_lo = float(problem.h(x0))
    if g_lo >= 0.0:
        raise NoBracket(f"x0 must start below the surface, h(x0) = {g_lo}")
    if float(problem.h(x0 + k1_of(tau))) <= 0.0:
        raise NoBracket("internal stage at full size does not trespass")

    lo, hi = 0.0, tau
    sigma_bar = None
    k1_bar = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        k1_mid = k1_of(mid)
        g_mid = float(problem.h(x0 + k1_mid))
        if g_mid == 0.0 or (abs(g_mid) <= h_tol and g_mid < 0.0):
            sigma_bar, k1_bar = mid, k1_mid
            break
        if g_mid > 0.0:
            hi = mid
        else:
            lo, g_lo, k1_bar = mid, g_mid, k1_mid
        if hi - lo <= 4.0 * np.finfo(float).eps * tau and k1_bar is not None \
                and abs(g_lo) <= h_tol:
            sigma_bar = lo
            break
    if sigma_bar is None or sigma_bar <= 0.0:
        raise MaxIterations(
            f"could not place the internal stage within {h_tol} of the surface"
        )

    field = problems.field_fn(problem, 1)
    factors = linalg.lu_factor(rosenbrock.step_matrix(J, sigma_bar, gamma))
    if lu_tally is not None:
        lu_tally.append(1)
    k1 = linalg.lu_solve(factors, sigma_bar * fx0)
    step = rosenbrock.ros2_finish(field, x0, sigma_bar, J, factors, k1, field_id=1)
    return sigma_bar, step


def guard_ros2_dense(problem: problems.PiecewiseProblem, step: rosenbrock.RosenbrockStep,
                     n_grid: int = DEFAULT_GUARD_GRID) -> GuardReport:
    """Grid positivity check of d(theta) = grad h(X1(theta)) . dX1/dtheta.

    Passing certifies (at grid resolution) that h is strictly increasing
    along the dense output, so the located surface hit is the unique one
    inside the step and the approach is one-sided. certified_sigma reports
    tau scaled by the last grid point before d turns non-positive.
    """
    if step.stages != 2:
        raise ValueError("dense-output guard applies to two-stage steps")
    if n_grid < 2:
        raise ValueError(f"n_grid must be at least 2, got {n_grid}")
    c = step.c
    gamma = step.gamma
    term_const = c * ((2.0 - 6.0 * gamma) * step.k1 - 2.0 * gamma * step.k2)
    term_linear = 2.0 * c * (step.k1 + step.k2)

    thetas = np.linspace(0.0, 1.0, n_grid)
    d_min = np.inf
    m1 = np.inf
    m2 = np.inf
    first_bad = None
    for i, theta in enumerate(thetas):
        hx = problems.h_gradient(problem, rosenbrock.dense_eval(step, float(theta)))
        d = float(hx @ rosenbrock.dense_derivative(step, float(theta)))
        d_min = min(d_min, d)
        m1 = min(m1, float(hx @ term_const))
        m2 = min(m2, float(hx @ term_linear))
        if d <= 0.0 and first_bad is None:
            first_bad = i
    passed = first_bad is None
    if passed:
        certified = step.tau
    elif first_bad == 0:
        certified = 0.0
    else:
        certified = step.tau * float(thetas[first_bad - 1])
    return GuardReport(
        mode=GuardMode.ROS2_DENSE,
        coefficients={"d_min": d_min, "m1": m1, "m2": m2, "n_grid": float(n_grid)},
        passed=passed,
        certified_sigma=certified,
        neumann_ok=True,
    )
