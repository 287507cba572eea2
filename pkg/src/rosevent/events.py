"""Event-driven fixed-step integration with dense-output event location.

The driver advances one branch field with a fixed step. After each step the
sign of h at the endpoint is compared with the sign at the start: a change
brackets a surface hit, which is then located by root finding **on the
dense output** of the already-computed step, costing h evaluations only
(no field evaluations, no linear solves). The step is truncated at the hit,
the hit is classified (crossing / sliding / tangential), and on a crossing
the integration restarts from the located state with the other field and a
fresh full step.

An endpoint that lands inside the surface band |h| <= sigma_tol is taken as
an event at theta = 1 without root finding. Root finding keeps the located
state on the departing side of the surface, so fields that cannot be
evaluated past the surface never are.

The naive variant skips location entirely: the crossing step is accepted
as-is and the field switches at the next mesh point. It exists to measure
the order reduction this causes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import filippov, onesided, problems, rosenbrock
from .errors import DomainViolation, MaxIterations, NoBracket, SingularMatrix


class RootFinder(enum.Enum):
    BISECTION = "bisection"
    SECANT = "secant"


class Direction(enum.Enum):
    R1_TO_R2 = "R1toR2"
    R2_TO_R1 = "R2toR1"


class Termination(enum.Enum):
    REACHED_T_END = "t_end"
    SLIDING = "sliding"
    GUARD_FAILURE = "guard-failure"
    SOLVER_FAILURE = "solver-failure"
    TANGENTIAL = "tangential"
    MAX_EVENTS = "max-events"


@dataclass(frozen=True)
class IntegratorConfig:
    tau: float
    t_end: float
    method: rosenbrock.RosMethod = rosenbrock.ROS2
    theta_tol: float = 1e-12
    h_tol: float = 1e-12
    max_bisect: int = 200
    root_finder: RootFinder = RootFinder.BISECTION
    locate_events: bool = True
    guard_mode: onesided.GuardMode | None = None
    guard_grid: int = onesided.DEFAULT_GUARD_GRID
    max_events: int | None = None
    sigma_tol: float = problems.SIGMA_TOL
    classify_tol: float = filippov.TANGENT_TOL


@dataclass(frozen=True)
class EventRecord:
    """One surface hit: where inside the step, when, and how well resolved.

    converged is False only when root finding hit its iteration cap; the
    record then carries the best bracket midpoint.
    """

    step_index: int
    theta_star: float
    t_star: float
    x_star: np.ndarray
    residual: float
    direction: Direction
    root_iterations: int
    converged: bool = True


@dataclass
class IntegrationStats:
    f_evals: dict
    domain_violations: dict
    lu_factorizations: int = 0
    steps: int = 0


@dataclass(frozen=True)
class TrajectoryResult:
    mesh: list
    events: list
    stats: IntegrationStats
    termination: Termination
    guard_reports: list = field(default_factory=list)


def detect_sign_change(h0: float, h1: float) -> bool:
    """Strict sign change between two h values; exact zeros do not count
    (the surface-band logic owns those)."""
    return (h0 < 0.0 < h1) or (h1 < 0.0 < h0)


def locate_event(step: rosenbrock.RosenbrockStep, h, cfg: IntegratorConfig,
                 step_index: int = 0, t_offset: float = 0.0,
                 h0: float | None = None, h1: float | None = None) -> EventRecord:
    """Find the surface hit inside a step on its dense output.

    Bisection (default) or secant with bisection fallback on
    g(theta) = h(X1(theta)) over [0, 1]. Terminates when |g| <= h_tol with
    the iterate on the departing side, or when the bracket width drops to
    theta_tol (the departing-side endpoint is returned then, so the located
    state never trespasses the surface). Costs h evaluations only.
    """
    if h0 is None:
        h0 = float(h(rosenbrock.dense_eval(step, 0.0)))
    if h1 is None:
        h1 = float(h(rosenbrock.dense_eval(step, 1.0)))
    if not detect_sign_change(h0, h1):
        raise NoBracket(f"no sign change across the step: h0={h0:g}, h1={h1:g}")
    neg_at_lo = h0 < 0.0

    lo, hi = 0.0, 1.0
    g_lo, g_hi = h0, h1
    iterations = 0
    theta = residual = None
    converged = True
    want_secant = cfg.root_finder is RootFinder.SECANT
    while iterations < cfg.max_bisect:
        mid = None
        # secant candidates alternate with plain bisection so the bracket
        # keeps provably shrinking
        if want_secant and iterations % 2 == 0 and g_hi != g_lo:
            cand = hi - g_hi * (hi - lo) / (g_hi - g_lo)
            if lo < cand < hi:
                mid = cand
        if mid is None:
            mid = 0.5 * (lo + hi)
        iterations += 1
        g_mid = float(h(rosenbrock.dense_eval(step, mid)))
        if g_mid == 0.0 or (abs(g_mid) <= cfg.h_tol and (g_mid < 0.0) == neg_at_lo):
            theta, residual = mid, abs(g_mid)
            break
        if (g_mid < 0.0) == neg_at_lo:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
        if hi - lo <= cfg.theta_tol:
            theta, residual = lo, abs(g_lo)
            break
    if theta is None:
        theta = 0.5 * (lo + hi)
        residual = abs(float(h(rosenbrock.dense_eval(step, theta))))
        converged = False
    return EventRecord(
        step_index=step_index,
        theta_star=float(theta),
        t_star=t_offset + float(theta) * step.tau,
        x_star=rosenbrock.dense_eval(step, float(theta)),
        residual=float(residual),
        direction=Direction.R1_TO_R2 if neg_at_lo else Direction.R2_TO_R1,
        root_iterations=iterations,
        converged=converged,
    )


def _validate_config(cfg: IntegratorConfig) -> None:
    if not cfg.tau > 0.0:
        raise ValueError(f"tau must be positive, got {cfg.tau}")
    if not cfg.t_end > 0.0:
        raise ValueError(f"t_end must be positive, got {cfg.t_end}")
    gm = cfg.guard_mode
    if gm is onesided.GuardMode.ROS2_DENSE and cfg.method.stages != 2:
        raise ValueError("the dense-output guard requires the two-stage method")
    if gm in (onesided.GuardMode.ROS1_GENERAL, onesided.GuardMode.ROS1_ORTHOGONAL) \
            and cfg.method.stages != 1:
        raise ValueError("series guards apply to the one-stage method only")


def _classify_event(problem: problems.PiecewiseProblem, record: EventRecord,
                    cfg: IntegratorConfig) -> filippov.Kind:
    # the located state is on the surface by construction; widen the band
    # check to its recorded residual
    sigma_tol = max(cfg.sigma_tol, 2.0 * record.residual)
    spp = problem.source_spp
    if spp is not None:
        coeffs = filippov.filippov_coeffs(spp, record.x_star)
        kind = filippov.classify_spp(coeffs, spp.eps, cfg.classify_tol)
        if kind is filippov.Kind.SLIDING:
            kind = filippov.classify_general(
                problem, record.x_star, cfg.classify_tol, sigma_tol
            ).kind
        return kind
    return filippov.classify_general(
        problem, record.x_star, cfg.classify_tol, sigma_tol
    ).kind


def integrate(problem: problems.PiecewiseProblem, x0, cfg: IntegratorConfig) -> TrajectoryResult:
    """Integrate from t = 0 with event handling per the module docstring.

    The initial state must lie strictly off the surface band. Crossings
    switch the active field and continue; sliding and tangential hits stop
    the integration, as do solver and guard failures (reported in
    `termination`, not raised). DomainViolation from a field evaluated
    outside its domain propagates to the caller with step context.
    """
    _validate_config(cfg)
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (problem.dim,):
        raise ValueError(f"x0 must have shape ({problem.dim},), got {x.shape}")
    h_at_x = float(problem.h(x))
    if abs(h_at_x) <= cfg.sigma_tol:
        raise ValueError("initial state lies on the switching surface")
    active = 1 if h_at_x < 0.0 else 2
    h_sign_neg = h_at_x < 0.0

    f_before, v_before = problem.counters.snapshot()
    lu_count = 0
    steps_taken = 0
    t = 0.0
    mesh = [(0.0, x.copy())]
    events: list = []
    guard_reports: list = []
    termination = None
    step_index = 0
    guard = cfg.guard_mode

    while True:
        remaining = cfg.t_end - t
        if remaining <= 4.0 * np.spacing(max(1.0, abs(cfg.t_end))):
            termination = Termination.REACHED_T_END
            break
        tau_eff = min(cfg.tau, remaining)

        try:
            J = problems.field_jacobian(problem, active, x)
            if guard is onesided.GuardMode.ROS2_DENSE and active == 1:
                # guarded construction: inspect the internal stage before
                # the second field evaluation can trespass the surface
                fx0 = problems.eval_field(problem, 1, x)
                factors = rosenbrock.ros2_factor(J, tau_eff)
                lu_count += 1
                k1 = rosenbrock.ros2_stage1(factors, fx0, tau_eff)
                if float(problem.h(x + k1)) > 0.0:
                    tally: list = []
                    tau_eff, step = onesided.resolve_case_1b(
                        problem, x, tau_eff,
                        h_tol=cfg.h_tol, max_iter=cfg.max_bisect, lu_tally=tally,
                    )
                    lu_count += len(tally)
                else:
                    step = rosenbrock.ros2_finish(
                        problems.field_fn(problem, 1), x, tau_eff, J, factors, k1,
                        field_id=1,
                    )
            else:
                fld = problems.field_fn(problem, active)
                if cfg.method.stages == 2:
                    step = rosenbrock.ros2_step(fld, x, tau_eff, J, field_id=active)
                else:
                    step = rosenbrock.ros1_step(fld, x, tau_eff, J, field_id=active)
                lu_count += 1
        except SingularMatrix:
            termination = Termination.SOLVER_FAILURE
            break
        except (NoBracket, MaxIterations):
            # the one-sided step-shortening machinery failed
            termination = Termination.GUARD_FAILURE
            break
        except DomainViolation as exc:
            raise DomainViolation(
                f"{exc} (step {step_index}, t = {t:.12g}, field {active})"
            ) from exc

        steps_taken += 1
        h_new = float(problem.h(step.x1))
        on_band = abs(h_new) <= cfg.sigma_tol
        crossed = detect_sign_change(-1.0 if h_sign_neg else 1.0, h_new)

        if not (on_band or crossed):
            t += tau_eff
            x = step.x1
            mesh.append((t, x))
            h_at_x = h_new
            h_sign_neg = h_new < 0.0
            step_index += 1
            continue

        if not cfg.locate_events:
            # naive handling: accept the crossing step, switch at the mesh point
            direction = Direction.R1_TO_R2 if h_sign_neg else Direction.R2_TO_R1
            record = EventRecord(step_index, 1.0, t + tau_eff, step.x1,
                                 abs(h_new), direction, 0, True)
            events.append(record)
            t += tau_eff
            x = step.x1
            mesh.append((t, x))
            h_at_x = h_new
            h_sign_neg = h_new < 0.0
            active = 2 if direction is Direction.R1_TO_R2 else 1
            step_index += 1
            if cfg.max_events is not None and len(events) >= cfg.max_events:
                termination = Termination.MAX_EVENTS
                break
            continue

        if guard is not None and active == 1:
            if guard is onesided.GuardMode.ROS2_DENSE:
                rep = onesided.guard_ros2_dense(problem, step, cfg.guard_grid)
            elif guard is onesided.GuardMode.ROS1_GENERAL:
                rep = onesided.guard_ros1_general(problem, x, tau_eff, cfg.method.gamma)
            else:
                rep = onesided.guard_ros1_orthogonal(problem, x, tau_eff, cfg.method.gamma)
            guard_reports.append((step_index, rep))
            if not rep.passed:
                termination = Termination.GUARD_FAILURE
                break

        if on_band:
            direction = Direction.R1_TO_R2 if h_sign_neg else Direction.R2_TO_R1
            record = EventRecord(step_index, 1.0, t + tau_eff, step.x1,
                                 abs(h_new), direction, 0, True)
        else:
            # the stored h at x can sit inside the band with an unreliable
            # sign right after an event; hand the locator a sign-consistent
            # start value
            if h_at_x != 0.0 and (h_at_x < 0.0) == h_sign_neg:
                h0_eff = h_at_x
            else:
                h0_eff = (-1.0 if h_sign_neg else 1.0) * cfg.sigma_tol
            record = locate_event(step, problem.h, cfg, step_index, t,
                                  h0=h0_eff, h1=h_new)

        events.append(record)
        if record.t_star > mesh[-1][0]:
            mesh.append((record.t_star, record.x_star))
        if cfg.max_events is not None and len(events) >= cfg.max_events:
            termination = Termination.MAX_EVENTS
            break

        kind = _classify_event(problem, record, cfg)
        if kind is filippov.Kind.CROSSING:
            active = 2 if record.direction is Direction.R1_TO_R2 else 1
            x = record.x_star
            t = record.t_star
            h_at_x = float(problem.h(x))
            h_sign_neg = active == 1
            step_index += 1
            continue
        if kind in (filippov.Kind.SLIDING, filippov.Kind.SLIDING_ATTRACTIVE,
                    filippov.Kind.SLIDING_REPULSIVE):
            termination = Termination.SLIDING
            break
        termination = Termination.TANGENTIAL
        break

    f_after, v_after = problem.counters.snapshot()
    stats = IntegrationStats(
        f_evals={k: f_after[k] - f_before[k] for k in f_after},
        domain_violations={k: v_after[k] - v_before[k] for k in v_after},
        lu_factorizations=lu_count,
        steps=steps_taken,
    )
    return TrajectoryResult(
        mesh=mesh, events=events, stats=stats,
        termination=termination, guard_reports=guard_reports,
    )


def integrate_naive(problem: problems.PiecewiseProblem, x0,
                    cfg: IntegratorConfig) -> TrajectoryResult:
    """Same loop as integrate but without event location or guards: the
    crossing step is accepted unchanged and the field switches only at the
    next mesh point. Bit-identical to integrate on event-free problems."""
    return integrate(problem, x0, replace(cfg, locate_events=False, guard_mode=None))
