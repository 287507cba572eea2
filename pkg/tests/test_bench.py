"""Reference solutions, convergence studies, CSV output, and the CLI."""

import numpy as np
import numpy.testing as npt
import pytest

from rosevent.bench import (
    OrderStudyRow,
    ReferenceConfig,
    events_csv,
    mean_observed_order,
    order_study_csv,
    parse_order_study_csv,
    reference_event_state,
    run_order_study,
    trajectory_csv,
)
from rosevent.cli import cli_main
from rosevent.errors import NoEventBeforeHorizon
from rosevent.events import IntegratorConfig, integrate
from rosevent.problems import PiecewiseProblem, builtin, spp_flatten


# --- reference runs ----------------------------------------------------------

def test_reference_event_state_hits_known_crossing():
    t, x = reference_event_state(builtin("tent"), [0.0], 1e-2)
    assert abs(t - 0.5) <= 1e-10
    npt.assert_allclose(x, [0.5], rtol=0, atol=1e-10)


def test_reference_state_stable_under_extra_refinement():
    problem = spp_flatten(builtin("kowalczyk", eps=1e-2))
    t1, x1 = reference_event_state(problem, problem.x0, 1e-3)
    t2, x2 = reference_event_state(problem, problem.x0, 1e-3,
                                   ReferenceConfig(refinement=128))
    assert abs(t1 - t2) <= 1e-9
    assert float(np.linalg.norm(x1 - x2)) <= 1e-8


def test_reference_requires_an_event():
    with pytest.raises(NoEventBeforeHorizon):
        reference_event_state(builtin("linear_test"), [1.0], 0.1)


def test_reference_config_validation():
    with pytest.raises(ValueError, match="refinement"):
        ReferenceConfig(refinement=1)
    with pytest.raises(ValueError, match="h_tol_ref"):
        ReferenceConfig(h_tol_ref=0.0)


# --- order studies -----------------------------------------------------------

def test_order_study_rows_and_factors():
    rows = run_order_study(builtin("kowalczyk", eps=1e-2), tau0=1e-3, halvings=2)
    assert len(rows) == 3
    assert rows[0].reduction_factor is None
    for k, row in enumerate(rows):
        assert row.tau == pytest.approx(1e-3 * 0.5**k)
        assert row.eps == 1e-2
        assert row.global_error > 0.0
    for row in rows[1:]:
        # second-order halving: factors near 4
        assert 2.0 < row.reduction_factor < 8.0
    assert 1.0 < mean_observed_order(rows) < 3.0


def test_order_study_requires_initial_state():
    bare = PiecewiseProblem(
        dim=1,
        f1=lambda x: np.array([1.0]),
        f2=lambda x: np.array([-1.0]),
        h=lambda x: x[0] - 0.5,
    )
    with pytest.raises(ValueError, match="initial state"):
        run_order_study(bare, tau0=0.1, halvings=1)


def test_order_study_requires_events():
    with pytest.raises(NoEventBeforeHorizon):
        run_order_study(builtin("linear_test"), tau0=0.1, halvings=1)


def test_mean_observed_order_needs_factors():
    with pytest.raises(ValueError, match="two rows"):
        mean_observed_order([OrderStudyRow(0.1, None, 1.0, None)])


# --- CSV encodings -----------------------------------------------------------

def test_order_study_csv_round_trip():
    rows = [
        OrderStudyRow(tau=1e-3, eps=1e-2, global_error=3.2e-5, reduction_factor=None),
        OrderStudyRow(tau=5e-4, eps=1e-2, global_error=8.1e-6, reduction_factor=3.95),
        OrderStudyRow(tau=2.5e-4, eps=None, global_error=2.0e-6, reduction_factor=4.05),
    ]
    text = order_study_csv(rows)
    assert text.splitlines()[0] == "tau,epsilon,global_error,reduction_factor"
    assert text == order_study_csv(rows)  # deterministic bytes
    back = parse_order_study_csv(text)
    assert back == rows  # repr round-trip keeps floats exact


def test_order_study_csv_rejects_foreign_header():
    with pytest.raises(ValueError, match="header"):
        parse_order_study_csv("a,b,c\n1,2,3\n")


def test_events_csv_layout():
    problem = builtin("tent")
    result = integrate(problem, [0.0], IntegratorConfig(tau=0.03, t_end=1.0))
    text = events_csv(result.events, problem.dim)
    lines = text.splitlines()
    assert lines[0] == "index,t,theta,direction,residual,x0"
    assert len(lines) == 1 + len(result.events)
    cells = lines[1].split(",")
    assert cells[3] == "R1toR2"
    assert float(cells[1]) == pytest.approx(0.5, abs=1e-9)


def test_trajectory_csv_layout():
    mesh = [(0.0, np.array([1.0, 2.0])), (0.5, np.array([0.5, 1.0]))]
    text = trajectory_csv(mesh)
    assert text.splitlines()[0] == "t,x0,x1"
    assert len(text.splitlines()) == 3
    with pytest.raises(ValueError, match="empty"):
        trajectory_csv([])


# --- command-line interface ----------------------------------------------------

def test_cli_list_problems(capsys):
    assert cli_main(["list-problems"]) == 0
    out = capsys.readouterr().out
    assert "tent" in out and "kowalczyk" in out and "najafi" in out


def test_cli_integrate_reports_termination(capsys):
    code = cli_main(["integrate", "--problem", "tent",
                     "--tau", "0.03", "--t-end", "1.0"])
    assert code == 0
    out = capsys.readouterr().out
    assert "termination: sliding" in out
    assert "event 0: t = 0.5" in out


def test_cli_integrate_writes_files(tmp_path, capsys):
    mesh_file = tmp_path / "mesh.csv"
    events_file = tmp_path / "events.csv"
    code = cli_main(["integrate", "--problem", "kowalczyk", "--eps", "1e-2",
                     "--tau", "1e-3", "--t-end", "0.1", "--max-events", "1",
                     "--out", str(mesh_file), "--events", str(events_file)])
    assert code == 0
    assert mesh_file.read_text().startswith("t,x0,x1")
    event_lines = events_file.read_text().splitlines()
    assert event_lines[0] == "index,t,theta,direction,residual,x0,x1"
    assert len(event_lines) == 2


def test_cli_order_study_writes_csv(tmp_path, capsys):
    out = tmp_path / "study.csv"
    code = cli_main(["order-study", "--problem", "kowalczyk", "--method", "ros2",
                     "--eps", "1e-2", "--tau0", "1e-3", "--halvings", "1",
                     "--out", str(out)])
    assert code == 0
    assert "mean observed order:" in capsys.readouterr().out
    rows = parse_order_study_csv(out.read_text())
    assert len(rows) == 2
    assert rows[0].eps == 1e-2


def test_cli_classify_slow_fast(capsys):
    code = cli_main(["classify", "--problem", "teixeira", "--eps", "1e-2",
                     "--state", "0.005,0,0.0025"])
    assert code == 0
    out = capsys.readouterr().out
    assert "classification: sliding" in out
    assert "pointwise: sliding-repulsive" in out


def test_cli_classify_reports_off_surface_pointwise(capsys):
    code = cli_main(["classify", "--problem", "tent", "--state", "0.3"])
    assert code == 0
    assert "pointwise classification skipped" in capsys.readouterr().out


def test_cli_guard_check(capsys):
    code = cli_main(["guard-check", "--problem", "tent", "--state", "0.3",
                     "--tau", "0.25", "--mode", "ros1"])
    assert code == 0
    out = capsys.readouterr().out
    assert "passed: True" in out
    assert "certified sigma: 0.25" in out


def test_cli_usage_errors_exit_2(capsys):
    assert cli_main(["no-such-command"]) == 2
    assert cli_main(["integrate", "--problem", "tent"]) == 2  # missing --tau
    assert cli_main(["integrate", "--problem", "unknown",
                     "--tau", "0.1", "--t-end", "1.0"]) == 2
    # parameter not accepted by this builtin
    assert cli_main(["integrate", "--problem", "tent", "--eps", "1e-3",
                     "--tau", "0.1", "--t-end", "1.0"]) == 2
    capsys.readouterr()


def test_cli_numerical_failures_exit_1(capsys):
    code = cli_main(["integrate", "--problem", "najafi", "--x0", "1,0.3",
                     "--tau", "0.125", "--t-end", "2.0"])
    assert code == 1
    assert "DomainViolation" in capsys.readouterr().err
