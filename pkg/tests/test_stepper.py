"""Forward solver: marching, forcing, certificates, and trajectory containers."""

import json
import math

import numpy as np
import pytest

import infidelay as fd
from infidelay import (
    CoefficientFamily,
    DelaySchedule,
    NotInPhaseSpaceError,
    ProblemSpec,
    SolverConfig,
    compare_trajectories,
    estimate_certificate,
    forcing,
    history_preset,
    solve,
    step_interval,
)
from conftest import classic_exact, classic_problem

DS = DelaySchedule()


def pure_exponential_problem() -> ProblemSpec:
    return ProblemSpec(1.0, CoefficientFamily.finite_support([0.0], DS), history_preset("constant"))


def geometric_problem(a: float = 1.0) -> ProblemSpec:
    return ProblemSpec(a, CoefficientFamily.geometric(1.0, 0.5, DS), history_preset("constant"))


# ---------------------------------------------------------------------------
# forcing
# ---------------------------------------------------------------------------


def test_forcing_classic_first_and_second_window():
    traj = solve(classic_problem(), 2.0)
    # F(t) = -x(t-1): the history while t < 1, then -(1-(t-1)) on [1, 2]
    assert forcing(traj, 0.5) == -1.0
    assert abs(forcing(traj, 1.5) - (-classic_exact(0.5))) < 1e-12


def test_forcing_geometric_certified_sum():
    traj = solve(geometric_problem(), 1.0)
    # at t=0 every delayed value is phi(-tau_i)=1: F(0) = sum 2^-i = 1
    assert abs(forcing(traj, 0.0) - 1.0) <= 1e-9


# ---------------------------------------------------------------------------
# solve: frozen solutions
# ---------------------------------------------------------------------------


def test_solve_constant_is_stationary():
    phi5 = fd.history_from_core([-8.0, 0.0], [[5.0, 0, 0, 0]], fd.ConstantTail(5.0))
    traj = solve(ProblemSpec(0.0, CoefficientFamily.finite_support([0.0], DS), phi5), 3.0)
    ts = np.linspace(0.0, 3.0, 301)
    assert np.max(np.abs(traj.eval(ts) - 5.0)) == 0.0


def test_solve_pure_exponential():
    traj = solve(pure_exponential_problem(), 2.0)
    assert abs(traj.eval(1.0) - math.e) < 1e-9
    assert abs(traj.eval(2.0) - math.e**2) < 1e-8


def test_solve_classic_matches_piecewise_polynomial():
    traj = solve(classic_problem(), 3.0)
    ts = np.linspace(0.0, 3.0, 601)
    exact = np.array([classic_exact(t) for t in ts])
    assert np.max(np.abs(traj.eval(ts) - exact)) < 1e-8
    assert abs(traj.eval(1.0)) < 1e-10
    assert abs(traj.eval(2.0) + 0.5) < 1e-10


def test_solve_geometric_against_independent_oracle():
    problem = geometric_problem()
    traj = solve(problem, 3.0)
    ref = fd.oracle_solve(problem, 3.0, fd.OracleConfig(h_fine=0.002))
    ts = np.linspace(0.0, 3.0, 400)
    assert np.max(np.abs(traj.eval(ts) - ref.eval(ts))) < 1e-6


def test_solve_rejects_history_outside_phase_space():
    bad = ProblemSpec(0.0, CoefficientFamily.power_law(1.0, 1.0, DS), history_preset("constant"))
    with pytest.raises(NotInPhaseSpaceError):
        solve(bad, 1.0)


def test_solve_is_deterministic():
    a = solve(geometric_problem(), 3.0)
    b = solve(geometric_problem(), 3.0)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.derivs, b.derivs)
    assert np.array_equal(a.pieces, b.pieces)


def test_solve_step_refinement_agrees():
    p = geometric_problem()
    coarse = solve(p, 3.0, SolverConfig(h=0.05))
    fine = solve(p, 3.0, SolverConfig(h=0.05 / 3.0))
    ts = np.linspace(0.0, 3.0, 500)
    assert np.max(np.abs(coarse.eval(ts) - fine.eval(ts))) < 1e-5


def test_solver_config_validation_and_clamping():
    with pytest.raises(ValueError):
        SolverConfig(quad="midpoint")
    traj = solve(classic_problem(), 2.0, SolverConfig(h=5.0))
    assert traj.h_used <= DS.tau1
    simpson = solve(classic_problem(), 2.0, SolverConfig(quad="simpson"))
    assert abs(simpson.eval(2.0) + 0.5) < 1e-6


def test_trajectory_eval_domain():
    traj = solve(classic_problem(), 2.0)
    with pytest.raises(ValueError):
        traj.eval(2.5)
    assert traj.eval(-2.5) == 1.0  # delegates to the history
    assert traj.eval(0.0) == 1.0


def test_trajectory_derivative_satisfies_the_equation():
    # x'(t) = a x(t) + F(t) should hold along the dense output
    p = geometric_problem(a=-0.3)
    traj = solve(p, 2.0)
    for t in np.linspace(0.05, 1.95, 23):
        resid = traj.eval_derivative(t) - (p.a * traj.eval(t) + forcing(traj, t))
        assert abs(resid) < 1e-7


# ---------------------------------------------------------------------------
# interval stepping
# ---------------------------------------------------------------------------


def test_step_interval_extends_bit_identically():
    p = classic_problem()
    base = solve(p, 1.0)
    extended = step_interval(base, 2)  # through the window [2*tau_1, 3*tau_1]
    direct = solve(p, 3.0)
    assert extended.horizon == direct.horizon
    assert compare_trajectories(extended, direct, (0.0, 3.0)) == 0.0


def test_step_interval_short_circuits_when_covered():
    traj = solve(classic_problem(), 3.0)
    again = step_interval(traj, 2)
    assert again.horizon == traj.horizon
    assert np.array_equal(again.values, traj.values)


def test_step_interval_rejects_bad_k():
    traj = solve(classic_problem(), 1.0)
    with pytest.raises(ValueError):
        step_interval(traj, -1)


# ---------------------------------------------------------------------------
# a-priori estimate certificates
# ---------------------------------------------------------------------------


def test_estimate_pure_exponential_bound_is_e():
    traj = solve(pure_exponential_problem(), 1.0)
    cert = estimate_certificate(traj, 1)
    # B_1 = e^{1*1} * 1 + phi1(1,1) * 0 = e, and x(1) = e meets it exactly
    assert abs(cert.bound - math.e) < 1e-12
    assert cert.valid
    assert abs(cert.observed - math.e) < 1e-9


def test_estimate_classic_chain_frozen():
    traj = solve(classic_problem(), 2.0)
    c1 = estimate_certificate(traj, 1)
    assert c1.bound == 2.0 and c1.b_chain == (2.0,)
    c2 = estimate_certificate(traj, 2)
    assert c2.b_chain == (2.0, 6.0)
    assert c2.bound == 6.0
    assert abs(c2.observed - 1.0) < 1e-12
    assert c2.valid
    assert c2.q_value == 1.0
    assert c2.constant == 6.0
    assert [n for (n, _) in c2.levels] == ["sup_norm[1]", "p[1]", "p[2]"]


def test_estimate_requires_covering_trajectory():
    traj = solve(classic_problem(), 1.0)
    with pytest.raises(ValueError):
        estimate_certificate(traj, 2)


def test_estimate_levels_track_deeper_sup_norm_when_needed():
    fam = CoefficientFamily.geometric(1.0, 0.5, DelaySchedule(c=0.5))
    p = ProblemSpec(0.0, fam, history_preset("exp-decay"))
    traj = solve(p, 2.0 * fam.delays.tau1)
    cert = estimate_certificate(traj, 2)
    names = [n for (n, _) in cert.levels]
    # m(2) = 2 here, so the window-2 sup norm joins the level list
    assert "sup_norm[2]" in names
    assert cert.valid


def test_estimate_json_round_trip():
    traj = solve(classic_problem(), 2.0)
    d = estimate_certificate(traj, 2).to_json_dict()
    blob = json.loads(json.dumps(d))
    assert blob["valid"] is True
    assert blob["b_chain"] == [2.0, 6.0]
    assert {row["name"] for row in blob["levels"]} == {"sup_norm[1]", "p[1]", "p[2]"}


# ---------------------------------------------------------------------------
# container round trips
# ---------------------------------------------------------------------------


def test_trajectory_csv_round_trip(tmp_path):
    traj = solve(classic_problem(), 2.0)
    path = tmp_path / "traj.csv"
    traj.write_csv(str(path))
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    assert rows.shape[1] == 3
    np.testing.assert_allclose(rows[:, 0], traj.grid, atol=1e-10)
    np.testing.assert_allclose(rows[:, 1], traj.values, atol=1e-10)
    np.testing.assert_allclose(rows[:, 2], traj.derivs, atol=1e-10)


def test_trajectory_json_dict():
    traj = solve(classic_problem(), 1.0)
    d = traj.to_json_dict()
    assert set(d.keys()) == {"grid", "values", "derivs", "horizon"}
    assert d["horizon"] == 1.0
    assert len(d["grid"]) == len(d["values"]) == len(d["derivs"])
