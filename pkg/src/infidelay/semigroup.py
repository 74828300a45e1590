"""The solution semigroup S_t on the history phase space.

[S_t phi](theta) = x(t + theta) for t + theta > 0 and phi(t + theta)
otherwise.  Because trajectory pieces and history cores share the same
local-coordinate representation, S_t phi is assembled by *splicing* --
shifting breakpoints and reusing coefficient rows verbatim -- so applying
the semigroup introduces no interpolation error beyond the solve itself.

The checks in this module are the verification surface: the composition
law S_t S_s = S_{t+s}, strong continuity at t -> 0+, the integral (mild)
form of the equation driven by the right-hand-side functional, and the
pointwise generator-domain condition phi'(0) = L(phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import CoefficientFamily
from .history import (
    HistoryFunction,
    L_functional,
    history_difference,
    membership_in_F,
    p_seminorm,
    sup_norm_k,
)
from .numerics import GAUSS4_NODES, GAUSS4_WEIGHTS, sup_abs_pieces
from .stepper import ProblemSpec, SolverConfig, Trajectory, solve


@dataclass(frozen=True)
class SemigroupOrbit:
    """A problem together with its computed trajectory up to some horizon."""

    problem: ProblemSpec
    trajectory: Trajectory


def orbit(
    problem: ProblemSpec, horizon: float, config: Optional[SolverConfig] = None
) -> SemigroupOrbit:
    return SemigroupOrbit(problem, solve(problem, horizon, config))


def apply_semigroup(orb: SemigroupOrbit, t: float) -> HistoryFunction:
    """The shifted state S_t phi as a history function.

    t = 0 returns phi itself.  For t > 0 the new core is phi's core with
    breakpoints translated by -t, followed by the trajectory pieces on
    [0, t] (coefficient rows reused bitwise), and the tail is phi's tail
    shifted in time.
    """
    if t < 0.0:
        raise ValueError(f"semigroup times must be >= 0, got {t}")
    phi = orb.problem.history
    traj = orb.trajectory
    if t == 0.0:
        return phi
    if t > traj.horizon + 1e-9:
        raise ValueError(f"orbit computed to {traj.horizon}, cannot shift by {t}")
    t = min(t, traj.horizon)
    inner = traj.grid[(traj.grid > 1e-15) & (traj.grid < t - 1e-15)]
    n_piece = len(inner) + 1  # pieces of the trajectory below t
    bp = np.concatenate([phi.breakpoints - t, inner - t, [0.0]])
    coeffs = np.concatenate([phi.coeffs, traj.pieces[:n_piece]])
    return HistoryFunction(bp, coeffs, phi.tail.shifted(t))


# ---------------------------------------------------------------------------
# composition law
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemigroupLawRow:
    k: int
    sup_diff: float
    p_diff: float


@dataclass(frozen=True)
class SemigroupLawReport:
    """Seminorm distances between S_t S_s phi and S_{t+s} phi."""

    t: float
    s: float
    rows: tuple
    max_discrepancy: float

    def to_json_dict(self) -> dict:
        return {
            "t": self.t,
            "s": self.s,
            "rows": [
                {"k": r.k, "sup_diff": r.sup_diff, "p_diff": r.p_diff} for r in self.rows
            ],
            "max_discrepancy": self.max_discrepancy,
        }


def check_semigroup_law(
    problem: ProblemSpec,
    t: float,
    s: float,
    k_list=(1, 2, 3),
    config: Optional[SolverConfig] = None,
    eps_tail: float = 1e-10,
) -> SemigroupLawReport:
    """Compare S_{t+s} phi against S_t (S_s phi) in sup and p seminorms.

    The left side comes from one solve to t+s; the right side re-solves
    from the intermediate state S_s phi.  Agreement is limited only by the
    integrator, so the discrepancy should sit at the solver-error scale.
    """
    if t < 0.0 or s < 0.0:
        raise ValueError("semigroup times must be >= 0")
    orb = orbit(problem, t + s if t + s > 0 else problem.family.delays.tau1, config)
    lhs = apply_semigroup(orb, t + s)
    psi = apply_semigroup(orb, s)
    orb2 = orbit(ProblemSpec(problem.a, problem.family, psi), max(t, 1e-12), config)
    rhs = apply_semigroup(orb2, t)
    diff = history_difference(lhs, rhs)
    rows = []
    worst = 0.0
    for k in k_list:
        sd = sup_norm_k(diff, k)
        pv = p_seminorm(diff, problem.family, k, eps_tail)
        pd = pv.upper()
        rows.append(SemigroupLawRow(k, sd, pd))
        worst = max(worst, sd, pd)
    return SemigroupLawReport(t, s, tuple(rows), worst)


# ---------------------------------------------------------------------------
# strong continuity
# ---------------------------------------------------------------------------


def _traj_slope_sup(traj: Trajectory, lo: float, hi: float) -> float:
    dcf = np.zeros_like(traj.pieces)
    dcf[:, 0] = traj.pieces[:, 1]
    dcf[:, 1] = 2.0 * traj.pieces[:, 2]
    dcf[:, 2] = 3.0 * traj.pieces[:, 3]
    return sup_abs_pieces(traj.grid, dcf, lo, hi)


@dataclass(frozen=True)
class StrongContinuityReport:
    k: int
    times: tuple
    distances: tuple
    p_distances: tuple
    lipschitz: float
    threshold: float
    monotone: bool
    final_ok: bool
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "times": list(self.times),
            "distances": list(self.distances),
            "p_distances": list(self.p_distances),
            "lipschitz": self.lipschitz,
            "threshold": self.threshold,
            "monotone": self.monotone,
            "final_ok": self.final_ok,
            "passed": self.passed,
        }


def check_strong_continuity(
    problem: ProblemSpec,
    k: int,
    t_sequence,
    config: Optional[SolverConfig] = None,
    threshold: Optional[float] = None,
) -> StrongContinuityReport:
    """sup-norm distance of S_t phi from phi along t decreasing to 0.

    The distances d(t) = sup_{[-k,0]} |S_t phi - phi| must be non-increasing
    as t shrinks (tolerance 1e-10) and the final one must fall below the
    threshold, defaulting to 1e-2 * (1 + Lip) with Lip an exact Lipschitz
    bound for the solution and the history core.
    """
    ts = [float(v) for v in t_sequence]
    if not ts or any(v <= 0.0 for v in ts) or any(b >= a for a, b in zip(ts, ts[1:])):
        raise ValueError("need a strictly decreasing sequence of positive times")
    orb = orbit(problem, ts[0], config)
    phi = problem.history
    eps_tail = (config.eps_tail_seminorm if config is not None else 1e-10)
    dists = []
    p_dists = []
    for t in ts:
        diff = history_difference(apply_semigroup(orb, t), phi)
        dists.append(sup_norm_k(diff, k))
        p_dists.append(p_seminorm(diff, problem.family, k, eps_tail).upper())
    lip = max(_traj_slope_sup(orb.trajectory, 0.0, ts[0]), phi.core_slope_sup())
    thr = threshold if threshold is not None else 1e-2 * (1.0 + lip)
    monotone = all(b <= a + 1e-10 for a, b in zip(dists, dists[1:]))
    final_ok = dists[-1] <= thr
    return StrongContinuityReport(
        k=k,
        times=tuple(ts),
        distances=tuple(dists),
        p_distances=tuple(p_dists),
        lipschitz=lip,
        threshold=thr,
        monotone=monotone,
        final_ok=final_ok,
        passed=monotone and final_ok,
    )


# ---------------------------------------------------------------------------
# mild-solution identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MildSolutionReport:
    max_residual: float
    tolerance: float
    n_points: int
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "n_points": self.n_points,
            "passed": self.passed,
        }


def check_mild_solution(
    problem: ProblemSpec,
    t_grid,
    theta_grid,
    config: Optional[SolverConfig] = None,
    tolerance: float = 1e-6,
    eps_l: float = 1e-10,
) -> MildSolutionReport:
    """Verify [S_t phi](theta) = phi(0) + integral_0^{t+theta} L(S_s phi) ds.

    For t+theta <= 0 the identity degenerates to [S_t phi](theta) =
    phi(t+theta), which the splicing makes structurally exact; for
    t+theta > 0 the integral of the functional along the orbit is
    accumulated with Gauss quadrature on the trajectory's own grid (the
    integrand is smooth inside those intervals).
    """
    ts = sorted(float(v) for v in t_grid)
    thetas = [float(v) for v in theta_grid]
    if ts and ts[0] < 0.0:
        raise ValueError("t grid must be nonnegative")
    orb = orbit(problem, max(ts[-1], problem.family.delays.tau1), config)
    traj = orb.trajectory
    phi = problem.history
    phi0 = phi.value_at_zero()
    fam = problem.family
    a = problem.a

    def L_at(svals: np.ndarray) -> np.ndarray:
        return np.array(
            [L_functional(apply_semigroup(orb, float(sv)), fam, a, eps_l).value for sv in svals]
        )

    r_max = max((t + th for t in ts for th in thetas), default=0.0)
    grid = traj.grid[traj.grid <= r_max + 1e-12]
    prefix = [0.0]
    for j in range(len(grid) - 1):
        g0, g1 = float(grid[j]), float(grid[j + 1])
        sv = g0 + (g1 - g0) * GAUSS4_NODES
        prefix.append(prefix[-1] + (g1 - g0) * float(np.dot(GAUSS4_WEIGHTS, L_at(sv))))

    def integral_to(r: float) -> float:
        j = int(np.clip(np.searchsorted(grid, r, side="right") - 1, 0, len(grid) - 1))
        base = prefix[j]
        g0 = float(grid[j])
        if r <= g0:
            return base
        sv = g0 + (r - g0) * GAUSS4_NODES
        return base + (r - g0) * float(np.dot(GAUSS4_WEIGHTS, L_at(sv)))

    worst = 0.0
    count = 0
    for t in ts:
        psi = apply_semigroup(orb, t)
        for th in thetas:
            r = t + th
            count += 1
            if r <= 0.0:
                res = abs(psi.evaluate(th) - phi.evaluate(r))
            else:
                res = abs(psi.evaluate(th) - phi0 - integral_to(r))
            worst = max(worst, res)
    return MildSolutionReport(worst, tolerance, count, worst <= tolerance)


# ---------------------------------------------------------------------------
# generator domain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorDomainReport:
    verdict: str  # "in-domain" | "not-in-domain" | "inconclusive" | "not-applicable"
    violation: float
    l_value: float
    l_error_bound: float
    slope_at_zero: float
    derivative_membership: str

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "violation": self.violation,
            "l_value": self.l_value,
            "l_error_bound": self.l_error_bound,
            "slope_at_zero": self.slope_at_zero,
            "derivative_membership": self.derivative_membership,
        }


def check_generator_domain(
    phi: HistoryFunction,
    family: CoefficientFamily,
    a: float,
    tol: float = 1e-6,
    k_max: int = 3,
    eps_tail: float = 1e-10,
) -> GeneratorDomainReport:
    """Test the domain condition: phi is C^1, phi' lies in the phase space,
    and phi'(0) equals the functional L(phi) = a phi(0) + sum b_i phi(-tau_i).

    Histories without a usable derivative (non-C^1 cores or structurally
    underivable tails) report "not-applicable" rather than a fake verdict.
    """
    dphi = phi.derivative()
    if dphi is None:
        return GeneratorDomainReport("not-applicable", math.nan, math.nan, math.nan, math.nan, "unknown")
    lv = L_functional(phi, family, a, eps=min(1e-12, tol * 1e-3))
    slope = phi.slope_at_zero()
    violation = abs(slope - lv.value)
    member = membership_in_F(dphi, family, k_max, eps_tail).verdict
    if member == "not-member":
        verdict = "not-in-domain"
    elif member == "inconclusive":
        verdict = "inconclusive"
    else:
        verdict = "in-domain" if violation <= tol + lv.error_bound else "not-in-domain"
    return GeneratorDomainReport(
        verdict=verdict,
        violation=violation,
        l_value=lv.value,
        l_error_bound=lv.error_bound,
        slope_at_zero=slope,
        derivative_membership=member,
    )
