"""Independent reference integrator used to cross-check the main stepper.

Classical RK4 on x' = a x + F(t) with its own dense output and its own
fixed truncation of the delayed sum.  It shares only the problem data
types and the Trajectory container with the stepper; the march itself has
no code in common with the variation-of-constants method, which is what
makes agreement between the two meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numerics import hermite_coeffs
from .stepper import ProblemSpec, SolverConfig, Trajectory, _delayed_values


@dataclass(frozen=True)
class OracleConfig:
    """h_fine: RK4 step target (default tau_1/200, clamped to tau_1/2).
    n_trunc: delayed-sum truncation for non-finite families; None picks the
    certified index for a 1e-10 truncated tail against the history envelope.
    eps_trunc: the tolerance used by that automatic choice."""

    h_fine: Optional[float] = None
    n_trunc: Optional[int] = None
    eps_trunc: float = 1e-10


def _oracle_truncation(problem: ProblemSpec, config: OracleConfig, horizon: float) -> int:
    fam = problem.family
    if fam.kind in ("finite-support", "explicit-list"):
        n = len(fam.coeffs)
        while n > 0 and fam.coeffs[n - 1] == 0.0:
            n -= 1
        return n
    if config.n_trunc is not None:
        return config.n_trunc
    from .history import _atom_tail_search
    from .stepper import _forcing_floor

    atoms = problem.history.tail_atoms()
    n, _ = _atom_tail_search(fam, atoms, _forcing_floor(problem, horizon), config.eps_trunc)
    return n


def oracle_solve(
    problem: ProblemSpec, horizon: float, config: Optional[OracleConfig] = None
) -> Trajectory:
    """RK4 reference solution on [0, horizon] in a Trajectory container."""
    if config is None:
        config = OracleConfig()
    if not (horizon > 0.0):
        raise ValueError(f"horizon must be positive, got {horizon}")
    a = problem.a
    phi = problem.history
    fam = problem.family
    tau1 = fam.delays.tau1
    h = config.h_fine if config.h_fine is not None else tau1 / 200.0
    h = min(h, tau1 / 2.0)
    n = _oracle_truncation(problem, config, horizon)
    taus = fam.delays.tau_array(n)
    bs = fam.b_array(n)

    # align steps with the kink locations: t=0 junction echoes at each delay
    # and at the window boundaries
    knots = {horizon}
    i = 1
    while True:
        tau = fam.delays.tau(i)
        if tau >= horizon - 1e-12:
            break
        knots.add(tau)
        i += 1
    j = 1
    while j * tau1 < horizon - 1e-12:
        knots.add(j * tau1)
        j += 1
    boundaries = sorted(knots)

    grid = [0.0]
    values = [phi.value_at_zero()]

    def F(t: float, garr: np.ndarray, parr: np.ndarray) -> float:
        if n == 0:
            return 0.0
        return float(np.dot(bs, _delayed_values(phi, garr, parr, t - taus)))

    garr0 = np.array(grid)
    parr0 = np.zeros((1, 4))
    derivs = [a * values[0] + F(0.0, garr0, parr0)]
    pieces: list = []

    t_cur = 0.0
    for t_next in boundaries:
        nsub = max(1, math.ceil((t_next - t_cur) / h - 1e-12))
        dt_nom = (t_next - t_cur) / nsub
        for jj in range(nsub):
            t0 = grid[-1]
            t1 = t_next if jj == nsub - 1 else t_cur + (jj + 1) * dt_nom
            dt = t1 - t0
            garr = np.array(grid)
            parr = np.array(pieces).reshape(len(pieces), 4) if pieces else np.zeros((1, 4))
            x0 = values[-1]
            g0 = F(t0, garr, parr)
            gm = F(t0 + 0.5 * dt, garr, parr)
            g1 = F(t1, garr, parr)
            k1 = a * x0 + g0
            k2 = a * (x0 + 0.5 * dt * k1) + gm
            k3 = a * (x0 + 0.5 * dt * k2) + gm
            k4 = a * (x0 + dt * k3) + g1
            x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            d1 = a * x1 + g1
            pieces.append(hermite_coeffs(x0, derivs[-1], x1, d1, dt))
            grid.append(t1)
            values.append(x1)
            derivs.append(d1)
        t_cur = t_next

    return Trajectory(
        problem=problem,
        config=SolverConfig(h=h),
        grid=np.array(grid),
        values=np.array(values),
        derivs=np.array(derivs),
        pieces=np.array(pieces),
        n_forcing=n,
        h_used=h,
        eps_forcing_used=0.0,
    )


def compare_trajectories(
    ta: Trajectory,
    tb: Trajectory,
    interval: Optional[tuple[float, float]] = None,
    n_samples: int = 2001,
) -> float:
    """Max |ta - tb| over the interval, sampled densely plus at both grids."""
    if interval is None:
        interval = (0.0, min(ta.horizon, tb.horizon))
    lo, hi = interval
    ts = np.linspace(lo, hi, n_samples)
    extra = [g[(g >= lo) & (g <= hi)] for g in (ta.grid, tb.grid)]
    ts = np.unique(np.concatenate([ts] + extra))
    return float(np.max(np.abs(ta.eval(ts) - tb.eval(ts))))
