"""Method-of-steps integration of x'(t) = a x(t) + sum_i b_i x(t - tau_i).

The march uses exact variation of constants on each sub-step,

    x(t1) = x(t0) e^{a dt} + integral_{t0}^{t1} e^{a(t1-s)} F(s) ds,
    F(s)  = sum_{i <= N} b_i x(s - tau_i),

with the integral evaluated by a fixed quadrature rule and F truncated at a
certified index N: the discarded delayed terms are bounded through the
history tail's envelope atoms by at most eps_forcing uniformly on [0, T].
Sub-steps never exceed tau_1, so every delayed argument lands in history or
in already-computed pieces; dense output is the cubic Hermite interpolant
of the stored node values and slopes.

Step boundaries are forced at every multiple of tau_1 and at every delay
tau_i <= T, where the solution loses one order of smoothness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import (
    CoefficientFamily,
    DivergentTailError,
    TruncationDepthError,
    UnknownTailError,
    m_index,
    n_index,
)
from .history import HistoryFunction, _atom_tail_search, p_seminorm, sup_norm_k
from .numerics import QUAD_RULES, hermite_coeffs, phi1, sup_abs_pieces


class NotInPhaseSpaceError(Exception):
    """The history fails (or cannot be certified for) phase-space membership."""


@dataclass(frozen=True)
class ProblemSpec:
    """One initial-value problem: scalar drift a, delay family, history."""

    a: float
    family: CoefficientFamily
    history: HistoryFunction


@dataclass(frozen=True)
class SolverConfig:
    """March parameters.  None means: resolve from the problem at solve time.

    h: sub-step target (default tau_1/40, clamped to tau_1)
    quad: "gauss4" or "simpson"
    eps_forcing: uniform bound on the discarded delayed-forcing tail
        (default 1e-10 * max(1, sup |phi| on [-1, 0]))
    eps_tail_seminorm: certification tolerance for p_k evaluations
    """

    h: Optional[float] = None
    quad: str = "gauss4"
    eps_forcing: Optional[float] = None
    eps_tail_seminorm: float = 1e-10

    def __post_init__(self) -> None:
        if self.quad not in QUAD_RULES:
            raise ValueError(f"unknown quadrature rule {self.quad!r}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Computed solution on [0, horizon] with dense cubic output.

    grid/values/derivs hold the node data; pieces[j] are the local Hermite
    coefficients on [grid[j], grid[j+1]].  Evaluation at t <= 0 falls back
    to the history, so x is usable on (-infty, horizon].
    """

    problem: ProblemSpec
    config: SolverConfig
    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    pieces: np.ndarray
    n_forcing: int
    h_used: float
    eps_forcing_used: float

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def eval(self, t):
        th = np.asarray(t, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        if np.any(th > self.horizon + 1e-9):
            raise ValueError(f"evaluation beyond horizon {self.horizon}: max t={th.max()}")
        th = np.minimum(th, self.horizon)
        out = np.empty_like(th)
        past = th < 0.0
        if np.any(past):
            out[past] = self.problem.history.evaluate(th[past])
        if np.any(~past):
            tt = th[~past]
            idx = np.clip(
                np.searchsorted(self.grid, tt, side="right") - 1, 0, len(self.pieces) - 1
            )
            u = tt - self.grid[idx]
            c = self.pieces[idx]
            out[~past] = c[:, 0] + u * (c[:, 1] + u * (c[:, 2] + u * c[:, 3]))
        return float(out[0]) if scalar else out

    def eval_derivative(self, t):
        th = np.asarray(t, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        if np.any(th < -1e-12) or np.any(th > self.horizon + 1e-9):
            raise ValueError("derivative evaluation outside [0, horizon]")
        th = np.clip(th, 0.0, self.horizon)
        idx = np.clip(np.searchsorted(self.grid, th, side="right") - 1, 0, len(self.pieces) - 1)
        u = th - self.grid[idx]
        c = self.pieces[idx]
        out = c[:, 1] + u * (2.0 * c[:, 2] + u * 3.0 * c[:, 3])
        return float(out[0]) if scalar else out

    def sup_abs(self, lo: float, hi: float) -> float:
        """Exact sup of |x| over [lo, hi] (may dip into the history)."""
        if hi > self.horizon + 1e-9:
            raise ValueError(f"interval end {hi} beyond horizon {self.horizon}")
        hi = min(hi, self.horizon)
        best = 0.0
        if hi > 0.0:
            best = sup_abs_pieces(self.grid, self.pieces, max(lo, 0.0), hi)
        if lo < 0.0:
            best = max(best, self.problem.history.sup_abs_interval(lo, min(hi, 0.0)))
        return best

    def write_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("t,x,xprime\n")
            for t, x, d in zip(self.grid, self.values, self.derivs):
                fh.write(f"{t:.11e},{x:.11e},{d:.11e}\n")

    def to_json_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "grid": [float(v) for v in self.grid],
            "values": [float(v) for v in self.values],
            "derivs": [float(v) for v in self.derivs],
        }


def _delayed_values(
    phi: HistoryFunction, grid: np.ndarray, pieces: np.ndarray, args: np.ndarray
) -> np.ndarray:
    """x at delayed arguments: history for args <= 0, pieces otherwise."""
    out = np.empty_like(args)
    neg = args <= 0.0
    if np.any(neg):
        out[neg] = phi.evaluate(args[neg])
    if np.any(~neg):
        tt = args[~neg]
        idx = np.clip(np.searchsorted(grid, tt, side="right") - 1, 0, len(pieces) - 1)
        u = tt - grid[idx]
        c = pieces[idx]
        out[~neg] = c[:, 0] + u * (c[:, 1] + u * (c[:, 2] + u * c[:, 3]))
    return out


def forcing(traj: Trajectory, t: float, eps: Optional[float] = None) -> float:
    """The delayed forcing F(t) = sum_{i<=N} b_i x(t - tau_i) along traj.

    N is the trajectory's certified truncation index (or a fresh one for an
    explicit eps).  Valid for t in [0, horizon].
    """
    prob = traj.problem
    if eps is None:
        n = traj.n_forcing
    else:
        n, _ = _atom_tail_search(
            prob.family,
            prob.history.tail_atoms(),
            _forcing_floor(prob, traj.horizon),
            eps,
        )
    if n == 0:
        return 0.0
    taus = prob.family.delays.tau_array(n)
    bs = prob.family.b_array(n)
    vals = _delayed_values(prob.history, traj.grid, traj.pieces, float(t) - taus)
    return float(np.dot(bs, vals))


def _forcing_floor(problem: ProblemSpec, horizon: float) -> int:
    """Truncations below this index are not coverable by the tail atoms.

    For i above the floor, tau_i >= horizon + depth, so every argument
    t - tau_i with t in [0, horizon] stays in the history's tail region
    where the envelope atoms apply (weights only shrink toward 0).
    """
    d = problem.family.delays
    return max(d.first_index_at_least(horizon + problem.history.depth) - 1, 0)


def _certify_forcing(problem: ProblemSpec, horizon: float, eps: float) -> int:
    try:
        n, _ = _atom_tail_search(
            problem.family, problem.history.tail_atoms(), _forcing_floor(problem, horizon), eps
        )
        # materialize the coefficient values now so explicit-list gaps fail here
        problem.family.b_array(n)
        return n
    except (UnknownTailError, DivergentTailError, TruncationDepthError) as exc:
        raise NotInPhaseSpaceError(
            f"cannot certify the delayed forcing to eps={eps}: {exc}"
        ) from exc


def _check_membership(problem: ProblemSpec, horizon: float, eps_tail: float) -> None:
    k_max = max(1, math.ceil(horizon / problem.family.delays.tau1 - 1e-12))
    for k in range(1, k_max + 1):
        sv = p_seminorm(problem.history, problem.family, k, eps_tail)
        if sv.verdict == "divergent":
            raise NotInPhaseSpaceError(
                f"p_{k} is certified divergent: the history is outside the phase space"
            )
        if sv.verdict == "inconclusive":
            raise NotInPhaseSpaceError(
                f"p_{k} cannot be certified finite for this history/family pair"
            )


def _knots_between(t_from: float, t_to: float, family: CoefficientFamily) -> list[float]:
    """Forced step boundaries in (t_from, t_to]: multiples of tau_1, delays, t_to."""
    tau1 = family.delays.tau1
    out = []
    j = math.floor(t_from / tau1 + 1e-12) + 1
    while j * tau1 < t_to - 1e-12:
        if j * tau1 > t_from + 1e-12:
            out.append(j * tau1)
        j += 1
    d = family.delays
    i = 1
    while True:
        tau = d.tau(i)
        if tau >= t_to - 1e-12:
            break
        if tau > t_from + 1e-12:
            out.append(tau)
        i += 1
    out.append(t_to)
    out = sorted(set(out))
    merged = []
    for v in out:
        if not merged or v - merged[-1] > 1e-12:
            merged.append(v)
        else:
            merged[-1] = v  # keep the later point (t_to wins ties)
    return merged


def _march(
    problem: ProblemSpec,
    t_end: float,
    h: float,
    quad: str,
    n_forcing: int,
    grid: list,
    values: list,
    derivs: list,
    pieces: list,
) -> None:
    """Extend the node/piece lists in place from grid[-1] to t_end."""
    a = problem.a
    phi = problem.history
    nodes, weights = QUAD_RULES[quad]
    if n_forcing > 0:
        taus = problem.family.delays.tau_array(n_forcing)
        bs = problem.family.b_array(n_forcing)
    else:
        taus = np.zeros(0)
        bs = np.zeros(0)

    def F(t: float, garr: np.ndarray, parr: np.ndarray) -> float:
        if n_forcing == 0:
            return 0.0
        return float(np.dot(bs, _delayed_values(phi, garr, parr, t - taus)))

    t_cur = grid[-1]
    for t_next in _knots_between(t_cur, t_end, problem.family):
        nsub = max(1, math.ceil((t_next - t_cur) / h - 1e-12))
        dt = (t_next - t_cur) / nsub
        for j in range(nsub):
            t0 = grid[-1]
            t1 = t_next if j == nsub - 1 else t_cur + (j + 1) * dt
            step = t1 - t0
            # steps never exceed tau_1, so all delayed arguments (including
            # those of F(t1)) lie at or before t0: the frozen data suffices
            garr = np.array(grid)
            parr = np.array(pieces).reshape(len(pieces), 4) if pieces else np.zeros((1, 4))
            s_q = t0 + step * nodes
            f_q = np.array([F(float(s), garr, parr) for s in s_q])
            exps = np.exp(a * (t1 - s_q))
            x1 = values[-1] * math.exp(a * step) + step * float(np.dot(weights, exps * f_q))
            f1 = F(t1, garr, parr)
            d1 = a * x1 + f1
            pieces.append(hermite_coeffs(values[-1], derivs[-1], x1, d1, step))
            grid.append(t1)
            values.append(x1)
            derivs.append(d1)
        t_cur = t_next


def solve(problem: ProblemSpec, horizon: float, config: Optional[SolverConfig] = None) -> Trajectory:
    """Integrate the problem on [0, horizon] after certifying admissibility."""
    if config is None:
        config = SolverConfig()
    if not (horizon > 0.0):
        raise ValueError(f"horizon must be positive, got {horizon}")
    tau1 = problem.family.delays.tau1
    h = min(config.h if config.h is not None else tau1 / 40.0, tau1)
    if h <= 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    eps_f = (
        config.eps_forcing
        if config.eps_forcing is not None
        else 1e-10 * max(1.0, sup_norm_k(problem.history, 1))
    )
    _check_membership(problem, horizon, config.eps_tail_seminorm)
    n_forcing = _certify_forcing(problem, horizon, eps_f)

    phi0 = problem.history.value_at_zero()
    grid: list = [0.0]
    values: list = [phi0]
    if n_forcing > 0:
        taus = problem.family.delays.tau_array(n_forcing)
        bs = problem.family.b_array(n_forcing)
        f0 = float(np.dot(bs, problem.history.evaluate(-taus)))
    else:
        f0 = 0.0
    derivs: list = [problem.a * phi0 + f0]
    pieces: list = []
    _march(problem, horizon, h, config.quad, n_forcing, grid, values, derivs, pieces)
    return Trajectory(
        problem=problem,
        config=config,
        grid=np.array(grid),
        values=np.array(values),
        derivs=np.array(derivs),
        pieces=np.array(pieces),
        n_forcing=n_forcing,
        h_used=h,
        eps_forcing_used=eps_f,
    )


def step_interval(traj: Trajectory, k: int, config: Optional[SolverConfig] = None) -> Trajectory:
    """Trajectory extended through the window [k*tau_1, (k+1)*tau_1].

    Returns traj unchanged when it already covers the window; otherwise
    re-certifies for the larger horizon and marches the remaining span.
    """
    if k < 0:
        raise ValueError(f"window index must be >= 0, got {k}")
    cfg = config if config is not None else traj.config
    target = (k + 1) * traj.problem.family.delays.tau1
    if target <= traj.horizon + 1e-12:
        return traj
    problem = traj.problem
    _check_membership(problem, target, cfg.eps_tail_seminorm)
    n_forcing = _certify_forcing(problem, target, traj.eps_forcing_used)
    if n_forcing != traj.n_forcing:
        # deeper truncation needed for the longer horizon: re-run from scratch
        return solve(problem, target, cfg)
    grid = list(traj.grid)
    values = list(traj.values)
    derivs = list(traj.derivs)
    pieces = [tuple(row) for row in traj.pieces]
    _march(problem, target, traj.h_used, cfg.quad, n_forcing, grid, values, derivs, pieces)
    return Trajectory(
        problem=problem,
        config=cfg,
        grid=np.array(grid),
        values=np.array(values),
        derivs=np.array(derivs),
        pieces=np.array(pieces),
        n_forcing=n_forcing,
        h_used=traj.h_used,
        eps_forcing_used=traj.eps_forcing_used,
    )


# ---------------------------------------------------------------------------
# a-priori estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimateCertificate:
    """A-priori bound for sup |x| on [0, k*tau_1] against the observed sup.

    The bound is built from the recursion

      B_1     = e^{max(a,0) tau_1} ||phi||_1 + phi1(a, tau_1) p_1(phi)
      B_{j}   = e^{max(a,0)(j-1) tau_1} M_{j-1}
                + j phi1(a j, tau_1) [ S_j max(||phi||_{m(j)}, M_{j-1}) + p_j(phi) ],

    where S_j sums |b_i| below n(j), M_j is the running max of B_1..B_j,
    and phi1(z, d) = (e^{z d} - 1)/z.  The certificate is VALID when the
    observed sup does not exceed the bound (tolerance 1e-9); every p_j
    enters through its certified upper value.
    """

    k: int
    bound: float
    observed: float
    valid: bool
    constant: float
    q_value: float
    levels: tuple
    b_chain: tuple

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "bound": self.bound,
            "observed": self.observed,
            "valid": self.valid,
            "constant": self.constant,
            "q_value": self.q_value,
            "levels": [{"name": n, "value": v} for (n, v) in self.levels],
            "b_chain": list(self.b_chain),
        }


def estimate_certificate(traj: Trajectory, k: int) -> EstimateCertificate:
    """Build and check the window-k a-priori certificate along traj."""
    if k < 1:
        raise ValueError(f"window index k must be >= 1, got {k}")
    problem = traj.problem
    fam = problem.family
    phi = problem.history
    a = problem.a
    tau1 = fam.delays.tau1
    if traj.horizon < k * tau1 - 1e-9:
        raise ValueError(
            f"trajectory covers [0, {traj.horizon}] but the certificate needs [0, {k * tau1}]"
        )
    eps = traj.config.eps_tail_seminorm
    p_up = []
    for j in range(1, k + 1):
        sv = p_seminorm(phi, fam, j, eps)
        if sv.verdict == "divergent":
            raise DivergentTailError(f"p_{j} is certified divergent; no estimate exists")
        if sv.verdict == "inconclusive":
            raise UnknownTailError(f"p_{j} cannot be certified; no estimate is available")
        p_up.append(sv.upper())

    levels = []
    sup1 = sup_norm_k(phi, 1)
    levels.append((f"sup_norm[1]", sup1))
    for j in range(1, k + 1):
        levels.append((f"p[{j}]", p_up[j - 1]))

    e1 = math.exp(max(a, 0.0) * tau1)
    g1 = phi1(a, tau1)
    b_chain = [e1 * sup1 + g1 * p_up[0]]
    running = b_chain[0]
    seen_sup = {1}
    for j in range(2, k + 1):
        mj = m_index(fam, j)
        sup_m = sup_norm_k(phi, mj)
        if mj not in seen_sup:
            levels.append((f"sup_norm[{mj}]", sup_m))
            seen_sup.add(mj)
        s_j = fam.head_abs_sum(n_index(fam, j))
        e_j = math.exp(max(a, 0.0) * (j - 1) * tau1)
        g_j = j * phi1(a * j, tau1)
        b_j = e_j * running + g_j * (s_j * max(sup_m, running) + p_up[j - 1])
        b_chain.append(b_j)
        running = max(running, b_j)

    bound = running
    observed = traj.sup_abs(0.0, k * tau1)
    q_value = max(v for (_, v) in levels)
    constant = bound / q_value if q_value > 0.0 else bound
    return EstimateCertificate(
        k=k,
        bound=bound,
        observed=observed,
        valid=observed <= bound + 1e-9,
        constant=constant,
        q_value=q_value,
        levels=tuple(levels),
        b_chain=tuple(b_chain),
    )
