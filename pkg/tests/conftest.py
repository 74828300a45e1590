"""Shared builders for the test suite.

Random histories are piecewise-cubic Hermite cores with a constant
extension, so every seminorm they enter has an exact, certifiable tail.
Random families stay inside the certified kinds with enough coefficient
mass to make the dynamics non-trivial.
"""

from __future__ import annotations

import numpy as np
from hypothesis import HealthCheck, settings

import infidelay as fd
from infidelay.numerics import hermite_coeffs

settings.register_profile(
    "suite",
    derandomize=True,
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def random_core_history(rng: np.random.Generator, depth: float = 6.0, res: float = 0.5, amp: float = 2.0) -> fd.HistoryFunction:
    """Random C^1 piecewise-cubic history on [-depth, 0], constant beyond."""
    bps = np.arange(-depth, 0.0 + 1e-9, res)
    vals = rng.uniform(-amp, amp, size=len(bps))
    slopes = rng.uniform(-amp, amp, size=len(bps))
    coeffs = np.array(
        [
            hermite_coeffs(vals[j], slopes[j], vals[j + 1], slopes[j + 1], res)
            for j in range(len(bps) - 1)
        ]
    )
    return fd.history_from_core(bps, coeffs, fd.ConstantTail(vals[0]))


def random_family(rng: np.random.Generator) -> fd.CoefficientFamily:
    """Random finite-support or geometric family with mass >= 0.05."""
    delta = rng.uniform(0.5, 1.5)
    c = rng.uniform(0.0, 0.5)
    ds = fd.DelaySchedule(c=c, delta=delta)
    if rng.random() < 0.5:
        n = int(rng.integers(1, 4))
        coeffs = rng.uniform(-0.8, 0.8, size=n)
        if np.sum(np.abs(coeffs)) < 0.05:
            coeffs[0] = 0.3
        return fd.CoefficientFamily.finite_support(list(coeffs), ds)
    beta = rng.uniform(0.1, 1.0) * rng.choice([-1.0, 1.0])
    rho = rng.uniform(0.1, 0.7) * rng.choice([-1.0, 1.0])
    return fd.CoefficientFamily.geometric(float(beta), float(rho), ds)


BOUNDED_PRESETS = ("constant", "cos", "exp-decay", "linear")


def random_problem(rng: np.random.Generator) -> fd.ProblemSpec:
    """Random solvable problem: certified family, bounded history, |a| <= 1."""
    fam = random_family(rng)
    a = float(rng.uniform(-1.0, 1.0))
    if rng.random() < 0.5:
        phi = fd.history_preset(BOUNDED_PRESETS[int(rng.integers(0, len(BOUNDED_PRESETS)))])
    else:
        phi = random_core_history(rng)
    return fd.ProblemSpec(a, fam, phi)


def oracle_scenarios() -> list[fd.ProblemSpec]:
    """Ten mixed finite-support / geometric problems for solver-vs-reference runs."""
    DS = fd.DelaySchedule
    CF = fd.CoefficientFamily
    rows = [
        (0.0, CF.finite_support([-1.0], DS()), "constant"),
        (0.1, CF.finite_support([-0.5], DS()), "cos"),
        (-0.5, CF.finite_support([0.4, -0.2], DS(delta=0.8)), "exp-decay"),
        (0.1, CF.finite_support([0.15], DS()), "linear"),
        (0.0, CF.geometric(0.5, 0.5, DS()), "constant"),
        (-1.0, CF.geometric(0.6, 0.4, DS(delta=0.5)), "cos"),
        (0.1, CF.geometric(0.3, 0.6, DS()), "exp-decay"),
        (0.0, CF.geometric(-0.8, 0.5, DS()), "constant"),
        (0.1, CF.geometric(0.5, -0.5, DS()), "linear"),
        (0.05, CF.finite_support([-0.6, 0.2, 0.1], DS(delta=0.7)), "cos"),
    ]
    return [fd.ProblemSpec(a, fam, fd.history_preset(p)) for a, fam, p in rows]


def semigroup_scenarios() -> list[fd.ProblemSpec]:
    """Five problems used by the semigroup-property sweeps."""
    DS = fd.DelaySchedule
    CF = fd.CoefficientFamily
    rows = [
        (0.0, CF.finite_support([-1.0], DS()), "constant"),
        (0.1, CF.finite_support([-0.5], DS()), "cos"),
        (-0.5, CF.finite_support([0.4, -0.2], DS(delta=0.8)), "exp-decay"),
        (0.0, CF.geometric(0.5, 0.5, DS()), "constant"),
        (0.1, CF.geometric(0.3, 0.6, DS()), "exp-decay"),
    ]
    return [fd.ProblemSpec(a, fam, fd.history_preset(p)) for a, fam, p in rows]


def classic_problem() -> fd.ProblemSpec:
    """x'(t) = -x(t-1) started from the constant-one history."""
    fam = fd.CoefficientFamily.finite_support([-1.0], fd.DelaySchedule())
    return fd.ProblemSpec(0.0, fam, fd.history_preset("constant"))


def classic_exact(t: float) -> float:
    """Analytic method-of-steps solution of x' = -x(t-1), phi = 1, on [-inf, 3].

    Integrating x'(t) = -x(t-1) window by window:
      [0,1]: x' = -1          -> x = 1 - t
      [1,2]: x' = -(1-(t-1))  -> x = 1 - t + (t-1)^2/2
      [2,3]: x' = -(x above at t-1) -> x = 1 - t + (t-1)^2/2 - (t-2)^3/6
    """
    if t <= 0.0:
        return 1.0
    if t <= 1.0:
        return 1.0 - t
    if t <= 2.0:
        return 1.0 - t + (t - 1.0) ** 2 / 2.0
    if t <= 3.0:
        return 1.0 - t + (t - 1.0) ** 2 / 2.0 - (t - 2.0) ** 3 / 6.0
    raise ValueError("analytic reference derived only through t = 3")
