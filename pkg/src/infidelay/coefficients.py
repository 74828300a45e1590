"""Delay schedules, coefficient families, and certified tail-sum bounds.

The model problem is the scalar equation

    x'(t) = a x(t) + sum_i b_i x(t - tau_i),    i = 1, 2, 3, ...

with strictly increasing positive delays tau_i -> infinity.  This module
owns the data describing the pair (b_i, tau_i) and everything that can be
certified about weighted tails

    T(n) = sum_{i >= n} |b_i| w(-tau_i)

without evaluating infinitely many terms.

Contract for :func:`tail_sum_bound`: the return value is a certified upper
bound for T(n).  A return of ``math.inf`` is a *certificate of divergence*
of the true series (not a failed bound), and :class:`UnknownTailError` is
raised when the stored data decides neither way.  Downstream code relies on
this trichotomy, so every branch below is a closed-form argument, never a
sampled heuristic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TRUNCATION_CAP = 10_000_000


class UnknownTailError(Exception):
    """The stored family data cannot certify a bound or divergence."""


class DivergentTailError(Exception):
    """A certified-divergent series was used where convergence is required."""


class TruncationDepthError(Exception):
    """No truncation index below the hard cap achieves the target accuracy."""


@dataclass(frozen=True)
class DelaySchedule:
    """Strictly increasing positive delays tau_1 < tau_2 < ... -> infinity.

    Two storage modes share one type:

    * pure arithmetic: tau_i = c + i*delta (prefix empty), or
    * an explicit positive increasing prefix (tau_1..tau_P) continued
      arithmetically with gap delta beyond the last listed delay.
    """

    c: float = 0.0
    delta: float = 1.0
    prefix: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not (self.delta > 0.0):
            raise ValueError(f"delay gap must be positive, got delta={self.delta}")
        if self.prefix:
            vals = self.prefix
            if vals[0] <= 0.0:
                raise ValueError(f"delays must be positive, got tau_1={vals[0]}")
            for a, b in zip(vals, vals[1:]):
                if b <= a:
                    raise ValueError(f"delay prefix must be strictly increasing, got {a} then {b}")
        else:
            if self.c + self.delta <= 0.0:
                raise ValueError(
                    f"first delay c+delta must be positive, got {self.c + self.delta}"
                )

    @property
    def tau1(self) -> float:
        return self.tau(1)

    def _offset(self) -> float:
        """Arithmetic continuation writes tau_i = offset + i*delta for i > len(prefix)."""
        if self.prefix:
            return self.prefix[-1] - len(self.prefix) * self.delta
        return self.c

    def tau(self, i: int) -> float:
        if i < 1:
            raise ValueError(f"delay index must be >= 1, got {i}")
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        return self._offset() + i * self.delta

    def tau_array(self, n: int) -> np.ndarray:
        """First n delays as an array (tau_1..tau_n)."""
        if n < 0:
            raise ValueError(f"length must be >= 0, got {n}")
        out = np.empty(n)
        npre = min(len(self.prefix), n)
        out[:npre] = self.prefix[:npre]
        if n > npre:
            idx = np.arange(npre + 1, n + 1, dtype=float)
            out[npre:] = self._offset() + idx * self.delta
        return out

    def first_index_at_least(self, x: float) -> int:
        """Least index i with tau_i >= x.  Exact despite float rounding."""
        for j, t in enumerate(self.prefix, start=1):
            if t >= x:
                return j
        off = self._offset()
        lo = len(self.prefix) + 1
        i = max(lo, math.ceil((x - off) / self.delta))
        while i - 1 >= lo and off + (i - 1) * self.delta >= x:
            i -= 1
        while off + i * self.delta < x:
            i += 1
        return i


@dataclass(frozen=True)
class WeightFunction:
    """A weight w on (-infty, 0] used for tail sums and weighted sup norms.

    Forms:
      * "constant":   w(theta) = level, with level >= 1
      * "exponential": w(theta) = exp(-gamma*theta), gamma > 0
      * "polynomial":  w(theta) = (1 - theta)**degree, integer degree >= 1

    All three are >= 1 on theta <= 0 and nondecreasing into the past.
    """

    form: str
    level: float = 1.0
    gamma: float = 0.0
    degree: int = 0

    def __post_init__(self) -> None:
        if self.form == "constant":
            if not (self.level >= 1.0):
                raise ValueError(f"constant weight level must be >= 1, got {self.level}")
        elif self.form == "exponential":
            if not (self.gamma > 0.0):
                raise ValueError(f"exponential weight needs gamma > 0, got {self.gamma}")
        elif self.form == "polynomial":
            if self.degree < 1:
                raise ValueError(f"polynomial weight needs degree >= 1, got {self.degree}")
        else:
            raise ValueError(f"unknown weight form {self.form!r}")

    @classmethod
    def constant(cls, level: float = 1.0) -> "WeightFunction":
        return cls(form="constant", level=float(level))

    @classmethod
    def exponential(cls, gamma: float | None = None, base: float | None = None) -> "WeightFunction":
        """exp(-gamma*theta); equivalently base**(-theta) when base is given."""
        if (gamma is None) == (base is None):
            raise ValueError("give exactly one of gamma or base")
        g = math.log(base) if base is not None else float(gamma)
        if g == 0.0:
            return cls.constant(1.0)
        return cls(form="exponential", gamma=g)

    @classmethod
    def polynomial(cls, degree: int) -> "WeightFunction":
        if degree == 0:
            return cls.constant(1.0)
        return cls(form="polynomial", degree=int(degree))

    def __call__(self, theta):
        th = np.asarray(theta, dtype=float)
        if self.form == "constant":
            out = np.full_like(th, self.level)
        elif self.form == "exponential":
            out = np.exp(-self.gamma * th)
        else:
            out = (1.0 - th) ** self.degree
        if np.isscalar(theta) or th.ndim == 0:
            return float(out)
        return out


KINDS = ("finite-support", "geometric", "power-law", "explicit-list")


@dataclass(frozen=True)
class CoefficientFamily:
    """The coefficient sequence (b_i) attached to a delay schedule.

    Kinds:
      * finite-support: b_i = coeffs[i-1] for i <= len(coeffs), then exactly 0
      * geometric:      b_i = beta * rho**i with |rho| < 1
      * power-law:      b_i = beta * i**(-p_exponent), p_exponent > 0
      * explicit-list:  b_i = coeffs[i-1] for i <= len(coeffs); beyond the list
        only the unweighted mass bound sum_{i>L}|b_i| <= tail_abs_bound is known
    """

    kind: str
    delays: DelaySchedule
    coeffs: tuple[float, ...] = ()
    beta: float = 0.0
    rho: float = 0.0
    p_exponent: float = 0.0
    tail_abs_bound: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == "geometric" and not (abs(self.rho) < 1.0):
            raise ValueError(f"geometric family needs |rho| < 1, got {self.rho}")
        if self.kind == "power-law" and not (self.p_exponent > 0.0):
            raise ValueError(f"power-law family needs p > 0, got {self.p_exponent}")
        if self.kind == "explicit-list" and self.tail_abs_bound < 0.0:
            raise ValueError(f"tail mass bound must be >= 0, got {self.tail_abs_bound}")

    @classmethod
    def finite_support(cls, coeffs, delays: DelaySchedule) -> "CoefficientFamily":
        return cls(kind="finite-support", delays=delays, coeffs=tuple(float(v) for v in coeffs))

    @classmethod
    def geometric(cls, beta: float, rho: float, delays: DelaySchedule) -> "CoefficientFamily":
        return cls(kind="geometric", delays=delays, beta=float(beta), rho=float(rho))

    @classmethod
    def power_law(cls, beta: float, p: float, delays: DelaySchedule) -> "CoefficientFamily":
        return cls(kind="power-law", delays=delays, beta=float(beta), p_exponent=float(p))

    @classmethod
    def explicit_list(cls, coeffs, tail_abs_bound: float, delays: DelaySchedule) -> "CoefficientFamily":
        return cls(
            kind="explicit-list",
            delays=delays,
            coeffs=tuple(float(v) for v in coeffs),
            tail_abs_bound=float(tail_abs_bound),
        )

    def b(self, i: int) -> float:
        if i < 1:
            raise ValueError(f"coefficient index must be >= 1, got {i}")
        if self.kind == "finite-support":
            return self.coeffs[i - 1] if i <= len(self.coeffs) else 0.0
        if self.kind == "geometric":
            return self.beta * self.rho**i
        if self.kind == "power-law":
            return self.beta * float(i) ** (-self.p_exponent)
        if i <= len(self.coeffs):
            return self.coeffs[i - 1]
        raise UnknownTailError(
            f"explicit-list family stores coefficients up to i={len(self.coeffs)}; b_{i} is not determined"
        )

    def b_array(self, n: int) -> np.ndarray:
        """First n coefficients (b_1..b_n)."""
        if self.kind in ("finite-support", "explicit-list"):
            if self.kind == "explicit-list" and n > len(self.coeffs):
                raise UnknownTailError(
                    f"explicit-list family stores {len(self.coeffs)} coefficients, asked for {n}"
                )
            out = np.zeros(n)
            m = min(n, len(self.coeffs))
            out[:m] = self.coeffs[:m]
            return out
        idx = np.arange(1, n + 1, dtype=float)
        if self.kind == "geometric":
            return self.beta * np.sign(self.rho) ** np.arange(1, n + 1) * abs(self.rho) ** idx
        return self.beta * idx ** (-self.p_exponent)

    def head_abs_sum(self, n_exclusive: int) -> float:
        """sum_{i < n} |b_i| (empty sum for n <= 1)."""
        if n_exclusive <= 1:
            return 0.0
        return float(np.sum(np.abs(self.b_array(n_exclusive - 1))))


def n_index(family: CoefficientFamily, k: int) -> int:
    """Least n with tau_n >= k*tau_1: the first delay reaching depth k*tau_1."""
    if k < 1:
        raise ValueError(f"window index k must be >= 1, got {k}")
    return family.delays.first_index_at_least(k * family.delays.tau1)


def m_index(family: CoefficientFamily, k: int) -> int:
    """Depth index for window k >= 2.

    With n = n_index(family, k) and mu = (k-1)*tau_1 - tau_{n-1}, this is the
    least positive integer m with -m < mu.  It measures how far into the
    history the deepest sub-threshold delay reaches relative to window k.
    When n == 1 there is no sub-threshold delay and the value degenerates
    to 1 (see :func:`m_index_is_vacuous`).
    """
    if k < 2:
        raise ValueError(f"m_index is defined for k >= 2, got {k}")
    n = n_index(family, k)
    if n == 1:
        return 1
    mu = (k - 1) * family.delays.tau1 - family.delays.tau(n - 1)
    return max(1, math.floor(-mu) + 1)


def m_index_is_vacuous(family: CoefficientFamily, k: int) -> bool:
    """True when n_index(family, k) == 1, i.e. no delay lies below k*tau_1."""
    if k < 2:
        raise ValueError(f"m_index is defined for k >= 2, got {k}")
    return n_index(family, k) == 1


def _normalize_weight(weight: WeightFunction) -> WeightFunction:
    # Constructors already collapse gamma=0 / degree=0, but guard direct instances.
    if weight.form == "exponential" and weight.gamma == 0.0:
        return WeightFunction.constant(1.0)
    if weight.form == "polynomial" and weight.degree == 0:
        return WeightFunction.constant(1.0)
    return weight


def _ratio_cap(delays: DelaySchedule) -> float:
    """Certified C with 1 + tau_i <= C * i for every i >= 1.

    Over the prefix the ratios are checked term by term.  On the arithmetic
    continuation tau_i = off + i*delta the ratio delta + (1+off)/i is monotone
    in i, so its sup is attained at the first continuation index or in the
    limit delta.
    """
    cands = [delays.delta]
    for j, t in enumerate(delays.prefix, start=1):
        cands.append((1.0 + t) / j)
    j0 = len(delays.prefix) + 1
    cands.append((1.0 + delays.tau(j0)) / j0)
    return max(cands)


def tail_sum_bound(family: CoefficientFamily, weight: WeightFunction, n_start: int) -> float:
    """Certified upper bound for sum_{i >= n_start} |b_i| * weight(-tau_i).

    Returns math.inf exactly when the true series is provably divergent.
    Raises UnknownTailError when the stored data certifies neither a finite
    bound nor divergence (only possible for explicit-list families under
    unbounded weights).
    """
    n = int(n_start)
    if n < 1:
        raise ValueError(f"tail start index must be >= 1, got {n}")
    w = _normalize_weight(weight)
    d = family.delays

    if family.kind == "finite-support" or (
        family.kind == "explicit-list" and family.tail_abs_bound == 0.0
    ):
        L = len(family.coeffs)
        if n > L:
            return 0.0
        taus = d.tau_array(L)[n - 1 :]
        vals = np.abs(np.array(family.coeffs[n - 1 :])) * np.asarray(w(-taus))
        return float(np.sum(vals))

    if family.kind == "explicit-list":
        if w.form != "constant":
            raise UnknownTailError(
                "explicit-list tail mass is only an unweighted bound; cannot certify it under an unbounded weight"
            )
        L = len(family.coeffs)
        out = w.level * family.tail_abs_bound
        if n <= L:
            taus = d.tau_array(L)[n - 1 :]
            out += float(np.sum(np.abs(np.array(family.coeffs[n - 1 :]))) * w.level)
        return out

    if family.beta == 0.0:
        return 0.0

    if family.kind == "geometric":
        r0 = abs(family.rho)
        if r0 == 0.0:
            return 0.0
        ab = abs(family.beta)
        if w.form == "constant":
            return w.level * ab * r0**n / (1.0 - r0)
        P = len(d.prefix)
        if w.form == "exponential":
            total = 0.0
            for i in range(n, P + 1):
                total += ab * r0**i * math.exp(w.gamma * d.tau(i))
            m = max(n, P + 1)
            r = r0 * math.exp(w.gamma * d.delta)
            if r >= 1.0:
                # terms do not even tend to zero along the continuation
                return math.inf
            off = d._offset()
            total += ab * math.exp(w.gamma * off) * r**m / (1.0 - r)
            return total
        # polynomial weight: (1+tau_i)^q <= (C_tau * i)^q, then dominate
        # i^q r0^i by C_star * r'^i with r' = (1+r0)/2 < 1.
        q = w.degree
        c_tau = _ratio_cap(d)
        r_prime = 0.5 * (1.0 + r0)
        rho_star = r0 / r_prime
        x_star = q / (-math.log(rho_star))
        if x_star <= 1.0:
            c_star = rho_star
        else:
            c_star = x_star**q * math.exp(-q)
        return ab * c_tau**q * c_star * r_prime**n / (1.0 - r_prime)

    # power-law: b_i = beta * i^{-p}
    p = family.p_exponent
    ab = abs(family.beta)
    if w.form == "constant":
        if p <= 1.0:
            return math.inf
        return w.level * ab * (float(n) ** (-p) + float(n) ** (1.0 - p) / (p - 1.0))
    if w.form == "exponential":
        # exp(gamma*tau_i) outgrows any polynomial decay of i^{-p}
        return math.inf
    q = w.degree
    if p - q <= 1.0:
        # (1+tau_i)^q grows like (delta*i)^q, so terms ~ i^{q-p} with q-p >= -1
        return math.inf
    c_tau = _ratio_cap(d)
    s = p - q
    return ab * c_tau**q * (float(n) ** (-s) + float(n) ** (1.0 - s) / (s - 1.0))


def truncation_index(family: CoefficientFamily, weight: WeightFunction, eps: float) -> int:
    """Least N >= 1 whose discarded weighted tail is certified <= eps.

    That is, the smallest N with tail_sum_bound(family, weight, N+1) <= eps.
    Raises DivergentTailError when the series is certified divergent,
    UnknownTailError when no finite truncation can be certified, and
    TruncationDepthError past the hard index cap.
    """
    if not (eps > 0.0):
        raise ValueError(f"truncation tolerance must be positive, got {eps}")

    def bound(n: int) -> float:
        return tail_sum_bound(family, weight, n)

    first = bound(1)
    if math.isinf(first):
        raise DivergentTailError("series is certified divergent; no truncation exists")
    if family.kind == "explicit-list" and family.tail_abs_bound > 0.0:
        w = _normalize_weight(weight)
        floor = w.level * family.tail_abs_bound
        if floor > eps:
            raise UnknownTailError(
                f"recorded tail mass bound {floor} exceeds target {eps}; no finite truncation is certifiable"
            )
    N = 1
    while bound(N + 1) > eps:
        N *= 2
        if N > TRUNCATION_CAP:
            raise TruncationDepthError(
                f"no truncation index below {TRUNCATION_CAP} certifies tolerance {eps}"
            )
    if N == 1:
        return 1
    lo, hi = N // 2, N  # bound(lo+1) > eps held at the previous doubling step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bound(mid + 1) <= eps:
            hi = mid
        else:
            lo = mid
    return hi
