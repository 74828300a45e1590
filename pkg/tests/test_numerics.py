"""Low-level polynomial and quadrature helpers."""

import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from infidelay.numerics import (
    GAUSS4_NODES,
    GAUSS4_WEIGHTS,
    SIMPSON_NODES,
    SIMPSON_WEIGHTS,
    dedupe_knots,
    eval_pieces,
    eval_pieces_derivative,
    hermite_coeffs,
    phi1,
    sup_abs_pieces,
)

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


def test_quadrature_rules_normalized():
    assert abs(sum(GAUSS4_WEIGHTS) - 1.0) < 1e-15
    assert abs(sum(SIMPSON_WEIGHTS) - 1.0) < 1e-15
    assert all(0.0 <= x <= 1.0 for x in GAUSS4_NODES)
    assert list(SIMPSON_NODES) == [0.0, 0.5, 1.0]


def test_gauss4_exact_on_cubics():
    # the 2-point rule must integrate polynomials of degree <= 3 exactly
    for q in range(4):
        approx = sum(w * x**q for x, w in zip(GAUSS4_NODES, GAUSS4_WEIGHTS))
        assert abs(approx - 1.0 / (q + 1)) < 1e-14


def test_phi1_matches_expm1_form():
    for a in (-3.0, -1.0, -1e-3, 1e-3, 0.5, 2.0):
        for d in (0.1, 0.7, 1.0):
            assert abs(phi1(a, d) - math.expm1(a * d) / a) < 1e-14 * max(1.0, abs(math.expm1(a * d) / a))


def test_phi1_at_zero_is_length():
    assert phi1(0.0, 0.3) == 0.3
    assert phi1(0.0, 1.0) == 1.0


def test_phi1_series_branch_agrees_with_expm1():
    # just inside the series branch the two evaluation routes must coincide
    for a in (9.9e-6, -9.9e-6, 1e-7, -1e-7):
        d = 1.0
        direct = math.expm1(a * d) / a
        assert abs(phi1(a, d) - direct) <= 1e-13 * abs(direct)


@given(x0=finite, m0=finite, x1=finite, m1=finite, dt=st.floats(min_value=0.01, max_value=5.0))
def test_hermite_roundtrip(x0, m0, x1, m1, dt):
    c = hermite_coeffs(x0, m0, x1, m1, dt)

    def p(u):
        return c[0] + u * (c[1] + u * (c[2] + u * c[3]))

    def dp(u):
        return c[1] + u * (2 * c[2] + u * 3 * c[3])

    scale = max(1.0, abs(x0), abs(x1), abs(m0) * dt, abs(m1) * dt)
    assert abs(p(0.0) - x0) <= 1e-12 * scale
    assert abs(p(dt) - x1) <= 1e-9 * scale
    assert abs(dp(0.0) - m0) <= 1e-12 * scale / dt
    assert abs(dp(dt) - m1) <= 1e-9 * scale / dt


def test_hermite_rejects_bad_width():
    try:
        hermite_coeffs(0.0, 0.0, 1.0, 0.0, 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for zero width")


def test_eval_pieces_matches_manual_horner():
    breaks = np.array([0.0, 1.0, 3.0])
    coeffs = np.array([[1.0, 2.0, 0.0, 0.0], [3.0, -1.0, 0.5, 0.0]])
    assert eval_pieces(breaks, coeffs, 0.5) == 1.0 + 2.0 * 0.5
    u = 2.5 - 1.0
    assert eval_pieces(breaks, coeffs, 2.5) == 3.0 - u + 0.5 * u * u
    # at an interior knot the right piece owns the point
    assert eval_pieces(breaks, coeffs, 1.0) == 3.0
    assert eval_pieces_derivative(breaks, coeffs, 0.25) == 2.0


@given(data=st.data())
def test_sup_abs_pieces_dominates_dense_sampling(data):
    n = data.draw(st.integers(min_value=1, max_value=4))
    breaks = np.linspace(-2.0, 0.0, n + 1)
    coeffs = np.array(
        [[data.draw(finite) for _ in range(4)] for _ in range(n)]
    )
    sup = sup_abs_pieces(breaks, coeffs, -2.0, 0.0)
    xs = np.linspace(-2.0, 0.0, 2001)
    dense = max(abs(eval_pieces(breaks, coeffs, x)) for x in xs)
    assert sup >= dense - 1e-12
    # the sup is attained, so it can only exceed the dense maximum by the
    # variation between adjacent samples, bounded through the derivative
    length = 2.0 / n
    slope_cap = max(
        abs(c[1]) + 2 * abs(c[2]) * length + 3 * abs(c[3]) * length**2 for c in coeffs
    )
    du = xs[1] - xs[0]
    assert sup <= dense + slope_cap * du + 1e-12


def test_sup_abs_pieces_interior_max():
    # |u(1-u)| on [0,1] as a cubic with zero cubic term: max 0.25 at u=1/2
    breaks = np.array([0.0, 1.0])
    coeffs = np.array([[0.0, 1.0, -1.0, 0.0]])
    assert abs(sup_abs_pieces(breaks, coeffs, 0.0, 1.0) - 0.25) < 1e-15
    # restricted window that excludes the critical point
    assert abs(sup_abs_pieces(breaks, coeffs, 0.0, 0.25) - 0.25 * 0.75) < 1e-15


def test_dedupe_knots_merges_nearby():
    out = dedupe_knots(np.array([0.0, 1.0, 1.0 + 1e-15, 2.0]))
    assert len(out) == 3
