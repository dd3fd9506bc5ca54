import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holo_lattice.lattice import build_hex_domain
from holo_lattice.oracle import (OracleError, SizeError, SpinGraph, correlation_length_slope,
                                 critical_points, enumerate_at, enumerate_ising, enumerate_loop,
                                 enumerate_rc, ising_dual_partition, p_dual, p_sd, rc_weight_x,
                                 square_grid, x_c)


def test_single_site():
    r = enumerate_ising(SpinGraph(1, ()), 0.7)
    assert r.Z == 2 and r.observables["magnetization"][0] == 0


def test_infinite_temperature_decorrelates():
    c = enumerate_ising(square_grid(2, 2), 0.0).observables["correlations"]
    assert np.allclose(c, np.eye(4))


def test_two_by_two_closed_form():
    # high-temperature expansion of the 4-cycle: Z = 2^4 cosh^4 b (1 + tanh^4 b)
    b = 0.3
    Z = enumerate_ising(square_grid(2, 2), b).Z
    assert abs(Z - 16 * math.cosh(b) ** 4 * (1 + math.tanh(b) ** 4)) < 1e-12
    corr = enumerate_ising(square_grid(2, 2), b).observables["correlations"][0, 1]
    t = math.tanh(b)
    assert abs(corr - (t + t**3) / (1 + t**4)) < 1e-12


def test_at_factorizes_without_four_spin_term():
    g = square_grid(2, 2)
    Za = enumerate_at(g, 0.35, 0.0).Z
    Zi = enumerate_ising(g, 0.35).Z
    assert abs(Za / Zi**2 - 1) < 1e-12


def test_at_zero_couplings():
    assert enumerate_at(square_grid(2, 2), 0, 0).Z == 4**4


def test_rc_extremes():
    g = square_grid(2, 2)
    c0 = enumerate_rc(g, 0.0, 2).observables["connectivity"]
    c1 = enumerate_rc(g, 1.0, 2).observables["connectivity"]
    assert np.array_equal(c0, np.eye(4)) and np.all(c1 == 1)


def test_rc_q_one_is_percolation():
    g = square_grid(2, 2)
    p = 0.37
    assert abs(enumerate_rc(g, p, 1).Z - 1) < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 1.2))
def test_ising_correlations_equal_rc_connectivity(beta):
    g = square_grid(3, 2)
    c = enumerate_ising(g, beta).observables["correlations"]
    r = enumerate_rc(g, 1 - math.exp(-2 * beta), 2).observables["connectivity"]
    assert np.abs(c - r).max() < 1e-10


def test_wired_boundary_connects_pins():
    g = square_grid(3, 3, pinned_boundary=True)
    c = enumerate_rc(g, 0.3, 2, "wired").observables["connectivity"]
    assert c[0, 8] == 1 and c[0, 4] < 1


def test_rc_validation():
    with pytest.raises(OracleError):
        enumerate_rc(square_grid(2, 2), 1.5, 2)
    with pytest.raises(OracleError):
        enumerate_rc(square_grid(2, 2), 0.5, 2, "periodic")
    with pytest.raises(SizeError):
        enumerate_rc(square_grid(4, 4), 0.5, 2)


def test_size_guards():
    with pytest.raises(SizeError):
        enumerate_ising(square_grid(5, 5), 0.3)
    with pytest.raises(SizeError):
        enumerate_at(square_grid(4, 3), 0.3, 0.1)


def test_loop_small_patches():
    hexagon = build_hex_domain([(0, 0)])
    assert enumerate_loop(hexagon, 0.0, 1.3).Z == 1
    assert enumerate_loop(hexagon, 0.5, 2.0).Z == 1.03125
    two = build_hex_domain([(0, 0), (1, 0)])
    # two single loops and the outer loop
    x, n = 0.6, 1.5
    assert abs(enumerate_loop(two, x, n).Z - (1 + 2 * n * x**6 + n * x**10)) < 1e-12


def test_loop_spin_form_agrees_at_n_one():
    two = build_hex_domain([(0, 0), (1, 0)])
    assert abs(enumerate_loop(two, 0.4, 1.0).Z - enumerate_loop(two, 0.4, 1.0, form="spin").Z) < 1e-12


def test_loop_validation():
    hexagon = build_hex_domain([(0, 0)])
    with pytest.raises(OracleError):
        enumerate_loop(hexagon, 0.5, 2.0, form="spin")
    with pytest.raises(OracleError):
        enumerate_loop(hexagon, 0.5, 1.0, h=0.1)


@pytest.mark.parametrize("x", [0.2, 0.5, 0.9])
def test_high_temperature_expansion_ratio(x):
    # Z_loop(n=1) equals the dual Ising sum up to x^{B/2}, B the loop edge count
    patch = build_hex_domain([(0, 0), (1, 0)])
    beta = 0.5 * abs(math.log(x))
    B = enumerate_loop(patch, x, 1.0).observables["edges"]
    ratio = enumerate_loop(patch, x, 1.0).Z / ising_dual_partition(patch, beta)
    assert abs(ratio - x ** (B / 2)) < 1e-12


def test_critical_values():
    assert abs(p_sd(2) - 0.5857864376) < 1e-10
    assert abs(x_c(1) - 1 / math.sqrt(3)) < 1e-15
    assert abs(x_c(2) - 1 / math.sqrt(2)) < 1e-15
    t = critical_points()
    assert t["checks"]["p_dual_fixes_p_sd"] < 1e-15
    assert t["checks"]["ising_p_at_beta_c_minus_p_sd2"] < 1e-15
    with pytest.raises(OracleError):
        x_c(3)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.5, 4))
def test_dual_parameter_is_involution(p, q):
    assert abs(p_dual(p_dual(p, q), q) - p) < 1e-12


def test_rc_weight_x_at_self_dual_point():
    assert abs(rc_weight_x(p_sd(2)) - 1) < 1e-12


def test_slopes():
    assert correlation_length_slope(3, 2, 1.0, 2).slopes == [0.0, 0.0]
    t0 = correlation_length_slope(3, 2, 0.0, 2)
    assert t0.slopes == [math.inf, math.inf] and len(t0.flags) == 2
    below = correlation_length_slope(4, 3, 0.45, 2)
    above = correlation_length_slope(4, 3, 0.7, 2)
    assert all(b > a for b, a in zip(below.slopes, above.slopes))


def test_envelope_records_convention():
    d = enumerate_ising(square_grid(2, 1), 0.2).to_json()
    assert d["convention"] and d["model"] == "ising" and len(d["observables"]["correlations"]) == 2
