import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holo_lattice.propagate import x_critical
from holo_lattice.rps import (InstabilityError, RpsError, SingularBlockError, extend_kernel,
                              lstsq_solve, rps_kernel, rps_operator)


def test_zero_height_gives_zero_operator():
    op = rps_operator("ising", 3, None, 0)
    assert np.array_equal(op.matrix, np.zeros((3, 3)))
    assert np.array_equal(rps_kernel(op).table, np.zeros((3, 3)))


def test_negative_height():
    with pytest.raises(RpsError):
        rps_operator("ising", 3, None, -1)


@pytest.mark.parametrize("model,coupling,regime,N", [
    ("at", None, "critical", 2),
    ("at", 0.4, "subcritical", 2),
    ("loop", x_critical(1), "critical", 3),
    ("loop", 0.4, "subcritical", 3),
])
def test_block_formula_agrees_with_direct_solve(model, coupling, regime, N, rng):
    op = rps_operator(model, 3, coupling, N, regime=regime)
    assert op.formula == "SR"
    for _ in range(3):
        u = rng.normal(size=3)
        assert np.abs(op.apply(u) - lstsq_solve(op, u)).max() < 1e-10


def test_alternative_block_product_does_not_solve_the_system():
    op = rps_operator("at", 3, None, 2)
    assert op.system_residuals["SR"] < 1e-10
    assert op.system_residuals["RS"] > 1e-3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_kernel_sum_equals_matrix_product(seed):
    rng = np.random.default_rng(seed)
    op = rps_operator("ising", 4, 0.6, 3)
    u = rng.normal(size=4)
    assert np.abs(rps_kernel(op).apply(u) - op.apply(u)).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5, 5), st.floats(-5, 5))
def test_operator_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    op = rps_operator("at", 3, 0.4, 2)
    u, w = rng.normal(size=3), rng.normal(size=3)
    lhs = op.apply(a * u + b * w)
    rhs = a * op.apply(u) + b * op.apply(w)
    assert np.abs(lhs - rhs).max() <= 1e-9 * (1 + np.abs(rhs).max())


def test_zero_data_extends_to_zero():
    op = rps_operator("ising", 3, None, 2)
    ext = extend_kernel(op, np.zeros(3))
    assert np.all(ext.field.values == 0)


@pytest.mark.parametrize("y0", [0, 1, 2])
def test_delta_extension_on_at_domain(y0):
    op = rps_operator("at", 3, 0.4, 2)
    u = np.zeros(3)
    u[y0] = 1
    ext = extend_kernel(op, u)
    assert ext.sholo.max_residual <= 1e-9
    assert ext.riemann.max_residual <= 1e-9
    assert ext.propagator_defect <= 1e-9


def test_extension_guards():
    op = rps_operator("loop", 3, 0.4, 2)
    with pytest.raises(RpsError):
        extend_kernel(op, np.zeros(3))
    with pytest.raises(RpsError):
        extend_kernel(rps_operator("ising", 3, None, 1), np.zeros(2))


def test_error_types():
    assert issubclass(SingularBlockError, RpsError) and issubclass(InstabilityError, RpsError)
    assert SingularBlockError(1e13).cond == 1e13


def test_json_envelope():
    d = rps_operator("ising", 3, 0.5, 1).to_json()
    assert d["formula"] == "SR" and len(d["matrix"]) == 3
