import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holo_lattice.lattice import boundary_phase, build_square_domain
from holo_lattice.sholo import (BETA_C, E_PHASES, LAMBDA, EdgeField, HoloError, HoloParams,
                                PreconditionError, extend_with_residue, make_relations, nu_loop_of,
                                nu_of, riemann_bc_residuals, sholo_residuals)
from holo_lattice.observables import ising_observable_field


def test_constants():
    assert abs(LAMBDA - (1 + 1j) / math.sqrt(2)) < 1e-15
    assert abs(BETA_C - 0.5 * math.log(1 + math.sqrt(2))) < 1e-15
    assert E_PHASES[0] == -1 and abs(E_PHASES[1] - cmath.exp(4j * math.pi / 3)) < 1e-15


def test_nu_loop_is_one_for_n_one():
    assert abs(nu_loop_of(1.0) - 1) < 1e-15


def test_nu_has_unit_modulus():
    for a in (0.1, 0.5, 0.9):
        assert abs(abs(nu_of(a)) - 1) < 1e-15


def test_params_validation():
    with pytest.raises(HoloError):
        HoloParams("loop", "critical", n=1.0)
    with pytest.raises(HoloError):
        HoloParams("loop", "critical", n=2.5, s=0.5)
    with pytest.raises(HoloError):
        HoloParams("ising", "subcritical")
    assert HoloParams("ising", "critical").nu == 1


def test_zero_field_has_zero_residual():
    g = build_square_domain(3, 3)
    for p in (HoloParams("ising", "critical"), HoloParams("at", "subcritical", beta=0.3),
              HoloParams("loop", "subcritical", n=1.2, s=0.5)):
        assert sholo_residuals(EdgeField.zeros(g), make_relations(p)).max_residual == 0


def test_massless_relation_on_handmade_face():
    # on one face, N = lam * conj(lam * ...) style solution: take f(E) = 1 and solve
    # N + lam conj(N) = E + lam conj(E) with N real multiple of conj(lam)^(1/2)
    g = build_square_domain(1, 1)
    rels = make_relations(HoloParams("ising", "critical"))
    f = ising_observable_field(g, g.edge_id(0.5), BETA_C)
    rep = sholo_residuals(EdgeField(g, f), rels, exclude_edges=[g.edge_id(0.5)])
    assert rep.per_item == {}


def test_massive_observable_is_massive_sholo():
    g = build_square_domain(3, 2)
    a = g.edge_id(1.5 + 1j)
    for beta in (0.3, 0.6):
        f = ising_observable_field(g, a, beta)
        rels = make_relations(HoloParams("ising", "subcritical", beta=beta))
        assert sholo_residuals(EdgeField(g, f), rels, exclude_edges=[a]).max_residual < 1e-12


def test_riemann_parallel_and_orthogonal():
    g = build_square_domain(2, 2)
    vals = np.zeros(g.n_edges, dtype=complex)
    for e in g.boundary:
        vals[e] = 1 / cmath.sqrt(boundary_phase(g, e).value)
    assert riemann_bc_residuals(EdgeField(g, vals)).max_residual < 1e-15
    rep = riemann_bc_residuals(EdgeField(g, 1j * vals))
    assert all(abs(v - 1) < 1e-15 for v in rep.per_item.values())


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_residuals_scale_with_real_factor(re, im):
    g = build_square_domain(2, 2)
    rng = np.random.default_rng(1)
    vals = rng.normal(size=g.n_edges) + 1j * rng.normal(size=g.n_edges)
    rels = make_relations(HoloParams("ising", "critical"))
    base = sholo_residuals(EdgeField(g, vals), rels).max_residual
    scaled = sholo_residuals(EdgeField(g, re * vals), rels).max_residual
    assert abs(scaled - abs(re) * base) <= 1e-9 * (1 + base)


def test_residue_from_path_sums():
    g = build_square_domain(2, 2)
    a = g.edge_id(0.5 + 1j)
    f = ising_observable_field(g, a, BETA_C)
    front, back, residue = extend_with_residue(EdgeField(g, f), a, HoloParams("ising", "critical"))
    alpha = math.sqrt(2) - 1
    # from above: the empty path; from below: the loop round the right column,
    # four dual edges and winding -2pi
    assert abs(front - 1) < 1e-12
    assert abs(back + alpha**4) < 1e-12
    assert abs(residue - 1j / (2 * math.pi) * (1 + alpha**4)) < 1e-12


def test_residue_preconditions():
    g = build_square_domain(2, 2)
    rng = np.random.default_rng(0)
    junk = EdgeField(g, rng.normal(size=g.n_edges))
    with pytest.raises(PreconditionError):
        extend_with_residue(junk, g.edge_id(0.5 + 1j), HoloParams("ising", "critical"))
    with pytest.raises(PreconditionError):
        extend_with_residue(EdgeField.zeros(g), g.edge_id(1 + 0.5j), HoloParams("ising", "critical"))
