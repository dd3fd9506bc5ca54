"""Named verification suites shared by the CLI `verify` command."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fock, observables, oracle, propagate, rps, sholo, transfer
from .lattice import build_hex_domain, build_square_domain


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "metrics": self.metrics,
                "failures": self.failures}


def _perm_pfaffian(A: np.ndarray) -> complex:
    """Sum over perfect matchings with signs: the defining expansion."""
    n = A.shape[0]

    def rec(idx):
        if not idx:
            return 1.0
        i, rest = idx[0], idx[1:]
        total = 0.0
        for pos, j in enumerate(rest):
            total += (-1) ** pos * A[i, j] * rec(rest[:pos] + rest[pos + 1:])
        return total

    return rec(list(range(n)))


def suite_pfaffian(rng) -> SuiteResult:
    m = {}
    worst_oracle = worst_det = worst_cov = 0.0
    for n in (2, 4, 6, 8):
        X = rng.normal(size=(n, n))
        A = X - X.T
        p = fock.pfaffian(A)
        worst_oracle = max(worst_oracle, abs(p - _perm_pfaffian(A)) / max(1.0, abs(p)))
    for n in (2, 4, 6, 8, 10, 12):
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        A = X - X.T
        B = rng.normal(size=(n, n))
        p = fock.pfaffian(A)
        worst_det = max(worst_det, abs(p * p - np.linalg.det(A)) / abs(np.linalg.det(A)))
        worst_cov = max(worst_cov, abs(fock.pfaffian(B @ A @ B.T) - np.linalg.det(B) * p)
                        / abs(np.linalg.det(B) * p))
    m.update(oracle=worst_oracle, pf2_det=worst_det, congruence=worst_cov)
    fails = [k for k, v in m.items() if v > (1e-12 if k == "oracle" else 1e-9)]
    return SuiteResult("pfaffian", not fails, m, fails)


def suite_duality(rng) -> SuiteResult:
    bc = sholo.BETA_C
    m = {"ising_self_dual": abs(transfer.ising_dual(bc) - bc)}
    worst_rel = worst_inv = 0.0
    for _ in range(20):
        J, U = rng.uniform(0.15, 0.6), rng.uniform(-0.1, 0.4)
        try:
            Js, Us = transfer.at_dual(J, U)
            J2, U2 = transfer.at_dual(Js, Us)
        except transfer.DualityDomainError:
            continue
        worst_rel = max(worst_rel, *map(abs, transfer.at_relations(J, U, Js, Us)))
        worst_inv = max(worst_inv, abs(J2 - J), abs(U2 - U))
    c = propagate.AT_CRITICAL
    Js, Us = transfer.at_dual(c, c)
    m.update(at_relations=worst_rel, at_involution=worst_inv,
             at_fixed_point=max(abs(Js - c), abs(Us - c)))
    tol = {"ising_self_dual": 1e-12, "at_relations": 1e-10, "at_involution": 1e-9,
           "at_fixed_point": 1e-10}
    fails = [k for k, v in m.items() if v > tol[k]]
    return SuiteResult("duality", not fails, m, fails)


def suite_transfer(rng) -> SuiteResult:
    worst = 0.0
    for L in range(2, 5):
        for N in range(1, 5):
            Z = transfer.strip_partition(transfer.build_ising_transfer(L, 0.4), N)
            Zo = oracle.enumerate_ising(oracle.strip_graph(L, N), 0.4, "plus").Z
            worst = max(worst, abs(Z / Zo - 1))
    for L in (1, 2):
        for N in (1, 2, 3):
            Z = transfer.strip_partition(transfer.build_at_transfer(L, 0.3, 0.1), N)
            Zo = oracle.enumerate_at(oracle.strip_graph(L, N), 0.3, 0.1, "plus").Z
            worst = max(worst, abs(Z / Zo - 1))
    return SuiteResult("transfer", worst <= 1e-8, {"max_rel_err": worst})


def suite_rc(rng) -> SuiteResult:
    worst = 0.0
    for w, h in ((2, 2), (3, 2), (3, 3)):
        g = oracle.square_grid(w, h)
        for beta in (0.2, sholo.BETA_C, 0.8):
            c = oracle.enumerate_ising(g, beta).observables["correlations"]
            r = oracle.enumerate_rc(g, 1 - math.exp(-2 * beta), 2).observables["connectivity"]
            worst = max(worst, float(np.abs(c - r).max()))
    return SuiteResult("rc", worst <= 1e-10, {"max_abs_err": worst})


def suite_sholo(rng) -> SuiteResult:
    g = build_square_domain(3, 2)
    a = g.edge_id(1.5 + 1j)
    F = observables.ising_observable_field(g, a, sholo.BETA_C, start="up")
    rels = sholo.make_relations(sholo.HoloParams("ising", "critical"))
    r1 = sholo.sholo_residuals(sholo.EdgeField(g, F), rels, exclude_edges=[a]).max_residual
    h = build_hex_domain([(0, 0), (1, 0)])
    ends = {v.grid for v in h.vertices}
    start = next(e for e in sorted(h.boundary) if sum(g_ in ends for g_ in h.edge_ends[e]) == 1)
    Fl = observables.loop_observable_field(h, start, propagate.x_critical(0), 5 / 8)
    r2 = max(observables.smirnov_residuals(h, Fl).values())
    m = {"ising_faces": r1, "loop_vertices": r2}
    fails = [k for k, v in m.items() if v > 1e-10]
    return SuiteResult("sholo", not fails, m, fails)


def suite_two_point(rng) -> SuiteResult:
    d = build_square_domain(1, 3)
    ratios = {k: [] for k in observables.IDENTITIES}
    for ay in range(4):
        for zy in range(ay + 1, 4):
            for rep in observables.two_point_identities(d, 0.5 + 1j * zy, 0.5 + 1j * ay, 0.4):
                if rep.ratio is not None:
                    ratios[rep.identity].append(rep.ratio)
    m = {}
    for k, rs in ratios.items():
        spread = max(abs(r - rs[0]) for r in rs) if rs else 0.0
        m[k] = {"ratio": [rs[0].real, rs[0].imag] if rs else None, "spread": spread}
    fails = [k for k in ("psi-psi", "psi-psibar", "psibar-psibar") if m[k]["spread"] > 1e-8]
    return SuiteResult("two-point", not fails, m, fails)


def suite_multipoint(rng) -> SuiteResult:
    d = build_square_domain(2, 3)
    pts = [(0.5 + 3j, "psi"), (1.5 + 2j, "psibar"), (0.5 + 1j, "psi"), (1.5 + 0j, "psibar")]
    pf = observables.multipoint_correlation(d, pts, 0.4).value
    direct = observables.multipoint_correlation(d, pts, 0.4, method="direct").value
    rel = abs(pf - direct) / abs(direct)
    eps = observables.epsilon_identities()
    e1 = max(abs(r["up"][0] - r["up"][1]) for r in eps)
    e2 = max(abs(r["down"][0] - r["down"][1]) for r in eps)
    m = {"pfaffian_vs_direct": rel, "epsilon_first": e1, "epsilon_second": e2}
    fails = [k for k, v in m.items() if v > (1e-8 if k == "pfaffian_vs_direct" else 1e-12)]
    return SuiteResult("multipoint", not fails, m, fails)


def suite_rps(rng) -> SuiteResult:
    worst_sys = worst_ext = worst_zero = 0.0
    for model, regime, c in (("ising", "critical", None), ("ising", "subcritical", 0.6),
                             ("at", "subcritical", 0.4), ("at", "critical", None)):
        for n in (2, 3, 4):
            for N in (1, 2, 3, 4):
                op = rps.rps_operator(model, n, c, N, regime=regime)
                u = rng.normal(size=n)
                worst_sys = max(worst_sys, op.system_residuals[op.formula])
                ext = rps.extend_kernel(op, u)
                worst_ext = max(worst_ext, ext.sholo.max_residual, ext.riemann.max_residual)
                zero = rps.extend_kernel(op, np.zeros(n))
                worst_zero = max(worst_zero, float(np.abs(zero.field.values).max()))
    m = {"system": worst_sys, "extension": worst_ext, "zero_data": worst_zero}
    tol = {"system": 1e-10, "extension": 1e-9, "zero_data": 0.0}
    fails = [k for k, v in m.items() if v > tol[k]]
    return SuiteResult("rps", not fails, m, fails)


def suite_loop_transfer(rng) -> SuiteResult:
    worst = 0.0
    K, n = 0.7, 1.3
    for width in (1, 2):
        for rows in (1, 2, 3):
            direct = oracle.enumerate_loop_states(width, rows, K, n)
            basis = transfer.build_loop_transfer(width, K, n).basis
            Zt = transfer.loop_state_sums(width, rows, K, n)
            full = np.zeros_like(Zt)
            for key, v in direct.items():
                full[basis.index(key)] = v
            worst = max(worst, float(np.abs(full - Zt).max()))
    return SuiteResult("loop-transfer", worst <= 1e-10, {"max_abs_err": worst})


def plus_sector(V: transfer.TransferOperator) -> np.ndarray:
    """V restricted to states whose right end spin is +."""
    L = V.basis.L
    idx = [i for i in range(V.basis.dimension) if not (i >> (L - 1)) & 1]
    return V.matrix[np.ix_(idx, idx)]


def suite_fock(rng) -> SuiteResult:
    V = transfer.build_ising_transfer(2, 0.4)
    G = transfer.clifford_generators(V.basis)
    T = transfer.induced_rotation(V, G)
    ev = np.sort(np.linalg.eigvals(plus_sector(V)).real)[::-1]
    big = [l for l in T.eigenvalues if abs(l) > 1]
    fs = np.sort(np.real(fock.fock_spectrum(ev[0], big).spectrum))[::-1]
    rel = float(np.max(np.abs(fs - ev) / np.abs(ev))) if len(fs) == len(ev) else math.inf
    return SuiteResult("fock", rel <= 1e-6, {"max_rel_err": rel})


def suite_spectrum(rng) -> SuiteResult:
    m = {}
    for model, regime, c in (("ising", "critical", None), ("ising", "subcritical", 0.6),
                             ("at", "critical", None), ("at", "subcritical", 0.6),
                             ("loop", "critical", None), ("loop", "subcritical", 0.5)):
        for n in range(2, 7):
            rep = propagate.spectrum(propagate.build_propagator(model, regime, n, c))
            m[f"{model}/{regime}/{n}"] = {"symmetric_defect": rep.symmetric_defect,
                                          "min_modulus": rep.min_modulus, "distinct": rep.distinct,
                                          "unit": rep.has_unit_eigenvalue}
    fails = [k for k, v in m.items()
             if v["symmetric_defect"] > 1e-10 or v["min_modulus"] <= 1 or not v["distinct"] or v["unit"]]
    return SuiteResult("spectrum", not fails, m, fails)


SUITES = {
    "pfaffian": suite_pfaffian,
    "duality": suite_duality,
    "transfer": suite_transfer,
    "rc": suite_rc,
    "sholo": suite_sholo,
    "two-point": suite_two_point,
    "multipoint": suite_multipoint,
    "rps": suite_rps,
    "loop-transfer": suite_loop_transfer,
    "fock": suite_fock,
    "spectrum": suite_spectrum,
}


def run_suite(name: str, seed: int = 0) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](np.random.default_rng(seed))
