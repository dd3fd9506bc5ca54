"""The twelve acceptance criteria at their stated tolerances and time budgets.

Each test records one PASS/FAIL line, printed again in the terminal summary."""
import math
import time

import numpy as np

from holo_lattice import fock, observables, oracle, propagate, rps, sholo, transfer
from holo_lattice.lattice import build_hex_domain, build_square_domain
from holo_lattice.suites import plus_sector

from propagator_literals import CASES, literal_row

SIX = [("ising", "critical", None), ("ising", "subcritical", 0.6), ("at", "critical", None),
       ("at", "subcritical", 0.6), ("loop", "critical", None), ("loop", "subcritical", 0.5)]


def matching_pfaffian(A):
    n = A.shape[0]
    if n == 0:
        return 1.0
    total = 0.0
    for j in range(1, n):
        rest = [k for k in range(1, n) if k != j]
        total += (-1) ** (j - 1) * A[0, j] * matching_pfaffian(A[np.ix_(rest, rest)])
    return total


def test_propagator_fidelity(report):
    t0 = time.perf_counter()
    worst = 0.0
    for model, regime, c, rows in CASES:
        for n in range(2, 7):
            P = propagate.build_propagator(model, regime, n, c)
            for k in range(n):
                row = literal_row(rows, k, n)
                for j in range(n):
                    want = row.get(j - k, (0, 0))
                    a, b = P.coefficients(k, j)
                    worst = max(worst, abs(a - want[0]), abs(b - want[1]))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-14 and dt < 1
    report(1, "propagator fidelity", ok, f"max abs diff {worst:.2e}, {dt:.2f}s")
    assert ok


def test_spectral_properties(report):
    t0 = time.perf_counter()
    worst_sym, min_mod, all_distinct, any_unit = 0.0, math.inf, True, False
    for model, regime, c in SIX:
        for n in range(2, 7):
            rep = propagate.spectrum(propagate.build_propagator(model, regime, n, c), 1e-8)
            worst_sym = max(worst_sym, rep.symmetric_defect)
            min_mod = min(min_mod, rep.min_modulus)
            all_distinct &= rep.distinct
            any_unit |= rep.has_unit_eigenvalue
    dt = time.perf_counter() - t0
    ok = worst_sym <= 1e-10 and min_mod > 1 and all_distinct and not any_unit and dt < 5
    report(2, "spectral properties", ok,
           f"symmetry defect {worst_sym:.2e}, min |eigenvalue| {min_mod:.4f}, "
           f"distinct {all_distinct}, unit eigenvalue {any_unit}, {dt:.2f}s")
    assert ok


def test_pfaffian_suite(report, rng):
    t0 = time.perf_counter()
    oracle_err = det_err = cong_err = 0.0
    for n in (2, 4, 6, 8):
        for _ in range(5):
            X = rng.normal(size=(n, n))
            A = X - X.T
            ref = matching_pfaffian(A)
            oracle_err = max(oracle_err, abs(fock.pfaffian(A) - ref) / max(1.0, abs(ref)))
    for n in (2, 4, 6, 8, 10, 12):
        for _ in range(5):
            X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            A = X - X.T
            B = rng.normal(size=(n, n))
            p, d = fock.pfaffian(A), np.linalg.det(A)
            det_err = max(det_err, abs(p * p - d) / abs(d))
            rhs = np.linalg.det(B) * p
            cong_err = max(cong_err, abs(fock.pfaffian(B @ A @ B.T) - rhs) / abs(rhs))
    dt = time.perf_counter() - t0
    # "exact" against the matching expansion is read as agreement to rounding
    ok = oracle_err <= 1e-12 and det_err <= 1e-9 and cong_err <= 1e-9 and dt < 5
    report(3, "pfaffian suite", ok,
           f"oracle {oracle_err:.2e}, Pf^2=det {det_err:.2e}, congruence {cong_err:.2e}, {dt:.2f}s")
    assert ok


def test_duality(report, rng):
    t0 = time.perf_counter()
    self_dual = abs(transfer.ising_dual(sholo.BETA_C) - sholo.BETA_C)
    rel = inv = 0.0
    tried = 0
    while tried < 40:
        J, U = rng.uniform(0.15, 0.6), rng.uniform(-0.1, 0.4)
        try:
            Js, Us = transfer.at_dual(J, U)
            J2, U2 = transfer.at_dual(Js, Us)
        except transfer.DualityDomainError:
            continue
        tried += 1
        rel = max(rel, *map(abs, transfer.at_relations(J, U, Js, Us)))
        inv = max(inv, abs(J2 - J), abs(U2 - U))
    c = propagate.AT_CRITICAL
    Js, Us = transfer.at_dual(c, c)
    fixed = max(abs(Js - c), abs(Us - c))
    dt = time.perf_counter() - t0
    ok = self_dual <= 1e-12 and rel <= 1e-10 and inv <= 1e-9 and fixed <= 1e-10 and dt < 1
    report(4, "duality", ok, f"self-dual {self_dual:.1e}, relations {rel:.1e}, "
                             f"involution {inv:.1e}, fixed point {fixed:.1e}, {dt:.2f}s")
    assert ok


def test_transfer_partition_correspondence(report):
    t0 = time.perf_counter()
    worst = 0.0
    for L in range(1, 5):
        for N in range(1, 5):
            Z = transfer.strip_partition(transfer.build_ising_transfer(L, 0.4), N)
            Zo = oracle.enumerate_ising(oracle.strip_graph(L, N), 0.4, "plus").Z
            worst = max(worst, abs(Z / Zo - 1))
    c = propagate.AT_CRITICAL
    for L in (1, 2):
        for N in (1, 2, 3):
            for J, U in ((0.3, 0.1), (c, c)):
                Z = transfer.strip_partition(transfer.build_at_transfer(L, J, U), N)
                Zo = oracle.enumerate_at(oracle.strip_graph(L, N), J, U, "plus").Z
                worst = max(worst, abs(Z / Zo - 1))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 30
    report(5, "transfer/partition correspondence", ok, f"max rel err {worst:.2e}, {dt:.2f}s")
    assert ok


def test_ising_random_cluster(report):
    t0 = time.perf_counter()
    worst = 0.0
    for w in range(1, 4):
        for h in range(1, 4):
            g = oracle.square_grid(w, h)
            for beta in (0.2, sholo.BETA_C, 0.8):
                c = oracle.enumerate_ising(g, beta).observables["correlations"]
                r = oracle.enumerate_rc(g, 1 - math.exp(-2 * beta), 2).observables["connectivity"]
                worst = max(worst, float(np.abs(c - r).max()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 60
    report(6, "ising / random-cluster", ok, f"max abs err {worst:.2e}, {dt:.2f}s")
    assert ok


def test_path_sum_sholo(report):
    t0 = time.perf_counter()
    g = build_square_domain(3, 2)
    rels = sholo.make_relations(sholo.HoloParams("ising", "critical"))
    ising = 0.0
    for a in range(g.n_edges):
        if not g.is_horizontal(a):
            continue
        F = observables.ising_observable_field(g, a, sholo.BETA_C)
        r = sholo.sholo_residuals(sholo.EdgeField(g, F), rels, exclude_edges=[a])
        ising = max(ising, r.max_residual)
    h = build_hex_domain([(0, 0), (1, 0)])
    ends = {v.grid for v in h.vertices}
    starts = [e for e in sorted(h.boundary) if sum(x in ends for x in h.edge_ends[e]) == 1]
    loop = 0.0
    for a in starts:
        F = observables.loop_observable_field(h, a, propagate.x_critical(0), 5 / 8)
        loop = max(loop, max(observables.smirnov_residuals(h, F).values()))
    dt = time.perf_counter() - t0
    ok = ising <= 1e-10 and loop <= 1e-10 and dt < 30
    report(7, "path-sum s-holomorphicity", ok,
           f"ising faces {ising:.2e}, loop vertices {loop:.2e} ({len(starts)} sources), {dt:.2f}s")
    assert ok


def test_two_point_identities(report):
    t0 = time.perf_counter()
    d = build_square_domain(1, 3)
    ratios = {k: [] for k in observables.IDENTITIES}
    for ay in range(4):
        for zy in range(ay + 1, 4):
            for rep in observables.two_point_identities(d, 0.5 + 1j * zy, 0.5 + 1j * ay, 0.4):
                if rep.ratio is not None:
                    ratios[rep.identity].append(rep.ratio)
    spread, const = {}, {}
    for k, rs in ratios.items():
        spread[k] = max(abs(r - rs[0]) for r in rs)
        const[k] = rs[0]
    dt = time.perf_counter() - t0
    required = ("psi-psi", "psi-psibar", "psibar-psibar")
    ok = all(spread[k] <= 1e-8 for k in required) and dt < 30
    detail = ", ".join(f"{k} ratio {const[k].real:+.6f}{const[k].imag:+.6f}i spread {spread[k]:.1e}"
                       for k in observables.IDENTITIES)
    report(8, "two-point identities", ok, f"{detail}, {dt:.2f}s")
    assert ok


def test_multipoint_and_epsilon(report):
    t0 = time.perf_counter()
    d = build_square_domain(2, 3)
    pts = [(0.5 + 3j, "psi"), (1.5 + 2j, "psibar"), (0.5 + 1j, "psi"), (1.5 + 0j, "psibar")]
    pf = observables.multipoint_correlation(d, pts, 0.4).value
    direct = observables.multipoint_correlation(d, pts, 0.4, method="direct").value
    rel = abs(pf - direct) / abs(direct)
    lam = sholo.LAMBDA
    first = second = 0.0
    for eta in (1, -1):
        delta = 1.0 if eta == 1 else 0.0
        first = max(first, abs(0.5 * (lam**-eta - 1j * lam**eta) - lam**-1 * delta))
        second = max(second, abs(0.5 * (1j * lam**-eta + lam**eta) - lam**2 * delta))
    dt = time.perf_counter() - t0
    ok = rel <= 1e-8 and first <= 1e-15 and second <= 1e-15 and dt < 10
    report(9, "multipoint and epsilon identities", ok,
           f"pfaffian vs direct {rel:.2e}, first identity {first:.1e}, "
           f"second identity {second:.3f}, {dt:.2f}s")
    assert ok


def test_rps(report, rng):
    t0 = time.perf_counter()
    system = ext_err = zero = 0.0
    for model, regime, c in SIX:
        for n in (2, 3, 4):
            for N in (1, 2, 3, 4):
                op = rps.rps_operator(model, n, c, N, regime=regime)
                PN = propagate.matrix_power(op.propagator, N).matrix
                for _ in range(3):
                    u = rng.normal(size=n)
                    top = propagate.to_complex(PN @ propagate.to_real(u + 1j * op.apply(u)))
                    system = max(system, float(np.abs(top.imag).max()))
                if model == "loop":
                    continue
                u = rng.normal(size=n)
                e = rps.extend_kernel(op, u)
                ext_err = max(ext_err, e.sholo.max_residual, e.riemann.max_residual)
                zero = max(zero, float(np.abs(rps.extend_kernel(op, np.zeros(n)).field.values).max()))
    dt = time.perf_counter() - t0
    ok = system <= 1e-10 and ext_err <= 1e-9 and zero == 0 and dt < 10
    report(10, "rps operator and extension", ok,
           f"system {system:.2e}, extension {ext_err:.2e}, zero data {zero:.1e}, {dt:.2f}s")
    assert ok


def test_loop_transfer(report):
    t0 = time.perf_counter()
    worst = 0.0
    K, n = 0.7, 1.3
    for width in (1, 2):
        basis = transfer.build_loop_transfer(width, K, n).basis
        for rows in (1, 2, 3):
            Zt = transfer.loop_state_sums(width, rows, K, n)
            full = np.zeros_like(Zt)
            for key, v in oracle.enumerate_loop_states(width, rows, K, n).items():
                full[basis.index(key)] = v
            worst = max(worst, float(np.abs(full - Zt).max()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 10
    report(11, "loop transfer matrix", ok, f"max abs err {worst:.2e}, {dt:.2f}s")
    assert ok


def test_fock_spectrum(report):
    t0 = time.perf_counter()
    V = transfer.build_ising_transfer(2, 0.4)
    T = transfer.induced_rotation(V, transfer.clifford_generators(V.basis))
    ev = np.sort(np.linalg.eigvals(plus_sector(V)).real)[::-1]
    big = [l for l in T.eigenvalues if abs(l) > 1]
    fs = np.sort(np.real(fock.fock_spectrum(ev[0], big).spectrum))[::-1]
    rel = float(np.max(np.abs(fs - ev) / np.abs(ev))) if len(fs) == len(ev) else math.inf
    dt = time.perf_counter() - t0
    ok = rel <= 1e-6 and dt < 5
    report(12, "fock spectrum", ok, f"max rel err {rel:.2e} over {len(ev)} eigenvalues, {dt:.2f}s")
    assert ok
