"""Boundary-to-boundary (RPS) operators on rectangles I x {0..N}.

Real data u on the bottom row b is completed to u + i v so that N steps of
the propagator land on a purely real top row:

    P^N [u; v] = [w; 0],   i.e.   SR u + SS v = 0,

with blocks taken over real parts (R) and imaginary parts (S).  The
operator u -> v is then -SS^{-1} SR.  The product with RS is computed as
well and the one that actually solves the system is selected.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import DualInterval, build_square_domain
from .propagate import (RealizedPropagator, block_decompose, build_propagator,
                        matrix_power, to_complex, to_real)
from .sholo import (LAMBDA, EdgeField, HoloParams, ResidualReport, make_relations,
                    riemann_bc_residuals, sholo_residuals)

COND_LIMIT = 1e12
OVERFLOW = 1e150


class RpsError(ValueError):
    pass


class SingularBlockError(RpsError):
    def __init__(self, cond: float):
        super().__init__(f"SS block is singular to working precision (condition {cond:.3g})")
        self.cond = cond


class InstabilityError(RpsError):
    pass


@dataclass
class RpsOperator:
    propagator: RealizedPropagator
    N: int
    matrix: np.ndarray
    formula: str
    candidates: dict
    system_residuals: dict
    ss_condition: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, u) -> np.ndarray:
        return self.matrix @ np.asarray(u, dtype=float)

    def to_json(self) -> dict:
        return {"model": self.propagator.model, "regime": self.propagator.regime,
                "coupling": self.propagator.coupling, "variant": self.propagator.variant,
                "N": self.N, "formula": self.formula, "ss_condition": self.ss_condition,
                "system_residuals": self.system_residuals, "matrix": self.matrix.tolist()}


@dataclass
class RpsKernel:
    """table[y, x] = f(y, x), so that v(x) = sum_y u(y) f(y, x)."""
    table: np.ndarray

    def apply(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.array([sum(u[y] * self.table[y, x] for y in range(len(u)))
                         for x in range(self.table.shape[1])])


def _system_residual(PN: np.ndarray, op: np.ndarray) -> float:
    """max |Im part of P^N (u + i op u)| over unit inputs u."""
    n = op.shape[0]
    worst = 0.0
    for y in range(n):
        u = np.zeros(n)
        u[y] = 1.0
        top = to_complex(PN @ to_real(u + 1j * (op @ u)))
        worst = max(worst, float(np.abs(top.imag).max()))
    return worst


def rps_operator(model: str, interval, coupling=None, N: int = 1, regime: str | None = None,
                 variant: str = "consistent") -> RpsOperator:
    if N < 0:
        raise RpsError("N must be non-negative")
    if regime is None:
        regime = "critical" if coupling is None else "subcritical"
    P = build_propagator(model, regime, interval, coupling, variant)
    n = P.n
    if N == 0:
        zero = np.zeros((n, n))
        return RpsOperator(P, 0, zero, "SR", {"SR": zero, "RS": zero},
                           {"SR": 0.0, "RS": 0.0}, 1.0)
    PN = matrix_power(P, N)
    blocks = block_decompose(PN)
    cond = blocks.ss_condition
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularBlockError(cond)
    lu_solve = lambda M: -np.linalg.solve(blocks.SS, M)
    cands = {"SR": lu_solve(blocks.SR), "RS": lu_solve(blocks.RS)}
    res = {k: _system_residual(PN.matrix, v) for k, v in cands.items()}
    best = min(res, key=res.get)
    return RpsOperator(P, N, cands[best], best, cands, res, cond)


def rps_kernel(operator: RpsOperator) -> RpsKernel:
    n = operator.n
    table = np.zeros((n, n))
    for y in range(n):
        e = np.zeros(n)
        e[y] = 1.0
        table[y] = operator.apply(e)
    return RpsKernel(table)


def lstsq_solve(operator: RpsOperator, u) -> np.ndarray:
    """v from a least-squares solve of the full system Im(P^N (u + i v)) = 0,
    independent of the block formula."""
    u = np.asarray(u, dtype=float)
    n = operator.n
    PN = matrix_power(operator.propagator, operator.N).matrix
    im_rows = PN[1::2]
    A = im_rows[:, 1::2]
    b = -im_rows[:, 0::2] @ u
    return np.linalg.lstsq(A, b, rcond=None)[0]


# ---------------------------------------------------------------------------
# Extension to the whole rectangle
# ---------------------------------------------------------------------------

def _blk(a: complex, b: complex) -> np.ndarray:
    a, b = complex(a), complex(b)
    return np.array([[a.real + b.real, -a.imag + b.imag], [a.imag + b.imag, a.real - b.real]])


def _parallel(ph: complex) -> np.ndarray:
    # Im(conj(ph) u) = 0: u is a real multiple of ph
    return np.array([[-ph.imag, ph.real], [0.0, 0.0]])


def _solve(rows, rhs) -> complex:
    A = np.vstack(rows)
    b = np.concatenate([[r.real, r.imag] for r in rhs])
    sol = np.linalg.lstsq(A, b, rcond=None)[0]
    return complex(sol[0], sol[1])


def _step(f: np.ndarray, nu: complex, left: complex, right: complex):
    """Vertical edges of a band from its bottom row f, then its top row."""
    lam = LAMBDA
    n = len(f)
    vert = []
    for k in range(n + 1):
        rows, rhs = [], []
        if k > 0:
            rows.append(_blk(nu, lam**3))
            rhs.append(f[k - 1] + nu * lam**3 * np.conj(f[k - 1]))
        if k < n:
            rows.append(_blk(1 / nu, lam**-3))
            rhs.append(f[k] + lam**-3 / nu * np.conj(f[k]))
        if k == 0:
            rows.append(_parallel(left))
            rhs.append(0j)
        if k == n:
            rows.append(_parallel(right))
            rhs.append(0j)
        vert.append(_solve(rows, rhs))
    top = np.array([_solve([_blk(1, lam / nu), _blk(1, nu / lam)],
                           [vert[k + 1] / nu + lam * np.conj(vert[k + 1]),
                            nu * vert[k] + np.conj(vert[k]) / lam]) for k in range(n)])
    return np.array(vert), top


@dataclass
class Extension:
    field: EdgeField
    sholo: ResidualReport
    riemann: ResidualReport
    riemann_normal: ResidualReport
    propagator_defect: float
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"values": [[float(z.real), float(z.imag)] for z in self.field.values],
                "edges": [[float(z.real), float(z.imag)] for z in self.field.grid.edges],
                "sholo": self.sholo.to_json(), "riemann": self.riemann.to_json(),
                "riemann_normal_convention": self.riemann_normal.max_residual,
                "propagator_defect": self.propagator_defect, **self.notes}


def extend_kernel(operator: RpsOperator, u, tol: float = 1e-9) -> Extension:
    """The s-holomorphic extension h of u + i (operator u) to the rectangle.

    Rows are produced by the face relations with walls parallel to lambda^3
    (left) and lambda (right); the largest gap between a produced row and the
    propagator applied to the previous one is reported as propagator_defect."""
    P = operator.propagator
    if P.model == "loop":
        raise RpsError("kernel extension is built for the square-lattice relations")
    u = np.asarray(u, dtype=float)
    n, N = operator.n, operator.N
    if u.shape != (n,):
        raise RpsError(f"u must have length {n}")
    params = (HoloParams(P.model, "critical") if P.regime == "critical"
              else HoloParams(P.model, "subcritical", beta=float(P.coupling)))
    nu = params.nu
    grid = build_square_domain(n, max(N, 1))
    vals = np.zeros(grid.n_edges, dtype=complex)
    row = u + 1j * operator.apply(u)
    defect = 0.0
    for y in range(N + 1):
        for k in range(n):
            vals[grid.edge_id(complex(k + 0.5, y))] = row[k]
        if y == N:
            break
        vert, top = _step(row, nu, LAMBDA**3, LAMBDA)
        for k in range(n + 1):
            vals[grid.edge_id(complex(k, y + 0.5))] = vert[k]
        defect = max(defect, float(np.abs(top - to_complex(P.matrix @ to_real(row))).max()))
        if not np.all(np.isfinite(top)) or np.abs(top).max() > OVERFLOW:
            raise InstabilityError(f"propagation overflow at row {y + 1}")
        row = top
    h = EdgeField(grid, vals)
    rels = make_relations(params)
    if N == 0:
        # a single row carries no faces of the rectangle
        sh = ResidualReport({}, 0.0, 0.0, tol)
        walls = []
    else:
        sh = sholo_residuals(h, rels, tol=tol)
        walls = [e for e in sorted(grid.boundary) if grid.edges[e].imag > 0]
    rb = riemann_bc_residuals(h, walls, "tangent", tol)
    rp = riemann_bc_residuals(h, walls, "normal", tol)
    return Extension(h, sh, rb, rp, defect, {"N": N, "n": n})
