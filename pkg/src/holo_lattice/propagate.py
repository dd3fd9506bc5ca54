"""Row-to-row propagators of s-holomorphic data, realized as real matrices.

A propagator acts on f: I* -> C by f -> A f + B conj(f) with complex n x n
matrices A, B.  Its realization is the real 2n x 2n matrix on the interleaved
vector (Re f(k_L), Im f(k_L), ..., Re f(k_R), Im f(k_R)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import DualInterval, build_dual_interval
from .sholo import BETA_C, LAMBDA

SQRT2 = math.sqrt(2)
SQRT3 = math.sqrt(3)
AT_CRITICAL = 0.25 * math.log(3)

VARIANTS = ("literal", "consistent")


class PropagatorError(ValueError):
    pass


def x_critical(n: float) -> float:
    return 1 / math.sqrt(2 + math.sqrt(2 - n))


def beta_loop(x: float) -> float:
    return 0.5 * abs(math.log(x))


def realify(a: complex, b: complex) -> np.ndarray:
    """2x2 real block of u -> a*u + b*conj(u)."""
    a, b = complex(a), complex(b)
    return np.array([[a.real + b.real, -a.imag + b.imag],
                     [a.imag + b.imag, a.real - b.real]])


def decode_block(block: np.ndarray) -> tuple:
    """Inverse of realify: recover (a, b) from a 2x2 real block."""
    m = np.asarray(block, dtype=float)
    a = complex((m[0, 0] + m[1, 1]) / 2, (m[1, 0] - m[0, 1]) / 2)
    b = complex((m[0, 0] - m[1, 1]) / 2, (m[1, 0] + m[0, 1]) / 2)
    return a, b


# ---------------------------------------------------------------------------
# Row tables.  Each row is {offset: (coef of f(k+offset), coef of conj f(k+offset))}.
# ---------------------------------------------------------------------------

def _constant_rows(mu: complex, r: float, kr_bar_mu: complex):
    """Critical rows built on the phase mu and the weight r (sqrt2 or sqrt3)."""
    bulk = {-1: (mu**-1 / r, 1 / r), 0: (2, -r), 1: (mu / r, 1 / r)}
    left = {0: (1 + 1 / r, mu + mu**-1 / r), 1: (mu / r, 1 / r)}
    right = {-1: (mu**-1 / r, 1 / r), 0: (1 + 1 / r, mu**-1 + kr_bar_mu / r)}
    return bulk, left, right


def _beta_rows(beta: float, kl_bar: str, kr_sign: int):
    S, C = math.sinh(2 * beta), math.cosh(2 * beta)
    if S == 0:
        raise PropagatorError("S = sinh(2 beta) vanishes")
    wall = lambda sign: (-(S + C) * S + sign * 1j * (C - S)) / (2 * S)
    bulk = {-1: ((-S - 1j) / (2 * S), C / (2 * S)), 0: (C * C / S, -C),
            1: ((1j - S) / (2 * S), C / (2 * S))}
    left_bar = 1.0 if kl_bar == "one" else wall(+1)
    left = {0: ((S + C) * C / (2 * S), left_bar), 1: ((1j - S) / (2 * S), C / (2 * S))}
    # the k_R coefficient of f(k_R - 1) mirrors the bulk k-1 coefficient -(S+i)/2S
    right = {-1: (-(S + 1j) / (2 * S), C / (2 * S)), 0: ((S + C) * C / (2 * S), wall(kr_sign))}
    return bulk, left, right


def propagator_rows(model: str, regime: str, coupling: float | None, variant: str = "literal"):
    """(bulk, left, right, flags) for one of the six propagators."""
    if variant not in VARIANTS:
        raise PropagatorError(f"unknown variant {variant!r}")
    flags = []
    if regime == "critical":
        if model in ("ising", "at"):
            bulk, left, right = _constant_rows(LAMBDA**3, SQRT2, LAMBDA**3)
        elif model == "loop":
            if variant == "literal":
                kr = LAMBDA**3
                flags.append("loop k_R conj coefficient uses lambda^3 (literal)")
            else:
                kr = LAMBDA**2
                flags.append("loop k_R conj coefficient mirrored to lambda^2")
            bulk, left, right = _constant_rows(LAMBDA**2, SQRT3, kr)
        else:
            raise PropagatorError(f"unknown model {model!r}")
        return bulk, left, right, flags
    if regime != "subcritical":
        raise PropagatorError(f"unknown regime {regime!r}")
    if coupling is None:
        raise PropagatorError("subcritical propagators need a coupling")
    if model in ("ising", "at"):
        beta = float(coupling)
        if beta == 0:
            raise PropagatorError("beta = 0 makes S vanish")
        kl = "one" if variant == "literal" else "wall"
        kr = +1 if variant == "literal" else -1
    elif model == "loop":
        x = float(coupling)
        if x <= 0:
            raise PropagatorError("loop weight must be positive")
        beta = beta_loop(x)
        if beta == 0:
            raise PropagatorError("x = 1 makes S vanish")
        kl = "wall"
        kr = +1 if variant == "literal" else -1
    else:
        raise PropagatorError(f"unknown model {model!r}")
    flags.append("k_R coefficient of f(k_R-1) read as -(S+i)/2S")
    if kl == "one":
        flags.append("k_L conj coefficient 1 (literal)")
    flags.append("k_R conj coefficient uses " + ("+i(C-S) (literal)" if kr > 0 else "-i(C-S)"))
    bulk, left, right = _beta_rows(beta, kl, kr)
    return bulk, left, right, flags


@dataclass
class RealizedPropagator:
    interval: DualInterval
    model: str
    regime: str
    coupling: float | None
    matrix: np.ndarray
    variant: str = "literal"
    flags: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    def coefficients(self, k: int, j: int) -> tuple:
        """(coef of f(j), coef of conj f(j)) in row k (0-based site indices)."""
        return decode_block(self.matrix[2 * k:2 * k + 2, 2 * j:2 * j + 2])

    def complex_parts(self) -> tuple:
        """Complex matrices (A, B) with P f = A f + B conj(f)."""
        n = self.n
        A = np.zeros((n, n), dtype=complex)
        B = np.zeros((n, n), dtype=complex)
        for k in range(n):
            for j in range(n):
                A[k, j], B[k, j] = self.coefficients(k, j)
        return A, B

    def complexified(self) -> np.ndarray:
        """[[A, B], [conj B, conj A]] acting on (f, conj f)."""
        A, B = self.complex_parts()
        return np.block([[A, B], [B.conj(), A.conj()]])

    def to_json(self) -> dict:
        return {"model": self.model, "regime": self.regime, "coupling": self.coupling,
                "variant": self.variant, "n": self.n, "flags": list(self.flags),
                "matrix": self.matrix.tolist()}


def assemble(n: int, bulk: dict, left: dict, right: dict) -> np.ndarray:
    M = np.zeros((2 * n, 2 * n))
    for k in range(n):
        row = left if k == 0 else right if k == n - 1 else bulk
        for off, (a, b) in row.items():
            M[2 * k:2 * k + 2, 2 * (k + off):2 * (k + off) + 2] += realify(a, b)
    return M


def build_propagator(model: str, regime: str, interval: DualInterval | int,
                     coupling: float | None = None, variant: str = "literal") -> RealizedPropagator:
    if isinstance(interval, (int, np.integer)):
        interval = build_dual_interval(0, int(interval), "hexdual" if model == "loop" else "dual")
    if interval.n < 2:
        raise PropagatorError("propagators need at least two dual sites")
    bulk, left, right, flags = propagator_rows(model, regime, coupling, variant)
    M = assemble(interval.n, bulk, left, right)
    if not np.all(np.isfinite(M)):
        raise PropagatorError("non-finite propagator entries")
    if regime == "critical" and coupling is None:
        coupling = {"ising": BETA_C, "at": AT_CRITICAL, "loop": None}[model]
    return RealizedPropagator(interval, model, regime, coupling, M, variant, flags)


# ---------------------------------------------------------------------------
# Spectra, powers, blocks
# ---------------------------------------------------------------------------

@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    symmetric_defect: float
    min_modulus: float
    distinct: bool
    has_unit_eigenvalue: bool
    tolerance: float

    def to_json(self) -> dict:
        return {"eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
                "symmetric_defect": self.symmetric_defect, "min_modulus": self.min_modulus,
                "distinct": self.distinct, "has_unit_eigenvalue": self.has_unit_eigenvalue,
                "tolerance": self.tolerance}


def _matrix(P) -> np.ndarray:
    return P.matrix if isinstance(P, RealizedPropagator) else np.asarray(P)


def spectrum(P, tolerance: float = 1e-8) -> SpectrumReport:
    M = _matrix(P)
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise PropagatorError(f"eigenvalue solver failed on {M!r}") from exc
    ev = ev[np.lexsort((ev.imag, np.abs(ev)))]
    sym = float(np.abs(M - M.T).max())
    gaps = np.abs(ev[:, None] - ev[None, :])
    np.fill_diagonal(gaps, np.inf)
    scale = np.maximum(1.0, np.abs(ev)[:, None])
    distinct = bool(np.all(gaps > tolerance * scale))
    unit = bool(np.any(np.abs(ev - 1) <= tolerance))
    return SpectrumReport(ev, sym, float(np.abs(ev).min()), distinct, unit, tolerance)


def matrix_power(P: RealizedPropagator, N: int) -> RealizedPropagator:
    if N < 0:
        raise PropagatorError("negative power")
    M = np.eye(P.matrix.shape[0])
    for _ in range(N):
        M = M @ P.matrix
    return RealizedPropagator(P.interval, P.model, P.regime, P.coupling, M, P.variant,
                              list(P.flags) + [f"power {N}"])


@dataclass
class BlockDecomposition:
    RR: np.ndarray
    RS: np.ndarray
    SR: np.ndarray
    SS: np.ndarray

    def reassemble(self) -> np.ndarray:
        n = self.RR.shape[0]
        M = np.zeros((2 * n, 2 * n))
        re, im = np.arange(0, 2 * n, 2), np.arange(1, 2 * n, 2)
        M[np.ix_(re, re)] = self.RR
        M[np.ix_(re, im)] = self.RS
        M[np.ix_(im, re)] = self.SR
        M[np.ix_(im, im)] = self.SS
        return M

    @property
    def ss_condition(self) -> float:
        return float(np.linalg.cond(self.SS))


def block_decompose(PN) -> BlockDecomposition:
    """Split into real-part and imaginary-part blocks: rows/columns R are the
    real components of all sites, S the imaginary ones."""
    M = _matrix(PN)
    if M.shape[0] % 2:
        raise PropagatorError("odd dimension")
    n = M.shape[0] // 2
    re, im = np.arange(0, 2 * n, 2), np.arange(1, 2 * n, 2)
    return BlockDecomposition(M[np.ix_(re, re)].copy(), M[np.ix_(re, im)].copy(),
                              M[np.ix_(im, re)].copy(), M[np.ix_(im, im)].copy())


def to_real(f) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    out = np.empty(2 * len(f))
    out[0::2], out[1::2] = f.real, f.imag
    return out


def to_complex(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[0::2] + 1j * v[1::2]


def apply(P, f) -> np.ndarray:
    M = _matrix(P)
    f = np.asarray(f, dtype=complex)
    if 2 * len(f) != M.shape[0]:
        raise PropagatorError(f"field length {len(f)} does not match n={M.shape[0] // 2}")
    return to_complex(M @ to_real(f))


def conjugation_involution(n: int) -> np.ndarray:
    """Realization of f -> i conj(f)."""
    return np.kron(np.eye(n), realify(0, 1j))


def export_csv(P, path) -> None:
    np.savetxt(path, _matrix(P), delimiter=",", fmt="%.17g")
