"""Pfaffians, Wick's formula, polarizations and Fock spectra."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .transfer import GeneratorSet, InducedRotation


class FockError(ValueError):
    pass


class PolarizationError(FockError):
    pass


@dataclass
class AntisymmetricMatrix:
    entries: np.ndarray
    defect: float = 0.0

    @classmethod
    def from_matrix(cls, A) -> "AntisymmetricMatrix":
        A = np.asarray(A)
        defect = float(np.abs(A + A.T).max()) if A.size else 0.0
        return cls((A - A.T) / 2, defect)

    @classmethod
    def from_upper(cls, table) -> "AntisymmetricMatrix":
        """Build from the strict upper triangle (i < j) of `table`."""
        U = np.triu(np.asarray(table), 1)
        return cls(U - U.T, 0.0)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


def pfaffian(A) -> complex:
    """Pfaffian by skew-symmetric Gaussian elimination with pivoting
    (Parlett-Reid style), O(n^3)."""
    if isinstance(A, AntisymmetricMatrix):
        A = A.entries
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise FockError("pfaffian needs a square matrix")
    if n % 2:
        raise FockError("pfaffian of an odd-dimensional matrix")
    if n == 0:
        return 1.0 + 0j
    result = 1.0 + 0j
    for k in range(0, n - 1, 2):
        # pivot the largest entry of column k below the diagonal into row k+1
        kp = k + 1 + int(np.abs(A[k + 1:, k]).argmax())
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            result = -result
        if A[k + 1, k] == 0:
            return 0j
        result *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            # eliminate row/column k using row/column k+1
            A[k + 2:, k + 2:] += np.outer(tau, A[k + 2:, k + 1]) - np.outer(A[k + 2:, k + 1], tau)
    return result


@dataclass(frozen=True)
class CorrelationValue:
    value: complex
    parity_ok: bool = True
    epsilons: tuple = ()


def wick_correlation(pair_table) -> CorrelationValue:
    """Pfaffian of the table of pairwise expectations (upper triangle used)."""
    T = np.asarray(pair_table.entries if isinstance(pair_table, AntisymmetricMatrix) else pair_table)
    if T.shape[0] % 2:
        return CorrelationValue(0j, False)
    return CorrelationValue(complex(pfaffian(AntisymmetricMatrix.from_upper(T))), True)


# ---------------------------------------------------------------------------
# Polarizations
# ---------------------------------------------------------------------------

@dataclass
class Polarization:
    W_cr: list
    W_ann: list
    source: str
    isotropy_defect: float
    operators: list = field(default_factory=list)
    eigenvalues: np.ndarray | None = None

    @property
    def dims(self) -> tuple:
        return len(self.W_cr), len(self.W_ann)


def anticommutator_form(u: np.ndarray, v: np.ndarray) -> tuple:
    """(u, v) with {u, v} = (u, v) Id, and the non-scalar remainder."""
    dim = u.shape[0]
    anti = u @ v + v @ u
    c = np.trace(anti) / dim
    return complex(c), float(np.abs(anti - c * np.eye(dim)).max())


def _isotropy(ops: list) -> float:
    worst = 0.0
    for i in range(len(ops)):
        for j in range(i, len(ops)):
            c, rem = anticommutator_form(ops[i], ops[j])
            worst = max(worst, abs(c), rem)
    return worst


def polarize(source: str, data, N: int | None = None, V=None, tol: float = 1e-8) -> Polarization:
    """Creation/annihilation splitting of the generator span.

    source "low-temp": data is a GeneratorSet; W_cr = span{p_k - i q_k},
    W_ann = span{p_k + i q_k}.
    source "vanishing-temp": as above with W_cr conjugated by V^N.
    source "physical": data is an InducedRotation; W_cr is spanned by the
    eigenvectors with |lambda| < 1 and W_ann by those with |lambda| > 1.
    """
    if source in ("low-temp", "vanishing-temp"):
        if not isinstance(data, GeneratorSet):
            raise PolarizationError("generator source needs a GeneratorSet")
        pairs = [(data.p, data.q)]
        if data.p_prime:
            pairs.append((data.p_prime, data.q_prime))
        cr = [p[k] - 1j * q[k] for p, q in pairs for k in range(data.n)]
        ann = [p[k] + 1j * q[k] for p, q in pairs for k in range(data.n)]
        if source == "vanishing-temp":
            if N is None or V is None:
                raise PolarizationError("vanishing-temperature polarization needs V and N")
            M = V.matrix if hasattr(V, "matrix") else np.asarray(V)
            MN = np.linalg.matrix_power(M, N)
            MNi = np.linalg.inv(MN)
            cr = [MNi @ w @ MN for w in cr]
        defect = max(_isotropy(cr), _isotropy(ann))
        return Polarization(cr, ann, source, defect, cr + ann)
    if source == "physical":
        if not isinstance(data, InducedRotation):
            raise PolarizationError("physical source needs an InducedRotation")
        ev, vecs = np.linalg.eig(data.matrix)
        if np.any(np.abs(np.abs(ev) - 1) <= tol):
            raise PolarizationError("unit-modulus eigenvalue: no physical polarization")
        small = [vecs[:, i] for i in range(len(ev)) if abs(ev[i]) < 1]
        large = [vecs[:, i] for i in range(len(ev)) if abs(ev[i]) > 1]
        if len(small) != len(large):
            raise PolarizationError("unbalanced spectrum")
        ops = data.operators
        as_op = lambda c: sum(ci * b for ci, b in zip(c, ops))
        cr = [as_op(c) for c in small]
        ann = [as_op(c) for c in large]
        defect = max(_isotropy(cr), _isotropy(ann))
        return Polarization(small, large, source, defect, cr + ann, ev)
    raise PolarizationError(f"unknown source {source!r}")


def vacuum_annihilation_defect(pol: Polarization, vacuum: np.ndarray) -> float:
    """max |w v_vac| over annihilators w, the numeric stand-in for the
    irreducibility statement."""
    ann = pol.operators[len(pol.W_cr):]
    return max(float(np.abs(w @ vacuum).max()) for w in ann)


# ---------------------------------------------------------------------------
# Fock spectrum
# ---------------------------------------------------------------------------

@dataclass
class FockSpectrum:
    Lambda0: complex
    lambdas: list
    spectrum: list


def fock_spectrum(Lambda0, lambdas, max_terms: int | None = None) -> FockSpectrum:
    """Lambda0 * prod_{s in S} lambda_s^-1 over all subsets S, largest first."""
    lambdas = list(lambdas)
    vals = []
    for r in range(len(lambdas) + 1):
        for S in combinations(range(len(lambdas)), r):
            v = complex(Lambda0)
            for s in S:
                v /= lambdas[s]
            vals.append(v)
    vals.sort(key=lambda z: (-abs(z), z.real, z.imag))
    if max_terms is not None:
        vals = vals[:max_terms]
    return FockSpectrum(complex(Lambda0), lambdas, vals)
