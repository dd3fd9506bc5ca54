"""Transfer matrices, Clifford-type generators, induced rotations and duality.

Spin states of a row I = {a, ..., b} (L = b - a + 1 sites) are bit-packed:
bit i set means sigma at column a+i equals -1.  Ashkin-Teller states pack the
tau layer in the low L bits and the tau' layer in the high L bits.

The row transfer matrix is V = D B D, where D is diagonal and carries half of
the in-row bonds and B carries the bonds between consecutive rows with both
end columns held fixed.  With e_+ the all-plus state, <e_+| D V^N D |e_+>
is the partition function of the strip I x {0, ..., N} with plus boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .lattice import DualInterval


class TransferError(ValueError):
    pass


class SizeError(TransferError):
    pass


class NonQuadraticError(TransferError):
    pass


class DualityDomainError(TransferError):
    pass


# ---------------------------------------------------------------------------
# Bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpinBasis:
    L: int
    model: str = "ising"
    a: int = 0

    def __post_init__(self):
        if self.L < 1:
            raise TransferError("need at least one site")
        if self.model not in ("ising", "at"):
            raise TransferError(f"unknown model {self.model!r}")

    @property
    def layers(self) -> int:
        return 1 if self.model == "ising" else 2

    @property
    def dimension(self) -> int:
        return 2 ** (self.L * self.layers)

    def encode(self, spins) -> int:
        spins = np.asarray(spins).reshape(-1)
        return int(sum(1 << i for i, s in enumerate(spins) if s < 0))

    def decode(self, index: int) -> np.ndarray:
        nbits = self.L * self.layers
        return np.array([-1 if (index >> i) & 1 else 1 for i in range(nbits)])

    def spins(self) -> np.ndarray:
        """dimension x (layers*L) array of spins, row = state index."""
        idx = np.arange(self.dimension)[:, None]
        bits = (idx >> np.arange(self.L * self.layers)[None, :]) & 1
        return 1 - 2 * bits


def spin_basis(interval, model: str = "ising") -> SpinBasis:
    """Basis on a primal interval, or on L sites when given an integer."""
    if isinstance(interval, DualInterval):
        if interval.kind != "primal":
            raise TransferError("spin bases live on primal intervals")
        return SpinBasis(interval.n, model, interval.a)
    return SpinBasis(int(interval), model)


@dataclass
class TransferOperator:
    basis: object
    matrix: np.ndarray
    factors: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def factor_defect(self) -> float:
        if not self.factors:
            return 0.0
        D, B = self.factors["Vh_sqrt"], self.factors["VV"]
        R = D @ B @ D
        return float(np.abs(R - self.matrix).max() / np.abs(self.matrix).max())

    def to_json(self) -> dict:
        return {"params": self.params, "dimension": self.dimension,
                "matrix": np.real_if_close(self.matrix).tolist()}


def _ising_factors(S: np.ndarray, beta: float):
    """D and B for spin rows S (dim x L)."""
    L = S.shape[1]
    inrow = (S[:, :-1] * S[:, 1:]).sum(axis=1) if L > 1 else np.zeros(len(S))
    D = np.diag(np.exp(0.5 * beta * inrow))
    B = np.exp(beta * (S @ S.T).astype(float))
    pinned = (S[:, None, 0] == S[None, :, 0]) & (S[:, None, -1] == S[None, :, -1])
    return D, B * pinned


def build_ising_transfer(interval, beta: float) -> TransferOperator:
    basis = spin_basis(interval, "ising")
    if basis.L > 12:
        raise SizeError("ising transfer matrices are limited to 12 sites")
    D, B = _ising_factors(basis.spins(), beta)
    return TransferOperator(basis, D @ B @ D, {"Vh_sqrt": D, "VV": B},
                            {"model": "ising", "L": basis.L, "beta": beta})


def build_at_transfer(interval, J: float, U: float) -> TransferOperator:
    basis = spin_basis(interval, "at")
    L = basis.L
    if L > 6:
        raise SizeError("AT transfer matrices are limited to 6 sites")
    S = basis.spins()
    t, tp = S[:, :L], S[:, L:]
    if L > 1:
        a, ap = t[:, :-1] * t[:, 1:], tp[:, :-1] * tp[:, 1:]
        inrow = (J * (a + ap) + U * a * ap).sum(axis=1)
    else:
        inrow = np.zeros(len(S))
    D = np.diag(np.exp(0.5 * inrow))
    tt = (t[:, None, :] * t[None, :, :])
    pp = (tp[:, None, :] * tp[None, :, :])
    B = np.exp((J * (tt + pp) + U * tt * pp).sum(axis=2))
    pinned = np.ones(B.shape, dtype=bool)
    for col in (0, L - 1):
        pinned &= (t[:, None, col] == t[None, :, col]) & (tp[:, None, col] == tp[None, :, col])
    B = B * pinned
    return TransferOperator(basis, D @ B @ D, {"Vh_sqrt": D, "VV": B},
                            {"model": "at", "L": L, "J": J, "U": U})


def plus_state(basis: SpinBasis) -> np.ndarray:
    e = np.zeros(basis.dimension)
    e[0] = 1
    return e


def strip_partition(V: TransferOperator, N: int) -> float:
    """<e_+| D V^N D |e_+>."""
    e = plus_state(V.basis)
    D = V.factors["Vh_sqrt"]
    v = D @ e
    for _ in range(N):
        v = V.matrix @ v
    return float(e @ D @ v)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

@dataclass
class GeneratorSet:
    basis: SpinBasis
    sites: list            # dual sites k in I*
    p: list
    q: list
    p_prime: list = field(default_factory=list)
    q_prime: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.sites)

    def psi(self, k: int, layer: int = 0) -> np.ndarray:
        p, q = (self.p, self.q) if layer == 0 else (self.p_prime, self.q_prime)
        return 1j / math.sqrt(2) * (p[k] + q[k])

    def psibar(self, k: int, layer: int = 0) -> np.ndarray:
        p, q = (self.p, self.q) if layer == 0 else (self.p_prime, self.q_prime)
        return (p[k] - q[k]) / math.sqrt(2)

    def psi_basis(self, layers=None) -> list:
        """[psi_1..psi_m, psibar_1..psibar_m] over the requested layers."""
        layers = range(self.basis.layers) if layers is None else layers
        psis = [self.psi(k, l) for l in layers for k in range(self.n)]
        bars = [self.psibar(k, l) for l in layers for k in range(self.n)]
        return psis + bars


def _flip_read(S: np.ndarray, offset: int, k: int, read: int, phase: complex) -> np.ndarray:
    """Operator e_sigma -> phase * sigma_read * e_tau, tau flipping sites <= k."""
    dim = len(S)
    idx = np.arange(dim)
    mask = sum(1 << (offset + x) for x in range(k + 1))
    M = np.zeros((dim, dim), dtype=complex)
    M[idx ^ mask, idx] = phase * S[:, offset + read]
    return M


def clifford_generators(basis: SpinBasis) -> GeneratorSet:
    if not isinstance(basis, SpinBasis):
        raise TransferError("generators exist on spin bases only")
    L = basis.L
    if L < 2:
        raise TransferError("generators need at least two sites")
    S = basis.spins()
    sites = [basis.a + k + 0.5 for k in range(L - 1)]
    p = [_flip_read(S, 0, k, k + 1, 1) for k in range(L - 1)]
    q = [_flip_read(S, 0, k, k, 1j) for k in range(L - 1)]
    gs = GeneratorSet(basis, sites, p, q)
    if basis.model == "at":
        gs.p_prime = [_flip_read(S, L, k, k + 1, 1) for k in range(L - 1)]
        gs.q_prime = [_flip_read(S, L, k, k, 1j) for k in range(L - 1)]
    return gs


def _coords(X: np.ndarray, basis: list) -> np.ndarray:
    dim = X.shape[0]
    return np.array([np.vdot(b, X) / dim for b in basis])


# ---------------------------------------------------------------------------
# Conjugation identities
# ---------------------------------------------------------------------------

@dataclass
class ConjugationReport:
    factor: str
    residuals: dict
    fitted: dict
    max_residual: float

    def to_json(self) -> dict:
        return {"factor": self.factor, "fitted": self.fitted, "max_residual": self.max_residual,
                "residuals": {str(k): v for k, v in self.residuals.items()}}


def conjugation_check(V_factor, G: GeneratorSet, factor: str | None = None) -> ConjugationReport:
    """Check the conjugation identities for the diagonal factor D ("h") or the
    inter-row factor B ("V").

    For "h": D^-1 p_k D = c p_k - i s q_k and D^-1 q_k D = i s p_k + c q_k.
    For "V": B^-1 p_k B = (C/S) p_k + (i/S) q_{k+1} (k != k_R),
             B^-1 q_k B = -(i/S) p_{k-1} + (C/S) q_k (k != k_L),
             p_{k_R} and q_{k_L} invariant.
    The constants are fitted from the first generator and then checked on all.
    """
    M = V_factor.matrix if isinstance(V_factor, TransferOperator) else np.asarray(V_factor)
    if factor is None:
        factor = "h" if np.allclose(M, np.diag(np.diag(M))) else "V"
    try:
        Mi = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise TransferError("singular transfer factor") from exc
    if np.linalg.cond(M) > 1e14:
        raise TransferError("singular transfer factor")
    n = G.n
    conj = lambda X: Mi @ X @ M
    res = {}
    if factor == "h":
        img = conj(G.p[0])
        c = _coords(img, [G.p[0]])[0]
        s = _coords(img, [G.q[0]])[0] / -1j
        fitted = {"c": float(np.real(c)), "s": float(np.real(s))}
        for k in range(n):
            res[(k, "p")] = float(np.abs(conj(G.p[k]) - (c * G.p[k] - 1j * s * G.q[k])).max())
            res[(k, "q")] = float(np.abs(conj(G.q[k]) - (1j * s * G.p[k] + c * G.q[k])).max())
    else:
        if n >= 2:
            img = conj(G.p[0])
            c_over_s = _coords(img, [G.p[0]])[0]
            inv_s = _coords(img, [G.q[1]])[0] / 1j
            S = 1 / inv_s
            C = c_over_s * S
        else:
            S, C = np.inf, np.inf
            c_over_s, inv_s = 1.0, 0.0
        fitted = {"C": float(np.real(C)), "S": float(np.real(S))}
        for k in range(n):
            if k == n - 1:
                res[(k, "p")] = float(np.abs(conj(G.p[k]) - G.p[k]).max())
            else:
                res[(k, "p")] = float(np.abs(conj(G.p[k]) - (c_over_s * G.p[k] + 1j * inv_s * G.q[k + 1])).max())
            if k == 0:
                res[(k, "q")] = float(np.abs(conj(G.q[k]) - G.q[k]).max())
            else:
                res[(k, "q")] = float(np.abs(conj(G.q[k]) - (-1j * inv_s * G.p[k - 1] + c_over_s * G.q[k])).max())
    return ConjugationReport(factor, res, fitted, max(res.values()) if res else 0.0)


# ---------------------------------------------------------------------------
# Induced rotation
# ---------------------------------------------------------------------------

@dataclass
class InducedRotation:
    matrix: np.ndarray
    span_defect: float
    commutation_R: float
    commutation_J: float
    operators: list
    commutation_J_linear: float = 0.0

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)

    def gram(self) -> np.ndarray:
        """Bilinear form (u, v) with {u, v} = (u, v) Id on the basis operators."""
        ops = self.operators
        dim = ops[0].shape[0]
        return np.array([[np.trace(u @ v + v @ u) / dim for v in ops] for u in ops])


def rotation_maps(m: int) -> tuple:
    """R(psi_k) = psibar_{a+b-k}, R(psibar_k) = psi_{a+b-k};
    J(psi_k) = psibar_k, J(psibar_k) = psi_k, in the (psi, psibar) basis."""
    rev = np.fliplr(np.eye(m))
    Z = np.zeros((m, m))
    R = np.block([[Z, rev], [rev, Z]])
    J = np.block([[Z, np.eye(m)], [np.eye(m), Z]])
    return R, J


def induced_rotation(V, G: GeneratorSet, layers=None, tol: float = 1e-9) -> InducedRotation:
    """Matrix of w -> V^-1 w V on span{psi, psibar}; column j is the image of
    basis element j."""
    M = V.matrix if isinstance(V, TransferOperator) else np.asarray(V)
    basis = G.psi_basis(layers)
    Mi = np.linalg.inv(M)
    T = np.zeros((len(basis), len(basis)), dtype=complex)
    defect = 0.0
    for j, b in enumerate(basis):
        img = Mi @ b @ M
        c = _coords(img, basis)
        T[:, j] = c
        rec = sum(ci * bi for ci, bi in zip(c, basis))
        defect = max(defect, float(np.abs(img - rec).max() / max(1.0, np.abs(img).max())))
    if defect > tol:
        raise NonQuadraticError(f"conjugation leaves the generator span (defect {defect:.3g})")
    nlayers = len(basis) // (2 * G.n)
    R1, J1 = rotation_maps(G.n)
    # layer-blocked versions of R and J
    m = G.n * nlayers
    R = np.zeros((2 * m, 2 * m))
    J = np.zeros((2 * m, 2 * m))
    for l in range(nlayers):
        sl = [l * G.n + i for i in range(G.n)] + [m + l * G.n + i for i in range(G.n)]
        R[np.ix_(sl, sl)] = R1
        J[np.ix_(sl, sl)] = J1
    cr = float(np.abs(T @ R - R @ T).max())
    # J swaps psi and psibar and conjugates scalars; the linear reading is
    # reported alongside
    cj = float(np.abs(T @ J - J @ T.conj()).max())
    cj_lin = float(np.abs(T @ J - J @ T).max())
    return InducedRotation(T, defect, cr, cj, basis, cj_lin)


# ---------------------------------------------------------------------------
# Duality
# ---------------------------------------------------------------------------

def ising_dual(beta: float) -> float:
    if beta <= 0:
        raise DualityDomainError("beta must be positive")
    return math.atanh(math.exp(-2 * beta))


def at_dual(J: float, U: float) -> tuple:
    """Closed-form solution of e^{2U} sinh 2J * e^{2U*} sinh 2J* = 1 and
    (e^{-2J+2U} - 1)/(e^{-2J*+2U*} - 1) = e^{2U} sinh 2J."""
    A = math.exp(2 * U) * math.sinh(2 * J)
    if A <= 0:
        raise DualityDomainError("need sinh(2J) > 0")
    B = (math.exp(-2 * J + 2 * U) - 1) / A
    if 1 + B <= 0:
        raise DualityDomainError("no dual couplings for these (J, U)")
    r = 1 + B + 2 / A
    Js = 0.25 * math.log(r / (1 + B))
    Us = 0.25 * math.log((1 + B) * r)
    return Js, Us


def duality(model: str, couplings):
    if model in ("ising", "loop"):
        beta = couplings if np.isscalar(couplings) else couplings[0]
        return ising_dual(float(beta))
    if model == "at":
        J, U = couplings
        return at_dual(float(J), float(U))
    raise DualityDomainError(f"unknown model {model!r}")


def at_relations(J: float, U: float, Js: float, Us: float) -> tuple:
    """Defects of the two duality relations."""
    A = math.exp(2 * U) * math.sinh(2 * J)
    As = math.exp(2 * Us) * math.sinh(2 * Js)
    r1 = A * As - 1
    den = math.exp(-2 * Js + 2 * Us) - 1
    num = math.exp(-2 * J + 2 * U) - 1
    r2 = num - A * den
    return r1, r2


# ---------------------------------------------------------------------------
# Loop transfer matrix on connectivity states
# ---------------------------------------------------------------------------

def link_patterns(width: int) -> list:
    """Non-crossing perfect matchings of subsets of {0..width-1}; entry c is
    the partner of c or -1 when c is empty."""
    out = []

    def rec(c, state, stack):
        if c == width:
            if not stack:
                out.append(tuple(state))
            return
        # empty
        state[c] = -1
        rec(c + 1, state, stack)
        # open a new arc
        state[c] = -2
        rec(c + 1, state, stack + [c])
        # close the innermost open arc
        if stack:
            o = stack[-1]
            state[c], state[o] = o, c
            rec(c + 1, state, stack[:-1])
            state[o] = -2
        state[c] = -1

    rec(0, [-1] * width, [])
    return sorted(set(out), key=lambda s: (sum(1 for v in s if v >= 0), s))


@dataclass(frozen=True)
class ConnectivityBasis:
    width: int
    states: tuple

    def index(self, state) -> int:
        return self.states.index(tuple(state))

    @property
    def empty(self) -> int:
        return self.index((-1,) * self.width)


def _row_step(width: int, parity: int, state: tuple, K: float, n: float) -> dict:
    """All row configurations above `state`; returns {new_state: weight}."""
    rungs = [c for c in range(width - 1) if (c + parity) % 2 == 0]
    out = {}
    for choice in product((0, 1), repeat=len(rungs)):
        H = [c for c, on in zip(rungs, choice) if on]
        deg = [1 if state[c] >= 0 else 0 for c in range(width)]
        for c in H:
            deg[c] += 1
            deg[c + 1] += 1
        if any(d > 2 for d in deg):
            continue
        up = [1 if d == 1 else 0 for d in deg]
        occupied = sum(1 for c in range(width) if deg[c] + up[c] == 2)
        # graph on row vertices: rungs and arcs from below
        adj = {c: [] for c in range(width)}
        for c in H:
            adj[c].append(c + 1)
            adj[c + 1].append(c)
        for c in range(width):
            if state[c] > c:
                adj[c].append(state[c])
                adj[state[c]].append(c)
        seen = set()
        new = [-1] * width
        loops = 0
        for c in range(width):
            if c in seen or deg[c] + up[c] == 0:
                continue
            # walk the component containing c
            comp, stack = [], [c]
            seen.add(c)
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in adj[v]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            ends = [v for v in comp if up[v]]
            if not ends:
                loops += 1
            else:
                e1, e2 = ends
                new[e1], new[e2] = e2, e1
        key = tuple(new)
        out[key] = out.get(key, 0.0) + K**occupied * n**loops
    return out


def build_loop_transfer(width: int, K: float, n: float, parity: int = 0) -> TransferOperator:
    """Row transfer matrix T[alpha, beta] of the brick-wall loop model; rungs
    sit at (c, c+1) with c + parity even."""
    if width > 6:
        raise SizeError("loop transfer matrices are limited to width 6")
    if width < 1:
        raise TransferError("width must be positive")
    basis = ConnectivityBasis(width, tuple(link_patterns(width)))
    T = np.zeros((len(basis.states), len(basis.states)))
    for j, st in enumerate(basis.states):
        for new, w in _row_step(width, parity % 2, st, K, n).items():
            T[basis.index(new), j] += w
    return TransferOperator(basis, T, {}, {"model": "loop", "width": width, "K": K, "n": n,
                                          "parity": parity % 2})


def loop_state_sums(width: int, rows: int, K: float, n: float) -> np.ndarray:
    """Z^(rows)_alpha from repeated row transfer starting at the empty state."""
    T = [build_loop_transfer(width, K, n, p) for p in (0, 1)]
    Z = np.zeros(len(T[0].basis.states))
    Z[T[0].basis.empty] = 1
    for t in range(rows):
        Z = T[t % 2].matrix @ Z
    return Z
