"""Path-sum parafermionic observables and fermion correlators.

Square domains: a "path" from the edge a to the edge z is a contour
configuration on the dual graph (faces joined across interior edges).  It
consists of a half-edge from a into an adjacent face, a half-edge from a face
into z, and a set of full dual edges (never crossing a or z) such that every
face has even degree.  The winding is measured along the route traced from a
with a left-turn preference at faces of degree four.  The length is the
number of full dual edges plus one (two halves), which is the exponent of
alpha = exp(-2 beta).

Hexagonal domains: paths are self-avoiding walks from mid-edge to mid-edge,
and the length counts the visited vertices (equivalently edges, halves
counted as one half each).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .fock import CorrelationValue, pfaffian, AntisymmetricMatrix
from .lattice import DomainGrid
from .sholo import LAMBDA
from .transfer import (build_at_transfer, build_ising_transfer, clifford_generators,
                       plus_state)


class ObservableError(ValueError):
    pass


class EnumerationBudgetError(ObservableError):
    pass


@dataclass(frozen=True)
class Path:
    edges: tuple          # route as mid-edge ids, from a to z
    winding: float
    turns: tuple          # (left, right)
    length: float
    loops: int = 0
    full: frozenset = frozenset()
    start_face: int | None = None
    end_face: int | None = None


@dataclass
class PathEnsemble:
    domain: DomainGrid
    a: int
    z: int
    paths: list
    mode: str = "configurations"

    def __len__(self) -> int:
        return len(self.paths)


@dataclass(frozen=True)
class ObservableValue:
    value: complex
    normalization: str = "raw"
    params: dict = field(default_factory=dict)


def _eid(grid: DomainGrid, e) -> int:
    return int(e) if isinstance(e, (int, np.integer)) else grid.edge_id(e)


def _unit(z: complex) -> complex:
    return z / abs(z)


def _turn(d_old: complex, d_new: complex) -> float:
    return cmath.phase(d_new / d_old)


# ---------------------------------------------------------------------------
# GF(2) helpers for even subgraphs
# ---------------------------------------------------------------------------

def _gf2_nullspace_and_solution(rows: list, nbits: int, rhs: int):
    """Solve sum_e x_e row_e = rhs over GF(2) where each row is the bitmask of
    faces touched by edge e.  Returns (particular solution, null basis) as
    edge bitmasks, or (None, basis) when unsolvable."""
    pivots = {}   # face bit -> (face mask, edge combination)
    null = []
    for e, mask in enumerate(rows):
        combo = 1 << e
        while mask:
            top = mask.bit_length() - 1
            if top in pivots:
                pm, pc = pivots[top]
                mask ^= pm
                combo ^= pc
            else:
                pivots[top] = (mask, combo)
                break
        if not mask:
            null.append(combo)
    sol = 0
    r = rhs
    while r:
        top = r.bit_length() - 1
        if top not in pivots:
            return None, null
        pm, pc = pivots[top]
        r ^= pm
        sol ^= pc
    return sol, null


def _even_subsets(rows: list, nfaces: int, odd_faces: int, budget: int):
    sol, null = _gf2_nullspace_and_solution(rows, nfaces, odd_faces)
    if sol is None:
        return
    if len(null) > budget:
        raise EnumerationBudgetError(f"2^{len(null)} configurations exceed the budget 2^{budget}")
    for m in range(1 << len(null)):
        x = sol
        for i, b in enumerate(null):
            if m >> i & 1:
                x ^= b
        yield x


# ---------------------------------------------------------------------------
# Square domains
# ---------------------------------------------------------------------------

def _start_faces(grid: DomainGrid, a: int, start) -> list:
    faces = list(grid.edge_faces[a])
    if start in (None, "both"):
        return faces
    za = grid.edges[a]
    want = {"up": 1j, "down": -1j, "right": 1, "left": -1}[start]
    return [f for f in faces if abs(_unit(grid.faces[f].center - za) - want) < 1e-9]


def _trace(grid: DomainGrid, full: list, a: int, fa: int, z: int, fz: int):
    """Route from a through the configuration to z, preferring left turns."""
    nb = {}
    for e in full:
        u, v = grid.edge_faces[e]
        nb.setdefault(u, []).append((e, v))
        nb.setdefault(v, []).append((e, u))
    d = _unit(grid.faces[fa].center - grid.edges[a])
    cur, used, route = fa, set(), [a]
    W, tl, tr = 0.0, 0, 0
    while True:
        opts = [(_unit(grid.faces[v].center - grid.faces[cur].center), e, v)
                for e, v in nb.get(cur, []) if e not in used]
        if cur == fz and z not in used:
            opts.append((_unit(grid.edges[z] - grid.faces[cur].center), z, None))
        choice = None
        for pref in (1j, 1, -1j):
            for o in opts:
                if abs(o[0] - d * pref) < 1e-9:
                    choice = o
                    break
            if choice:
                break
        if choice is None:
            raise ObservableError("configuration trace failed")
        t = _turn(d, choice[0])
        W += t
        tl += t > 1e-9
        tr += t < -1e-9
        d = choice[0]
        used.add(choice[1])
        route.append(choice[1])
        if choice[2] is None:
            return tuple(route), W, (tl, tr), used
        cur = choice[2]


def _components(grid: DomainGrid, edges) -> int:
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        u, v = grid.edge_faces[e]
        parent[find(u)] = find(v)
    return len({find(x) for x in parent})


def _square_configurations(grid: DomainGrid, a: int, z: int, start, budget: int = 22):
    cand = [e for e in range(grid.n_edges) if len(grid.edge_faces[e]) == 2 and e not in (a, z)]
    rows = [sum(1 << f for f in grid.edge_faces[e]) for e in cand]
    out = []
    for fa in _start_faces(grid, a, start):
        for fz in grid.edge_faces[z]:
            odd = (1 << fa) ^ (1 << fz)
            for x in _even_subsets(rows, len(grid.faces), odd, budget):
                full = [cand[i] for i in range(len(cand)) if x >> i & 1]
                route, W, turns, used = _trace(grid, full, a, fa, z, fz)
                rest = [e for e in full if e not in used]
                out.append(Path(route, W, turns, len(full) + 1.0,
                                _components(grid, rest), frozenset(full), fa, fz))
    return out


def _square_walks(grid: DomainGrid, a: int, z: int, start, max_len):
    out = []
    cap = math.inf if max_len is None else max_len
    for fa in _start_faces(grid, a, start):
        d0 = _unit(grid.faces[fa].center - grid.edges[a])

        def rec(cur, d, W, tl, tr, used, route):
            if z in grid.incident(cur) and len(route) <= cap:
                dn = _unit(grid.edges[z] - grid.faces[cur].center)
                t = _turn(d, dn)
                out.append(Path(tuple(route) + (z,), W + t, (tl + (t > 1e-9), tr + (t < -1e-9)),
                                float(len(route)), 0, frozenset(route[1:]), fa, cur))
            if len(route) >= cap:
                return
            for e in grid.incident(cur):
                if e in (a, z) or e in used or len(grid.edge_faces[e]) < 2:
                    continue
                v = [f for f in grid.edge_faces[e] if f != cur][0]
                dn = _unit(grid.faces[v].center - grid.faces[cur].center)
                t = _turn(d, dn)
                rec(v, dn, W + t, tl + (t > 1e-9), tr + (t < -1e-9), used | {e}, route + [e])

        rec(fa, d0, 0.0, 0, 0, frozenset(), [a])
    return out


# ---------------------------------------------------------------------------
# Hexagonal domains
# ---------------------------------------------------------------------------

def _hex_walks_from(grid: DomainGrid, a: int, max_len=None) -> dict:
    """All self-avoiding walks from mid-edge a, keyed by their final edge."""
    vindex = {v.grid: v for v in grid.vertices}
    pos = grid.edge_positions
    out = {a: [Path((a,), 0.0, (0, 0), 0.0)]}
    cap = math.inf if max_len is None else max_len
    starts = [g for g in grid.edge_ends[a] if g in vindex]

    def rec(v, d, W, tl, tr, visited, used, route):
        vz = vindex[v].position
        nv = len(visited)
        for e in vindex[v].edges:
            if e in used:
                continue
            dn = _unit(pos[e] - vz)
            t = _turn(d, dn)
            W2, tl2, tr2 = W + t, tl + (t > 1e-9), tr + (t < -1e-9)
            if nv <= cap:
                out.setdefault(e, []).append(Path(tuple(route) + (e,), W2, (tl2, tr2), float(nv)))
            u = [g for g in grid.edge_ends[e] if g != v][0]
            if u in vindex and u not in visited and nv < cap:
                rec(u, dn, W2, tl2, tr2, visited | {u}, used | {e}, route + [e])

    for s in starts:
        d0 = _unit(vindex[s].position - pos[a])
        rec(s, d0, 0.0, 0, 0, frozenset([s]), frozenset([a]), [a])
    return out


# ---------------------------------------------------------------------------
# Public enumeration
# ---------------------------------------------------------------------------

def enumerate_paths(domain: DomainGrid, a, z, max_len=None, mode: str = "configurations",
                    start=None) -> PathEnsemble:
    """Paths from a to z.  On square domains `mode` selects contour
    configurations (with closed loops) or self-avoiding trails ("walks");
    hexagonal domains always use self-avoiding walks."""
    a, z = _eid(domain, a), _eid(domain, z)
    if domain.lattice == "hexagonal":
        return PathEnsemble(domain, a, z, list(_hex_walks_from(domain, a, max_len).get(z, [])), "walks")
    if a == z:
        return PathEnsemble(domain, a, z, [Path((a,), 0.0, (0, 0), 0.0)], mode)
    if mode == "configurations":
        paths = _square_configurations(domain, a, z, start)
        if max_len is not None:
            paths = [p for p in paths if p.length <= max_len]
    elif mode == "walks":
        paths = _square_walks(domain, a, z, start, max_len)
    else:
        raise ObservableError(f"unknown mode {mode!r}")
    return PathEnsemble(domain, a, z, paths, mode)


def enumerate_paths_from(domain: DomainGrid, a, max_len=None, mode: str = "configurations",
                         start=None) -> dict:
    a = _eid(domain, a)
    if domain.lattice == "hexagonal":
        walks = _hex_walks_from(domain, a, max_len)
        return {z: PathEnsemble(domain, a, z, walks.get(z, []), "walks") for z in range(domain.n_edges)}
    return {z: enumerate_paths(domain, a, z, max_len, mode, start) for z in range(domain.n_edges)}


def contour_partition(domain: DomainGrid, alpha: float) -> float:
    """Sum of alpha^|E| over even subgraphs of the interior dual edges."""
    cand = [e for e in range(domain.n_edges) if len(domain.edge_faces[e]) == 2]
    rows = [sum(1 << f for f in domain.edge_faces[e]) for e in cand]
    return float(sum(alpha ** bin(x).count("1") for x in _even_subsets(rows, len(domain.faces), 0, 22)))


def ising_observable(ensemble: PathEnsemble, beta: float, bc: str = "raw") -> ObservableValue:
    """sum exp(-2 beta |gamma| - i W/2); bc="plus" divides by the contour
    partition function of the domain."""
    val = sum(math.exp(-2 * beta * p.length) * cmath.exp(-0.5j * p.winding) for p in ensemble.paths)
    if bc == "plus":
        return ObservableValue(complex(val) / contour_partition(ensemble.domain, math.exp(-2 * beta)),
                               "partition-normalized", {"beta": beta})
    return ObservableValue(complex(val), "raw", {"beta": beta})


def loop_observable(ensemble: PathEnsemble, x: float, sigma: float) -> ObservableValue:
    val = sum(x ** p.length * cmath.exp(-1j * sigma * p.winding) for p in ensemble.paths)
    return ObservableValue(complex(val), "raw", {"x": x, "sigma": sigma})


def ising_observable_field(domain: DomainGrid, a, beta: float, start="up") -> np.ndarray:
    ens = enumerate_paths_from(domain, a, start=start)
    return np.array([ising_observable(ens[z], beta).value for z in range(domain.n_edges)])


def loop_observable_field(domain: DomainGrid, a, x: float, sigma: float) -> np.ndarray:
    ens = enumerate_paths_from(domain, a)
    return np.array([loop_observable(ens[z], x, sigma).value for z in range(domain.n_edges)])


def smirnov_residuals(domain: DomainGrid, values) -> dict:
    """|(p-v)F(p) + (q-v)F(q) + (r-v)F(r)| at every vertex of a hexagonal patch."""
    values = np.asarray(values)
    pos = domain.edge_positions
    return {v.index: abs(sum((pos[e] - v.position) * values[e] for e in v.edges))
            for v in domain.vertices}


def morera_sum(values, points) -> complex:
    """sum F(z_ij)(z_j - z_i) around a closed polygon given by vertices
    `points`, with F evaluated at the edge-midpoint indices `values` pairs."""
    total = 0j
    for (zi, zj), F in zip(points, values):
        total += F * (zj - zi)
    return total


# ---------------------------------------------------------------------------
# Low-temperature observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LowTemp:
    f_up: complex
    f_down: complex
    normalizer: float


def low_temp_observables(domain: DomainGrid, a, z, alpha: float, model: str = "ising",
                         normalize: bool = True) -> LowTemp:
    """f_up sums configurations whose half-edge at a points into the face
    above a; f_down sums those pointing below, with the phase -i.  Both carry
    alpha^length exp(-i W/2).  With normalize, both are divided by the closed
    contour sum of the domain (returned as the normalizer)."""
    if model not in ("ising", "at", "loop"):
        raise ObservableError(f"unknown model {model!r}")
    if not 0 < alpha < 1:
        raise ObservableError("alpha must lie in (0, 1)")
    a, z = _eid(domain, a), _eid(domain, z)
    up = down = 0j
    if a != z:
        for p in _square_configurations(domain, a, z, "both"):
            w = alpha ** p.length * cmath.exp(-0.5j * p.winding)
            if domain.faces[p.start_face].center.imag > domain.edges[a].imag:
                up += w
            else:
                down += w
    down *= -1j
    Zc = contour_partition(domain, alpha) if normalize else 1.0
    return LowTemp(up / Zc, down / Zc, Zc)


# ---------------------------------------------------------------------------
# Fermion correlators from transfer matrices
# ---------------------------------------------------------------------------

KINDS = ("psi", "psibar", "up", "down")


def epsilon_of(kind: str) -> complex | None:
    return {"up": LAMBDA, "down": LAMBDA**-2}.get(kind)


class _Strip:
    """Transfer-matrix data for the strip under a square domain: the
    domain's width+1 spin columns and its height as the number of steps."""

    def __init__(self, domain: DomainGrid, beta: float, model: str, U: float):
        if domain.lattice != "square":
            raise ObservableError("correlators live on square domains")
        self.L, self.N = domain.width + 1, domain.height
        if model == "ising":
            if self.L > 10:
                raise ObservableError("strip too wide for dense transfer matrices")
            self.V = build_ising_transfer(self.L, beta)
        elif model == "at":
            if self.L > 5:
                raise ObservableError("strip too wide for dense transfer matrices")
            self.V = build_at_transfer(self.L, beta, U)
        else:
            raise ObservableError("fermion correlators are built for ising and at")
        self.G = clifford_generators(self.V.basis)
        self.e = plus_state(self.V.basis)
        self.D = self.V.factors["Vh_sqrt"]
        self.Z = self._run([])

    def op(self, kind: str, k: int):
        psi, bar = self.G.psi(k), self.G.psibar(k)
        if kind == "psi":
            return psi
        if kind == "psibar":
            return bar
        if kind == "up":
            return 0.5 * (bar - psi)
        if kind == "down":
            return 0.5j * (psi + bar)
        raise ObservableError(f"unknown insertion kind {kind!r}")

    def site(self, point) -> tuple:
        z = complex(point)
        k, y = z.real - 0.5, z.imag
        if not (float(k).is_integer() and float(y).is_integer()):
            raise ObservableError(f"{point} is not a horizontal edge midpoint")
        k, y = int(k), int(y)
        if not (0 <= k < self.L - 1 and 0 <= y <= self.N):
            raise ObservableError(f"{point} lies outside the strip")
        return k, y

    def _run(self, ops: list) -> complex:
        """<e| D V^{N-y_n} O_n ... V^{y_1} D |e> for ops sorted by increasing row
        given as (row, matrix), rightmost first."""
        v = (self.D @ self.e).astype(complex)
        r = 0
        for y, M in ops:
            for _ in range(y - r):
                v = self.V.matrix @ v
            v = M @ v
            r = y
        for _ in range(self.N - r):
            v = self.V.matrix @ v
        return complex(self.e @ self.D @ v)

    def ordered(self, insertions: list) -> complex:
        """Time-ordered expectation: later rows to the left, sign of the
        reordering; equal rows keep the given order."""
        rows = [self.site(p)[1] for p, _ in insertions]
        order = sorted(range(len(insertions)), key=lambda i: -rows[i])
        sign = 1
        perm = list(order)
        for i in range(len(perm)):
            for j in range(i + 1, len(perm)):
                if perm[i] > perm[j]:
                    sign = -sign
        ops = []
        for i in reversed(order):
            p, kind = insertions[i]
            k, y = self.site(p)
            ops.append((y, self.op(kind, k)))
        return sign * self._run(ops) / self.Z


def fermion_two_point(domain: DomainGrid, z, a, beta: float, model: str = "ising",
                      kinds=("psi", "psi"), U: float = 0.0) -> complex:
    """<T psi_kind0(z) psi_kind1(a)> with plus boundary, normalized by the
    strip partition function."""
    strip = _Strip(domain, beta, model, U)
    return strip.ordered([(z, kinds[0]), (a, kinds[1])])


def multipoint_correlation(domain: DomainGrid, insertions, beta: float, model: str = "ising",
                           method: str = "pfaffian", U: float = 0.0) -> CorrelationValue:
    """Time-ordered multipoint expectation of insertions (point, kind).  The
    Pfaffian method assembles pairwise values; "direct" multiplies operators."""
    insertions = list(insertions)
    for _, kind in insertions:
        if kind not in KINDS:
            raise ObservableError(f"unknown insertion kind {kind!r}")
    eps = tuple(epsilon_of(k) for _, k in insertions)
    if len(insertions) % 2:
        return CorrelationValue(0j, False, eps)
    strip = _Strip(domain, beta, model, U)
    if method == "direct":
        return CorrelationValue(strip.ordered(insertions), True, eps)
    m = len(insertions)
    T = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(i + 1, m):
            T[i, j] = strip.ordered([insertions[i], insertions[j]])
    return CorrelationValue(complex(pfaffian(AntisymmetricMatrix.from_upper(T))), True, eps)


def epsilon_identities() -> list:
    """Both phase identities for eta = +1 and -1 as (lhs, rhs) pairs."""
    lam = LAMBDA
    out = []
    for eta in (1, -1):
        d = 1.0 if eta == 1 else 0.0
        out.append({"eta": eta,
                    "up": (0.5 * (lam**-eta - 1j * lam**eta), lam**-1 * d),
                    "down": (0.5 * (1j * lam**-eta + lam**eta), lam**2 * d)})
    return out


# ---------------------------------------------------------------------------
# Two-point identity check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelatorReport:
    identity: str
    lhs: complex
    rhs: complex
    z: complex
    a: complex

    @property
    def abs_diff(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def ratio(self) -> complex | None:
        return None if abs(self.rhs) < 1e-13 else self.lhs / self.rhs

    def to_json(self) -> dict:
        r = self.ratio
        return {"identity": self.identity, "lhs": [self.lhs.real, self.lhs.imag],
                "rhs": [self.rhs.real, self.rhs.imag], "abs_diff": self.abs_diff,
                "ratio": None if r is None else [r.real, r.imag],
                "z": [self.z.real, self.z.imag], "a": [self.a.real, self.a.imag]}


IDENTITIES = ("psi-psi", "psi-psibar", "psi-psibar-alt", "psibar-psibar")


def two_point_identities(domain: DomainGrid, z, a, beta: float, model: str = "ising",
                         U: float = 0.0) -> list:
    """Operator two-point functions against the f_up/f_down combinations:
    <psi psi> = -f_up + i f_down, <psi psibar> = f_up + i f_down (and the
    alternative -conj f_up - i conj f_down), <psibar psibar> = -conj f_up - i conj f_down."""
    z, a = complex(z), complex(a)
    if not z.imag > a.imag:
        raise ObservableError("the identities are stated for z above a")
    strip = _Strip(domain, beta, model, U)
    lt = low_temp_observables(domain, a, z, math.exp(-2 * beta), model)
    fu, fd = lt.f_up, lt.f_down
    val = lambda k1, k2: strip.ordered([(z, k1), (a, k2)])
    return [
        CorrelatorReport("psi-psi", val("psi", "psi"), -fu + 1j * fd, z, a),
        CorrelatorReport("psi-psibar", val("psi", "psibar"), fu + 1j * fd, z, a),
        CorrelatorReport("psi-psibar-alt", val("psi", "psibar"), -np.conj(fu) - 1j * np.conj(fd), z, a),
        CorrelatorReport("psibar-psibar", val("psibar", "psibar"), -np.conj(fu) - 1j * np.conj(fd), z, a),
    ]
