"""Brute-force enumeration of small Ising, Ashkin-Teller, random-cluster and
loop O(n) systems, plus the critical-point formulas.

Conventions are ferromagnetic throughout: the Ising weight is
exp(beta * sum_bonds sigma_i sigma_j + h * sum_i sigma_i), the AT weight is
exp(sum_bonds J (tau tau + tau' tau') + U tau tau tau' tau').
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .lattice import DomainGrid, LoopGraph, brick_wall_graph, hex_loop_graph

ISING_SITE_LIMIT = 20
AT_SITE_LIMIT = 10
RC_EDGE_LIMIT = 20
LOOP_EDGE_LIMIT = 24
SPIN_SITE_LIMIT = 18

CONVENTION = "ferromagnetic: weight exp(+beta sigma sigma)"


class OracleError(ValueError):
    pass


class SizeError(OracleError):
    pass


@dataclass(frozen=True)
class SpinGraph:
    """Sites 0..n_sites-1, bonds as pairs, and sites pinned to +1."""
    n_sites: int
    bonds: tuple
    pinned: frozenset = frozenset()
    coords: tuple = ()

    @property
    def free(self) -> list:
        return [i for i in range(self.n_sites) if i not in self.pinned]


def square_grid(width: int, height: int, pinned_boundary: bool = False) -> SpinGraph:
    """width x height sites with nearest-neighbour bonds; site (c, r) has
    index r * width + c."""
    if width < 1 or height < 1:
        raise OracleError("invalid grid")
    idx = lambda c, r: r * width + c
    bonds = [(idx(c, r), idx(c + 1, r)) for r in range(height) for c in range(width - 1)]
    bonds += [(idx(c, r), idx(c, r + 1)) for r in range(height - 1) for c in range(width)]
    pinned = frozenset()
    if pinned_boundary:
        pinned = frozenset(idx(c, r) for r in range(height) for c in range(width)
                           if r in (0, height - 1) or c in (0, width - 1))
    coords = tuple((c, r) for r in range(height) for c in range(width))
    return SpinGraph(width * height, tuple(bonds), pinned, coords)


def strip_graph(L: int, N: int) -> SpinGraph:
    """The L x (N+1) strip with plus spins on its whole frame, the geometry
    of <e|D V^N D|e>."""
    return square_grid(L, N + 1, pinned_boundary=True)


@dataclass
class EnumerationResult:
    model: str
    Z: float
    observables: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    convention: str = CONVENTION

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, complex):
                return [v.real, v.imag]
            return v
        return {"model": self.model, "params": self.params, "Z": self.Z,
                "observables": {k: enc(v) for k, v in self.observables.items()},
                "convention": self.convention}


def _spin_configs(graph: SpinGraph, layers: int = 1):
    """Array of all configurations, shape (count, layers, n_sites)."""
    free = graph.free
    m = len(free) * layers
    bits = ((np.arange(2**m)[:, None] >> np.arange(m)) & 1)
    S = np.ones((2**m, layers, graph.n_sites), dtype=int)
    S[:, :, free] = (1 - 2 * bits).reshape(2**m, layers, len(free))
    return S


def enumerate_ising(graph: SpinGraph, beta: float, bc: str = "free", h: float = 0.0) -> EnumerationResult:
    """Full sum over the free spins.  bc "plus" keeps the graph's pinned
    sites at +1; bc "free" releases them."""
    if bc not in ("free", "plus"):
        raise OracleError(f"unknown boundary condition {bc!r}")
    if bc == "free":
        graph = SpinGraph(graph.n_sites, graph.bonds, frozenset(), graph.coords)
    if len(graph.free) > ISING_SITE_LIMIT:
        raise SizeError(f"{len(graph.free)} free sites exceed the limit {ISING_SITE_LIMIT}")
    S = _spin_configs(graph)[:, 0, :]
    if graph.bonds:
        b = np.array(graph.bonds)
        energy = (S[:, b[:, 0]] * S[:, b[:, 1]]).sum(axis=1)
    else:
        energy = np.zeros(len(S))
    w = np.exp(beta * energy + h * S.sum(axis=1))
    Z = float(w.sum())
    p = w / Z
    corr = np.einsum("c,ci,cj->ij", p, S, S)
    return EnumerationResult("ising", Z, {"magnetization": p @ S, "correlations": corr},
                             {"beta": beta, "bc": bc, "h": h})


def enumerate_at(graph: SpinGraph, J: float, U: float, bc: str = "free") -> EnumerationResult:
    """Sum over (tau, tau') on every free site; bc "plus" pins both layers."""
    if bc not in ("free", "plus"):
        raise OracleError(f"unknown boundary condition {bc!r}")
    if bc == "free":
        graph = SpinGraph(graph.n_sites, graph.bonds, frozenset(), graph.coords)
    if len(graph.free) > AT_SITE_LIMIT:
        raise SizeError(f"{len(graph.free)} free sites exceed the limit {AT_SITE_LIMIT}")
    S = _spin_configs(graph, 2)
    t, tp = S[:, 0, :], S[:, 1, :]
    if graph.bonds:
        b = np.array(graph.bonds)
        a = t[:, b[:, 0]] * t[:, b[:, 1]]
        ap = tp[:, b[:, 0]] * tp[:, b[:, 1]]
        energy = (J * (a + ap) + U * a * ap).sum(axis=1)
    else:
        energy = np.zeros(len(S))
    w = np.exp(energy)
    Z = float(w.sum())
    p = w / Z
    return EnumerationResult("at", Z, {"tau_correlations": np.einsum("c,ci,cj->ij", p, t, t),
                                       "polarization": np.einsum("c,ci,cj->ij", p, t * tp, t * tp)},
                             {"J": J, "U": U, "bc": bc})


# ---------------------------------------------------------------------------
# Random-cluster
# ---------------------------------------------------------------------------

def _components(n: int, edges) -> list:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return [find(x) for x in range(n)]


def enumerate_rc(graph: SpinGraph, p: float, q: float, bc="free") -> EnumerationResult:
    """p^o (1-p)^c q^k over all bond subsets.  bc "free" (0) counts every
    cluster; "wired" (1) merges the graph's pinned sites into one cluster."""
    if not 0 <= p <= 1 or q <= 0:
        raise OracleError("need 0 <= p <= 1 and q > 0")
    bc = {0: "free", 1: "wired"}.get(bc, bc)
    if bc not in ("free", "wired"):
        raise OracleError(f"unknown boundary condition {bc!r}")
    m = len(graph.bonds)
    if m > RC_EDGE_LIMIT:
        raise SizeError(f"{m} edges exceed the limit {RC_EDGE_LIMIT}")
    n = graph.n_sites
    wires = []
    if bc == "wired":
        pins = sorted(graph.pinned)
        wires = [(pins[0], x) for x in pins[1:]]
    Z = 0.0
    conn = np.zeros((n, n))
    clusters = 0.0
    for mask in range(2**m):
        open_ = [graph.bonds[i] for i in range(m) if mask >> i & 1]
        o = len(open_)
        w = p**o * (1 - p) ** (m - o)
        if w == 0:
            continue
        roots = _components(n, open_ + wires)
        k = len(set(roots))
        w *= q**k
        Z += w
        r = np.array(roots)
        conn += w * (r[:, None] == r[None, :])
        clusters += w * k
    return EnumerationResult("rc", Z, {"connectivity": conn / Z, "mean_clusters": clusters / Z},
                             {"p": p, "q": q, "bc": bc})


# ---------------------------------------------------------------------------
# Loop O(n)
# ---------------------------------------------------------------------------

def _even_subgraphs(n_vertices: int, edges) -> list:
    m = len(edges)
    if m > LOOP_EDGE_LIMIT:
        raise SizeError(f"{m} edges exceed the limit {LOOP_EDGE_LIMIT}")
    out = []
    for mask in range(2**m):
        deg = [0] * n_vertices
        chosen = []
        for i in range(m):
            if mask >> i & 1:
                u, v = edges[i]
                deg[u] += 1
                deg[v] += 1
                chosen.append(edges[i])
        if all(d % 2 == 0 for d in deg):
            out.append(chosen)
    return out


def _loop_count(n_vertices: int, chosen) -> int:
    """Number of loops: components carrying an edge (vertex degrees are
    at most 3 on the hexagonal lattice, so even components are cycles)."""
    if not chosen:
        return 0
    roots = _components(n_vertices, chosen)
    return len({roots[u] for u, _ in chosen})


def _hex_faces_of_edges(grid: DomainGrid) -> tuple:
    """For each loop edge, the two hexagon centres (axial keys) on its sides,
    with None outside the patch; and the hexagons around each vertex."""
    pos = {v.grid: v.position for v in grid.vertices}
    centres = {round(f.center.real, 6) + 1j * round(f.center.imag, 6): i
               for i, f in enumerate(grid.faces)}
    look = lambda c: centres.get(round(c.real, 6) + 1j * round(c.imag, 6))
    sides = []
    for u, v in grid.edge_ends:
        if u in pos and v in pos:
            m = (pos[u] + pos[v]) / 2
            d = (pos[v] - pos[u]) * 1j * math.sqrt(3) / 2
            sides.append((look(m + d), look(m - d)))
    around = []
    for v in grid.vertices:
        cs = []
        for e in v.edges:
            a, b = grid.edge_ends[e]
            if a in pos and b in pos:
                m = (pos[a] + pos[b]) / 2
                d = (pos[b] - pos[a]) * 1j * math.sqrt(3) / 2
                cs += [look(m + d), look(m - d)]
        around.append(sorted(set(cs), key=lambda x: -1 if x is None else x))
    return sides, around


def enumerate_loop(patch: DomainGrid, x: float, n: float, h: float = 0.0, h_prime: float = 0.0,
                   form: str = "loops") -> EnumerationResult:
    """form "loops": x^edges n^loops over even subgraphs of the patch.
    form "spin" (n = 1): spins on the patch hexagons with plus outside,
    weight x^(unequal neighbours) exp(h r + h' r')."""
    if x < 0 or n < 0:
        raise OracleError("need x >= 0 and n >= 0")
    G = hex_loop_graph(patch)
    if form == "loops":
        if h or h_prime:
            raise OracleError("external fields live in the spin form")
        Z = 0.0
        loops = 0.0
        for chosen in _even_subgraphs(len(G.vertices), G.edges):
            k = _loop_count(len(G.vertices), chosen)
            w = x ** len(chosen) * n**k
            Z += w
            loops += w * k
        return EnumerationResult("loop", Z, {"mean_loops": loops / Z, "edges": len(G.edges)},
                                 {"x": x, "n": n, "form": form})
    if form != "spin":
        raise OracleError(f"unknown form {form!r}")
    if n != 1:
        raise OracleError("the spin form is the n = 1 model")
    F = len(patch.faces)
    if F > SPIN_SITE_LIMIT:
        raise SizeError(f"{F} hexagons exceed the limit {SPIN_SITE_LIMIT}")
    sides, around = _hex_faces_of_edges(patch)
    Z = 0.0
    for spins in product((1, -1), repeat=F):
        s = lambda i: 1 if i is None else spins[i]
        e = sum(1 for a, b in sides if s(a) != s(b))
        r = sum(spins)
        rp = sum(1 for cs in around if len({s(c) for c in cs}) == 1)
        Z += x**e * math.exp(h * r + h_prime * rp)
    return EnumerationResult("loop", Z, {"edges": len(sides)},
                             {"x": x, "n": n, "h": h, "h_prime": h_prime, "form": form})


def ising_dual_partition(patch: DomainGrid, beta: float) -> float:
    """Ising partition function of the hexagon spins (plus outside) with
    coupling beta across every loop edge."""
    sides, _ = _hex_faces_of_edges(patch)
    F = len(patch.faces)
    Z = 0.0
    for spins in product((1, -1), repeat=F):
        s = lambda i: 1 if i is None else spins[i]
        Z += math.exp(beta * sum(s(a) * s(b) for a, b in sides))
    return Z


def enumerate_loop_states(width: int, rows: int, K: float, n: float) -> dict:
    """Z^(rows)_alpha by direct enumeration of the brick-wall strip with
    dangling strands above the top row.  Keys are link patterns (partner of
    each column, -1 when empty)."""
    G = brick_wall_graph(width, rows)
    V = len(G.vertices)
    top = [V + c for c in range(width)]     # virtual ends of the dangling strands
    edges = list(G.edges) + [(G.vertices.index((c, rows - 1)), top[c]) for c in range(width)]
    if len(edges) > LOOP_EDGE_LIMIT:
        raise SizeError("strip too large for direct enumeration")
    out = {}
    for mask in range(2 ** len(edges)):
        chosen = [edges[i] for i in range(len(edges)) if mask >> i & 1]
        deg = [0] * (V + width)
        for u, v in chosen:
            deg[u] += 1
            deg[v] += 1
        if any(d not in (0, 2) for d in deg[:V]):
            continue
        roots = _components(V + width, chosen)
        state = [-1] * width
        ends = {}
        for c in range(width):
            if deg[top[c]]:
                ends.setdefault(roots[top[c]], []).append(c)
        for cs in ends.values():
            state[cs[0]], state[cs[1]] = cs[1], cs[0]
        open_roots = set(ends)
        loops = len({roots[u] for u, v in chosen if u < V and v < V} - open_roots)
        occupied = sum(1 for d in deg[:V] if d == 2)
        key = tuple(state)
        out[key] = out.get(key, 0.0) + K**occupied * n**loops
    return out


# ---------------------------------------------------------------------------
# Critical points and correlation lengths
# ---------------------------------------------------------------------------

def p_sd(q: float) -> float:
    return math.sqrt(q) / (math.sqrt(q) + 1)


def p_dual(p: float, q: float) -> float:
    return (1 - p) * q / ((1 - p) * q + p)


def x_c(n: float) -> float:
    if not 0 <= n <= 2:
        raise OracleError("x_c(n) needs 0 <= n <= 2")
    return 1 / math.sqrt(2 + math.sqrt(2 - n))


def rc_weight_x(p: float) -> float:
    return p / (math.sqrt(2) * (1 - p))


def critical_points() -> dict:
    table = {
        "beta_c": 0.5 * math.log(math.sqrt(2) + 1),
        "at_J": 0.25 * math.log(3),
        "at_U": 0.25 * math.log(3),
        "x_c": {str(n): x_c(n) for n in (0, 1, 1.5, 2)},
        "p_sd": {str(q): p_sd(q) for q in (1, 2, 3, 4)},
    }
    table["checks"] = {
        "p_dual_fixes_p_sd": max(abs(p_dual(p_sd(q), q) - p_sd(q)) for q in (1, 2, 3, 4)),
        "ising_p_at_beta_c_minus_p_sd2": abs(1 - math.exp(-2 * table["beta_c"]) - p_sd(2)),
    }
    return table


@dataclass
class SlopeTable:
    p: float
    q: float
    distances: list
    slopes: list
    flags: list


def correlation_length_slope(width: int, height: int, p: float, q: float, row: int = 0) -> SlopeTable:
    """-(1/d) log phi^0(0 <-> (d, row)) for d = 1..width-1 on a width x height
    grid with free boundary."""
    if width - 1 > 4:
        raise SizeError("distances are limited to 4")
    g = square_grid(width, height)
    res = enumerate_rc(g, p, q, "free")
    conn = res.observables["connectivity"]
    o = row * width
    slopes, flags, ds = [], [], list(range(1, width))
    for d in ds:
        phi = conn[o, o + d]
        if phi <= 0:
            slopes.append(math.inf)
            flags.append(f"phi vanishes at distance {d}")
        else:
            slopes.append(-math.log(phi) / d)
    return SlopeTable(p, q, ds, slopes, flags)
