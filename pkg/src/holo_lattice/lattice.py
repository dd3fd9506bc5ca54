"""Finite square and hexagonal domains, dual intervals and boundary phases.

Edge midpoints of square domains live at half-integer points x + iy (exactly
one of x, y half-integral).  Hexagonal domains are indexed on an integer
brick-wall grid (X, Y) whose true position is X*sqrt(3)/2 + i*Y/2, so that
midpoints are again half-integers in grid units while the geometry needed by
vertex relations is carried separately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class LatticeError(ValueError):
    """Invalid lattice construction or query."""


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------

INTERVAL_KINDS = ("primal", "dual", "hexdual")


@dataclass(frozen=True)
class DualInterval:
    a: int
    b: int
    kind: str = "dual"

    def __post_init__(self):
        if self.kind not in INTERVAL_KINDS:
            raise LatticeError(f"unknown interval kind {self.kind!r}")
        if self.b <= self.a:
            raise LatticeError(f"invalid interval: b={self.b} must exceed a={self.a}")

    @property
    def sites(self) -> list[float]:
        if self.kind == "primal":
            return [float(k) for k in range(self.a, self.b + 1)]
        # dual sites a+1/2, ..., b-1/2; for the hexagonal dual these are the
        # mid-edge positions k*_L, ..., k*_R
        return [k + 0.5 for k in range(self.a, self.b)]

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def k_L(self) -> float:
        return self.sites[0]

    @property
    def k_R(self) -> float:
        return self.sites[-1]

    def index(self, k: float) -> int:
        return self.sites.index(float(k))

    def reflect(self, k: float) -> float:
        """k -> a + b - k, the mirror image used by the rotation R."""
        return self.a + self.b - k


def build_dual_interval(a: int, b: int, kind: str = "dual") -> DualInterval:
    return DualInterval(int(a), int(b), kind)


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SquareFace:
    index: int
    center: complex
    # edge ids keyed by "E", "N", "W", "S"
    edges: dict


@dataclass(frozen=True)
class HexVertex:
    index: int
    grid: tuple          # integer brick-wall coordinates (X, Y)
    position: complex    # true embedding
    edges: tuple         # the three incident edge ids (p, q, r)


@dataclass(frozen=True)
class HexFace:
    index: int
    center: complex
    edges: tuple


@dataclass(frozen=True)
class DomainGrid:
    lattice: str
    width: int
    height: int
    edges: tuple                      # midpoints (complex, grid units)
    faces: tuple
    boundary: frozenset
    edge_faces: tuple                 # edge id -> tuple of face ids
    vertices: tuple = ()              # hexagonal only
    edge_positions: tuple = ()        # true midpoints (hexagonal only)
    edge_ends: tuple = ()             # hexagonal only: vertex grid coords of both ends
    _lookup: dict = field(default=None, repr=False, compare=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_id(self, z: complex) -> int:
        key = (round(2 * complex(z).real), round(2 * complex(z).imag))
        try:
            return self._lookup[key]
        except KeyError:
            raise LatticeError(f"no edge at {z}") from None

    def has_edge(self, z: complex) -> bool:
        key = (round(2 * complex(z).real), round(2 * complex(z).imag))
        return key in self._lookup

    def is_horizontal(self, eid: int) -> bool:
        z = self.edges[eid]
        return float(z.imag).is_integer() and not float(z.real).is_integer()

    def is_vertical(self, eid: int) -> bool:
        z = self.edges[eid]
        return float(z.real).is_integer() and not float(z.imag).is_integer()

    def incident(self, face: int) -> tuple:
        f = self.faces[face]
        if self.lattice == "square":
            return tuple(f.edges[d] for d in "ENWS")
        return tuple(f.edges)

    def to_json(self) -> dict:
        out = {
            "lattice": self.lattice,
            "width": self.width,
            "height": self.height,
            "edges": [{"id": i, "x2": round(2 * z.real), "y2": round(2 * z.imag)}
                      for i, z in enumerate(self.edges)],
            "boundary": sorted(self.boundary),
        }
        if self.lattice == "square":
            out["faces"] = [{"id": f.index, **{d: f.edges[d] for d in "ENWS"}} for f in self.faces]
        else:
            out["faces"] = [{"id": f.index, "edges": list(f.edges)} for f in self.faces]
            out["vertices"] = [{"id": v.index, "X": v.grid[0], "Y": v.grid[1],
                                "edges": list(v.edges)} for v in self.vertices]
        return out


def _finish(lattice, width, height, edges, faces, vertices=(), positions=(), ends=()):
    edge_faces = [[] for _ in edges]
    for f in faces:
        eids = f.edges.values() if isinstance(f.edges, dict) else f.edges
        for e in eids:
            edge_faces[e].append(f.index)
    lookup = {(round(2 * z.real), round(2 * z.imag)): i for i, z in enumerate(edges)}
    boundary = frozenset(i for i, fs in enumerate(edge_faces) if len(fs) < 2)
    return DomainGrid(lattice, width, height, tuple(edges), tuple(faces), boundary,
                      tuple(tuple(fs) for fs in edge_faces), tuple(vertices),
                      tuple(positions), tuple(ends), lookup)


def build_square_domain(width: int, height: int) -> DomainGrid:
    """Rectangle of width x height unit faces with lower-left corner at 0."""
    if width < 1 or height < 1:
        raise LatticeError(f"invalid dimensions {width}x{height}")
    edges = []
    for j in range(height + 1):
        for i in range(width):
            edges.append(complex(i + 0.5, j))
    for j in range(height):
        for i in range(width + 1):
            edges.append(complex(i, j + 0.5))
    lookup = {(round(2 * z.real), round(2 * z.imag)): k for k, z in enumerate(edges)}

    def eid(z):
        return lookup[(round(2 * z.real), round(2 * z.imag))]

    faces = []
    for j in range(height):
        for i in range(width):
            c = complex(i + 0.5, j + 0.5)
            faces.append(SquareFace(len(faces), c, {
                "E": eid(c + 0.5), "N": eid(c + 0.5j), "W": eid(c - 0.5), "S": eid(c - 0.5j)}))
    return _finish("square", width, height, edges, faces)


_HEX_OFFSETS = ((1, 1), (0, 2), (-1, 1), (-1, -1), (0, -2), (1, -1))


def hex_position(X: int, Y: int) -> complex:
    return complex(X * math.sqrt(3) / 2, Y / 2)


def build_hex_domain(centers) -> DomainGrid:
    """Patch of pointy-top hexagons given by axial indices (m, r).

    The hexagon (m, r) has its centre at grid point (2m + r, 3r).  The domain
    holds every vertex of the listed hexagons and every lattice edge touching
    one of them, so edges leaving the patch appear as dangling boundary edges.
    """
    centers = [tuple(c) for c in centers]
    if not centers:
        raise LatticeError("empty hexagon list")
    hex_grid = [(2 * m + r, 3 * r) for m, r in centers]
    inner = set()
    for cx, cy in hex_grid:
        for dx, dy in _HEX_OFFSETS:
            inner.add((cx + dx, cy + dy))

    # every lattice edge incident to an inner vertex, found from the ring of
    # hexagons around the patch
    ring = set()
    for m, r in centers:
        for dm, dr in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)):
            ring.add((m + dm, r + dr))
    lattice_edges = set()
    for m, r in ring:
        cx, cy = 2 * m + r, 3 * r
        vs = [(cx + dx, cy + dy) for dx, dy in _HEX_OFFSETS]
        for k in range(6):
            u, v = vs[k], vs[(k + 1) % 6]
            if u in inner or v in inner:
                lattice_edges.add(tuple(sorted((u, v))))
    ends = sorted(lattice_edges, key=lambda e: ((e[0][1] + e[1][1]), (e[0][0] + e[1][0])))
    edges = [complex((u[0] + v[0]) / 2, (u[1] + v[1]) / 2) for u, v in ends]
    positions = [(hex_position(*u) + hex_position(*v)) / 2 for u, v in ends]
    end_index = {e: i for i, e in enumerate(ends)}

    faces = []
    for cx, cy in hex_grid:
        vs = [(cx + dx, cy + dy) for dx, dy in _HEX_OFFSETS]
        eids = tuple(end_index[tuple(sorted((vs[k], vs[(k + 1) % 6])))] for k in range(6))
        faces.append(HexFace(len(faces), hex_position(cx, cy), eids))

    vertices = []
    for X, Y in sorted(inner, key=lambda p: (p[1], p[0])):
        inc = tuple(i for i, (u, v) in enumerate(ends) if (X, Y) in (u, v))
        if len(inc) != 3:
            raise LatticeError(f"vertex {(X, Y)} has {len(inc)} edges")
        vertices.append(HexVertex(len(vertices), (X, Y), hex_position(X, Y), inc))
    width = max(x for x, _ in inner) - min(x for x, _ in inner)
    height = max(y for _, y in inner) - min(y for _, y in inner)
    return _finish("hexagonal", width, height, edges, faces, vertices, positions, ends)


# ---------------------------------------------------------------------------
# Boundary phases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryPhase:
    edge: int
    value: complex
    wall: str


# "normal" assigns +1/-1 to the left/right walls and +i/-i to the bottom/top
# walls; "tangent" uses the clockwise tangent direction, for
# which s-holomorphic fields built by propagation obey the Riemann condition.
_PHASES = {
    "normal": {"left": 1, "right": -1, "bottom": 1j, "top": -1j},
    "tangent": {"left": 1j, "right": -1j, "bottom": -1, "top": 1},
}


def wall_of(grid: DomainGrid, edge: int) -> str:
    if grid.lattice != "square":
        raise LatticeError("boundary phases are defined on square domains only")
    if edge not in grid.boundary:
        raise LatticeError(f"edge {edge} is not a boundary edge")
    z = grid.edges[edge]
    if grid.is_vertical(edge):
        return "left" if z.real == 0 else "right"
    return "bottom" if z.imag == 0 else "top"


def boundary_phase(grid: DomainGrid, edge: int, convention: str = "normal") -> BoundaryPhase:
    if convention not in _PHASES:
        raise LatticeError(f"unknown convention {convention!r}")
    wall = wall_of(grid, edge)
    return BoundaryPhase(edge, complex(_PHASES[convention][wall]), wall)


# ---------------------------------------------------------------------------
# Plain graphs for loop enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LoopGraph:
    vertices: tuple
    edges: tuple   # pairs of vertex indices


def hex_loop_graph(grid: DomainGrid) -> LoopGraph:
    """Vertices of a hexagonal patch and the edges joining two of them."""
    index = {v.grid: v.index for v in grid.vertices}
    edges = []
    for u, v in grid.edge_ends:
        if u in index and v in index:
            edges.append((index[u], index[v]))
    return LoopGraph(tuple(v.grid for v in grid.vertices), tuple(edges))


def brick_wall_graph(width: int, rows: int) -> LoopGraph:
    """Brick-wall strip: vertices (c, t); rungs (c,t)-(c+1,t) when c+t is even;
    vertical edges (c,t)-(c,t+1) between consecutive rows."""
    if width < 1 or rows < 1:
        raise LatticeError("invalid brick-wall size")
    verts = [(c, t) for t in range(rows) for c in range(width)]
    index = {v: i for i, v in enumerate(verts)}
    edges = []
    for t in range(rows):
        for c in range(width - 1):
            if (c + t) % 2 == 0:
                edges.append((index[(c, t)], index[(c + 1, t)]))
        if t + 1 < rows:
            for c in range(width):
                edges.append((index[(c, t)], index[(c, t + 1)]))
    return LoopGraph(tuple(verts), tuple(edges))


def square_positions(grid: DomainGrid) -> np.ndarray:
    return np.array(grid.edges, dtype=complex)
