"""Massive and massless s-holomorphicity, Riemann boundary conditions and
discrete residues for edge fields on square domains."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import DomainGrid, boundary_phase

LAMBDA = cmath.exp(1j * math.pi / 4)
BETA_C = 0.5 * math.log(1 + math.sqrt(2))

# e1..e4 and their conjugates
E_PHASES = (-1 + 0j, cmath.exp(4j * math.pi / 3), -1 + 0j, cmath.exp(1j * math.pi / 3))

MODELS = ("ising", "at", "loop")
REGIMES = ("critical", "subcritical")


class HoloError(ValueError):
    pass


class PreconditionError(HoloError):
    pass


class SingularExtensionError(HoloError):
    pass


def nu_of(alpha: complex) -> complex:
    return np.conj(LAMBDA) ** 3 * (alpha + 1j) / (alpha - 1j)


def nu_loop_of(n: float) -> complex:
    return np.conj(LAMBDA) ** 2 * (n + 1j) / (n - 1j)


@dataclass(frozen=True)
class HoloParams:
    model: str = "ising"
    regime: str = "critical"
    beta: float | None = None
    x: float | None = None
    n: float | None = None
    s: float | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise HoloError(f"unknown model {self.model!r}")
        if self.regime not in REGIMES:
            raise HoloError(f"unknown regime {self.regime!r}")
        if self.model == "loop":
            if self.n is None or not (0 <= self.n < 2):
                raise HoloError("loop relations need 0 <= n < 2")
            if self.s is None:
                raise HoloError("loop relations need an explicit spin exponent s")
        elif self.regime == "subcritical" and self.beta is None:
            raise HoloError("massive relations need beta")

    @property
    def lam(self) -> complex:
        return LAMBDA

    @property
    def alpha(self) -> float | None:
        return None if self.beta is None else math.exp(-2 * self.beta)

    @property
    def nu(self) -> complex:
        """The mass parameter of the square-lattice relations (1 when massless)."""
        if self.model == "loop" or self.regime == "critical":
            return 1 + 0j
        return complex(nu_of(self.alpha))

    @property
    def nu_loop(self) -> complex | None:
        return None if self.n is None else complex(nu_loop_of(self.n))

    @property
    def e_phases(self) -> tuple:
        return E_PHASES, tuple(np.conj(E_PHASES))


@dataclass(frozen=True)
class Relation:
    """c1*F(z1) + d1*conj(F(z1)) = c2*F(z2) + d2*conj(F(z2)) on one face."""
    z1: str
    z2: str
    c1: complex
    d1: complex
    c2: complex
    d2: complex

    def residual(self, f1: complex, f2: complex) -> float:
        lhs = self.c1 * f1 + self.d1 * np.conj(f1)
        rhs = self.c2 * f2 + self.d2 * np.conj(f2)
        return abs(lhs - rhs)


@dataclass(frozen=True)
class RelationSet:
    lattice: str
    relations: tuple
    regime: str
    model: str
    nu: complex


def square_relations(nu: complex) -> tuple:
    lam = LAMBDA
    return (
        Relation("N", "E", 1, lam / nu, 1 / nu, lam),
        Relation("N", "W", 1, nu / lam, nu, 1 / lam),
        Relation("S", "E", 1, nu * lam**3, nu, lam**3),
        Relation("S", "W", 1, lam**-3 / nu, 1 / nu, lam**-3),
    )


def loop_relations(s: float, nu_loop: complex | None) -> tuple:
    """Cyclic relations over z1..z4 = E, N, W, S; nu_loop None gives the
    relations without the loop mass parameter."""
    labels = ("E", "N", "W", "S")
    rels = []
    for k in range(4):
        # principal branch of conj(e_k)^(2s)
        ph = cmath.exp(2 * s * cmath.log(np.conj(E_PHASES[k])))
        z1, z2 = labels[k], labels[(k + 1) % 4]
        if nu_loop is None:
            rels.append(Relation(z1, z2, 1, ph, 1, ph))
        else:
            rels.append(Relation(z1, z2, 1, ph / nu_loop, 1 / nu_loop, ph))
    return tuple(rels)


def make_relations(params: HoloParams) -> RelationSet:
    if params.model == "loop":
        nl = params.nu_loop if params.regime == "subcritical" else None
        return RelationSet("square", loop_relations(params.s, nl), params.regime,
                           "loop", 1 if nl is None else nl)
    nu = params.nu
    return RelationSet("square", square_relations(nu), params.regime, params.model, nu)


# ---------------------------------------------------------------------------
# Fields and reports
# ---------------------------------------------------------------------------

@dataclass
class EdgeField:
    grid: DomainGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_edges,):
            raise HoloError("field must assign a value to every edge")

    @classmethod
    def zeros(cls, grid: DomainGrid) -> "EdgeField":
        return cls(grid, np.zeros(grid.n_edges, dtype=complex))

    @classmethod
    def from_mapping(cls, grid: DomainGrid, values: dict) -> "EdgeField":
        out = np.zeros(grid.n_edges, dtype=complex)
        for z, v in values.items():
            eid = z if isinstance(z, (int, np.integer)) else grid.edge_id(z)
            out[eid] = v
        return cls(grid, out)

    def __getitem__(self, z) -> complex:
        eid = z if isinstance(z, (int, np.integer)) else self.grid.edge_id(z)
        return self.values[eid]

    def scaled(self, c: complex) -> "EdgeField":
        return EdgeField(self.grid, c * self.values)


@dataclass
class ResidualReport:
    per_item: dict
    max_residual: float
    mean_residual: float
    tolerance: float
    notes: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_json(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "tolerance": self.tolerance,
            "satisfied": self.satisfied,
            "per_item": {str(k): list(map(float, np.atleast_1d(v))) for k, v in self.per_item.items()},
            **self.notes,
        }


def _aggregate(per_item: dict, tol: float, **notes) -> ResidualReport:
    vals = np.concatenate([np.atleast_1d(v) for v in per_item.values()]) if per_item else np.zeros(0)
    mx = float(vals.max()) if vals.size else 0.0
    mean = float(vals.mean()) if vals.size else 0.0
    return ResidualReport(per_item, mx, mean, tol, notes)


def face_residuals(field: EdgeField, face: int, relations: RelationSet) -> np.ndarray:
    f = field.grid.faces[face]
    return np.array([r.residual(field.values[f.edges[r.z1]], field.values[f.edges[r.z2]])
                     for r in relations.relations])


def sholo_residuals(field: EdgeField, relations: RelationSet, faces=None,
                    exclude_edges=(), tol: float = 1e-10) -> ResidualReport:
    """Residual |LHS - RHS| of every relation on every selected face.

    Faces incident to an edge in `exclude_edges` are skipped (used for
    observables with a source edge).
    """
    grid = field.grid
    if grid.lattice != relations.lattice:
        raise HoloError("field lattice does not match the relations")
    excl = set(exclude_edges)
    chosen = range(len(grid.faces)) if faces is None else faces
    per = {}
    for fi in chosen:
        if excl and excl.intersection(grid.incident(fi)):
            continue
        per[fi] = face_residuals(field, fi, relations)
    return _aggregate(per, tol, regime=relations.regime, model=relations.model)


def riemann_bc_residuals(field: EdgeField, edges=None, convention: str = "normal",
                         tol: float = 1e-10) -> ResidualReport:
    """|Im(f(z) sqrt(tau(z)))| on boundary edges (principal square root)."""
    grid = field.grid
    chosen = sorted(grid.boundary) if edges is None else edges
    per = {}
    for e in chosen:
        tau = boundary_phase(grid, e, convention).value
        per[e] = abs((field.values[e] * cmath.sqrt(tau)).imag)
    return _aggregate(per, tol, convention=convention)


def _solve_edge(relations, known: dict, unknown: str) -> complex:
    """Solve the face relations that involve `unknown` for its value."""
    rows, rhs = [], []
    for r in relations:
        if unknown == r.z1 and r.z2 in known:
            a, b, val = r.c1, r.d1, r.c2 * known[r.z2] + r.d2 * np.conj(known[r.z2])
        elif unknown == r.z2 and r.z1 in known:
            a, b, val = r.c2, r.d2, r.c1 * known[r.z1] + r.d1 * np.conj(known[r.z1])
        else:
            continue
        # a*u + b*conj(u) = val, realized over R^2
        rows.append([[a.real + b.real, -a.imag + b.imag], [a.imag + b.imag, a.real - b.real]])
        rhs.append([val.real, val.imag])
    A = np.vstack(rows)
    y = np.concatenate(rhs)
    sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < 2:
        raise SingularExtensionError(f"relations do not determine {unknown}")
    return complex(sol[0], sol[1])


def extend_with_residue(field: EdgeField, a, params: HoloParams, tol: float = 1e-8):
    """Extend the field to the edge a from the face above and the face below.

    Returns (front, back, residue) with front the value forced by the face
    a + i/2, back the value forced by a - i/2 and residue (i/2pi)(front - back).
    """
    grid = field.grid
    eid = a if isinstance(a, (int, np.integer)) else grid.edge_id(a)
    if not grid.is_horizontal(eid):
        raise PreconditionError("the residue is defined at horizontal edges")
    rels = make_relations(params)
    rep = sholo_residuals(field, rels, exclude_edges=[eid], tol=tol)
    if not rep.satisfied:
        raise PreconditionError(f"field is not s-holomorphic off a (max residual {rep.max_residual:.3g})")
    z = grid.edges[eid]
    up = [f.index for f in grid.faces if f.edges["S"] == eid]
    down = [f.index for f in grid.faces if f.edges["N"] == eid]
    if not up or not down:
        raise PreconditionError("a must be an interior edge")
    fu, fd = grid.faces[up[0]], grid.faces[down[0]]
    known_u = {d: field.values[fu.edges[d]] for d in "ENW"}
    known_d = {d: field.values[fd.edges[d]] for d in "ESW"}
    front = _solve_edge(rels.relations, known_u, "S")
    back = _solve_edge(rels.relations, known_d, "N")
    residue = 1j / (2 * math.pi) * (front - back)
    return front, back, residue


def solve_edge(relations: RelationSet, known: dict, unknown: str) -> complex:
    return _solve_edge(relations.relations, known, unknown)
