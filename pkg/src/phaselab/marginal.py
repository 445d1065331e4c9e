"""Two-variable marginal distributions on the four phase-space planes.

A marginal is either a gridded density on a pair of quadrature grids or a
finite atomic mixture.  The four planes are labeled by which of position
and momentum each axis carries: QQ = (q1, q2), QP = (q1, p2),
PQ = (p1, q2), PP = (p1, p2).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import InvalidInputError
from .quad import ComplexProfile, Grid1D, fourier_matrix, reciprocal_log_grid

if TYPE_CHECKING:
    from .quantum import WaveFunction2

__all__ = [
    "PlaneLabel",
    "Marginal2D",
    "QuartetProblem",
    "TripletProblem",
    "ConsistencyReport",
    "consistency_check",
    "one_var_marginal",
    "quantum_marginals",
    "counterexample_quartet",
]

GRIDDED_MASS_TOL = 1e-8
ATOMIC_MASS_TOL = 1e-12


class PlaneLabel(Enum):
    QQ = ("q1", "q2")
    QP = ("q1", "p2")
    PQ = ("p1", "q2")
    PP = ("p1", "p2")

    @property
    def axis_vars(self):
        return self.value


@dataclass(frozen=True)
class Marginal2D:
    """Probability distribution on one phase-space plane.

    Exactly one of (``values`` with both grids) or ``atoms`` is set.
    Atoms are rows ``(x, y, weight)``.
    """

    plane: PlaneLabel
    grid1: Optional[Grid1D] = None
    grid2: Optional[Grid1D] = None
    values: Optional[np.ndarray] = None
    atoms: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.values is None) == (self.atoms is None):
            raise InvalidInputError("marginal must be gridded xor atomic")
        if self.values is not None:
            if self.grid1 is None or self.grid2 is None:
                raise InvalidInputError("gridded marginal needs both axis grids")
            vals = np.asarray(self.values, dtype=float)
            object.__setattr__(self, "values", vals)
            if vals.shape != (len(self.grid1), len(self.grid2)):
                raise InvalidInputError("values shape must match the axis grids")
            if vals.min() < -1e-12:
                raise InvalidInputError("density values must be nonnegative")
            m = self.mass()
            if abs(m - 1.0) > GRIDDED_MASS_TOL:
                raise InvalidInputError(
                    f"gridded marginal mass {m!r} deviates from 1 beyond {GRIDDED_MASS_TOL}")
        else:
            atoms = np.asarray(self.atoms, dtype=float)
            object.__setattr__(self, "atoms", atoms)
            if atoms.ndim != 2 or atoms.shape[1] != 3 or atoms.shape[0] == 0:
                raise InvalidInputError("atoms must be a nonempty (n, 3) array")
            if atoms[:, 2].min() <= 0:
                raise InvalidInputError("atom weights must be positive")
            if abs(atoms[:, 2].sum() - 1.0) > ATOMIC_MASS_TOL:
                raise InvalidInputError("atomic weights must sum to 1")

    @property
    def is_gridded(self) -> bool:
        return self.values is not None

    def mass(self) -> float:
        if self.is_gridded:
            return float(self.grid1.weights @ self.values @ self.grid2.weights)
        return float(self.atoms[:, 2].sum())

    @classmethod
    def gridded(cls, plane, grid1, grid2, values, normalize=False):
        values = np.asarray(values, dtype=float)
        if normalize:
            m = float(grid1.weights @ values @ grid2.weights)
            if m <= 0:
                raise InvalidInputError("cannot normalize a non-positive density")
            values = values / m
        return cls(plane, grid1, grid2, values, None)

    @classmethod
    def atomic(cls, plane, atoms):
        return cls(plane, None, None, None, np.asarray(atoms, dtype=float))

    def contract(self, axis: int):
        """Integrate out one axis; returns (kept_grid, 1-D values) or atoms."""
        if axis not in (1, 2):
            raise InvalidInputError("axis must be 1 or 2")
        if self.is_gridded:
            if axis == 1:
                return self.grid2, self.grid1.weights @ self.values
            return self.grid1, self.values @ self.grid2.weights
        kept = self.atoms[:, 1] if axis == 1 else self.atoms[:, 0]
        return None, np.column_stack([kept, self.atoms[:, 2]])

    def to_json(self) -> dict:
        if self.is_gridded:
            return {
                "plane": self.plane.name,
                "grid1": self.grid1.to_json(),
                "grid2": self.grid2.to_json(),
                "values": self.values.tolist(),
            }
        return {
            "plane": self.plane.name,
            "atoms": [{"x": float(x), "y": float(y), "w": float(w)}
                      for x, y, w in self.atoms],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Marginal2D":
        try:
            plane = PlaneLabel[obj["plane"]]
        except KeyError as exc:
            raise InvalidInputError(f"bad marginal JSON: {exc}") from exc
        if "atoms" in obj:
            atoms = np.array([[a["x"], a["y"], a["w"]] for a in obj["atoms"]], dtype=float)
            return cls.atomic(plane, atoms)
        if not {"grid1", "grid2", "values"} <= obj.keys():
            raise InvalidInputError("gridded marginal JSON needs grid1, grid2, values")
        return cls(plane, Grid1D.from_json(obj["grid1"]), Grid1D.from_json(obj["grid2"]),
                   np.asarray(obj["values"], dtype=float), None)


def _require_plane(m: Marginal2D, plane: PlaneLabel, name: str):
    if m.plane is not plane:
        raise InvalidInputError(f"{name} must live on the {plane.name} plane, got {m.plane.name}")


@dataclass(frozen=True)
class QuartetProblem:
    """The four compatible two-variable distributions R, S, T, U."""

    R: Marginal2D
    S: Marginal2D
    T: Marginal2D
    U: Marginal2D

    def __post_init__(self):
        _require_plane(self.R, PlaneLabel.QQ, "R")
        _require_plane(self.S, PlaneLabel.QP, "S")
        _require_plane(self.T, PlaneLabel.PQ, "T")
        _require_plane(self.U, PlaneLabel.PP, "U")

    def to_json(self) -> dict:
        return {k: getattr(self, k).to_json() for k in ("R", "S", "T", "U")}

    @classmethod
    def from_json(cls, obj: dict) -> "QuartetProblem":
        return cls(**{k: Marginal2D.from_json(obj[k]) for k in ("R", "S", "T", "U")})


@dataclass(frozen=True)
class TripletProblem:
    """Chain choice of three marginals: sigma0(q1,q2), sigma1(p1,q2), sigma2(p1,p2)."""

    sigma0: Marginal2D
    sigma1: Marginal2D
    sigma2: Marginal2D

    def __post_init__(self):
        _require_plane(self.sigma0, PlaneLabel.QQ, "sigma0")
        _require_plane(self.sigma1, PlaneLabel.PQ, "sigma1")
        _require_plane(self.sigma2, PlaneLabel.PP, "sigma2")
        for m, name in ((self.sigma0, "sigma0"), (self.sigma1, "sigma1"),
                        (self.sigma2, "sigma2")):
            if not m.is_gridded:
                raise InvalidInputError(f"{name}: triplet marginals must be gridded")
        if not self.sigma0.grid2.same_as(self.sigma1.grid2):
            raise InvalidInputError("sigma0 and sigma1 must share the q2 grid")
        if not self.sigma1.grid1.same_as(self.sigma2.grid1):
            raise InvalidInputError("sigma1 and sigma2 must share the p1 grid")

    def chain_defects(self):
        """Sup-norm defects of the two chain compatibility equalities."""
        _, a = self.sigma0.contract(1)
        _, b = self.sigma1.contract(1)
        _, c = self.sigma1.contract(2)
        _, d = self.sigma2.contract(2)
        return float(np.max(np.abs(a - b))), float(np.max(np.abs(c - d)))

    def to_json(self) -> dict:
        return {k: getattr(self, k).to_json() for k in ("sigma0", "sigma1", "sigma2")}

    @classmethod
    def from_json(cls, obj: dict) -> "TripletProblem":
        return cls(**{k: Marginal2D.from_json(obj[k]) for k in ("sigma0", "sigma1", "sigma2")})

    @classmethod
    def from_quartet(cls, quartet: QuartetProblem) -> "TripletProblem":
        return cls(quartet.R, quartet.T, quartet.U)


@dataclass(frozen=True)
class ConsistencyReport:
    max_defect: float
    passed: bool
    defects: dict

    def to_json(self) -> dict:
        return {"max_defect": self.max_defect, "pass": self.passed,
                "defects": self.defects}


def _atoms_1d(rows: np.ndarray, merge_tol: float = 0.0) -> list:
    """Collapse weighted points on a line into (location, weight) pairs."""
    order = np.argsort(rows[:, 0], kind="stable")
    rows = rows[order]
    out = []
    for x, w in rows:
        if out and abs(x - out[-1][0]) <= merge_tol:
            out[-1][1] += w
        else:
            out.append([x, w])
    return out


def _atom_defect(a: list, b: list, merge_tol: float) -> float:
    locs = sorted({x for x, _ in a} | {x for x, _ in b})
    merged = []
    for x in locs:
        if merged and abs(x - merged[-1]) <= merge_tol:
            continue
        merged.append(x)

    def weight_at(atoms, x0):
        return sum(w for x, w in atoms if abs(x - x0) <= merge_tol)

    return max(abs(weight_at(a, x) - weight_at(b, x)) for x in merged)


def _pair_defect(ma: Marginal2D, axis_a: int, mb: Marginal2D, axis_b: int,
                 merge_tol: float):
    """(sup defect, sup scale) between two contractions that must agree."""
    if ma.is_gridded != mb.is_gridded:
        raise InvalidInputError("cannot compare gridded with atomic marginals")
    if ma.is_gridded:
        grid_a, va = ma.contract(axis_a)
        grid_b, vb = mb.contract(axis_b)
        if not grid_a.same_as(grid_b):
            raise InvalidInputError("marginals do not share the required axis grid")
        return float(np.max(np.abs(va - vb))), float(max(np.max(np.abs(va)),
                                                         np.max(np.abs(vb)), 1e-300))
    _, ra = ma.contract(axis_a)
    _, rb = mb.contract(axis_b)
    aa, bb = _atoms_1d(ra, merge_tol), _atoms_1d(rb, merge_tol)
    scale = max(max(w for _, w in aa), max(w for _, w in bb))
    return _atom_defect(aa, bb, merge_tol), scale


def consistency_check(quartet: QuartetProblem, tol: float = 1e-6,
                      merge_tol: float = 1e-9,
                      relative: bool = False) -> ConsistencyReport:
    """Verify the four one-variable compatibility equalities.

    Integrating R over q2 must match S over p2 (both functions of q1),
    and so on around the four planes.  Defects are sup norms;
    ``relative=True`` divides each by the sup of the functions compared,
    which is the meaningful scale for strongly peaked densities.
    """
    pairs = {
        "q1: R vs S": _pair_defect(quartet.R, 2, quartet.S, 2, merge_tol),
        "q2: R vs T": _pair_defect(quartet.R, 1, quartet.T, 1, merge_tol),
        "p2: S vs U": _pair_defect(quartet.S, 1, quartet.U, 1, merge_tol),
        "p1: T vs U": _pair_defect(quartet.T, 2, quartet.U, 2, merge_tol),
    }
    defects = {k: float(d / s if relative else d) for k, (d, s) in pairs.items()}
    worst = max(defects.values())
    return ConsistencyReport(worst, bool(worst <= tol), defects)


def one_var_marginal(m: Marginal2D, axis: int) -> ComplexProfile:
    """Integrate out one axis of a gridded marginal; mass is preserved."""
    if not m.is_gridded:
        raise InvalidInputError("one_var_marginal needs a gridded marginal")
    grid, vals = m.contract(axis)
    return ComplexProfile(grid, vals.astype(complex))


def quantum_marginals(
    psi: "WaveFunction2",
    p1_grid: Optional[Grid1D] = None,
    p2_grid: Optional[Grid1D] = None,
    norm_tol: float = 1e-6,
) -> QuartetProblem:
    """The four position/momentum marginals of a pure product-sum state.

    R is the position density |psi|^2; S, T, U replace one or both axes
    by the partial Fourier transform, applied factor by factor.  Each
    gridded marginal is normalized onto its grid; the raw quadrature
    masses are available via the returned marginals' diagnostics.
    """
    nrm = psi.norm_sq()
    if abs(nrm - 1.0) > norm_tol:
        raise InvalidInputError(f"state norm^2 = {nrm!r} deviates from 1 beyond {norm_tol}")

    g1, g2 = psi.grid1, psi.grid2
    if p1_grid is None:
        p1_grid = psi.p1_grid or reciprocal_log_grid(g1, n_target=len(g1))
    if p2_grid is None:
        p2_grid = psi.p2_grid or reciprocal_log_grid(g2, n_target=len(g2))

    # per-axis carriers are common across terms (enforced by WaveFunction2),
    # so the position densities may use the stored values directly and the
    # transform matrix is shared across a whole axis
    a = np.stack([t.factor1.values for t in psi.terms])      # (n_terms, n1)
    b = np.stack([t.factor2.values for t in psi.terms])      # (n_terms, n2)
    coef = np.array([t.coefficient for t in psi.terms])

    def axis_transform(values, grid, carrier, p_grid):
        if carrier != 0.0:
            eval_grid = Grid1D(p_grid.nodes - carrier, p_grid.weights)
        else:
            eval_grid = p_grid
        M = fourier_matrix(grid, eval_grid, -1)
        return values @ M.T

    at = axis_transform(a, g1, psi.terms[0].factor1.carrier, p1_grid)
    bt = axis_transform(b, g2, psi.terms[0].factor2.carrier, p2_grid)

    def density(u, v):
        amp = np.einsum("k,ki,kj->ij", coef, u, v, optimize=True)
        return np.abs(amp) ** 2

    R = Marginal2D.gridded(PlaneLabel.QQ, g1, g2, density(a, b), normalize=True)
    S = Marginal2D.gridded(PlaneLabel.QP, g1, p2_grid, density(a, bt), normalize=True)
    T = Marginal2D.gridded(PlaneLabel.PQ, p1_grid, g2, density(at, b), normalize=True)
    U = Marginal2D.gridded(PlaneLabel.PP, p1_grid, p2_grid, density(at, bt), normalize=True)
    return QuartetProblem(R, S, T, U)


def counterexample_quartet(a1, a2, a1p, a2p, b1, b2, b1p, b2p) -> QuartetProblem:
    """Atomic quartet that is consistent yet admits no joint density.

    Each marginal is two atoms of weight 1/2; the PP marginal pairs the
    momenta crosswise (b1 with b2p, b1p with b2), which is what makes a
    common nonnegative density impossible.
    """
    for x, xp, name in ((a1, a1p, "a1"), (a2, a2p, "a2"), (b1, b1p, "b1"), (b2, b2p, "b2")):
        if x == xp:
            raise InvalidInputError(f"{name} and {name}' must be distinct")
    half = 0.5
    R = Marginal2D.atomic(PlaneLabel.QQ, [(a1, a2, half), (a1p, a2p, half)])
    S = Marginal2D.atomic(PlaneLabel.QP, [(a1, b2, half), (a1p, b2p, half)])
    T = Marginal2D.atomic(PlaneLabel.PQ, [(b1, a2, half), (b1p, a2p, half)])
    U = Marginal2D.atomic(PlaneLabel.PP, [(b1, b2p, half), (b1p, b2, half)])
    return QuartetProblem(R, S, T, U)
