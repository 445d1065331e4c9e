"""Spectral analysis of the half-line kernel operator with kernel
1/(pi (q+q')).

In the log variable u = ln q the operator becomes convolution by
Kbar(u) = 1/(2 pi cosh(u/2)), whose Fourier symbol is 1/cosh(pi k): a
positive multiplication operator with purely continuous spectrum [0, 1].
The discretized (Nystrom) eigenvalues are Ritz approximations inside
that interval; the closed form for the two-cutoff profile family follows
from integrating the convolution kernel over a square in log variables:

    gamma(eps, L) = 2 + (4/pi) [arctan(tanh(Lam/4)) - arctan(e^{Lam/2})]
                    - (8 / (pi Lam)) * int_{sqrt(eps/L)}^{1} arctan(x)/x dx,

with Lam = ln(L/eps), which tends to 1 like 1 - 8 G /(pi Lam) with G the
arctan-integral constant 0.9159655941.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalError
from .quad import ComplexProfile, Grid1D, build_panels, grid_from_edges

__all__ = [
    "LogGridOperator",
    "kbar",
    "build_log_operator",
    "k_apply",
    "k_spectrum",
    "symbol_check",
    "gamma_cutoff_closed_form",
]


def kbar(u) -> np.ndarray:
    """Convolution kernel in the log variable."""
    return 1.0 / (2.0 * np.pi * np.cosh(np.asarray(u, dtype=float) / 2.0))


@dataclass(frozen=True)
class LogGridOperator:
    """Nystrom discretization of the log-variable convolution operator."""

    u_grid: Grid1D
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.shape != (len(self.u_grid), len(self.u_grid)):
            raise InvalidInputError("matrix shape must match the u grid")
        if np.max(np.abs(m - m.T)) > 1e-14:
            raise InvalidInputError("operator matrix must be symmetric")
        if np.any(np.diag(m) <= 0):
            raise InvalidInputError("diagonal entries must be positive")


def build_log_operator(U: float, n: int) -> LogGridOperator:
    """Midpoint Nystrom matrix on u in [-U, U], symmetrized by sqrt(w)."""
    if n < 16:
        raise InvalidInputError("need n >= 16")
    spacing = 2.0 * U / n
    if spacing > 1.0:
        raise InvalidInputError(
            f"grid spacing {spacing} too coarse to resolve the kernel width; need <= 1")
    nodes = -U + (np.arange(n) + 0.5) * spacing
    weights = np.full(n, spacing)
    grid = Grid1D(nodes, weights)
    sw = np.sqrt(weights)
    matrix = kbar(nodes[:, None] - nodes[None, :]) * np.outer(sw, sw)
    matrix = 0.5 * (matrix + matrix.T)
    return LogGridOperator(grid, matrix)


def k_apply(h: ComplexProfile) -> ComplexProfile:
    """Image of a half-line profile under the kernel quadrature."""
    q, w = h.grid.nodes, h.grid.weights
    if q[0] <= 0:
        raise InvalidInputError("profile must live on the positive half line")
    kernel = 1.0 / (np.pi * (q[:, None] + q[None, :]))
    return ComplexProfile(h.grid, kernel @ (w * h.values))


def k_spectrum(U: float = 40.0, n: int = 512) -> np.ndarray:
    """Ritz eigenvalues of the discretized operator, sorted descending.

    The continuum spectrum is the full interval [0, 1]; discrete values
    approximate it from inside, with the top value approaching 1 as the
    window U grows.
    """
    op = build_log_operator(U, n)
    vals = np.linalg.eigvalsh(op.matrix)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("eigensolver returned non-finite values")
    return vals[::-1]


def symbol_check(k_grid: Grid1D, U: float = 60.0) -> float:
    """Sup defect between the quadrature Fourier transform of the kernel
    and 1/cosh(pi k) over the provided frequencies."""
    u = build_panels([-U, 0.0, U], order=10, subdiv=max(32, int(U)))
    vals = kbar(u.nodes)
    k = k_grid.nodes
    transform = (np.exp(1j * np.outer(k, u.nodes)) * (u.weights * vals)).sum(axis=1)
    exact = 1.0 / np.cosh(np.pi * k)
    return float(np.max(np.abs(transform - exact)))


def _arctan_integral(a: float) -> float:
    """int_a^1 arctan(x)/x dx by log-graded panels (integrand is smooth)."""
    if a >= 1.0:
        return 0.0
    decades = max(1.0, math.log10(1.0 / max(a, 1e-300)))
    panels = max(8, int(6 * decades))
    edges = np.geomspace(max(a, 1e-300), 1.0, panels + 1)
    g = grid_from_edges(edges, order=12)
    x = g.nodes
    return float(np.sum(g.weights * np.arctan(x) / x))


def gamma_cutoff_closed_form(eps: float, L: float) -> float:
    """Exact quadratic-form value for the two-cutoff 1/sqrt(q) profile."""
    if not (0 < eps < L):
        raise InvalidInputError("need 0 < eps < L")
    lam = math.log(L / eps)
    I = _arctan_integral(math.sqrt(eps / L))
    # arctan(e^{lam/2}) = pi/2 - arctan(e^{-lam/2}) avoids overflow
    upper = math.pi / 2.0 - math.atan(math.exp(-lam / 2.0))
    return 2.0 + (4.0 / math.pi) * (math.atan(math.tanh(lam / 4.0)) - upper) \
        - 8.0 * I / (math.pi * lam)
