"""Radial discretization of R^N: nodes, quadrature, derivatives, dilation.

Radial functions are sampled on a uniform grid 0 = r_0 < ... < r_{M-1} = R.
Integrals over R^N reduce to weighted sums with the surface measure
omega_N r^(N-1) dr (omega_N = 2 pi^(N/2) / Gamma(N/2)); the weights are
composite trapezoid, so the origin node carries zero weight for N >= 2.

Besides the trapezoid weights the grid precomputes two companions used by
the discrete energy machinery (module ``energy``): half-point flux weights
omega_N r_{j+1/2}^(N-1) h for gradient terms evaluated on cell midpoints,
and finite-volume cell volumes used as the mass of the discrete L2 gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

from .exponents import ParameterDomainError, ProblemParams

__all__ = [
    "RadialGrid",
    "RadialField",
    "sphere_constant",
    "make_grid",
    "integrate",
    "cell_inner",
    "radial_derivative",
    "norms",
    "resample_dilation",
    "save_field",
    "load_field",
]


def sphere_constant(N: int) -> float:
    """Surface area of the unit (N-1)-sphere, 2 pi^(N/2) / Gamma(N/2)."""
    return 2.0 * np.pi ** (N / 2.0) / _gamma(N / 2.0)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    N: int
    R: float
    M: int
    h: float
    r: np.ndarray          # nodes, shape (M,)
    w: np.ndarray          # trapezoid quadrature weights against omega_N r^(N-1) dr
    flux_w: np.ndarray     # half-point weights omega_N r_{j+1/2}^(N-1) h, shape (M-1,)
    cell_vols: np.ndarray  # finite-volume cell volumes, shape (M,)


@dataclass(eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.M,):
            raise ValueError(f"field has {self.values.shape} values for a grid of {self.grid.M} nodes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")


def make_grid(N: int, R: float, M: int) -> RadialGrid:
    """Uniform radial grid with trapezoid quadrature weights."""
    if int(N) != N or N < 2:
        raise ParameterDomainError(f"grid dimension must satisfy N >= 2 (got {N})")
    if not (R > 0):
        raise ParameterDomainError(f"truncation radius must satisfy R > 0 (got {R})")
    if int(M) != M or M < 64:
        raise ParameterDomainError(f"node count must satisfy M >= 64 (got {M})")
    N, M = int(N), int(M)
    omega = sphere_constant(N)
    r = np.linspace(0.0, R, M)
    h = r[1] - r[0]
    w = omega * r ** (N - 1) * h
    w[0] *= 0.5
    w[-1] *= 0.5
    rh = 0.5 * (r[:-1] + r[1:])
    flux_w = omega * rh ** (N - 1) * h
    cell_vols = omega * (np.minimum(r + h / 2, R) ** N - np.maximum(r - h / 2, 0.0) ** N) / N
    for arr in (r, w, flux_w, cell_vols):
        arr.flags.writeable = False
    return RadialGrid(N=N, R=float(R), M=M, h=float(h), r=r, w=w, flux_w=flux_w, cell_vols=cell_vols)


def _values(field_or_values) -> np.ndarray:
    if isinstance(field_or_values, RadialField):
        return field_or_values.values
    return np.asarray(field_or_values, dtype=float)


def integrate(field_values, grid: RadialGrid) -> float:
    """Quadrature of a radial function over R^N (truncated at R)."""
    f = _values(field_values)
    if f.shape != (grid.M,):
        raise ValueError(f"got {f.shape} values for a grid of {grid.M} nodes")
    return float(np.dot(grid.w, f))


def cell_inner(grid: RadialGrid, f, g) -> float:
    """Inner product against the cell volumes; the Riesz weights of the discrete energy gradient."""
    return float(np.dot(grid.cell_vols, _values(f) * _values(g)))


def radial_derivative(u: RadialField) -> RadialField:
    """Central-difference du/dr; u'(0) = 0 by radial symmetry, one-sided at r = R."""
    grid = u.grid
    v = u.values
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * grid.h)
    d[0] = 0.0
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * grid.h)
    return RadialField(grid, d)


def norms(u: RadialField, params: ProblemParams) -> dict:
    """The four norms entering the energy: {mass2, grad2, gradq, lp}."""
    grid = u.grid
    du = radial_derivative(u).values
    absdu = np.abs(du)
    absu = np.abs(u.values)
    return {
        "mass2": float(np.dot(grid.w, u.values * u.values)),
        "grad2": float(np.dot(grid.w, du * du)),
        "gradq": float(np.dot(grid.w, absdu ** params.q)),
        "lp": float(np.dot(grid.w, absu ** params.p)),
    }


def resample_dilation(u: RadialField, t: float) -> RadialField:
    """Mass-preserving dilation u_t(r) = t^(N/2) u(t r) on the same grid.

    Sampled by linear interpolation (zero beyond R) and then rescaled back to
    the input mass, so ||u_t||_2 = ||u||_2 exactly despite interpolation and
    truncation losses.
    """
    if not (np.isfinite(t) and t > 0):
        raise ParameterDomainError(f"dilation parameter must be a positive real (got {t})")
    grid = u.grid
    vals = t ** (grid.N / 2.0) * np.interp(t * grid.r, grid.r, u.values, right=0.0)
    m_old = np.dot(grid.w, u.values * u.values)
    m_new = np.dot(grid.w, vals * vals)
    if m_new > 0 and m_old > 0:
        vals *= np.sqrt(m_old / m_new)
    return RadialField(grid, vals)


def save_field(path, u: RadialField) -> None:
    """Two-column CSV snapshot (r, u) at 17 significant digits."""
    with open(path, "w") as fh:
        fh.write("r,u\n")
        for ri, ui in zip(u.grid.r, u.values):
            fh.write(f"{ri:.17g},{ui:.17g}\n")


def load_field(path, N: int) -> RadialField:
    """Rebuild a field (and its grid) from a two-column CSV snapshot."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: expected a two-column (r, u) CSV")
    r, vals = data[:, 0], data[:, 1]
    grid = make_grid(N, r[-1], len(r))
    if not np.allclose(grid.r, r, rtol=0, atol=1e-9 * grid.h):
        raise ValueError(f"{path}: nodes are not a uniform grid starting at 0")
    return RadialField(grid, vals)
