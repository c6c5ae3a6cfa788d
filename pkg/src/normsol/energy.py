"""Constrained energy, its discrete gradient, and the dilation fiber map.

The energy of the normalized (2,q)-Laplacian problem is

    I(u) = 1/2 ||∇u||_2^2 + 1/q ||∇u||_q^q - 1/p ||u||_p^p,

with the associated dilation (Pohozaev) functional

    P(u) = ||∇u||_2^2 + (1+delta_q) ||∇u||_q^q - delta_p ||u||_p^p,

which vanishes on every constrained critical point.  Along the fiber
u_t(x) = t^(N/2) u(tx) the energy is the closed-form map

    h(t) = t^2/2 A + t^(q(1+delta_q))/q B - t^(p delta_p)/p C,

with (A, B, C) = (||∇u||_2^2, ||∇u||_q^q, ||u||_p^p), and h'(t) = P(u_t)/t.

Two discrete energies live side by side.  ``evaluate`` reports quadrature
values built from the node-centered derivative (module ``radial_grid``);
``discrete_energy``/``gradient`` use a flux form with differences on cell
midpoints, whose exact nodal derivative is what the descent solver needs:
the gradient returned here is the derivative of that quadrature sum divided
by the finite-volume cell masses, so <gradient, phi> in the ``cell_inner``
pairing equals d/ds discrete_energy(u + s phi) to roundoff.  For q < 2 the
q-flux |u'|^(q-2) u' is smoothed to u' (u'^2 + eps^2)^((q-2)/2) inside the
gradient (and inside ``discrete_energy``, which exists for line searches and
derivative tests); reported energies always use the raw |u'|^q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import radial_grid
from .exponents import (
    ParameterDomainError,
    ProblemParams,
    RegimeMismatchError,
    derive_exponents,
)
from .radial_grid import RadialField, RadialGrid

__all__ = [
    "DegenerateFiberError",
    "EnergyBreakdown",
    "FiberCoeffs",
    "evaluate",
    "discrete_energy",
    "gradient",
    "default_eps_reg",
    "fiber_coeffs",
    "fiber_h",
    "fiber_hprime",
    "fiber_hsecond",
    "find_t0",
]


class DegenerateFiberError(ValueError):
    """Fiber coefficients degenerate (C = 0 or A + B = 0); no maximizer exists."""


@dataclass(frozen=True)
class EnergyBreakdown:
    kin2: float             # 1/2 ||∇u||_2^2
    kinq: float             # 1/q ||∇u||_q^q
    pot: float              # 1/p ||u||_p^p
    total: float            # I(u) = kin2 + kinq - pot
    mass2: float            # ||u||_2^2
    pohozaev: float         # P(u)
    lambda_general: float   # (grad2 + gradq - lp) / mass2
    lambda_pohozaev: float  # multiplier identity valid when P(u) = 0


@dataclass(frozen=True)
class FiberCoeffs:
    A: float   # ||∇u||_2^2
    B: float   # ||∇u||_q^q
    C: float   # ||u||_p^p
    e1: float  # 2
    e2: float  # q(1+delta_q)
    e3: float  # p delta_p
    q: float
    p: float


def evaluate(u: RadialField, params: ProblemParams) -> EnergyBreakdown:
    """Energy breakdown from quadrature norms (single pass, shared inputs).

    Both multiplier estimates are always returned; lambda_pohozaev is the
    identity lambda c^2 = (1-1/delta_p) grad2 + (1-(1+delta_q)/delta_p) gradq,
    meaningful when |P(u)| is small.  For a zero field the multipliers are nan.
    """
    dx = derive_exponents(params)
    nd = radial_grid.norms(u, params)
    grad2, gradq, lp, mass2 = nd["grad2"], nd["gradq"], nd["lp"], nd["mass2"]
    kin2 = 0.5 * grad2
    kinq = gradq / params.q
    pot = lp / params.p
    pohozaev = grad2 + (1.0 + dx.delta_q) * gradq - dx.delta_p * lp
    if mass2 > 0:
        lam_g = (grad2 + gradq - lp) / mass2
        lam_p = ((1.0 - 1.0 / dx.delta_p) * grad2 + (1.0 - (1.0 + dx.delta_q) / dx.delta_p) * gradq) / mass2
    else:
        lam_g = lam_p = math.nan
    return EnergyBreakdown(
        kin2=kin2, kinq=kinq, pot=pot, total=kin2 + kinq - pot,
        mass2=mass2, pohozaev=pohozaev,
        lambda_general=lam_g, lambda_pohozaev=lam_p,
    )


def default_eps_reg(u: RadialField) -> float:
    """Regularization floor 1e-8 times the grid-scale gradient magnitude."""
    d = np.abs(np.diff(u.values)) / u.grid.h
    return 1e-8 * max(float(d.max()) if d.size else 0.0, 1e-30)


def _check_eps(q: float, eps_reg: float) -> None:
    if eps_reg < 0:
        raise ParameterDomainError(f"eps_reg must be nonnegative (got {eps_reg})")
    if q < 2.0 and eps_reg == 0.0:
        raise ParameterDomainError("eps_reg > 0 is required when q < 2")


def discrete_energy_parts(u: RadialField, params: ProblemParams, eps_reg: float = 0.0):
    """(kinetic, potential) halves of the flux-form energy; E = kin - pot.

    The pair also provides the magnitude scale kin + pot against which
    energy differences hit the floating-point floor.
    """
    _check_eps(params.q, eps_reg)
    grid = u.grid
    D = np.diff(u.values) / grid.h
    if eps_reg > 0:
        qterm = (D * D + eps_reg * eps_reg) ** (params.q / 2.0)
    else:
        qterm = np.abs(D) ** params.q
    kin = float(np.dot(grid.flux_w, 0.5 * D * D + qterm / params.q))
    pot = float(np.dot(grid.w, np.abs(u.values) ** params.p)) / params.p
    return kin, pot


def discrete_energy(u: RadialField, params: ProblemParams, eps_reg: float = 0.0) -> float:
    """Flux-form quadrature energy whose exact nodal derivative is ``gradient``."""
    kin, pot = discrete_energy_parts(u, params, eps_reg)
    return kin - pot


def gradient(u: RadialField, params: ProblemParams, eps_reg: float) -> RadialField:
    """Exact derivative of ``discrete_energy``, as a field against cell volumes.

    The returned g satisfies cell_inner(grid, g, phi) = d/ds E(u + s phi) for
    every nodal perturbation phi, which makes it both a descent direction
    generator and a consistent approximation of the operator
    -Δu - Δ_q u - |u|^(p-2) u away from the endpoints.
    """
    _check_eps(params.q, eps_reg)
    grid = u.grid
    q, p = params.q, params.p
    D = np.diff(u.values) / grid.h
    if eps_reg > 0:
        qflux = D * (D * D + eps_reg * eps_reg) ** ((q - 2.0) / 2.0)
    else:
        qflux = np.sign(D) * np.abs(D) ** (q - 1.0)
    flux = grid.flux_w * (D + qflux)
    dE = np.zeros(grid.M)
    dE[:-1] -= flux / grid.h
    dE[1:] += flux / grid.h
    dE -= grid.w * np.abs(u.values) ** (p - 2.0) * u.values
    return RadialField(grid, dE / grid.cell_vols)


def fiber_coeffs(u: RadialField, params: ProblemParams) -> FiberCoeffs:
    dx = derive_exponents(params)
    nd = radial_grid.norms(u, params)
    return FiberCoeffs(
        A=nd["grad2"], B=nd["gradq"], C=nd["lp"],
        e1=2.0, e2=params.q * (1.0 + dx.delta_q), e3=params.p * dx.delta_p,
        q=params.q, p=params.p,
    )


def fiber_h(t, coeffs: FiberCoeffs):
    """h(t) = I(u_t) in closed form; accepts scalar or array t."""
    t = np.asarray(t, dtype=float)
    out = (coeffs.A / 2.0) * t ** coeffs.e1 \
        + (coeffs.B / coeffs.q) * t ** coeffs.e2 \
        - (coeffs.C / coeffs.p) * t ** coeffs.e3
    return float(out) if out.ndim == 0 else out


def fiber_hprime(t, coeffs: FiberCoeffs):
    """h'(t) = P(u_t)/t in closed form."""
    t = np.asarray(t, dtype=float)
    out = (coeffs.A * t ** coeffs.e1
           + (coeffs.e2 / coeffs.q) * coeffs.B * t ** coeffs.e2
           - (coeffs.e3 / coeffs.p) * coeffs.C * t ** coeffs.e3) / t
    return float(out) if out.ndim == 0 else out


def fiber_hsecond(t, coeffs: FiberCoeffs):
    t = np.asarray(t, dtype=float)
    out = (coeffs.A / 2.0) * coeffs.e1 * (coeffs.e1 - 1.0) * t ** (coeffs.e1 - 2.0) \
        + (coeffs.B / coeffs.q) * coeffs.e2 * (coeffs.e2 - 1.0) * t ** (coeffs.e2 - 2.0) \
        - (coeffs.C / coeffs.p) * coeffs.e3 * (coeffs.e3 - 1.0) * t ** (coeffs.e3 - 2.0)
    return float(out) if out.ndim == 0 else out


def find_t0(coeffs: FiberCoeffs, params: ProblemParams) -> float:
    """Unique maximizer t0 of the fiber map in the supercritical ordering.

    Requires e3 > max(e1, e2) (so h' has exactly one sign change), C > 0 and
    A + B > 0.  Found by geometric bracket expansion from t = 1 on the sign of
    t h'(t), then log-domain bisection to 1e-12 relative width; h''(t0) < 0 is
    verified before returning.
    """
    A, B, C = coeffs.A, coeffs.B, coeffs.C
    if C <= 0 or A + B <= 0:
        raise DegenerateFiberError(f"degenerate fiber coefficients A={A:.3g} B={B:.3g} C={C:.3g}")
    if coeffs.e3 <= max(coeffs.e1, coeffs.e2):
        raise RegimeMismatchError(
            f"fiber maximizer requires the supercritical exponent ordering "
            f"e3 > max(e1, e2) (got e1={coeffs.e1:.4g}, e2={coeffs.e2:.4g}, e3={coeffs.e3:.4g})"
        )

    def phi(t):  # t h'(t)
        return A * t ** coeffs.e1 + (coeffs.e2 / coeffs.q) * B * t ** coeffs.e2 \
            - (coeffs.e3 / coeffs.p) * C * t ** coeffs.e3

    lo = hi = 1.0
    if phi(1.0) > 0.0:
        for _ in range(2000):
            hi *= 2.0
            if phi(hi) <= 0.0:
                break
        lo = hi / 2.0
    else:
        for _ in range(2000):
            lo /= 2.0
            if phi(lo) >= 0.0:
                break
        hi = lo * 2.0
    while hi / lo - 1.0 > 1e-12:
        mid = math.sqrt(lo * hi)
        if phi(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t0 = math.sqrt(lo * hi)

    def dphi(t):
        return coeffs.e1 * A * t ** (coeffs.e1 - 1.0) \
            + coeffs.e2 * (coeffs.e2 / coeffs.q) * B * t ** (coeffs.e2 - 1.0) \
            - coeffs.e3 * (coeffs.e3 / coeffs.p) * C * t ** (coeffs.e3 - 1.0)

    for _ in range(3):  # Newton polish within the bisection bracket
        step = phi(t0) / dphi(t0)
        if not math.isfinite(step):
            break
        t0 = min(max(t0 - step, lo * 0.5), hi * 2.0)
    if not fiber_hsecond(t0, coeffs) < 0.0:
        raise RuntimeError(f"fiber stationary point at t0={t0:.6g} is not a maximum")
    return t0
