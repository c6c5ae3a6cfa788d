"""Shooting solvers for the Gagliardo-Nirenberg extremal profiles.

Two radial ground states are computed here by bisection on the center
amplitude:

* the semilinear extremal W_p, the positive decaying solution of

      W'' + (N-1)/r W' = alpha W - beta W^(p-1),
      alpha = 1/delta_p - 1,  beta = 2/(p delta_p),

  whose norms determine the sharp L2-gradient GN constant and satisfy the
  identity ||∇W||_2^2 = ||W||_2^2 = (2/p) ||W||_p^p;

* the q-Laplacian extremal W_{p,q}, the nonnegative radial solution of
  -Δ_q W + W = ζ W^(p-1) with ζ = ||∇W||_q^q + ||W||_2^2 (a normalization
  that forces ||W||_p = 1).  It is built in two stages: first shoot the
  unit-coefficient profile V of (r^(N-1) |V'|^(q-2) V')' = r^(N-1)(V - V^(p-1))
  in flux variables, then rescale W(x) = γ V(γ^((2-q)/q) x) where γ solves
  the scalar fixed point ζ(γ) = ||∇W_γ||_q^q + ||W_γ||_2^2 = γ^(2-p).

Shooting classification: a trajectory that crosses zero while still falling
overshot (amplitude too large); one whose derivative turns nonnegative while
still positive undershot (amplitude too small).  The bracket is expanded
geometrically and then bisected to machine resolution; the final trajectory
is truncated to zero past its first dip below 1e-10 (or past its minimum,
when bisection resolution bottoms out first).

Also provided: the cutoff concentration bump used to certify unbounded
energy descent in the critical cases, built from W_p with a smoothstep
cutoff and normalized to prescribed mass by direct quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import radial_grid
from .exponents import DependencyError, ParameterDomainError
from .radial_grid import RadialField, RadialGrid, sphere_constant

__all__ = [
    "ShootingBracketError",
    "TruncationError",
    "NormalizationError",
    "ResolutionError",
    "ExtremalProfile",
    "solve_wp",
    "solve_wpq",
    "build_phi1",
]

DECAY_TARGET = 1e-10       # tail truncation threshold
FINE_SAMPLES = 48001       # fine sampling of the dense ODE solution for norms/residuals


class ShootingBracketError(RuntimeError):
    """No overshoot/undershoot bracket found within the admissible amplitude range."""


class TruncationError(RuntimeError):
    """The trajectory does not decay within the grid radius; R is too small."""


class NormalizationError(RuntimeError):
    """The scalar fixed point normalizing the q-Laplacian extremal has no bracket."""


class ResolutionError(ValueError):
    """The requested concentration scale falls below the grid resolution."""


@dataclass(eq=False)
class ExtremalProfile:
    field: RadialField
    norms: dict                  # {mass2, grad2, gradq, lp}, fine quadrature of the trajectory
    shoot_value: float           # center amplitude at r = 0
    ode_residual: float          # relative weighted L2 residual on a fine grid
    kind: str                    # "semilinear_wp" | "qlaplacian_wpq"
    zeta: Optional[float] = None  # multiplier of the q-Laplacian extremal

    @property
    def norm_bundle(self) -> dict:
        """Norms plus the residual, for consumers that must check convergence."""
        return dict(self.norms, ode_residual=self.ode_residual)


def save_norm_summary(path, profile: ExtremalProfile) -> None:
    """JSON key-value summary of an extremal's norms and solve metadata."""
    import json
    payload = dict(profile.norms, ode_residual=profile.ode_residual,
                   shoot_value=profile.shoot_value, kind=profile.kind)
    if profile.zeta is not None:
        payload["zeta"] = profile.zeta
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


# ---------------------------------------------------------------------------
# shooting machinery

def _bisect_amplitude(classify: Callable[[float], int], s_lo: float, s_hi: float,
                      floor: float, label: str):
    """Expand [s_lo, s_hi] until it brackets the separatrix, then bisect.

    ``classify`` returns +1 for overshoot, -1 for undershoot.  ``floor`` is
    the equilibrium amplitude the lower endpoint contracts toward.
    """
    for _ in range(80):
        if classify(s_hi) == 1:
            break
        s_hi *= 2.0
        if s_hi > 1e6:
            raise ShootingBracketError(f"{label}: no overshoot below amplitude 1e6")
    for _ in range(80):
        if s_lo < s_hi and classify(s_lo) == -1:
            break
        s_lo = floor + (s_lo - floor) / 2.0
        if s_lo - floor < 1e-9 * max(1.0, floor):
            raise ShootingBracketError(f"{label}: no undershoot above the equilibrium amplitude")
    for _ in range(200):
        mid = 0.5 * (s_lo + s_hi)
        if mid <= s_lo or mid >= s_hi:
            break
        if classify(mid) == 1:
            s_hi = mid
        else:
            s_lo = mid
    return s_lo, s_hi


def _truncate(rr: np.ndarray, W: np.ndarray, Wp: np.ndarray, shoot: float, r_max: float):
    """Zero the trajectory past its decayed tail; error out if it never decays."""
    bad = np.flatnonzero((W <= DECAY_TARGET) | (Wp >= 0.0))
    if len(bad):
        icut = bad[0]
        wmin = W[:icut].min() if icut else W[0]
    else:
        icut = len(rr)
        wmin = W[-1]
    if wmin > 1e-6 * shoot:
        raise TruncationError(
            f"trajectory only decays to {wmin:.3g} (amplitude {shoot:.3g}) before R={r_max:g}; "
            "increase the grid radius"
        )
    keep = np.arange(len(rr)) < icut
    return np.where(keep, W, 0.0), np.where(keep, Wp, 0.0)


def _weighted_residual(N: int, rr, lhs, rhs, live) -> float:
    """Relative L2(omega_N r^(N-1) dr) residual of lhs = rhs on the live range.

    Trimmed a few samples away from both the center series start and the tail
    truncation kink, where one-sided differences would pollute the estimate.
    """
    idx = np.flatnonzero(live)
    sl = slice(idx[0] + 3, idx[-1] - 2)
    w = rr[sl] ** (N - 1)
    num = math.sqrt(float(np.trapezoid(w * (lhs[sl] - rhs[sl]) ** 2, rr[sl])))
    den = math.sqrt(float(np.trapezoid(w * rhs[sl] ** 2, rr[sl]))) + 1e-300
    return num / den


def _fine_norms(N: int, rr, W, Wp, q: float, p: float) -> dict:
    w = sphere_constant(N) * rr ** (N - 1)
    return {
        "mass2": float(np.trapezoid(w * W * W, rr)),
        "grad2": float(np.trapezoid(w * Wp * Wp, rr)),
        "gradq": float(np.trapezoid(w * np.abs(Wp) ** q, rr)),
        "lp": float(np.trapezoid(w * np.abs(W) ** p, rr)),
    }


def _sample_on_grid(grid: RadialGrid, rr: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.clip(np.interp(grid.r, rr, W, left=W[0], right=0.0), 0.0, None)


# ---------------------------------------------------------------------------
# semilinear extremal

def solve_wp(N: int, p: float, grid: RadialGrid, q: float = 2.0, rtol: float = 1e-10) -> ExtremalProfile:
    """Shoot the semilinear GN extremal W_p and sample it on ``grid``.

    ``q`` only selects the exponent at which the bundle's gradq norm is
    reported (pass the problem's q when the bundle feeds the q-dependent
    critical-mass or cutoff-bump formulas); the ODE itself involves (N, p).
    """
    two_star = math.inf if N == 2 else 2.0 * N / (N - 2)
    if not (2.0 < p < two_star):
        raise ParameterDomainError(f"semilinear extremal requires 2 < p < 2* = {two_star:.6g} (got p={p})")
    delta_p = N * (p - 2.0) / (2.0 * p)
    alpha = 1.0 / delta_p - 1.0
    beta = 2.0 / (p * delta_p)
    r_max = grid.R
    r0 = 1e-6 * min(1.0, 1.0 / math.sqrt(alpha))

    def rhs(r, y):
        W, dW = y
        f = alpha * W - beta * np.sign(W) * np.abs(W) ** (p - 1.0)
        return (dW, f - (N - 1.0) / r * dW)

    def ev_cross(r, y):
        return y[0]
    ev_cross.terminal, ev_cross.direction = True, -1

    def ev_turn(r, y):
        return y[1]
    ev_turn.terminal, ev_turn.direction = True, 1

    def integrate(s):
        f0 = alpha * s - beta * s ** (p - 1.0)
        y0 = (s + f0 * r0 ** 2 / (2.0 * N), f0 * r0 / N)
        return solve_ivp(rhs, (r0, r_max), y0, rtol=rtol, atol=1e-14 * s,
                         events=(ev_cross, ev_turn), dense_output=True)

    def classify(s):
        sol = integrate(s)
        if len(sol.t_events[0]):
            return 1
        if len(sol.t_events[1]):
            return -1
        return -1 if sol.y[0][-1] > 0 else 1

    w_plus = (alpha / beta) ** (1.0 / (p - 2.0))                # positive equilibrium
    s_floor = (p * alpha / (2.0 * beta)) ** (1.0 / (p - 2.0))   # zero-energy amplitude
    s_lo, s_hi = _bisect_amplitude(classify, s_floor * 1.01, s_floor * 4.0, w_plus,
                                   "semilinear extremal")
    s = 0.5 * (s_lo + s_hi)

    sol = integrate(s)
    rr = np.linspace(r0, sol.t[-1], FINE_SAMPLES)
    Y = sol.sol(rr)
    W, Wp = _truncate(rr, Y[0], Y[1], s, r_max)

    # flux-form residual (r^(N-1) W')' = r^(N-1)(alpha W - beta W^(p-1)) on the live part
    live = W > 0
    dflux = np.gradient(rr ** (N - 1) * Wp, rr)
    lhs = dflux / rr ** (N - 1)
    rhs_vals = alpha * W - beta * W ** (p - 1.0)
    residual = _weighted_residual(N, rr, lhs, rhs_vals, live)

    field = RadialField(grid, _sample_on_grid(grid, rr, W))
    nd = _fine_norms(N, rr, W, Wp, q=q, p=p)
    return ExtremalProfile(field=field, norms=nd, shoot_value=s, ode_residual=residual,
                           kind="semilinear_wp")


# ---------------------------------------------------------------------------
# q-Laplacian extremal

def solve_wpq(N: int, p: float, q: float, grid: RadialGrid, rtol: float = 1e-10) -> ExtremalProfile:
    """Two-stage solve of the q-Laplacian GN extremal W_{p,q} on ``grid``."""
    if not (2.0 * N / (N + 2) < q < N):
        raise ParameterDomainError(
            f"q-Laplacian extremal requires 2N/(N+2) < q < N, i.e. q in ({2.0*N/(N+2):.6g}, {N}) (got q={q})"
        )
    q_star = N * q / (N - q)
    if not (2.0 < p < q_star):
        raise ParameterDomainError(f"q-Laplacian extremal requires 2 < p < q* = {q_star:.6g} (got p={p})")

    r_max = grid.R
    r0 = 1e-6
    qc = 1.0 / (q - 1.0)

    # flux variables: y = (V, Psi) with Psi = r^(N-1) |V'|^(q-2) V'
    def rhs(r, y):
        V, Psi = y
        dV = np.sign(Psi) * (abs(Psi) / r ** (N - 1)) ** qc
        return (dV, r ** (N - 1) * (V - np.sign(V) * abs(V) ** (p - 1.0)))

    def ev_cross(r, y):
        return y[0]
    ev_cross.terminal, ev_cross.direction = True, -1

    def ev_turn(r, y):
        return y[1]
    ev_turn.terminal, ev_turn.direction = True, 1

    def integrate(s):
        g0 = s - s ** (p - 1.0)   # negative on the ground branch (s > 1)
        psi0 = r0 ** N * g0 / N
        v0 = s + np.sign(g0) * (abs(g0) / N) ** qc * (q - 1.0) / q * r0 ** (q / (q - 1.0))
        return solve_ivp(rhs, (r0, r_max), (v0, psi0), rtol=rtol, atol=1e-14,
                         events=(ev_cross, ev_turn), dense_output=True,
                         max_step=r_max / 50.0)

    def classify(s):
        sol = integrate(s)
        if len(sol.t_events[0]):
            return 1
        if len(sol.t_events[1]):
            return -1
        return -1 if sol.y[0][-1] > 0 else 1

    s_floor = (p / 2.0) ** (1.0 / (p - 2.0))
    s_lo, s_hi = _bisect_amplitude(classify, s_floor * 1.01, s_floor * 4.0, 1.0,
                                   "q-Laplacian extremal")
    s = 0.5 * (s_lo + s_hi)

    sol = integrate(s)
    rr = np.linspace(r0, sol.t[-1], FINE_SAMPLES)
    V, Psi = sol.sol(rr)
    Vp = np.sign(Psi) * (np.abs(Psi) / rr ** (N - 1)) ** qc
    V, Vp = _truncate(rr, V, Vp, s, r_max)

    fine = _fine_norms(N, rr, V, Vp, q=q, p=p)
    Av, Bv = fine["gradq"], fine["mass2"]

    # stage 2: under W = gamma V(gamma^((2-q)/q) x) both ||∇W||_q^q and ||W||_2^2
    # scale as gamma^(s_norm/q) with s_norm = Nq+2q-2N, so the fixed point
    # zeta(gamma) = gamma^(2-p) reduces to pure powers; bisect on log-gamma
    s_norm = N * q + 2.0 * q - 2.0 * N

    def fp(lg):
        return (s_norm / q) * lg + math.log(Av + Bv) - (2.0 - p) * lg

    lo, hi = -60.0, 60.0
    if fp(lo) * fp(hi) > 0:
        raise NormalizationError("no bracket for the multiplier fixed point")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fp(mid) > 0:
            hi = mid
        else:
            lo = mid
    gamma = math.exp(0.5 * (lo + hi))
    zeta = gamma ** (2.0 - p)
    spatial = gamma ** ((2.0 - q) / q)

    # W(r) = gamma V(spatial * r), sampled on the caller's grid
    r_w = rr / spatial
    W = gamma * V
    Wp = gamma * spatial * Vp
    field = RadialField(grid, _sample_on_grid(grid, r_w, W))
    nd = _fine_norms(N, r_w, W, Wp, q=q, p=p)

    # residual of (r^(N-1)|W'|^(q-2) W')' = r^(N-1)(W - zeta W^(p-1))
    live = W > 0
    flux = r_w ** (N - 1) * np.sign(Wp) * np.abs(Wp) ** (q - 1.0)
    dflux = np.gradient(flux, r_w)
    lhs = dflux / r_w ** (N - 1)
    rhs_vals = W - zeta * np.abs(W) ** (p - 1.0)
    residual = _weighted_residual(N, r_w, lhs, rhs_vals, live)

    return ExtremalProfile(field=field, norms=nd, shoot_value=float(gamma * V[0]),
                           ode_residual=residual, kind="qlaplacian_wpq", zeta=zeta)


# ---------------------------------------------------------------------------
# cutoff concentration bump

def _smoothstep_cutoff(s: np.ndarray) -> np.ndarray:
    """C2 radial cutoff: 1 on [0,1], 0 on [2,inf), quintic smoothstep between."""
    x = np.clip(s - 1.0, 0.0, 1.0)
    return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)


def build_phi1(tau: float, c: float, wp: ExtremalProfile, grid: RadialGrid) -> RadialField:
    """Concentration bump cutoff(r/R_cut) * W_p(tau r), normalized to mass c.

    R_cut = tau^(-1/2); the amplitude is fixed by direct quadrature so that
    the squared mass equals c^2 exactly.  As tau grows, the gradient norms
    approach tau^2 c^2 ||∇W||_2^2/||W||_2^2 and
    tau^(q(1+delta_q)) c^q ||∇W||_q^q/||W||_2^q.
    """
    if not (tau >= 1.0):
        raise ParameterDomainError(f"concentration parameter must satisfy tau >= 1 (got {tau})")
    if wp.ode_residual > 1e-4:
        raise DependencyError(
            f"cutoff bump requires a converged extremal (ode_residual={wp.ode_residual:.3g})"
        )
    # the inner profile varies on scale 1/tau; require a few nodes per feature
    if tau * grid.h > 0.5:
        raise ResolutionError(
            f"tau={tau:g} concentrates below the grid resolution (tau*h={tau*grid.h:.3g} > 0.5)"
        )
    r_cut = tau ** (-0.5)
    wgrid = wp.field.grid
    w_vals = np.interp(tau * grid.r, wgrid.r, wp.field.values, right=0.0)
    raw = _smoothstep_cutoff(grid.r / r_cut) * w_vals
    m2 = float(np.dot(grid.w, raw * raw))
    if m2 <= 0:
        raise ResolutionError("cutoff bump vanished on the grid; decrease tau or refine the grid")
    return RadialField(grid, raw * (c / math.sqrt(m2)))
