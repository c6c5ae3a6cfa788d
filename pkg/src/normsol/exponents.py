"""Parameter algebra for the mass-constrained (2,q)-Laplacian problem.

The equation is ``-Δu - Δ_q u = λu + |u|^(p-2) u`` on R^N with prescribed
mass ``||u||_2 = c``, for a dimension N >= 2, a quasilinear exponent
1 < q < N (q != 2) and a nonlinearity exponent 2 < p < min(2*, q*), where
s* = sN/(N-s) is the critical Sobolev exponent (2* = +inf when N = 2).

Everything here is closed-form arithmetic on (N, q, p, c):

* scaling exponents of the mass-preserving dilation u_t(x) = t^(N/2) u(tx),
  under which the three energy pieces scale as t^2, t^(q(1+delta_q)) and
  t^(p*delta_p);
* classification into the subcritical / critical / supercritical regimes
  together with the predicted power laws for the ground-state level and
  the Lagrange multiplier;
* the sharp Gagliardo-Nirenberg constants, expressed through the norms of
  the numerically computed extremal profiles (module ``groundstate``);
* the critical mass thresholds of the L2-critical (p = 2(1+2/N)) and
  Lq-critical (p = q(1+2/N)) cases.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

__all__ = [
    "ParameterDomainError",
    "RegimeMismatchError",
    "DependencyError",
    "ProblemParams",
    "DerivedExponents",
    "Regime",
    "RegimeReport",
    "derive_exponents",
    "classify_regime",
    "gn_constant_2",
    "gn_q_prefactor",
    "gn_constant_q",
    "critical_masses",
]

# an extremal profile counts as converged when its ODE residual is below this
EXTREMAL_RESIDUAL_TOL = 1e-4

# relative tolerance for detecting p == pbar or p == phat exactly
CRITICAL_P_RTOL = 1e-12


class ParameterDomainError(ValueError):
    """A parameter violates the admissible domain; the message names the inequality."""


class RegimeMismatchError(ValueError):
    """An operation was requested outside the parameter regime where it is defined."""


class DependencyError(RuntimeError):
    """A required input (e.g. an extremal profile) is missing or not converged."""


@dataclass(frozen=True)
class ProblemParams:
    """Problem data (N, q, p, c) with domain validation.

    Raises ParameterDomainError naming the violated inequality if the tuple
    is outside 1 < q < N, q != 2, 2 < p < min(2*, q*), c > 0.
    """

    N: int
    q: float
    p: float
    c: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ParameterDomainError(f"dimension must satisfy N >= 2 (got N={self.N})")
        if not (1.0 < self.q < self.N):
            raise ParameterDomainError(f"quasilinear exponent must satisfy 1 < q < N (got q={self.q}, N={self.N})")
        if self.q == 2.0:
            raise ParameterDomainError("quasilinear exponent must satisfy q != 2")
        pmax = min(self.sobolev_2star, self.sobolev_qstar)
        if not (2.0 < self.p < pmax):
            raise ParameterDomainError(
                f"nonlinearity exponent must satisfy 2 < p < min(2*, q*) = {pmax:.6g} (got p={self.p})"
            )
        if not (self.c > 0.0):
            raise ParameterDomainError(f"mass must satisfy c > 0 (got c={self.c})")

    @property
    def sobolev_2star(self) -> float:
        """2N/(N-2); +inf in dimension 2."""
        return math.inf if self.N == 2 else 2.0 * self.N / (self.N - 2)

    @property
    def sobolev_qstar(self) -> float:
        return self.N * self.q / (self.N - self.q)


@dataclass(frozen=True)
class DerivedExponents:
    """Scaling exponents derived from (N, q, p).

    delta_p = N(p-2)/(2p) and delta_q = N(q-2)/(2q) are the dilation
    exponents (||u_t||_p^p scales like t^(p delta_p), ||∇u_t||_q^q like
    t^(q(1+delta_q)) = t^(qN/2+q-N)); nu_pq is the interpolation exponent of
    the L^q-gradient Gagliardo-Nirenberg inequality; pbar = 2(1+2/N) and
    phat = q(1+2/N) are the L2- and Lq-critical nonlinearity exponents.
    """

    delta_p: float
    delta_q: float
    nu_pq: float
    pbar: float
    phat: float


class Regime(str, enum.Enum):
    SUBCRITICAL = "subcritical"
    L2_CRITICAL = "l2_critical"
    LQ_CRITICAL = "lq_critical"
    SUPERCRITICAL = "supercritical"
    OUTSIDE_THEORY = "outside_theory"


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    satisfied_conditions: tuple = ()
    predicted_exponents: Mapping[str, float] = field(default_factory=dict)


def derive_exponents(params: ProblemParams) -> DerivedExponents:
    N, q, p = params.N, params.q, params.p
    delta_p = N * (p - 2.0) / (2.0 * p)
    delta_q = N * (q - 2.0) / (2.0 * q)
    nu_pq = N * q * (p - 2.0) / (p * (N * q - 2.0 * (N - q)))
    return DerivedExponents(
        delta_p=delta_p,
        delta_q=delta_q,
        nu_pq=nu_pq,
        pbar=2.0 * (1.0 + 2.0 / N),
        phat=q * (1.0 + 2.0 / N),
    )


def _is_close(p: float, target: float) -> bool:
    return abs(p - target) <= CRITICAL_P_RTOL * abs(target)


def classify_regime(params: ProblemParams) -> RegimeReport:
    """Tag (N, q, p) with exactly one regime and the applicable rate predictions.

    Subcritical requires both the p-window 2 < p < (1+2/N) min(2,q) and the
    q-window (2N/(N+2) < q < 2, or 2 < q < N with N >= 3); supercritical
    requires (1+2/N) max(2,q) < p < min(2*,q*) together with the stricter
    q-window (2N(N+2)/(N^2+2N+4) < q < 2, or 2 < q < min(N, 2N^2/(N^2-4))
    with N >= 3).  p equal to pbar or phat (to 1e-12 relative) classifies as
    the corresponding critical case; anything else is outside the theory.
    """
    N, q, p = params.N, params.q, params.p
    dx = derive_exponents(params)

    conds = []
    if 2.0 < p < (1.0 + 2.0 / N) * min(2.0, q):
        conds.append("subcritical_p_window")
    if (2.0 * N / (N + 2) < q < 2.0) or (N >= 3 and 2.0 < q < N):
        conds.append("subcritical_q_window")
    if (1.0 + 2.0 / N) * max(2.0, q) < p < min(params.sobolev_2star, params.sobolev_qstar):
        conds.append("supercritical_p_window")
    q_super_hi = min(float(N), 2.0 * N * N / (N * N - 4.0)) if N >= 3 else None
    if (2.0 * N * (N + 2) / (N * N + 2 * N + 4) < q < 2.0) or (N >= 3 and 2.0 < q < q_super_hi):
        conds.append("supercritical_q_window")
    conds = tuple(conds)

    if _is_close(p, dx.pbar):
        return RegimeReport(Regime.L2_CRITICAL, conds)
    if _is_close(p, dx.phat):
        return RegimeReport(Regime.LQ_CRITICAL, conds)

    if "subcritical_p_window" in conds and "subcritical_q_window" in conds:
        denom = 2.0 - p * dx.delta_p
        predicted = {
            "m_of_c": 2.0 * p * (1.0 - dx.delta_p) / denom,
            "lambda_of_c_sub": 2.0 * (p - 2.0) / denom,
        }
        return RegimeReport(Regime.SUBCRITICAL, conds, predicted)

    if "supercritical_p_window" in conds and "supercritical_q_window" in conds:
        denom = p * dx.delta_p - 2.0
        predicted = {
            "sigma_of_c_a": 2.0 * p * (1.0 - dx.delta_p) / denom,
            "sigma_of_c_b": q * p * (1.0 - dx.nu_pq) / (p * dx.nu_pq - q),
            "lambda_of_c_super_a": 2.0 * (p - 2.0) / denom,
            "lambda_of_c_super_b": 2.0 * q * (p - 2.0) / (N * p - N * q - 2.0 * q),
        }
        return RegimeReport(Regime.SUPERCRITICAL, conds, predicted)

    return RegimeReport(Regime.OUTSIDE_THEORY, conds)


def _norm_bundle_get(norms: Mapping[str, float], key: str, what: str) -> float:
    if "ode_residual" in norms and norms["ode_residual"] > EXTREMAL_RESIDUAL_TOL:
        raise DependencyError(
            f"{what} requires a converged extremal profile "
            f"(ode_residual={norms['ode_residual']:.3g} > {EXTREMAL_RESIDUAL_TOL:g})"
        )
    try:
        return float(norms[key])
    except KeyError as exc:
        raise DependencyError(f"{what} requires the extremal norm '{key}'") from exc


def gn_constant_2(N: int, p: float, w_norms: Mapping[str, float]) -> float:
    """Sharp constant of ||u||_p <= C ||∇u||_2^delta_p ||u||_2^(1-delta_p).

    C = (p / (2 ||W||_2^(p-2)))^(1/p) where W is the extremal profile solving
    -ΔW + (1/delta_p - 1) W = (2/(p delta_p)) W^(p-1); ``w_norms`` is its norm
    bundle (see ExtremalProfile.norm_bundle).
    """
    mass2 = _norm_bundle_get(w_norms, "mass2", "gn_constant_2")
    if mass2 <= 0:
        raise DependencyError("gn_constant_2 requires a nontrivial extremal (mass2 > 0)")
    return (p / (2.0 * mass2 ** ((p - 2.0) / 2.0))) ** (1.0 / p)


def gn_q_prefactor(N: int, p: float, q: float) -> float:
    """Closed-form prefactor K entering the sharp L^q-gradient GN constant.

    K = (Nq+pq-2N) * ( [2(Nq-p(N-q))]^(p(N-q)-Nq) / [qN(p-2)]^(N(p-2)) )^(1/(Nq+pq-2N)).
    """
    s = N * q + p * q - 2.0 * N
    a = 2.0 * (N * q - p * (N - q))
    b = q * N * (p - 2.0)
    # evaluate in log space: the inner powers over/underflow for moderate p
    log_inner = ((p * (N - q) - N * q) * math.log(a) - N * (p - 2.0) * math.log(b)) / s
    return s * math.exp(log_inner)


def gn_constant_q(N: int, p: float, q: float, wpq_norms: Mapping[str, float]) -> float:
    """Sharp constant of ||u||_p <= K ||∇u||_q^nu ||u||_2^(1-nu), nu = nu_pq.

    With W the extremal profile of -Δ_q W + W = ζ W^(p-1) normalized by
    ζ = ||∇W||_q^q + ||W||_2^2 (which forces ||W||_p = 1), the constant is

        K_{N,p} = [ K / ( (1/q)||∇W||_q^q + (1/2)||W||_2^2 ) ]^(s/(p d))

    with s = Nq+pq-2N and d = Nq-2(N-q).  The outer exponent comes from
    minimizing (1/q)||∇u||_q^q + (1/2)||u||_2^2 over the amplitude/dilation
    orbit at fixed ||u||_p: the orbit minimum equals K * r^(pd/s) where r is
    the inverse GN ratio, so inverting for r gives the stated power.
    """
    gradq = _norm_bundle_get(wpq_norms, "gradq", "gn_constant_q")
    mass2 = _norm_bundle_get(wpq_norms, "mass2", "gn_constant_q")
    if gradq <= 0 or mass2 <= 0:
        raise DependencyError("gn_constant_q requires a nontrivial extremal")
    s = N * q + p * q - 2.0 * N
    d = N * q - 2.0 * (N - q)
    K = gn_q_prefactor(N, p, q)
    energy = gradq / q + mass2 / 2.0
    return (K / energy) ** (s / (p * d))


def critical_masses(
    params: ProblemParams,
    wp_norms: Optional[Mapping[str, float]] = None,
    wpq_norms: Optional[Mapping[str, float]] = None,
) -> dict:
    """Existence thresholds of the critical cases.

    For p = pbar returns {"c_star"}: c_* = ||W_pbar||_2, the mass below which
    the global infimum is 0 (and above which it is -inf when q < 2).  For
    p = phat returns {"c_2star", "chat_2star"}:

        c_** = ( (N+2) / (N K_{N,p}^(q(N+2)/N)) )^(N/2q),
        c^_** = ( 2||∇W_phat||_q^q / (q ||W_phat||_2^(2(N-q)/N)) )^(N/2q),

    computed from the L^q-GN constant and from the q-gradient norm of the
    semilinear extremal at p = phat.  Requesting thresholds at any other p
    raises RegimeMismatchError.
    """
    N, q, p = params.N, params.q, params.p
    dx = derive_exponents(params)

    if _is_close(p, dx.pbar):
        if wp_norms is None:
            raise DependencyError("c_star requires the extremal norms at p = pbar")
        mass2 = _norm_bundle_get(wp_norms, "mass2", "c_star")
        return {"c_star": math.sqrt(mass2)}

    if _is_close(p, dx.phat):
        if wpq_norms is None or wp_norms is None:
            raise DependencyError("c_2star/chat_2star require extremal norms at p = phat")
        kq = gn_constant_q(N, p, q, wpq_norms)
        c2 = ((N + 2.0) / (N * kq ** (q * (N + 2.0) / N))) ** (N / (2.0 * q))
        gradq_wp = _norm_bundle_get(wp_norms, "gradq", "chat_2star")
        mass2_wp = _norm_bundle_get(wp_norms, "mass2", "chat_2star")
        chat = (2.0 * gradq_wp / (q * mass2_wp ** ((N - q) / N))) ** (N / (2.0 * q))
        return {"c_2star": c2, "chat_2star": chat}

    raise RegimeMismatchError(
        f"critical masses are defined only at p = pbar ({dx.pbar:.6g}) or p = phat ({dx.phat:.6g}); got p={p}"
    )
