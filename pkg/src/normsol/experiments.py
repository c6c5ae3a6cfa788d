"""Experiment harness: regime tables, solves, mass sweeps, threshold scans.

Each ``cmd_*`` function is the library entry point behind one CLI command;
all write plain CSV/JSON artifacts (17 significant digits, so the files
round-trip bit-for-bit) and return the computed objects.

CSV schemas:
  profile:    r,u
  breakdown:  c,I,kin2,kinq,pot,P,lambda_general,lambda_pohozaev
  sweep:      c,level,lambda,grad2,gradq,lp,converged
  fiber:      t,h,hprime
  history:    iter,I,grad_norm,P
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import energy, radial_grid, solver
from .energy import FiberCoeffs
from .exponents import (
    ProblemParams,
    Regime,
    RegimeMismatchError,
    RegimeReport,
    classify_regime,
    critical_masses,
    derive_exponents,
)
from .groundstate import build_phi1, solve_wp, solve_wpq
from .radial_grid import RadialField, RadialGrid, make_grid
from .solver import SolveConfig, SolveResult

__all__ = [
    "SweepRecord",
    "PowerLawFit",
    "fit_power_law",
    "cmd_regime",
    "cmd_solve",
    "cmd_sweep",
    "cmd_critical",
    "cmd_fiber",
    "write_breakdown_csv",
    "write_sweep_csv",
    "read_sweep_csv",
]

FIT_MIN_POINTS = 4
FIT_LEVEL_FLOOR = 1e-10


@dataclass(frozen=True)
class SweepRecord:
    c: float
    level: float
    lam: float
    grad2: float
    gradq: float
    lp: float
    converged: bool


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    r2: float
    predicted: Optional[float] = None
    rel_err: Optional[float] = None


def fit_power_law(records: Sequence[SweepRecord], predicted: Optional[float] = None,
                  value: Callable[[SweepRecord], float] = lambda rec: rec.level) -> PowerLawFit:
    """Least-squares slope of log|value| against log c over usable records.

    A record is usable when it converged and |value| > 1e-10; fewer than four
    usable records is an error (callers downgrade it to a skipped-fit note).
    """
    pts = [(rec.c, abs(value(rec))) for rec in records
           if rec.converged and abs(value(rec)) > FIT_LEVEL_FLOOR]
    if len(pts) < FIT_MIN_POINTS:
        raise ValueError(f"power-law fit needs >= {FIT_MIN_POINTS} converged points (got {len(pts)})")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate abscissae: all masses equal")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    rel = abs(slope - predicted) / abs(predicted) if predicted else None
    return PowerLawFit(exponent=float(slope), r2=r2, predicted=predicted, rel_err=rel)


# ---------------------------------------------------------------------------
# file helpers

def _ensure_dir(out_dir) -> None:
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    return f"{x:.17g}"


def write_breakdown_csv(path, c: float, bd: energy.EnergyBreakdown) -> None:
    with open(path, "w") as fh:
        fh.write("c,I,kin2,kinq,pot,P,lambda_general,lambda_pohozaev\n")
        row = (c, bd.total, bd.kin2, bd.kinq, bd.pot, bd.pohozaev,
               bd.lambda_general, bd.lambda_pohozaev)
        fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_sweep_csv(path, records: Sequence[SweepRecord]) -> None:
    with open(path, "w") as fh:
        fh.write("c,level,lambda,grad2,gradq,lp,converged\n")
        for rec in records:
            row = (rec.c, rec.level, rec.lam, rec.grad2, rec.gradq, rec.lp, rec.converged)
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_sweep_csv(path) -> list:
    records = []
    with open(path) as fh:
        next(fh)
        for line in fh:
            parts = line.strip().split(",")
            records.append(SweepRecord(
                c=float(parts[0]), level=float(parts[1]), lam=float(parts[2]),
                grad2=float(parts[3]), gradq=float(parts[4]), lp=float(parts[5]),
                converged=parts[6] == "True",
            ))
    return records


def _write_history_csv(path, history: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("iter,I,grad_norm,P\n")
        for i, (I, g, P) in enumerate(history):
            fh.write(f"{i},{_fmt(I)},{_fmt(g)},{_fmt(P)}\n")


# ---------------------------------------------------------------------------
# commands

def cmd_regime(params: ProblemParams, out_dir=None) -> RegimeReport:
    """Classify the parameters and optionally write regime.json."""
    report = classify_regime(params)
    if out_dir:
        _ensure_dir(out_dir)
        payload = {
            "N": params.N, "q": params.q, "p": params.p, "c": params.c,
            "regime": report.regime.value,
            "satisfied_conditions": list(report.satisfied_conditions),
            "predicted_exponents": dict(report.predicted_exponents),
            "derived": dataclasses.asdict(derive_exponents(params)),
        }
        with open(os.path.join(out_dir, "regime.json"), "w") as fh:
            json.dump(payload, fh, indent=2)
    return report


def cmd_solve(params: ProblemParams, cfg: SolveConfig, grid: RadialGrid,
              out_dir=None) -> SolveResult:
    """Ground-state solve dispatched by regime; writes profile/breakdown/summary."""
    regime = classify_regime(params).regime
    if regime is Regime.SUBCRITICAL:
        res = solver.minimize_global(params, grid, cfg)
    elif regime is Regime.SUPERCRITICAL:
        res = solver.minimize_pohozaev(params, grid, cfg)
    else:
        raise RegimeMismatchError(
            f"cmd_solve handles the subcritical and supercritical regimes; "
            f"{regime.value} parameters belong to cmd_critical"
        )
    if out_dir:
        _ensure_dir(out_dir)
        radial_grid.save_field(os.path.join(out_dir, "profile.csv"), res.u)
        write_breakdown_csv(os.path.join(out_dir, "breakdown.csv"), params.c, res.breakdown)
        _write_history_csv(os.path.join(out_dir, "history.csv"), res.history)
        residual = solver.pde_residual(res.u, res.lam, params, grid)
        with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
            fh.write(
                f"regime: {regime.value}\n"
                f"converged: {res.converged} after {res.iterations} iterations\n"
                f"level: {res.level:.12g}\n"
                f"lambda: {res.lam:.12g}\n"
                f"pohozaev: {res.breakdown.pohozaev:.6g}\n"
                f"pde_residual: {residual:.6g}\n"
            )
    return res


def cmd_sweep(params_base: ProblemParams, c_list: Sequence[float], cfg: SolveConfig,
              grid: Union[RadialGrid, Callable[[float], RadialGrid]],
              out_dir=None) -> dict:
    """Per-mass solves plus scaling-law analysis.

    ``grid`` is either a fixed grid or a callable c -> grid (mass-adapted
    domains; ground-state widths scale strongly with c).  Subcritical sweeps
    fit the predicted |m(c)| and |lambda_c| power laws; supercritical sweeps
    check the monotonicity of sigma(c), the lambda trend, and the one-sided
    multiplier bound with its constant anchored at the largest mass.
    """
    regime_report = classify_regime(params_base)
    regime = regime_report.regime
    if regime not in (Regime.SUBCRITICAL, Regime.SUPERCRITICAL):
        raise RegimeMismatchError(f"cmd_sweep requires a noncritical regime (got {regime.value})")
    records = []
    for c in c_list:
        params = ProblemParams(params_base.N, params_base.q, params_base.p, c)
        g = grid(c) if callable(grid) else grid
        res = (solver.minimize_global if regime is Regime.SUBCRITICAL
               else solver.minimize_pohozaev)(params, g, cfg)
        nd = radial_grid.norms(res.u, params)
        records.append(SweepRecord(c=c, level=res.level, lam=res.lam,
                                   grad2=nd["grad2"], gradq=nd["gradq"], lp=nd["lp"],
                                   converged=res.converged))

    analysis: dict = {"regime": regime.value}
    if regime is Regime.SUBCRITICAL:
        pred = regime_report.predicted_exponents
        try:
            analysis["fit_level"] = fit_power_law(records, predicted=pred["m_of_c"])
            analysis["fit_lambda"] = fit_power_law(records, predicted=pred["lambda_of_c_sub"],
                                                   value=lambda rec: rec.lam)
        except ValueError as exc:
            analysis["fit_skipped"] = str(exc)
        conv = sorted((rec for rec in records if rec.converged), key=lambda rec: rec.c)
        # both m(c) and lambda_c are negative and rise toward 0- as c decreases
        analysis["level_trend_to_zero"] = len(conv) >= 2 and all(
            a.level > b.level and a.level < 0 for a, b in zip(conv, conv[1:])
        )
        analysis["lambda_trend_to_zero"] = len(conv) >= 2 and all(
            a.lam > b.lam and a.lam < 0 for a, b in zip(conv, conv[1:])
        )
    else:
        conv = sorted((rec for rec in records if rec.converged), key=lambda rec: rec.c)
        analysis["sigma_strictly_decreasing"] = all(
            a.level > b.level for a, b in zip(conv, conv[1:])
        ) and len(conv) >= 2
        analysis["lambda_to_minus_inf"] = all(
            a.lam < b.lam < 0 for a, b in zip(conv, conv[1:])
        ) and len(conv) >= 2
        pred = regime_report.predicted_exponents
        a_exp, b_exp = pred["lambda_of_c_super_a"], pred["lambda_of_c_super_b"]
        if conv:
            anchor = max(conv, key=lambda rec: rec.c)
            bound = lambda c: anchor.lam / (anchor.c ** -a_exp + anchor.c ** -b_exp) \
                * (c ** -a_exp + c ** -b_exp)
            analysis["lambda_bound_flags"] = {
                rec.c: bool(rec.lam <= 0.95 * bound(rec.c)) for rec in conv
            }

    if out_dir:
        _ensure_dir(out_dir)
        write_sweep_csv(os.path.join(out_dir, "sweep.csv"), records)
        payload = {k: (dataclasses.asdict(v) if dataclasses.is_dataclass(v) else v)
                   for k, v in analysis.items()}
        with open(os.path.join(out_dir, "sweep_analysis.json"), "w") as fh:
            json.dump(payload, fh, indent=2, default=str)
    return {"records": records, "analysis": analysis}


def cmd_critical(params: ProblemParams, cfg: SolveConfig, c_grid: Sequence[float],
                 grid: RadialGrid, out_dir=None, taus=(4.0, 16.0),
                 theta_max: float = 12.0, floor: float = -1.0,
                 probe_iters: int = 300) -> dict:
    """Critical-case threshold report.

    Computes the applicable critical masses, then probes each requested mass
    with concentration-bump dilation traces (unbounded-below evidence) and a
    bounded descent run (zero-infimum evidence: the constrained flow keeps the
    energy nonnegative and drives it toward zero).  At p = phat, masses inside
    [c_2star, chat_2star] are reported as the open gap between the two
    one-sided constructions.
    """
    dx = derive_exponents(params)
    report = classify_regime(params)
    if report.regime is Regime.L2_CRITICAL:
        wp = solve_wp(params.N, dx.pbar, grid, q=params.q)
        masses = critical_masses(params, wp_norms=wp.norm_bundle)
        gap = None
    elif report.regime is Regime.LQ_CRITICAL:
        wp = solve_wp(params.N, dx.phat, grid, q=params.q)
        wpq = solve_wpq(params.N, dx.phat, params.q, grid)
        masses = critical_masses(params, wp_norms=wp.norm_bundle, wpq_norms=wpq.norm_bundle)
        gap = (masses["c_2star"], masses["chat_2star"])
    else:
        raise RegimeMismatchError(
            f"cmd_critical requires p = pbar or p = phat (regime {report.regime.value})"
        )

    theta = np.linspace(0.0, theta_max, 400)
    verdicts = {}
    for c in c_grid:
        if gap is not None and gap[0] <= c <= gap[1]:
            verdicts[c] = "open gap between the one-sided thresholds"
            continue
        pc = ProblemParams(params.N, params.q, params.p, c)
        unbounded = False
        for tau in taus:
            seed = build_phi1(tau, c, wp, grid)
            rep = solver.detect_blowdown(pc, grid, seed, theta, floor)
            unbounded = unbounded or rep.unbounded
        if unbounded:
            verdicts[c] = "unbounded-below evidence"
            continue
        probe_cfg = dataclasses.replace(cfg, max_iters=probe_iters)
        probe = solver.descent_probe(pc, grid, probe_cfg, seed=build_phi1(taus[0], c, wp, grid))
        levels = probe.history[:, 0]
        drove_down = levels[-1] < levels[0] or abs(levels[-1]) < 1e-6
        if levels.min() >= -1e-6 and drove_down:
            verdicts[c] = "zero-infimum evidence"
        else:
            verdicts[c] = "inconclusive"

    result = {"regime": report.regime.value, "masses": masses, "verdicts": verdicts}
    if out_dir:
        _ensure_dir(out_dir)
        payload = {"regime": result["regime"],
                   "masses": {k: float(v) for k, v in masses.items()},
                   "verdicts": {f"{c:.17g}": v for c, v in verdicts.items()}}
        with open(os.path.join(out_dir, "critical_report.json"), "w") as fh:
            json.dump(payload, fh, indent=2)
    return result


def cmd_fiber(params: ProblemParams, source: Union[FiberCoeffs, RadialField],
              out_dir=None, n_samples: int = 200, t_range=(1e-2, 1e2)) -> dict:
    """Fiber-map table h(t), h'(t) on log-spaced t, plus t0 when supercritical."""
    coeffs = source if isinstance(source, FiberCoeffs) else energy.fiber_coeffs(source, params)
    t = np.geomspace(t_range[0], t_range[1], n_samples)
    hv = energy.fiber_h(t, coeffs)
    hp = energy.fiber_hprime(t, coeffs)
    t0 = None
    if classify_regime(params).regime is Regime.SUPERCRITICAL:
        t0 = energy.find_t0(coeffs, params)
    if out_dir:
        _ensure_dir(out_dir)
        with open(os.path.join(out_dir, "fiber.csv"), "w") as fh:
            fh.write("t,h,hprime\n")
            for row in zip(t, hv, hp):
                fh.write(",".join(_fmt(x) for x in row) + "\n")
        with open(os.path.join(out_dir, "fiber_summary.json"), "w") as fh:
            json.dump({"A": coeffs.A, "B": coeffs.B, "C": coeffs.C,
                       "e2": coeffs.e2, "e3": coeffs.e3,
                       "t0": t0, "h_at_1": energy.fiber_h(1.0, coeffs),
                       "hprime_at_1": energy.fiber_hprime(1.0, coeffs)}, fh, indent=2)
    return {"table": np.column_stack([t, hv, hp]), "t0": t0, "coeffs": coeffs}
