"""Command-line front-end.

    normsol regime   --n 3 --q 2.5 --p 3
    normsol solve    --n 3 --q 2.5 --p 5 --c 1 --r-max 6 --grid-m 4000 --out-dir out
    normsol sweep    --n 3 --q 2.5 --p 3 --c-list 3,5,8,10 --out-dir out
    normsol critical --n 2 --q 1.5 --p 4 --c-list 3.0,3.8 --out-dir out
    normsol fiber    --n 3 --q 2.5 --p 5 --c 1 --init-file profile.csv --out-dir out

Defaults may be collected in a flat key=value config file (--config FILE);
explicit flags override it.  Exit codes: 0 success, 2 parameter or regime
error, 3 non-convergence in a required solve, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from . import experiments, radial_grid
from .exponents import ParameterDomainError, ProblemParams, RegimeMismatchError
from .radial_grid import make_grid
from .solver import SolveConfig

EXIT_OK = 0
EXIT_PARAM = 2
EXIT_NOCONV = 3
EXIT_IO = 4


def _read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="normsol", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("regime", "solve", "sweep", "critical", "fiber"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="flat key=value defaults file")
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--q", type=float, default=None)
        sp.add_argument("--p", type=float, default=None)
        sp.add_argument("--c", type=float, default=None)
        sp.add_argument("--r-max", type=float, default=None)
        sp.add_argument("--grid-m", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--max-iters", type=int, default=None)
        sp.add_argument("--init", default=None, help="gaussian | wp | file")
        sp.add_argument("--init-width", type=float, default=None)
        sp.add_argument("--init-file", default=None)
        sp.add_argument("--out-dir", default=None)
        sp.add_argument("--c-list", default=None, help="comma-separated masses")
        sp.add_argument("--theta-max", type=float, default=None)
        sp.add_argument("--floor", type=float, default=None)
    return parser


def _get(args, config, key, cast, default):
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in config:
        return cast(config[key])
    return default


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _read_config(args.config) if args.config else {}
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        n = _get(args, config, "n", int, 3)
        q = _get(args, config, "q", float, 2.5)
        p = _get(args, config, "p", float, 3.0)
        c = _get(args, config, "c", float, 1.0)
        r_max = _get(args, config, "r_max", float, 20.0)
        grid_m = _get(args, config, "grid_m", int, 2000)
        tol = _get(args, config, "tol", float, 1e-6)
        max_iters = _get(args, config, "max_iters", int, 2000)
        init = _get(args, config, "init", str, "gaussian")
        init_width = _get(args, config, "init_width", float, 1.0)
        init_file = _get(args, config, "init_file", str, None)
        out_dir = _get(args, config, "out_dir", str, None)
        theta_max = _get(args, config, "theta_max", float, 12.0)
        floor = _get(args, config, "floor", float, -1.0)
        c_list_raw = _get(args, config, "c_list", str, None)
        c_list = [float(x) for x in c_list_raw.split(",")] if c_list_raw else None

        params = ProblemParams(N=n, q=q, p=p, c=c)
        cfg = SolveConfig(max_iters=max_iters, tol_grad=tol,
                          init="file" if init == "file" else init,
                          init_width=init_width, init_path=init_file)

        if args.command == "regime":
            report = experiments.cmd_regime(params, out_dir=out_dir)
            print(f"regime: {report.regime.value}")
            print(f"conditions: {', '.join(report.satisfied_conditions) or '(none)'}")
            for key, val in report.predicted_exponents.items():
                print(f"  {key} = {val:.6g}")
            return EXIT_OK

        grid = make_grid(n, r_max, grid_m)

        if args.command == "solve":
            res = experiments.cmd_solve(params, cfg, grid, out_dir=out_dir)
            print(f"converged: {res.converged} after {res.iterations} iterations")
            print(f"level = {res.level:.10g}, lambda = {res.lam:.10g}, "
                  f"P = {res.breakdown.pohozaev:.4g}")
            return EXIT_OK if res.converged else EXIT_NOCONV

        if args.command == "sweep":
            if not c_list or len(c_list) < 4:
                print("error: sweep requires --c-list with at least 4 masses", file=sys.stderr)
                return EXIT_PARAM
            out = experiments.cmd_sweep(params, c_list, cfg, grid, out_dir=out_dir)
            for rec in out["records"]:
                print(f"c={rec.c:g}: level={rec.level:.8g} lambda={rec.lam:.8g} "
                      f"converged={rec.converged}")
            for key, val in out["analysis"].items():
                print(f"{key}: {val}")
            if not all(rec.converged for rec in out["records"]):
                return EXIT_NOCONV
            return EXIT_OK

        if args.command == "critical":
            if not c_list:
                print("error: critical requires --c-list", file=sys.stderr)
                return EXIT_PARAM
            out = experiments.cmd_critical(params, cfg, c_list, grid, out_dir=out_dir,
                                           theta_max=theta_max, floor=floor)
            for key, val in out["masses"].items():
                print(f"{key} = {val:.8g}")
            for cm, verdict in out["verdicts"].items():
                print(f"c={cm:g}: {verdict}")
            return EXIT_OK

        if args.command == "fiber":
            if init_file:
                source = radial_grid.load_field(init_file, n)
            else:
                from .solver import _initial_field
                source = _initial_field(params, grid, cfg, init_width)
            out = experiments.cmd_fiber(params, source, out_dir=out_dir)
            print(f"h(1) = {out['table'][:, 1][abs(out['table'][:, 0] - 1).argmin()]:.8g}")
            if out["t0"] is not None:
                print(f"t0 = {out['t0']:.10g}")
            return EXIT_OK

        raise AssertionError(args.command)

    except (ParameterDomainError, RegimeMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
