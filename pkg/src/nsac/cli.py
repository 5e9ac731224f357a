"""Command line entry point.

Subcommands::

    nsac run <config>        plain run with budget and bound checks
    nsac galerkin <config>   spectral Galerkin run with the energy identity check
    nsac decay <config>      small-data run with the exponential decay fit
    nsac twin <config>       twin runs with perturbed phase, stability distance
    nsac check               built-in invariant suite
    nsac preset <name>       print a built-in configuration

Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 a checked
property failed.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import presets
from .config import load_config
from .errors import ConfigurationError, NSACError

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3


def _print_checks(checks, out) -> bool:
    width = max((len(name) for name, _, _ in checks), default=0)
    ok = True
    for name, passed, detail in checks:
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name:<{width}}  {detail}", file=out)
    return ok


def _load(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {p}")
    return load_config(p)


def _cmd_run(args, out):
    from .experiments import run_experiment
    cfg = _load(args.config)
    res, s = run_experiment(cfg, args.outdir)
    print(f"steps {res.steps}, t = {res.state.t:.6g}", file=out)
    if res.csv_path:
        print(f"diagnostics: {res.csv_path}", file=out)
    return _print_checks(s["checks"], out)


def _cmd_decay(args, out):
    from .experiments import decay_experiment
    cfg = _load(args.config)
    res, s = decay_experiment(cfg, args.outdir)
    f = s["decay_fit"]
    print(f"sigma = {f['sigma']:.6g}, r^2 = {f['r_squared']:.6f}, window = "
          f"[{f['window'][0]:.4g}, {f['window'][1]:.4g}]", file=out)
    return _print_checks(s["checks"], out)


def _cmd_twin(args, out):
    from .experiments import twin_experiment
    cfg = _load(args.config)
    s = twin_experiment(cfg, args.outdir)
    for delta, d0, d1 in s["rows"]:
        print(f"delta = {delta:g}: distance {d0:.6e} -> {d1:.6e}", file=out)
    print(f"distance ratio = {s['ratio']:.6g}", file=out)
    return _print_checks(s["checks"], out)


def _cmd_galerkin(args, out):
    from .experiments import galerkin_experiment
    cfg = _load(args.config)
    _, s = galerkin_experiment(cfg, args.outdir, dt_halving=args.halving)
    print(f"{s['modes']} modes, max |r|/t = {s['residual_rate']:.6e}", file=out)
    return _print_checks(s["checks"], out)


def _cmd_check(args, out):
    from .selfcheck import run_checks
    return _print_checks(run_checks(), out)


def _cmd_preset(args, out):
    print(presets.PRESETS[args.name](), end="", file=out)
    return True


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsac", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (("run", _cmd_run, "plain run"),
                               ("galerkin", _cmd_galerkin, "spectral Galerkin run"),
                               ("decay", _cmd_decay, "exponential decay experiment"),
                               ("twin", _cmd_twin, "twin-run stability experiment")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config")
        p.add_argument("--outdir", default=None, help="output directory (overrides output.outdir)")
        if name == "galerkin":
            p.add_argument("--halving", action="store_true",
                           help="repeat at dt/2 and check the residual ratio")
        p.set_defaults(func=fn)
    p = sub.add_parser("check", help="built-in invariant suite")
    p.set_defaults(func=_cmd_check)
    p = sub.add_parser("preset", help="print a built-in configuration")
    p.add_argument("name", choices=sorted(presets.PRESETS))
    p.set_defaults(func=_cmd_preset)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    out = sys.stdout
    try:
        ok = args.func(args, out)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NSACError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK if ok else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
