"""Command-line entry point: ``condpanel {identify,fit,profile,simulate,mc}``.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import logging
import os
import sys
from pathlib import Path as FsPath

import numpy as np

from .enumeration import EnumerationBudgetError
from .estimation import NotConvergedError, NotIdentifiedError, SingularInformationError, fit_cmle, profile
from .identification import Criterion, check_identification
from .io import (ConfigError, PanelFormatError, canonical_json, digest, envelope, load_config,
                 load_panel, write_panel)
from .model import FeedbackSpec, Support
from .simulation import EstimatorOptions, monte_carlo, simulate_panel

SEED_ENV = "CONDPANEL_SEED"

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2, 3

logger = logging.getLogger("condpanel")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` -> ``[a, a+step, ..., <= b]``."""
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"grid must look like a:b:step, got {text!r}") from None
    if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(step)) or step <= 0:
        raise ValueError("grid bounds must be finite and step positive")
    if b < a:
        return []
    n = int(np.floor((b - a) / step + 1e-9))
    return [a + k * step for k in range(n + 1)]


def _timestamp():
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if not epoch:
        return None
    return _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _emit(report: dict, out) -> None:
    text = canonical_json(report)
    if out:
        FsPath(out).write_text(text)
    else:
        sys.stdout.write(text)


def _seed_override(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return None
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def cmd_identify(args) -> int:
    support = Support.parse(args.support)
    report = check_identification(args.T, support, args.spec, args.criterion)
    dig = digest("identify", args.spec.value, args.T, str(support), report.criterion.value)
    _emit(envelope("identify", dig, report.to_json(), _timestamp()), args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    support = Support.parse(args.support)
    ds = load_panel(args.data, args.spec, support)
    fit = fit_cmle(ds, tol=args.tol, max_iter=args.max_iter, box=args.box)
    payload = fit.to_json()
    payload["identification"] = {"rho_identified": fit.identification.rho_identified,
                                 "beta_identified": fit.identification.beta_identified,
                                 "span_rank": fit.identification.span_rank}
    payload["N"] = ds.N
    payload["T"] = ds.T
    dig = digest("fit", FsPath(args.data).read_bytes(), args.spec.value, str(support),
                 repr(args.tol), args.max_iter, repr(args.box))
    _emit(envelope("fit", dig, payload, _timestamp()), args.out)
    return EXIT_OK


def cmd_profile(args) -> int:
    support = Support.parse(args.support)
    ds = load_panel(args.data, args.spec, support)
    grid = parse_grid(args.grid)
    curve = profile(ds, args.component, grid, box=args.box)
    payload = {"component": args.component,
               "curve": [{"value": v, "log_lik": ll} for v, ll in curve]}
    dig = digest("profile", FsPath(args.data).read_bytes(), args.spec.value, str(support),
                 args.component, args.grid)
    _emit(envelope("profile", dig, payload, _timestamp()), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, _ = load_config(args.config, _seed_override(args))
    ds = simulate_panel(cfg)
    write_panel(ds, args.out)
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg, raw = load_config(args.config, _seed_override(args))
    est = raw.get("estimator", {}) or {}
    opts = EstimatorOptions(tol=float(est.get("tol", 1e-10)),
                            max_iter=int(est.get("max_iter", 100)),
                            box=float(est.get("box", 20.0)))
    summary = monte_carlo(cfg, args.reps, opts)
    payload = summary.to_json()
    payload["config"] = {"spec": cfg.spec.value, "T": cfg.T, "N": cfg.N, "seed": cfg.seed,
                         "theta0": {"rho": cfg.theta0.rho, "beta": cfg.theta0.beta}}
    dig = digest("mc", FsPath(args.config).read_bytes(), args.reps, cfg.seed)
    _emit(envelope("mc", dig, payload, _timestamp()), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="condpanel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def spec_arg(p):
        p.add_argument("--spec", required=True, type=FeedbackSpec.parse, help="feedback spec, 1 or 2")

    p = sub.add_parser("identify", help="exact identification analysis")
    spec_arg(p)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--support", required=True, help="comma list, e.g. 0,1 or 0,1/2,1")
    p.add_argument("--criterion", type=Criterion.parse, default=Criterion.SPAN,
                   help="per-stat or span (default)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("fit", help="conditional maximum likelihood fit")
    p.add_argument("--data", required=True)
    spec_arg(p)
    p.add_argument("--support", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--box", type=float, default=20.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("profile", help="profile log-likelihood curve")
    p.add_argument("--data", required=True)
    spec_arg(p)
    p.add_argument("--support", default="0,1")
    p.add_argument("--component", required=True, choices=("rho", "beta"))
    p.add_argument("--grid", required=True, help="a:b:step")
    p.add_argument("--box", type=float, default=20.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("simulate", help="simulate a panel to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc", help="Monte Carlo study")
    p.add_argument("--config", required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"condpanel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NotConvergedError as exc:
        print(f"condpanel: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (NotIdentifiedError, SingularInformationError, PanelFormatError, ConfigError,
            EnumerationBudgetError, ValueError, OSError) as exc:
        print(f"condpanel: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
