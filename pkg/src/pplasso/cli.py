"""Command-line front end.

Subcommands: fit, simulate, check, study, dump-quad. Module errors exit
with status 1 and one machine-parseable line "E_CODE: message" on stderr;
I/O and format problems exit with status 2 and "E_IO: message".
"""

from __future__ import annotations

import argparse
import configparser
import sys

import numpy as np

from . import reporting
from .errors import PPLassoError, WeightSumError
from .geometry import Window, read_points_csv, write_points_csv
from .model import (
    ConstantField,
    CoordinateField,
    InteractionSpec,
    ModelSpec,
    ProductField,
    read_raster_csv,
)
from .pipeline import fit_document, run_fit
from .quadrature import WEIGHT_SUM_RTOL, build_scheme, write_scheme_csv
from .reporting import format_float
from .simulate import (
    DEFAULT_BURN_IN,
    DEFAULT_SWEEPS,
    SimConfig,
    campbell_check,
    gnz_check,
    sample_poisson,
    sample_strauss,
)
from .study import load_study_config, run_study, write_study_report

__all__ = ["main", "build_parser"]


# -- argument parsing helpers --------------------------------------------------


def _parse_window(text: str) -> Window:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"--window needs xmin,xmax,ymin,ymax, got {text!r}")
    return Window(*(float(v) for v in parts))


def _parse_dummy(text: str):
    nx, sep, ny = text.lower().partition("x")
    if not sep:
        raise ValueError(f"--dummy needs NXxNY, got {text!r}")
    return int(nx), int(ny)


def _parse_interaction(text: str):
    if text == "none":
        return None
    kind, sep, val = text.partition(":")
    if kind == "strauss" and sep:
        return InteractionSpec("strauss", float(val))
    raise ValueError(f"--interaction must be none or strauss:R, got {text!r}")


class _CovariateAction(argparse.Action):
    """Collects --covariate and --covariate-expr in declaration order."""

    def __call__(self, parser, namespace, values, option_string=None):
        decls = getattr(namespace, "cov_decls", None)
        if decls is None:
            decls = []
            namespace.cov_decls = decls
        decls.append((self.dest, values))


def _build_covariates(decls):
    if not decls:
        raise ValueError("at least one --covariate or --covariate-expr is required")
    fields = []
    by_name = {}
    for kind, spec in decls:
        name, sep, rest = spec.partition("=")
        if not sep or not name:
            raise ValueError(f"covariate spec {spec!r} must be name=...")
        if kind == "covariate":
            f = read_raster_csv(rest, name=name)
        elif rest == "x":
            f = CoordinateField("x", name=name)
        elif rest == "y":
            f = CoordinateField("y", name=name)
        elif rest == "const":
            f = ConstantField(name=name)
        elif rest.startswith("prod:"):
            parts = rest[len("prod:"):].split(",")
            if len(parts) != 2:
                raise ValueError(f"prod takes two covariate names, got {rest!r}")
            try:
                left, right = by_name[parts[0]], by_name[parts[1]]
            except KeyError as missing:
                raise ValueError(
                    f"prod refers to undeclared covariate {missing}") from None
            f = ProductField(left, right, name=name)
        else:
            raise ValueError(
                f"--covariate-expr value must be x|y|const|prod:a,b, got {rest!r}")
        fields.append(f)
        by_name[name] = f
    return fields


def _model_from_args(args, beta=None, psi=None) -> ModelSpec:
    window = _parse_window(args.window)
    fields = _build_covariates(getattr(args, "cov_decls", None) or [])
    interaction = _parse_interaction(args.interaction)
    if beta is None:
        beta = np.zeros(len(fields))
    else:
        beta = np.asarray([float(v) for v in beta.split(",")])
    if interaction is not None and psi is None:
        psi = 0.0
    if interaction is None:
        psi = None
    return ModelSpec(fields, window, beta=beta, interaction=interaction, psi=psi)


def _add_model_flags(p: argparse.ArgumentParser, with_coefficients: bool):
    p.add_argument("--window", required=True,
                   help="observation window as xmin,xmax,ymin,ymax")
    p.add_argument("--covariate", action=_CovariateAction, metavar="NAME=PATH",
                   help="raster covariate from a CSV file (repeatable)")
    p.add_argument("--covariate-expr", action=_CovariateAction,
                   metavar="NAME=EXPR",
                   help="analytic covariate: x|y|const|prod:a,b (repeatable)")
    p.add_argument("--interaction", default="none", metavar="SPEC",
                   help="none or strauss:R")
    if with_coefficients:
        p.add_argument("--beta", required=True,
                       help="trend coefficients, comma separated, one per covariate")
        p.add_argument("--psi", type=float, default=None,
                       help="strauss interaction coefficient")


def _maybe_warn_dummy(scheme):
    n_dummy = scheme.n_nodes - scheme.n_data
    if n_dummy < 4 * scheme.n_data:
        print(f"warning: {n_dummy} dummy nodes for {scheme.n_data} data points;"
              " the rule of thumb wants at least 4x as many"
              " (use a finer --dummy grid)", file=sys.stderr)


# -- subcommands ----------------------------------------------------------------


def cmd_fit(args) -> int:
    window = _parse_window(args.window)
    model = _model_from_args(args)
    pattern = read_points_csv(args.points, window)
    outcome = run_fit(
        pattern, model,
        penalty=args.penalty,
        gamma=args.gamma,
        n_tau=args.ntau,
        tau_min_ratio=args.tau_min_ratio,
        dummy_grid=_parse_dummy(args.dummy),
        criterion=args.criterion,
    )
    _maybe_warn_dummy(outcome.scheme)
    if args.dump_quad:
        write_scheme_csv(outcome.scheme, args.dump_quad)
    doc = fit_document(outcome)
    if args.out:
        reporting.write_json(args.out, doc)
        if outcome.path is not None:
            reporting.write_csv(args.out + ".path.csv",
                                ["tau", "coefficient", "value"],
                                reporting.path_tidy_rows(outcome.path))
            reporting.write_csv(args.out + ".criteria.csv",
                                ["tau", "loglik", "dof", "cbic", "ceric",
                                 "converged"],
                                reporting.criteria_rows(outcome.table))
    else:
        print(reporting.dumps(doc))
    return 0


def cmd_simulate(args) -> int:
    model = _model_from_args(args, beta=args.beta, psi=args.psi)
    config = SimConfig(model=model, seed=args.seed,
                       burn_in=args.burn_in, sweeps=args.sweeps)
    if args.model == "poisson":
        pattern = sample_poisson(config)
    else:
        pattern = sample_strauss(config)
    if args.out:
        write_points_csv(pattern, args.out)
    else:
        sys.stdout.write("x,y\n")
        for px, py in pattern.points:
            sys.stdout.write(f"{format_float(px)},{format_float(py)}\n")
    return 0


_CAMPBELL_H = {
    "1": lambda x, y: np.ones_like(x),
    "x": lambda x, y: x,
    "y": lambda x, y: y,
}

_GNZ_H = {
    "1": lambda x, y, s: np.ones_like(x),
    "x": lambda x, y, s: x,
    "y": lambda x, y, s: y,
    "s1": lambda x, y, s: s,
}


def cmd_check(args) -> int:
    model = _model_from_args(args, beta=args.beta, psi=args.psi)
    rows = []
    for name in [h.strip() for h in args.h.split(",") if h.strip()]:
        if args.identity == "campbell":
            if name not in _CAMPBELL_H:
                raise ValueError(f"campbell test function must be one of "
                                 f"{sorted(_CAMPBELL_H)}, got {name!r}")
            res = campbell_check(model, _CAMPBELL_H[name], args.replicates,
                                 seed=args.seed)
        else:
            if name not in _GNZ_H:
                raise ValueError(f"gnz test function must be one of "
                                 f"{sorted(_GNZ_H)}, got {name!r}")
            res = gnz_check(model, _GNZ_H[name], args.replicates,
                            seed=args.seed, burn_in=args.burn_in,
                            sweeps=args.sweeps)
        rows.append((args.identity, name, res.lhs, res.rhs, res.z,
                     bool(abs(res.z) < 3.0)))
    header = ["identity", "h", "lhs", "rhs", "z", "pass"]
    if args.out:
        reporting.write_csv(args.out, header, rows)
    else:
        sys.stdout.write(",".join(header) + "\n")
        for row in rows:
            sys.stdout.write(",".join(reporting._cell(v) for v in row) + "\n")
    return 0


def cmd_study(args) -> int:
    cfg = load_study_config(args.config)
    report = run_study(cfg)
    csv_path, txt_path = write_study_report(report, args.out)
    sys.stdout.write(report.summary)
    print(f"report written to {csv_path} and {txt_path}")
    return 0


def cmd_dump_quad(args) -> int:
    window = _parse_window(args.window)
    model = _model_from_args(args)
    pattern = read_points_csv(args.points, window)
    scheme = build_scheme(pattern, model, dummy_grid=_parse_dummy(args.dummy))
    err = scheme.weight_sum_error()
    if err > WEIGHT_SUM_RTOL:
        raise WeightSumError(
            f"weight sum deviates from the domain area by {err:.3e} relative")
    _maybe_warn_dummy(scheme)
    write_scheme_csv(scheme, args.out)
    return 0


# -- parser wiring --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pplasso",
        description="Regularized intensity and conditional-intensity "
                    "estimation for spatial point patterns.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a penalized model to a pattern")
    p_fit.add_argument("--points", required=True, help="pattern CSV (x,y)")
    _add_model_flags(p_fit, with_coefficients=False)
    p_fit.add_argument("--penalty", choices=["none", "lasso", "adaptive"],
                       default="adaptive")
    p_fit.add_argument("--gamma", type=float, default=1.0,
                       help="adaptive-weight exponent")
    p_fit.add_argument("--ntau", type=int, default=100,
                       help="number of path points including tau=0")
    p_fit.add_argument("--tau-min-ratio", type=float, default=1e-4)
    p_fit.add_argument("--dummy", default="32x32",
                       help="dummy grid as NXxNY")
    p_fit.add_argument("--criterion", choices=["cbic", "ceric"],
                       default="cbic")
    p_fit.add_argument("--out", default=None,
                       help="result JSON path (stdout when omitted); also "
                            "writes OUT.path.csv and OUT.criteria.csv")
    p_fit.add_argument("--dump-quad", default=None, metavar="PATH",
                       help="also write the quadrature scheme CSV")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="draw one pattern from a model")
    p_sim.add_argument("--model", choices=["poisson", "strauss"],
                       required=True)
    _add_model_flags(p_sim, with_coefficients=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p_sim.add_argument("--sweeps", type=int, default=DEFAULT_SWEEPS)
    p_sim.add_argument("--out", default=None, help="pattern CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    p_chk = sub.add_parser("check", help="Monte-Carlo identity checks")
    p_chk.add_argument("--identity", choices=["campbell", "gnz"],
                       required=True)
    _add_model_flags(p_chk, with_coefficients=True)
    p_chk.add_argument("--h", default="1",
                       help="test functions, comma separated: 1|x|y|s1")
    p_chk.add_argument("--replicates", type=int, default=200)
    p_chk.add_argument("--seed", type=int, default=0)
    p_chk.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p_chk.add_argument("--sweeps", type=int, default=DEFAULT_SWEEPS)
    p_chk.add_argument("--out", default=None, help="check CSV path")
    p_chk.set_defaults(func=cmd_check)

    p_study = sub.add_parser("study", help="replicated simulation study")
    p_study.add_argument("config", help="study INI file")
    p_study.add_argument("--out", default="study",
                         help="output prefix for .csv and .summary.txt")
    p_study.set_defaults(func=cmd_study)

    p_dump = sub.add_parser("dump-quad", help="write a quadrature scheme CSV")
    p_dump.add_argument("--points", required=True)
    _add_model_flags(p_dump, with_coefficients=False)
    p_dump.add_argument("--dummy", default="32x32")
    p_dump.add_argument("--out", required=True)
    p_dump.set_defaults(func=cmd_dump_quad)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PPLassoError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, configparser.Error) as exc:
        print(f"E_IO: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
