"""Command-line front end: simulation, evaluation, validation, file emission.

Every stochastic subcommand requires --seed and reproduces its outputs byte
for byte from (subcommand, parameters, seed).  CSV artifacts carry a header
row and 17-significant-digit floats; moments and validation reports are
JSON.  The FRACPOISSON_OUTDIR environment variable supplies the default
output directory for relative paths.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import fields, processes, specfun, subordinate, validate
from .sampling import MixedParams, ParameterError, RandomSource
from .specfun import AccuracyError, DomainError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _outpath(name: str | None):
    if name is None:
        return None
    if os.path.isabs(name):
        return name
    return os.path.join(os.environ.get("FRACPOISSON_OUTDIR", "."), name)


def _write(pathname: str | None, emit) -> None:
    if pathname is None:
        emit(sys.stdout)
    else:
        with open(pathname, "w") as fh:
            emit(fh)


def _mixed_or_alpha(args):
    if getattr(args, "alpha", None) is not None:
        return args.alpha
    return MixedParams(args.alpha1, args.alpha2, args.c1, args.c2)


def _add_mixed(p, required: bool = True):
    p.add_argument("--alpha1", type=float, required=required)
    p.add_argument("--alpha2", type=float, required=required)
    p.add_argument("--c1", type=float, default=0.5)
    p.add_argument("--c2", type=float, default=0.5)


def build_parser() -> _Parser:
    top = _Parser(prog="fracpoisson", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ml-eval", help="evaluate the Mittag-Leffler family")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--atol", type=float, default=1e-10)

    p = sub.add_parser("simulate-subordinator", help="grid path of L")
    p.add_argument("--alpha", type=float)
    _add_mixed(p, required=False)
    p.add_argument("--delta", type=float, default=5e-4)
    p.add_argument("--s-end", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=str)

    p = sub.add_parser("simulate-inverse", help="grid path of the inverse Y")
    p.add_argument("--alpha", type=float)
    _add_mixed(p, required=False)
    p.add_argument("--delta", type=float, default=5e-4)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=str)

    p = sub.add_parser("simulate-fpp", help="fractional Poisson process events")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--method", choices=["renewal", "timechange"], default="renewal")
    p.add_argument("--delta", type=float, default=5e-4)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=str)
    p.add_argument("--driver-out", type=str)

    p = sub.add_parser("simulate-mfpp", help="mixed-fractional Poisson events")
    _add_mixed(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--delta", type=float, default=5e-4)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=str)

    p = sub.add_parser("simulate-fprf", help="planar fractional Poisson field")
    p.add_argument("--alpha1", type=float, required=True)
    p.add_argument("--alpha2", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--window", type=float, required=True)
    p.add_argument("--delta", type=float, default=5e-4)
    p.add_argument("--cell-law", choices=["poisson", "bernoulli"], default="poisson")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=str, required=True)

    p = sub.add_parser("pmf", help="probability mass tables")
    p.add_argument("--process", choices=["fpp", "mfpp", "fprf"], required=True)
    p.add_argument("--alpha", type=float)
    _add_mixed(p, required=False)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--t", type=float)
    p.add_argument("--t1", type=float)
    p.add_argument("--t2", type=float)
    p.add_argument("--k-max", type=int, default=40)
    p.add_argument("--method", default="series",
                   choices=["series", "convolution", "montecarlo"])
    p.add_argument("--n-mc", type=int, default=1500)
    p.add_argument("--delta", type=float, default=5e-4)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=str)

    p = sub.add_parser("moments", help="analytic mean/variance/covariance")
    p.add_argument("--process", choices=["fpp", "mfpp", "fprf"], required=True)
    p.add_argument("--alpha", type=float)
    _add_mixed(p, required=False)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--t", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--t1", type=float)
    p.add_argument("--t2", type=float)
    p.add_argument("--s1", type=float)
    p.add_argument("--s2", type=float)
    p.add_argument("--out", type=str)

    p = sub.add_parser("trace", help="field counts along the diagonal path")
    p.add_argument("--alpha1", type=float, required=True)
    p.add_argument("--alpha2", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--window", type=float, required=True)
    p.add_argument("--delta", type=float, default=5e-4)
    p.add_argument("--n-eval", type=int, default=101)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=str)

    p = sub.add_parser("records", help="record-construction counting function")
    p.add_argument("--coef", type=float, default=1.0, help="m(t) = coef * t^power")
    p.add_argument("--power", type=float, default=1.0)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--n-eval", type=int, default=101)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=str)

    p = sub.add_parser("validate", help="run a validation suite")
    p.add_argument("--suite", default="all")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=str)

    return top


def _pmf_csv(pmf, fh):
    pmf.export_csv(fh)


def _run(args) -> int:
    if args.command == "ml-eval":
        if args.gamma == 1.0 and args.beta == 1.0:
            val = specfun.mittag_leffler(args.alpha, args.z, atol=args.atol)
        elif args.gamma == 1.0:
            val = specfun.mittag_leffler2(args.alpha, args.beta, args.z, atol=args.atol)
        else:
            val = specfun.mittag_leffler3(args.alpha, args.beta, args.gamma, args.z, atol=args.atol)
        print(f"{val:.17g}")
        return 0

    if args.command == "simulate-subordinator":
        params = _mixed_or_alpha(args)
        path = subordinate.simulate_subordinator(
            params, args.delta, args.s_end, RandomSource(args.seed)
        )
        _write(_outpath(args.out), lambda fh: subordinate.export_subordinator_csv(path, fh))
        return 0

    if args.command == "simulate-inverse":
        params = _mixed_or_alpha(args)
        inv = subordinate.simulate_inverse(params, args.delta, args.t_end, RandomSource(args.seed))
        _write(_outpath(args.out), lambda fh: subordinate.export_inverse_csv(inv, fh))
        return 0

    if args.command == "simulate-fpp":
        rng = RandomSource(args.seed)
        if args.method == "renewal":
            events = processes.simulate_fpp_renewal(args.alpha, args.lam, args.t_end, rng)
            driver = None
        else:
            events, driver = processes.simulate_fpp_timechange(
                args.alpha, args.lam, args.t_end, rng, delta=args.delta
            )
        _write(_outpath(args.out), events.export_csv)
        if driver is not None and args.driver_out:
            _write(_outpath(args.driver_out), lambda fh: subordinate.export_inverse_csv(driver, fh))
        return 0

    if args.command == "simulate-mfpp":
        params = MixedParams(args.alpha1, args.alpha2, args.c1, args.c2)
        events = processes.simulate_mfpp(
            params, args.lam, args.t_end, RandomSource(args.seed), delta=args.delta
        )
        _write(_outpath(args.out), events.export_csv)
        return 0

    if args.command == "simulate-fprf":
        pts, d1, d2 = fields.simulate_fprf(
            args.alpha1,
            args.alpha2,
            args.lam,
            args.window,
            args.delta,
            RandomSource(args.seed),
            cell_law=args.cell_law,
        )
        out = _outpath(args.out)
        _write(out, pts.export_csv)
        stem = out[:-4] if out.endswith(".csv") else out
        _write(stem + ".driver1.csv", lambda fh: subordinate.export_inverse_csv(d1, fh))
        _write(stem + ".driver2.csv", lambda fh: subordinate.export_inverse_csv(d2, fh))
        return 0

    if args.command == "pmf":
        if args.process == "fpp":
            if args.alpha is None or args.t is None:
                raise UsageError("fpp pmf requires --alpha and --t")
            pmf = processes.fpp_pmf(args.alpha, args.lam, args.t, args.k_max)
        elif args.process == "mfpp":
            if args.t is None:
                raise UsageError("mfpp pmf requires --t")
            params = MixedParams(args.alpha1, args.alpha2, args.c1, args.c2)
            rng = RandomSource(args.seed) if args.seed is not None else None
            if args.method == "montecarlo" and rng is None:
                raise UsageError("montecarlo pmf requires --seed")
            pmf = processes.mfpp_pmf(
                params, args.lam, args.t, args.k_max,
                method=args.method, n_mc=args.n_mc, rng=rng, delta=args.delta,
            )
        else:
            if args.t1 is None or args.t2 is None or args.seed is None:
                raise UsageError("fprf pmf requires --t1, --t2 and --seed")
            pmf = fields.fprf_pmf_mc(
                args.alpha1, args.alpha2, args.lam, args.t1, args.t2,
                args.k_max, args.n_mc, RandomSource(args.seed),
            )
        _write(_outpath(args.out), lambda fh: _pmf_csv(pmf, fh))
        return 0

    if args.command == "moments":
        if args.process == "fpp":
            rep = processes.fpp_moments(args.alpha, args.lam, args.t, args.s)
        elif args.process == "mfpp":
            params = MixedParams(args.alpha1, args.alpha2, args.c1, args.c2)
            rep = processes.mfpp_moments(params, args.lam, args.t, args.s)
        else:
            if args.t1 is None or args.t2 is None:
                raise UsageError("fprf moments require --t1 --t2 (and optional --s1 --s2)")
            s = (args.s1, args.s2) if args.s1 is not None and args.s2 is not None else None
            rep = fields.fprf_moments(args.alpha1, args.alpha2, args.lam, (args.t1, args.t2), s)
        _write(_outpath(args.out), lambda fh: fh.write(json.dumps(rep.to_json_dict(), sort_keys=True) + "\n"))
        return 0

    if args.command == "trace":
        driver = fields.simulate_fprf(
            args.alpha1, args.alpha2, args.lam, args.window, args.delta, RandomSource(args.seed)
        )
        path = fields.IncreasingPathSpec.diagonal(args.window)
        ts, counts = fields.trace_along_path(driver, path, args.n_eval)

        def emit(fh):
            fh.write("t,count\n")
            for t, c in zip(ts, counts):
                fh.write(f"{t:.17g},{c}\n")

        _write(_outpath(args.out), emit)
        return 0

    if args.command == "records":
        ts = np.linspace(0.0, args.t_end, args.n_eval)
        counts = fields.gergely_yezhov_counts(
            lambda t: args.coef * np.asarray(t) ** args.power, ts, RandomSource(args.seed)
        )

        def emit(fh):
            fh.write("t,count\n")
            for t, c in zip(ts, counts):
                fh.write(f"{t:.17g},{c}\n")

        _write(_outpath(args.out), emit)
        return 0

    if args.command == "validate":
        results = validate.run_suite(args.suite, args.seed, jobs=args.jobs)
        payload = validate.report_json(results)
        _write(_outpath(args.out), lambda fh: fh.write(payload + "\n"))
        return 0 if all(r.passed for r in results) else 2

    raise UsageError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _run(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ParameterError, DomainError, AccuracyError, ValueError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
