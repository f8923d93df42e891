"""Command-line entry point.

    maxsum table    [--alphas ...] [--betas ...] [--format csv|json] [--out PATH]
    maxsum verify   [--family ...] [--n 2] [--seed 42] [--size N] [--grid-size M]
    maxsum refute   --n N [--family ...] ...
    maxsum moments  [--family ...] [--n 3]

Exit codes: 0 ran to a verdict, 2 bad input, 3 numerical failure.
"""

import argparse
import json
import logging
import sys

from . import __version__
from . import distengine as de
from . import montecarlo as mc
from . import threshold as th
from .errors import DomainError, NumericalError
from .gengamma import from_name
from .report import DEFAULT_SEED, DEFAULT_SIZE, build_report, moment_report

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

log = logging.getLogger("maxsum")


def _add_family(p):
    p.add_argument("--family", choices=["half-normal", "exponential", "gengamma"],
                   default="half-normal")
    p.add_argument("--scale", type=float, help="a (gengamma only)")
    p.add_argument("--shape", type=float, help="d (gengamma only)")
    p.add_argument("--power", type=float, help="p (gengamma only)")


def _add_run(p, default_n):
    _add_family(p)
    p.add_argument("--n", type=int, default=default_n)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--size", type=int, default=DEFAULT_SIZE)
    p.add_argument("--grid-size", type=int, default=de.DEFAULT_M)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=["json"], default="json")
    p.add_argument("--out", help="write the JSON report here as well as to stdout")
    p.add_argument("--batch-csv", help="export the Monte Carlo batch (two columns)")
    p.add_argument("--dist-csv", help="export the gridded law of S_n (x, pdf, cdf)")


def build_parser():
    parser = argparse.ArgumentParser(prog="maxsum", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("table", help="threshold table N(alpha, beta)")
    t.add_argument("--alphas", type=float, nargs="*", default=list(th.DEFAULT_ALPHAS))
    t.add_argument("--betas", type=float, nargs="*", default=list(th.DEFAULT_BETAS))
    t.add_argument("--format", choices=["csv", "json"], default="csv")
    t.add_argument("--out")
    t.add_argument("--cap", type=int, default=th.DEFAULT_ITERATION_CAP)

    _add_run(sub.add_parser("verify", help="check S_n = C M_n (default: half-normal, n=2)"), 2)
    _add_run(sub.add_parser("refute", help="gather evidence against S_n = C M_n"), 3)

    mo = sub.add_parser("moments", help="second moments of S_n and M_n versus C^2")
    _add_family(mo)
    mo.add_argument("--n", type=int, default=3)
    mo.add_argument("--grid-size", type=int, default=de.DEFAULT_M)
    mo.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_table(args):
    if not args.alphas or not args.betas:
        raise DomainError("--alphas and --betas must be nonempty")
    tab = th.table(args.alphas, args.betas, cap=args.cap)
    _emit(tab.to_csv() if args.format == "csv" else tab.to_json(), args.out)
    return tab


def _params(args):
    return from_name(args.family, args.scale, args.shape, args.power)


def _run(args, min_n):
    params = _params(args)
    if args.n < min_n:
        raise DomainError(f"--n must be >= {min_n}")
    if args.size < 1:
        raise DomainError("--size must be positive")
    rep = build_report(params, args.n, seed=args.seed, size=args.size,
                       grid_size=args.grid_size, workers=args.workers)
    log.info("verdict %s (ks_grid=%.3e, p=%.3e, seed=%d)", rep.verdict.value, rep.ks_grid,
             rep.mc["p_value"], args.seed)
    if args.batch_csv:
        mc.batch(params, args.n, args.size, args.seed, workers=args.workers).to_csv(args.batch_csv)
    if args.dist_csv:
        base = de.discretize(params, m=args.grid_size)
        de.sum_distribution(base, args.n).to_csv(args.dist_csv)
    _emit(rep.to_json(), args.out)
    return rep


def cmd_verify(args):
    return _run(args, 1)


def cmd_refute(args):
    return _run(args, 2)


def cmd_moments(args):
    if args.n < 1:
        raise DomainError("--n must be >= 1")
    rep = moment_report(_params(args), n=args.n, m=args.grid_size)
    if args.format == "json":
        _emit(json.dumps(rep.as_dict(), indent=2), None)
    else:
        lines = [
            f"E[S_{rep.n}^2]      {rep.sum_second_moment:.6f}  (closed form {rep.sum_closed_form:.6f})",
            f"E[M_{rep.n}^2]      {rep.max_second_moment:.6f}",
            f"ratio         {rep.ratio:.6f}",
            f"C^2           {rep.constant_squared:.6f}",
            f"gap           {rep.gap:.6f}",
            f"ratio != C^2  {rep.ratio_differs}",
        ]
        _emit("\n".join(lines), None)
    return rep


COMMANDS = {"table": cmd_table, "verify": cmd_verify, "refute": cmd_refute,
            "moments": cmd_moments}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
