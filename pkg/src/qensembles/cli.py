"""Command-line front end.

Exit codes: 0 success, 2 invalid arguments, 3 numerical-invariant failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .ensembles import builtin, load_ensemble
from .experiments import (
    clone_report,
    discrimination_report,
    filter_experiment,
    flash_report,
    moments_experiment,
)
from .states import InvariantError

log = logging.getLogger("qensembles")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_output(p: argparse.ArgumentParser, seeded: bool = True) -> None:
    if seeded:
        p.add_argument("--seed", type=int, default=0, help="non-negative RNG seed (default 0)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qensembles",
        description="Experiments on quantum ensembles with equal single-particle operators.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="collective Sigma_z moment tables for two ensembles")
    p.add_argument("--pair", default="E3,E4", help="two built-in names, e.g. E3,E4")
    p.add_argument("--ensemble-file", action="append", default=[], metavar="PATH",
                   help="ensemble JSON file; give twice to replace --pair entirely, once to replace its second entry")
    p.add_argument("--m-max", type=int, default=6)
    p.add_argument("--mc-samples", type=int, default=0)
    p.add_argument("--n-total", type=int, default=12, help="collection size for E5/E6 (default 12)")
    _add_output(p)

    p = sub.add_parser("filter", help="photon counts behind a |0> filter")
    p.add_argument("--ensemble", default="E6", help="E5 or E6 (or any built-in)")
    p.add_argument("--ensemble-file", action="append", default=[], metavar="PATH")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--trials", type=int, default=100000)
    _add_output(p)

    p = sub.add_parser("discriminate", help="success probability of the exact-count test versus N")
    p.add_argument("--n-max", type=int, default=200)
    _add_output(p, seeded=False)

    p = sub.add_parser("flash", help="signaling test with perfect and Buzek-Hillery cloners")
    p.add_argument("--phis", type=_floats, default=[0.2, 0.785, 1.3])
    _add_output(p, seeded=False)

    p = sub.add_parser("clone", help="clone fidelity and shrinking factor")
    p.add_argument("--fidelity", action="store_true", help="accepted for compatibility; always on")
    p.add_argument("--samples", type=int, default=10000)
    _add_output(p)
    return parser


def _run(args: argparse.Namespace):
    if getattr(args, "seed", 0) is not None and getattr(args, "seed", 0) < 0:
        raise UsageError("--seed must be non-negative")
    if args.command == "moments":
        names = [x.strip() for x in args.pair.split(",") if x.strip()]
        if len(names) != 2:
            raise UsageError("--pair needs exactly two names")
        if len(args.ensemble_file) > 2:
            raise UsageError("at most two --ensemble-file options")
        pair = [builtin(n, args.n_total) for n in names]
        files = [load_ensemble(f) for f in args.ensemble_file]
        if len(files) == 2:
            pair = files
        elif len(files) == 1:
            pair[1] = files[0]
        if args.mc_samples < 0:
            raise UsageError("--mc-samples must be >= 0")
        return moments_experiment(pair, args.m_max, args.mc_samples, args.seed)
    if args.command == "filter":
        if len(args.ensemble_file) > 1:
            raise UsageError("filter takes one --ensemble-file")
        e = load_ensemble(args.ensemble_file[0]) if args.ensemble_file else builtin(args.ensemble, args.n)
        return filter_experiment(e, args.n, args.trials, args.seed)
    if args.command == "discriminate":
        return discrimination_report(args.n_max)
    if args.command == "flash":
        return flash_report(args.phis)
    if args.command == "clone":
        if args.samples < 1:
            raise UsageError("--samples must be >= 1")
        return clone_report(args.samples, args.seed)
    raise UsageError(f"unknown command {args.command}")  # pragma: no cover


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report = _run(args)
    except InvariantError as exc:
        log.error("numerical invariant violated: %s", exc)
        return EXIT_NUMERICAL
    except (UsageError, ValueError, KeyError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    text = report.to_json() + "\n" if args.format == "json" else report.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
