"""
Command-line entry point: ``python -m irs_parafac <command> ...``.

Commands
--------
run <spec-file>     execute an experiment spec file
check <spec-file>   print the design report of every sweep point
crb M L N K T       print the closed-form CRB for semi-unitary designs
repro <figure-id>   run a built-in spec (fig3 ... fig9)

Exit status: 0 success, 1 infeasible design, 2 I/O error, 64 usage error.
"""

import argparse
import configparser
import io
import json
import sys

from .analysis import check_design, crb_closed_form
from .errors import InfeasibleDesign
from .harness import (BUILTIN, builtin_spec, default_threads, emit_report, load_spec,
                      run_experiment, write_csv)
from .harness.report import format_float, to_structured

EXIT_OK, EXIT_INFEASIBLE, EXIT_IO, EXIT_USAGE = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    p = _Parser(prog="irs_parafac", description="IRS channel estimation experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def run_flags(sp):
        sp.add_argument("--runs", type=_positive, help="Monte Carlo runs per cell")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--threads", type=_positive,
                        help="worker processes (default: $IRS_PARAFAC_THREADS or 1)")
        sp.add_argument("--out", help="output file (default: spec output_path or stdout)")
        sp.add_argument("--force", action="store_true",
                        help="run estimators whose design conditions fail")
        sp.add_argument("--format", choices=("csv", "structured_text"), default="csv")

    sp = sub.add_parser("run", help="execute an experiment spec file")
    sp.add_argument("spec_file")
    run_flags(sp)

    sp = sub.add_parser("check", help="print design conditions for a spec file")
    sp.add_argument("spec_file")

    sp = sub.add_parser("crb", help="closed-form CRB for semi-unitary designs")
    for name in "MLNKT":
        sp.add_argument(name, type=_positive)
    sp.add_argument("--sigma2", type=float, default=1.0, help="noise variance")

    sp = sub.add_parser("repro", help="run a built-in figure setup")
    sp.add_argument("figure_id", choices=sorted(BUILTIN))
    run_flags(sp)
    return p


def _execute(spec, args, out=None):
    out = out or sys.stdout
    if args.runs:
        spec = spec.replace(runs=args.runs)
    if args.seed is not None:
        spec = spec.replace(master_seed=args.seed)
    threads = args.threads or default_threads()
    report = run_experiment(spec, threads=threads, force=args.force)
    path = args.out or spec.output_path
    if path:
        for f in emit_report(report, path, args.format):
            print(f"wrote {f}", file=sys.stderr)
    elif args.format == "csv":
        write_csv(report.cells, out)
    else:
        json.dump(to_structured(report), out, indent=1, sort_keys=True)
        out.write("\n")
    return EXIT_OK


def _check(spec, out=None):
    out = out or sys.stdout
    ok = True
    for key, cfg in spec.sweep_points():
        report = check_design(cfg)
        print(f"[{key}]", file=out)
        print(report.format(), file=out)
        for name in spec.estimators:
            feasible = report.feasible_for(name)
            ok &= feasible or spec.skip_infeasible
            print(f"  {name}: {'feasible' if feasible else 'NOT feasible'}", file=out)
    return EXIT_OK if ok else EXIT_INFEASIBLE


def _crb(args, out=None):
    out = out or sys.stdout
    rep = crb_closed_form(args.sigma2, args.M, args.L, args.N, args.K, args.T)
    buf = io.StringIO()
    buf.write("quantity,value\n")
    buf.write(f"crb_real,{format_float(rep.trace_real)}\n")
    buf.write(f"crb_imag,{format_float(rep.trace_imag)}\n")
    buf.write(f"trace,{format_float(rep.trace_bound)}\n")
    out.write(buf.getvalue())
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "crb":
            return _crb(args)
        if args.command == "repro":
            return _execute(builtin_spec(args.figure_id), args)
        spec = load_spec(args.spec_file)
        if args.command == "check":
            return _check(spec)
        return _execute(spec, args)
    except InfeasibleDesign as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, configparser.Error) as exc:
        # malformed spec files are usage errors
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
