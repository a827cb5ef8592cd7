"""Command-line entry point: ``grauert-lab <kind> [options]``."""

from __future__ import annotations

import argparse
import sys

from . import lab_harness as lh


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="grauert-lab",
        description="Run one experiment on the flat-torus Grauert tube and report pass/fail checks.",
    )
    p.add_argument("kind", choices=lh.EXPERIMENT_KINDS)
    p.add_argument("--config", help="key = value config file, or builtin:<name> "
                   f"({', '.join(sorted(lh.BUILTIN_CONFIGS))})")
    p.add_argument("--out", help="output file (default: $%s/<kind>.<ext> if set, else none)" % lh.OUTDIR_ENV)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--plot-data", action="store_true", help="write (series, x, y) rows instead of the report")
    p.add_argument("--threads", type=int, help="worker threads for lattice sums")
    p.add_argument("--seed", type=int, help="seed for random sample generation")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in JSON output")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("-q", "--quiet", action="store_true", help="print only the final verdict")
    return p


def _overrides(args) -> dict:
    ov = {}
    for item in args.set:
        if "=" not in item:
            raise lh.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        ov.update(lh.parse_config_text(item, "--set"))
    if args.threads is not None:
        ov["threads"] = args.threads
    if args.seed is not None:
        ov["seed"] = args.seed
    return ov


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = lh.load_config(args.config, _overrides(args))
        rep = lh.run_experiment(cfg, args.kind)
        fmt = "plot" if args.plot_data else args.format
        path = lh.emit_report(rep, fmt, args.out, timing=args.timing)
    except (lh.ConfigError, lh.ExperimentError, OSError) as exc:
        print(f"grauert-lab: error: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        for line in rep.summary_lines():
            print(line)
    n_fail = sum(not c.passed for c in rep.checks)
    verdict = "PASS" if n_fail == 0 else f"FAIL ({n_fail} of {len(rep.checks)} checks)"
    print(f"{args.kind}: {verdict}  [{rep.wall_clock:.2f} s]")
    if path is not None:
        print(f"wrote {path}")
    return 0 if n_fail == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
