"""Command line entry point: ``specstab <command> [--config FILE] [--out DIR] ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .runner import EmptyReportError, emit_plot_data, load_report, run

COMMANDS = {
    "spectrum": ("spectrum", "spectrum of a Bloch model or a truncated symbol"),
    "sweep": ("sweep", "symbol pipeline delta-sweep: Hausdorff distance and edges"),
    "dirac": ("dirac", "first gap above zero as the flux leaves 1/2"),
    "hausdorff": ("hausdorff-sweep", "Hausdorff distance of Bloch spectra along a flux sweep"),
    "edges": ("edge-sweep", "spectral edge deviations along a flux sweep"),
    "gaptrack": ("gap-track", "interior gap-edge tracking along a flux sweep"),
    "equiv": ("equivalence", "symbol pipeline vs Bloch model at matching flux"),
    "proptest": ("property-suite", "randomized invariant checks"),
}

# used when a command runs without --config
DEFAULTS = {
    "spectrum": dict(base_flux="1/2", bloch=(128, 128)),
    "sweep": dict(
        symbol="cos(xi1) + cos(x1)",
        dim=1,
        field="sin(x1)",
        deltas=("1/1000", "3/1000", "1/100", "3/100", "1/10"),
        window=1500,
        fibers=16,
    ),
    "dirac": dict(deltas=("1/32", "1/48", "1/64", "1/96", "1/128")),
    "hausdorff-sweep": dict(deltas=("1/32", "1/48", "1/64", "1/96", "1/128")),
    "edge-sweep": dict(deltas=("1/32", "1/48", "1/64", "1/96", "1/128")),
    "gap-track": dict(base_flux="1/3", deltas=("1/48", "1/96", "1/192"), gap_energy=1.0),
    "equivalence": dict(deltas=("-1/3", "0", "1/32")),
    "property-suite": {},
}


def default_config(kind: str) -> ExperimentConfig:
    from .config import parse_number

    kw = dict(DEFAULTS[kind])
    for key in ("base_flux",):
        if key in kw:
            kw[key] = parse_number(kw[key])
    if "deltas" in kw:
        kw["deltas"] = tuple(parse_number(d) for d in kw["deltas"])
    return ExperimentConfig(kind=kind, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specstab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="experiment INI file (default: built-in settings)")
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory [results]")
        p.add_argument("--workers", type=int, default=1, help="worker threads; never changes output bytes [1]")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized suites (overrides the config)")
        p.add_argument("--no-figure", action="store_true", help="skip the PNG figure")
    p = sub.add_parser("plotdata", help="plot-ready columns from a JSON report")
    p.add_argument("report", type=Path)
    p.add_argument("--style", choices=("loglog", "linear"), default="loglog")
    p.add_argument("--metric", default=None, help="report column to plot (default depends on the kind)")
    p.add_argument("-o", "--output", type=Path, default=None, help="write here instead of stdout")
    return parser


def _run_command(args) -> int:
    kind = COMMANDS[args.command][0]
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, kind) if args.config else default_config(kind)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
    except ConfigError as exc:
        print(f"config error in {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = run(cfg, args.out, workers=args.workers, figure=not args.no_figure)
    summary = result.report["summary"]
    for key in sorted(summary):
        if not isinstance(summary[key], (list, dict)):
            print(f"{key}: {summary[key]}")
    for name, fit in sorted(result.report["fits"].items()):
        print(f"fit {name}: exponent {fit['exponent']:.4f}, constant {fit['constant']:.4g}, r2 {fit['r2']:.4f}")
    for f in result.report["failures"]:
        print(f"failure: {f}", file=sys.stderr)
    print(f"wrote {result.paths['json']}")
    return result.status


def _plotdata(args) -> int:
    try:
        text = emit_plot_data(load_report(args.report), args.style, args.metric)
    except (OSError, ValueError, EmptyReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.output:
        args.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "plotdata":
        return _plotdata(args)
    return _run_command(args)


if __name__ == "__main__":
    sys.exit(main())
