"""Command-line entry point: ``koethelab {verify,basis,full} <config>`` and ``koethelab demo``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._version import __version__
from .errors import KoetheError
from .pipeline import DEMO_CONFIG, PipelineConfig, dumps_report, emit_plot_data, run_pipeline

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="koethelab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"koethelab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", type=Path, default=None, help="directory for the report, basis and plot data")
    common.add_argument("--format", choices=("json", "text"), default="json")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "verify": "normalization conditions and dead-end inequalities only",
        "basis": "everything up to basis extraction; exports the basis",
        "full": "the complete pipeline including the cone suite",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("config", type=Path)
    sub.add_parser("demo", parents=[common], help="full pipeline on the built-in demo space and operator")
    return parser


def _write_outputs(out: Path, rep, fmt: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / f"report.{'json' if fmt == 'json' else 'txt'}").write_text(text)
    if rep.basis is not None:
        doc = rep.basis.to_dict()
        doc["config_sha256"] = rep.header["config_sha256"]
        doc["version"] = __version__
        (out / "basis.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    emit_plot_data(rep, out / "plots")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "demo":
            cfg = PipelineConfig.from_dict(DEMO_CONFIG, seed=args.seed)
            command = "full"
        else:
            cfg = PipelineConfig.load(args.config, seed=args.seed)
            command = args.command
        rep = run_pipeline(cfg, command)
    except KoetheError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = dumps_report(rep, args.format)
    sys.stdout.write(text)
    if rep.error is not None:
        err = rep.error
        print(f"error in stage {err['stage']}: {err['type']}: {err['message']}", file=sys.stderr)
        return EXIT_ERROR
    if args.out is not None:
        _write_outputs(args.out, rep, args.format, text)
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
