"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import config_hash, load_config
from .ensemble import WORKERS_ENV
from .errors import ValidationError
from .pipeline import compare_prediction, format_report, predict, run_pipeline, run_sweep

log = logging.getLogger("bicircular_hhg")


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "out", None):
        cfg = cfg.with_output(args.out)
    return cfg


def cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"ok  {args.config}  config_hash={config_hash(cfg)}")
    return 0


def cmd_run(args) -> int:
    cfg = replace(_load(args), sweep=())
    manifest = run_pipeline(cfg, workers=args.workers)
    print(f"wrote {len(manifest.outputs)} outputs to {cfg.output.directory}")
    for name, digest in sorted(manifest.outputs.items()):
        print(f"  {name}  sha256={digest[:16]}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    summary = run_sweep(cfg, workers=args.workers)
    print(f"wrote {len(summary['points'])} sweep points to {cfg.output.directory}")
    return 0


def cmd_predict(args) -> int:
    cfg = _load(args)
    result = predict(cfg)
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "channels.json").write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_compare(args) -> int:
    report = compare_prediction(args.run_dir)
    print(format_report(report))
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bicircular-hhg",
        description="High-harmonic spectra and photon statistics for bicircular drivers "
                    "with squeezed or thermal fluctuations.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_out=True):
        sp.add_argument("config", help="INI configuration file")
        sp.add_argument("--seed", type=int, help="override ensemble.seed")
        if needs_out:
            sp.add_argument("--out", help="override output.directory")

    sp = sub.add_parser("validate", help="parse and validate a configuration")
    common(sp, needs_out=False)
    sp.set_defaults(func=cmd_validate)

    for name, func, text in (("run", cmd_run, "run one configuration"),
                             ("sweep", cmd_sweep, "run every intensity in sweep.intensities_au")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.add_argument("--workers", type=int,
                        help=f"SFA worker processes (default: ${WORKERS_ENV} or 1)")
        sp.set_defaults(func=func)

    sp = sub.add_parser("predict", help="selection-rule channel predictions only")
    common(sp)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("compare", help="check a run directory against its channel predictions")
    sp.add_argument("run_dir")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # surface module/node context without a traceback
        if args.verbose or os.environ.get("BICIRCULAR_HHG_DEBUG"):
            raise
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
