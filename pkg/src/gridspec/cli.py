"""Command-line entry point.

Subcommands::

    gridspec verify   --config FILE [--mode analytic|simulate] [--out DIR] [--grid HZ,HZ,...]
    gridspec identify --config FILE [--out DIR] [--grid ...]
    gridspec analyze  --config FILE [--out DIR] [--grid ...]

Exit codes: 0 all checks pass, 1 a check fails, 2 a check is not applicable,
3 configuration or runtime error.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import pipeline
from .config import load_config
from .errors import ConfigError, GridSpecError
from .io import write_verdicts


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridspec", description="Frequency-domain interoperability checks for converter-interfaced devices.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="key=value configuration file")
        sp.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        sp.add_argument("--grid", default=None, help="comma-separated perturbation frequencies in Hz")

    v = sub.add_parser("verify", help="run the configured pipeline and all requested checks")
    common(v)
    v.add_argument("--mode", choices=("analytic", "simulate"), default=None)
    common(sub.add_parser("identify", help="simulate the probing sweep and export the identified model"))
    common(sub.add_parser("analyze", help="evaluate the analytic device model and checks"))
    return p


def _error(msg: str, out_dir=None, digest: Optional[str] = None) -> int:
    print(f"gridspec: error: {msg}", file=sys.stderr)
    if out_dir is not None:
        try:
            items = {"config.digest": digest or "", "error": msg, "exit_code": pipeline.EXIT_ERROR}
            write_verdicts(items, out_dir / "verdicts.txt")
        except GridSpecError:
            pass
    return pipeline.EXIT_ERROR


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    mode = getattr(args, "mode", None)
    if args.command == "analyze":
        mode = "analytic"
    elif args.command == "identify":
        mode = "simulate"
    try:
        cfg = load_config(args.config, mode_override=mode, out_override=args.out, grid_override=args.grid)
    except ConfigError as exc:
        return _error(str(exc))
    try:
        if args.command == "identify":
            res = pipeline.run_identify(cfg)
            pipeline.export(res, cfg.out_dir, verdicts=False)
            print(f"identified {len(res.frm)} frequencies -> {cfg.out_dir / 'frf.csv'}")
            return pipeline.EXIT_PASS
        res = pipeline.run(cfg)
        pipeline.export(res, cfg.out_dir)
    except GridSpecError as exc:
        return _error(str(exc), cfg.out_dir, cfg.digest)
    for name, o in res.bundle.outcomes.items():
        print(f"{name}: {o.status}{' (' + o.detail + ')' if o.detail else ''}")
    return res.bundle.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
