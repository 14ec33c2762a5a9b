"""Command-line entry point: ``mcf-cvqkd {simulate,keyrate,calibrate,figures}``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import ScenarioConfig, load_config
from .errors import ConfigError, CvqkdError
from .runner import FIGURES, emit_figure_data, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

_SUBCOMMAND_MODE = {
    "simulate": "simulate",
    "figures": "simulate",
    "keyrate": "keyrate_only",
    "calibrate": "calibrate",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcf-cvqkd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "end-to-end Monte Carlo: per-block estimates and key rates"),
        ("keyrate", "key rates straight from the configured (T, eps) per core"),
        ("calibrate", "shot-noise / electronic-noise calibration per core"),
        ("figures", "simulate, then write phase-space, correlation and time-series data"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="scenario file (.toml or .json)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--fidelity", choices=("symbol", "waveform"), help="override simulation fidelity")
        p.add_argument("--workers", type=int, help="worker processes for simulate")
        if name == "figures":
            p.add_argument("--which", choices=FIGURES, action="append", help="figure(s) to emit; default all")
    return parser


def _apply_overrides(config: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    changes = {"mode": _SUBCOMMAND_MODE[args.command]}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = args.out
    if args.fidelity is not None:
        changes["fidelity"] = args.fidelity
    if args.workers is not None:
        changes["workers"] = args.workers
    return replace(config, **changes)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report = run_scenario(config, out_dir=config.output_dir)
        if args.command == "figures":
            for which in args.which or FIGURES:
                emit_figure_data(report, which, config.output_dir)
    except CvqkdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    if config.mode == "simulate" and config.n_blocks > 0 and not report.per_block:
        print("error: every block failed", file=sys.stderr)
        return EXIT_RUNTIME

    for s in report.per_core_summary:
        if s.skr is not None:
            print(f"core {s.core_id}: eps={s.eps * 1e3:.2f} mSNU  T={s.t_hat:.4f}  SKR={s.skr / 1e6:.4f} Mb/s")
    for cid, cal in report.calibrations.items():
        print(f"core {cid}: v_elec={cal.v_elec_snu * 1e3:.2f} mSNU  clearance={cal.clearance_db:.2f} dB")
    if config.mode != "calibrate":
        print(f"aggregate SKR: {report.aggregate_skr / 1e6:.4f} Mb/s")
    print(f"outputs written to {config.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
