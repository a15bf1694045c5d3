"""Command-line harness: encode/decode experiments emitting CSV + figures.

Subcommands: ``feasibility``, ``freq-sweep``, ``noise-sweep``,
``quant-sweep``, ``baseline-uniform``.  Exit codes: 0 success, 2 config
validation failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from . import experiments as exp
from .errors import BptemError, ConfigError


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="INI config file (defaults used when omitted)")
    parser.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (default results/<command>)")
    parser.add_argument("--full", action="store_true",
                        help="run the full-resolution axes instead of the "
                             "desk-scale defaults")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the base seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for sweep cells")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bptem",
        description="Time-encoding sampling of bandpass signals with "
                    "alternating-projection and pseudoinverse decoders.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("feasibility", "encode/decode the reference waveform with the "
                            "bandpass and bandlimited schemes"),
            ("freq-sweep", "SNDR versus center frequency per threshold"),
            ("noise-sweep", "SNDR versus input SNR for white and in-band "
                            "noise"),
            ("quant-sweep", "SNDR versus firing-time quantization bits"),
            ("baseline-uniform", "classical uniform bandpass-sampling "
                                 "comparator")):
        _add_common(sub.add_parser(name, help=help_text))
    return parser


_RUNNERS = {
    "feasibility": lambda cfg, args: exp.run_feasibility(
        cfg, args.out, figures=not args.no_figures),
    "freq-sweep": lambda cfg, args: exp.run_freq_sweep(
        cfg, args.out, full=args.full, threads=args.threads,
        figures=not args.no_figures),
    "noise-sweep": lambda cfg, args: exp.run_noise_sweep(
        cfg, args.out, full=args.full, threads=args.threads,
        figures=not args.no_figures),
    "quant-sweep": lambda cfg, args: exp.run_quant_sweep(
        cfg, args.out, full=args.full, threads=args.threads,
        figures=not args.no_figures),
    "baseline-uniform": lambda cfg, args: exp.run_baseline_uniform(
        cfg, args.out, full=args.full, threads=args.threads,
        figures=not args.no_figures),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.out is None:
        args.out = f"results/{args.command}"
    try:
        cfg = exp.load_config(args.config, seed=args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        result = _RUNNERS[args.command](cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except BptemError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    count = len(result) if hasattr(result, "__len__") else 1
    print(f"{args.command}: wrote {count} result rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
