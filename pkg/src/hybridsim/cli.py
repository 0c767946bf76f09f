"""Command-line entry point: ``hybridsim --preset fig4 --trials 20 --out run.csv``."""

import argparse
import math
import sys
from pathlib import Path

from .errors import ConfigError
from .harness import PRESETS, SCHEMES, DECOMP_SCHEMES, ScenarioConfig, default_seed
from .harness import parse_snr_range, preset, run_scenario

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on its own; raise instead so main() returns
    def error(self, message):
        raise _ArgumentError(message)


def build_parser():
    p = _Parser(prog="hybridsim", description="Hybrid MIMO subspace-estimation Monte Carlo runs.")
    p.add_argument("--preset", help=f"one of: {', '.join(PRESETS)}")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="master seed (default: $HYBRIDSIM_SEED or 0)")
    p.add_argument("--snr", help="SNR sweep in dB, a:b:step inclusive or comma list")
    p.add_argument("--out", help="output file; the CSV summary goes next to it")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--emit-transcripts", action="store_true",
                   help="write per-trial echo transcripts under <out dir>/transcripts/")
    for dim in ("M", "N", "d", "L", "m", "r", "I"):
        p.add_argument(f"--{dim}", type=int, dest=dim)
    p.add_argument("--schemes", help=f"comma list from {', '.join(SCHEMES + DECOMP_SCHEMES)}")
    p.add_argument("--workers", type=int, default=1)
    return p


def config_from_args(args):
    seed = default_seed(args.seed)
    dims = {k: getattr(args, k) for k in ("M", "N", "d", "L", "m", "r", "I")}
    common = dict(trials=args.trials, seed=seed, workers=args.workers,
                  emit_transcripts=args.emit_transcripts)
    if args.snr is not None:
        common["snr_db"] = parse_snr_range(args.snr)
    if args.schemes:
        common["schemes"] = tuple(s.strip() for s in args.schemes.split(",") if s.strip())
    if args.emit_transcripts:
        base = Path(args.out).parent if args.out else Path(".")
        common["transcript_dir"] = str(base / "transcripts")
    if args.preset:
        return preset(args.preset, **dims, **common)
    kw = {k: v for k, v in {**dims, **common}.items() if v is not None}
    return ScenarioConfig(**kw)


def _summary_line(rec):
    snr = rec["snr_db"]
    where = f"snr={snr:g}dB" if not math.isnan(snr) else "decomp"
    dims = f"M={rec['M']} N={rec['N']} d={rec['d']} L={rec['L']} m={rec['m']}"
    parts = [f"{where:>12} {dims} {rec['scheme']:>14} n={rec['n']}"]
    if math.isfinite(rec["rate_bits_mean"]):
        parts.append(f"rate={rec['rate_bits_mean']:.3f}+-{rec['rate_bits_se']:.3f}")
        parts.append(f"opt={rec['opt_rate_bits_mean']:.3f}")
    if math.isfinite(rec["subspace_angle_rad_mean"]):
        parts.append(f"angle={rec['subspace_angle_rad_mean']:.4f}")
    if math.isfinite(rec["decomp_dist_mean"]):
        parts.append(f"dist={rec['decomp_dist_mean']:.4f}")
    return " ".join(parts)


def _fuse_snr(argv):
    # "--snr -20:10:5" would otherwise be read as an unknown flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--snr":
            out.append("--snr=" + next(it, ""))
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = _fuse_snr(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
        config = config_from_args(args)
    except (_ArgumentError, ConfigError, ValueError) as exc:
        print(f"hybridsim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_scenario(config)
        if args.out:
            result.write(args.out, args.format)
    except ConfigError as exc:
        print(f"hybridsim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        print(f"hybridsim: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for rec in result.summary:
        print(_summary_line(rec))
    failed = sum(r.status.startswith("error") for r in result.rows)
    if failed:
        print(f"hybridsim: {failed} of {len(result.rows)} rows recorded errors", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
