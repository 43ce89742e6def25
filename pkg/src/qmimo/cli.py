"""Command line entry point: BER sweeps and the table/degradation presets.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
I/O failures. ``QMIMO_WORKERS`` overrides the default worker count.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from qmimo import harness

MODULATIONS = {"qpsk": 4, "4qam": 4, "4": 4, "16qam": 16, "16": 16, "64qam": 64, "64": 64}
QUANTIZERS = {"lloyd": "lloyd_max", "lloyd_max": "lloyd_max", "uniform": "uniform", "none": "none"}

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_help()}")


def parse_snr_grid(text: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma-separated list of dB values."""
    try:
        if ":" in text:
            start, step, stop = (float(t) for t in text.split(":"))
            if step == 0 or (stop - start) / step < 0:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(n)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad --snr value {text!r}; use start:step:stop or a comma list") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmimo", description=__doc__.splitlines()[0])
    p.add_argument("--preset", choices=["table2", "degradation"], help="run a canned experiment")
    p.add_argument("--mod", default="qpsk", help="qpsk, 16qam or 64qam")
    p.add_argument("--bits", default=None, help="ADC resolution 1..8 or 'inf'")
    p.add_argument("--quantizer", default=None, help="lloyd, uniform or none")
    p.add_argument("--antennas", type=int, default=100, help="BS antennas N")
    p.add_argument("--users", type=int, default=10, help="single-antenna users K")
    p.add_argument("--snr", default="-10:2:10", help="Eb/N0 grid in dB, start:step:stop or a,b,c")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--symbols", type=int, default=100, help="symbol vectors per channel draw")
    p.add_argument("--min-errors", type=int, default=500, help="stop a point after this many bit errors")
    p.add_argument("--max-bits", type=float, default=1e9, help="bit budget per point")
    p.add_argument("--agc", choices=harness.AGC_MODES, default="antenna", help="ADC input scaling")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: $QMIMO_WORKERS or CPU count)")
    p.add_argument("--analytical-only", action="store_true", help="table2 preset: skip Monte Carlo")
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> harness.SimConfig:
    mod = MODULATIONS.get(str(args.mod).lower())
    if mod is None:
        raise UsageError(f"unknown --mod {args.mod!r}; choose from qpsk, 16qam, 64qam")
    kind = None
    if args.quantizer is not None:
        kind = QUANTIZERS.get(args.quantizer.lower())
        if kind is None:
            raise UsageError(f"unknown --quantizer {args.quantizer!r}; choose lloyd, uniform or none")
    try:
        bits = harness._parse_bits(args.bits) if args.bits is not None else None
    except ValueError:
        raise UsageError(f"bad --bits {args.bits!r}") from None
    if bits is None:
        bits = math.inf if kind in (None, "none") else 2
    if kind is None:
        kind = "none" if math.isinf(bits) else "lloyd_max"
    try:
        return harness.SimConfig(
            M=mod, N=args.antennas, K=args.users, b=bits, quantizer_kind=kind,
            snr_grid=tuple(parse_snr_grid(args.snr)), symbols_per_channel=args.symbols,
            min_bit_errors=args.min_errors, max_bits=int(args.max_bits),
            master_seed=args.seed, agc_mode=args.agc,
        )
    except harness.ConfigError as exc:
        raise UsageError(str(exc)) from None


def _run_sweep(args) -> None:
    cfg = config_from_args(args)
    curve = harness.run_ber_sweep(cfg, args.workers)
    if args.out:
        harness.emit_csv(curve, args.out)
        harness.emit_plot_stub(args.out)
    print(f"{'EbN0[dB]':>9} {'errors':>8} {'bits':>12} {'BER sim':>10} {'BER full':>10} {'BER 2-term':>10}")
    for pt in curve.points:
        print(
            f"{pt.snr_db_per_bit:9.2f} {pt.bit_errors:8d} {pt.bits_sent:12d} "
            f"{pt.ber_numerical:10.3e} {pt.ber_analytical_full:10.3e} {pt.ber_analytical_twoterm:10.3e}"
        )


def _run_table2(args) -> None:
    cells = harness.preset_table2(
        simulate=not args.analytical_only, min_bit_errors=args.min_errors,
        max_bits=int(min(args.max_bits, 1e8)), seed=args.seed, workers=args.workers,
    )
    sys.stdout.write(harness.format_table2(cells))
    if args.out:
        harness.emit_table2_csv(cells, args.out)


def _run_degradation(args) -> None:
    rows = harness.preset_degradation()
    for r in rows:
        deg = "unreachable" if r.degradation_db is None else f"{r.degradation_db:6.2f} dB"
        print(f"M={r.M:<3} N={r.N:<4} K={r.K:<3} b={r.b}  {deg}")
    if args.out:
        harness.emit_degradation_csv(rows, args.out)


def _join_snr(argv: list[str]) -> list[str]:
    # argparse would read a negative grid such as "-10:2:0" as an option flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--snr":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--snr={nxt}")
        else:
            out.append(tok)
    return out


def cli_main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_join_snr(argv))
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        if args.preset == "table2":
            _run_table2(args)
        elif args.preset == "degradation":
            _run_degradation(args)
        else:
            _run_sweep(args)
    except UsageError as exc:
        print(f"qmimo: {exc}", file=sys.stderr)
        if "usage:" not in str(exc):
            print(parser.format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    except (harness.IoFailure, OSError) as exc:
        print(f"qmimo: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> int:
    return cli_main(sys.argv[1:])
