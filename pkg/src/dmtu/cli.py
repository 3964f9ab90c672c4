"""Command line entry point: ``dmtu {simulate,compare,figures,table1}``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import harness
from .analytic import PositionMode
from .model import ValidationError
from .protocols import ProtocolError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SIMULATION = 2
EXIT_MISMATCH = 3


def _simulate(args) -> int:
    s = harness.load_scenario(args.scenario)
    report = harness.run_scenario(s)
    row = harness.report_row(s, report)
    if args.out:
        harness.write_csv([row], args.out)
    else:
        sys.stdout.write(harness.csv_text([row]))
    return EXIT_OK


def _compare(args) -> int:
    s = harness.load_scenario(args.scenario)
    cmp = harness.run_compare(s)
    print(f"scenario: {s.label or args.scenario}")
    print(f"simulated: {cmp.report.total_time!r}")
    if not cmp.representable:
        print("analytic: n/a (drop pattern has no closed form)")
        return EXIT_OK
    print(f"analytic:  {cmp.analytic.value!r} ({cmp.analytic.formula.value})")
    print(f"diff:      {cmp.diff!r}")
    if not cmp.within(harness.COMPARE_TOLERANCE):
        print(f"mismatch beyond {harness.COMPARE_TOLERANCE}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def _figures(args) -> int:
    spec = harness.SweepSpec(n_range=(1, args.n_max), packet_size=args.packet_size,
                             position_mode=PositionMode(args.mode))
    harness.write_csv(harness.emit_figure_data(spec, args.fig), args.out)
    return EXIT_OK


def _table1(args) -> int:
    harness.write_csv(harness.emit_table1(), args.out, harness.TABLE1_NOTE)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmtu", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario through the simulator")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--out", help="CSV file (default: stdout)")
    sim.set_defaults(func=_simulate)

    cmp = sub.add_parser("compare", help="simulate and check against the closed form")
    cmp.add_argument("--scenario", required=True)
    cmp.set_defaults(func=_compare)

    fig = sub.add_parser("figures", help="sweep data for the delay/throughput/latency/probability plots")
    fig.add_argument("--fig", required=True, choices=[f.value for f in harness.Figure])
    fig.add_argument("--n-max", required=True, type=int)
    fig.add_argument("--packet-size", type=int, default=1300)
    fig.add_argument("--mode", choices=[m.value for m in PositionMode], default="min")
    fig.add_argument("--out", required=True)
    fig.set_defaults(func=_figures)

    t1 = sub.add_parser("table1", help="success probability at the tabulated node counts")
    t1.add_argument("--out", required=True)
    t1.set_defaults(func=_table1)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ProtocolError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
