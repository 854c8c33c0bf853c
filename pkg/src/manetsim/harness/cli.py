"""Command-line entry points: `simulate` one scenario, `compare` sender policies."""

from __future__ import annotations

import argparse
import os
import sys

from .experiment import aggregate, compare_policies, emit
from .scenario import Scenario, ScenarioError, load_scenario
from .traffic import run_scenario


def build_parser():
    parser = argparse.ArgumentParser(
        prog="manetsim",
        description="Discrete-event MANET simulator comparing TCP, ADTCP and M-ADTCP")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="run one scenario and emit reports")
    _common_args(simulate)
    simulate.add_argument("--trace", action="store_true",
                          help="write per-run transport trace CSVs")
    simulate.add_argument("--topology-log", action="store_true",
                          help="write per-run node trajectory CSVs")

    compare = sub.add_parser("compare", help="run the scenario once per policy, paired seeds")
    _common_args(compare)
    compare.add_argument("--policies", default="adtcp,madtcp",
                         help="comma-separated policy list (default: adtcp,madtcp)")
    return parser


def _common_args(sub):
    sub.add_argument("--scenario", help="scenario file (omit for the reference scenario)")
    sub.add_argument("--iterations", type=int, default=None,
                     help="independent seeded runs (default: scenario setting)")
    sub.add_argument("--seed", type=int, default=None,
                     help="base seed (default: scenario setting)")
    sub.add_argument("--out", required=True, help="output directory")


def _load(args):
    if args.scenario:
        return load_scenario(args.scenario)
    return Scenario()


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(header + "\n")
        for row in rows:
            handle.write(",".join(str(item) for item in row) + "\n")


def _run_simulate(args):
    scenario = _load(args)
    iterations = args.iterations if args.iterations is not None else scenario.iterations
    base_seed = args.seed if args.seed is not None else scenario.base_seed
    os.makedirs(args.out, exist_ok=True)
    results = []
    for index in range(iterations):
        seed = base_seed + index
        trace = [] if args.trace else None
        topology = [] if args.topology_log else None
        result = run_scenario(scenario, seed, transport_trace=trace, topology_log=topology)
        results.append(result)
        if trace is not None:
            _write_rows(os.path.join(args.out, f"trace-{seed}.csv"),
                        "time,event,seq,cwnd,cwl,rto", trace)
        if topology is not None:
            _write_rows(os.path.join(args.out, f"topology-{seed}.csv"),
                        "time,node,x,y", topology)
    policy = results[0].policy if results else "none"
    report = aggregate({policy: results}, (scenario.window_start, scenario.window_end))
    emit(report, args.out)
    print(f"wrote reports for {len(results)} run(s) to {args.out}")
    return 0


def _run_compare(args):
    scenario = _load(args)
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    if len(policies) < 2:
        raise ScenarioError("--policies: need at least two policies to compare")
    results = compare_policies(scenario, policies,
                               iterations=args.iterations, base_seed=args.seed)
    report = aggregate(results, (scenario.window_start, scenario.window_end))
    emit(report, args.out)
    runs = sum(len(r) for r in results.values())
    print(f"wrote comparison of {', '.join(policies)} ({runs} runs) to {args.out}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _run_simulate(args)
        return _run_compare(args)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
