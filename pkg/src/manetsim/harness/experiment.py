"""Multi-iteration experiments, windowed aggregation and report emission."""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from statistics import fmean, pstdev

from .scenario import ScenarioError
from .traffic import SUMMARY_METRICS, run_scenario

# Direction each figure improves in: -1 means lower is better.
METRIC_DIRECTION = {
    "inter_arrival_delay": -1,
    "idd": -1,
    "por": -1,
    "stt": +1,
}


def run_experiment(scenario, iterations=None, base_seed=None, policy_override=None):
    """Run the scenario once per iteration with seeds base_seed + index.

    Runs that raise are recorded with their seed and excluded, with a warning;
    the remaining results are returned in seed order.
    """
    iterations = scenario.iterations if iterations is None else iterations
    base_seed = scenario.base_seed if base_seed is None else base_seed
    if iterations < 1:
        raise ScenarioError(f"iterations: must be at least 1, got {iterations}")
    results = []
    for index in range(iterations):
        seed = base_seed + index
        try:
            results.append(run_scenario(scenario, seed, policy_override=policy_override))
        except Exception as exc:  # noqa: BLE001 - one bad seed must not sink the batch
            warnings.warn(f"run with seed {seed} failed and was excluded: {exc}",
                          stacklevel=2)
    return results


def compare_policies(scenario, policies, iterations=None, base_seed=None):
    """Run the same seeds once per policy; returns {policy: [RunResult, ...]}."""
    results = {}
    for policy in policies:
        results[policy] = run_experiment(scenario, iterations=iterations,
                                         base_seed=base_seed, policy_override=policy)
    return results


def sign_test(wins, losses):
    """One-sided exact sign test: P[X >= wins] for X ~ Binomial(wins+losses, 1/2)."""
    n = wins + losses
    if n == 0:
        return 1.0
    total = sum(math.comb(n, k) for k in range(wins, n + 1))
    return total / 2.0 ** n


@dataclass
class PolicyAggregate:
    policy: str
    stats: dict  # metric -> (mean, sd, n)


@dataclass
class PairedComparison:
    policy_a: str
    policy_b: str
    metric: str
    n_pairs: int
    b_better: int
    a_better: int
    p_value: float  # one-sided, H1: policy_b better


@dataclass
class ComparisonReport:
    window: tuple
    aggregates: list = field(default_factory=list)
    comparisons: list = field(default_factory=list)
    results: dict = field(default_factory=dict)  # policy -> [RunResult]


def aggregate(results_by_policy, window):
    """Windowed per-policy means/sds plus paired per-seed sign tests."""
    window_start, window_end = window
    if not window_start < window_end:
        raise ScenarioError(f"empty measurement window [{window_start}, {window_end})")
    if not results_by_policy or not any(results_by_policy.values()):
        raise ScenarioError("no results to aggregate")

    summaries = {}
    for policy, results in results_by_policy.items():
        summaries[policy] = {
            run.seed: run.window_summary(window_start, window_end)
            for run in results if not run.failed
        }

    report = ComparisonReport(window=(window_start, window_end),
                              results=dict(results_by_policy))
    for policy in results_by_policy:
        stats = {}
        for metric in SUMMARY_METRICS:
            values = [s[metric] for s in summaries[policy].values()
                      if s[metric] is not None]
            if values:
                stats[metric] = (fmean(values), pstdev(values), len(values))
            else:
                stats[metric] = (None, None, 0)
        report.aggregates.append(PolicyAggregate(policy, stats))

    policies = list(results_by_policy)
    for i, policy_a in enumerate(policies):
        for policy_b in policies[i + 1:]:
            for metric in SUMMARY_METRICS:
                direction = METRIC_DIRECTION[metric]
                b_better = a_better = 0
                shared = sorted(set(summaries[policy_a]) & set(summaries[policy_b]))
                for seed in shared:
                    va = summaries[policy_a][seed][metric]
                    vb = summaries[policy_b][seed][metric]
                    if va is None or vb is None or va == vb:
                        continue
                    if (vb - va) * direction > 0:
                        b_better += 1
                    else:
                        a_better += 1
                report.comparisons.append(PairedComparison(
                    policy_a, policy_b, metric, len(shared),
                    b_better, a_better, sign_test(b_better, a_better)))
    return report


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def emit(report, outdir, formats=("csv", "text")):
    """Write summary.csv / intervals.csv (csv) and report.txt (text).

    Output bytes depend only on the report contents, so identical runs emit
    identical files.  Returns the list of paths written.
    """
    if not report.aggregates:
        raise ScenarioError("nothing to emit: report is empty")
    os.makedirs(outdir, exist_ok=True)
    written = []
    if "csv" in formats:
        written.append(_write_summary(report, os.path.join(outdir, "summary.csv")))
        written.append(_write_intervals(report, os.path.join(outdir, "intervals.csv")))
    if "text" in formats:
        written.append(_write_report(report, os.path.join(outdir, "report.txt")))
    return written


def _write_summary(report, path):
    lines = ["policy,metric,mean,sd,n"]
    for agg in report.aggregates:
        for metric in SUMMARY_METRICS:
            mean, sd, n = agg.stats[metric]
            lines.append(f"{agg.policy},{metric},{_fmt(mean)},{_fmt(sd)},{n}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    return path


def _write_intervals(report, path):
    lines = ["policy,seed,flow,t_start,idd,stt,por,plr,state"]
    for policy, results in report.results.items():
        for run in results:
            for sample, state in run.intervals:
                lines.append(
                    f"{policy},{run.seed},ftp,{_fmt(sample.t_start)},{_fmt(sample.idd)},"
                    f"{_fmt(sample.stt)},{_fmt(sample.por)},{_fmt(sample.plr)},{state.value}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    return path


def _write_report(report, path):
    window_start, window_end = report.window
    lines = [
        "Policy comparison over the measurement window "
        f"[{_fmt(window_start)} s, {_fmt(window_end)} s)",
        "",
        f"{'policy':<10} {'metric':<20} {'mean':>14} {'sd':>14} {'n':>4}",
    ]
    for agg in report.aggregates:
        for metric in SUMMARY_METRICS:
            mean, sd, n = agg.stats[metric]
            lines.append(f"{agg.policy:<10} {metric:<20} "
                         f"{_fmt(mean):>14} {_fmt(sd):>14} {n:>4}")
    if report.comparisons:
        lines.append("")
        lines.append("Paired per-seed sign tests (one-sided):")
        for cmp in report.comparisons:
            better = "lower" if METRIC_DIRECTION[cmp.metric] < 0 else "higher"
            lines.append(
                f"  {cmp.metric}: {cmp.policy_b} {better} than {cmp.policy_a} "
                f"on {cmp.b_better}/{cmp.b_better + cmp.a_better} decisive pairs "
                f"(of {cmp.n_pairs}), p={_fmt(cmp.p_value)}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    return path
