"""
Console renderings of checker verdicts, state-space statistics, estimates
and simulation traces.

Machine-readable output is the ``to_dict`` form of each result; this module
only produces the human-readable side.
"""

from typing import List, Optional, Sequence

from .engine.base import Scenario, Trace, Transition
from .engine.checker import Path, StateSpaceStats, Verdict
from .engine.simulator import Estimate

WIDTH = 60


def _banner(title: str) -> List[str]:
    return ["", "=" * WIDTH, f"  {title}", "=" * WIDTH]


def render_path(scenario: Scenario, path: Path) -> List[str]:
    """Numbered states with the step labels between them; lassos show where they loop back."""
    lines = []
    for i, state in enumerate(path.states):
        marker = "  <- cycle starts" if path.loop_to == i else ""
        lines.append(f"  [{i}]{marker}")
        lines.extend(f"      {part}" for part in scenario.describe_parts(state))
        if i < len(path.labels):
            lines.append(f"    -- {path.labels[i]} -->")
    if path.is_lasso:
        lines.append(f"    -- {path.loop_label} --> back to [{path.loop_to}]")
    if path.deadlock:
        lines.append("    (deadlock: no transition enabled)")
    return lines


def render_verdict(verdict: Verdict, scenario: Scenario, show_witness: bool = True) -> str:
    lines = _banner(f"CHECK {verdict.formula} on {scenario.name}")
    lines.append(f"  Result: {verdict.status.value.upper()}")
    lines.append(f"  States explored: {verdict.explored}")
    lines.append(f"  Transitions: {verdict.transitions}")
    if verdict.witness is not None:
        kind = verdict.witness_kind
        shape = "lasso" if verdict.witness.is_lasso else ("deadlock path" if verdict.witness.deadlock else "path")
        lines.append(f"  Witness: {kind}, {shape} of {len(verdict.witness.states)} states")
        if show_witness:
            lines.append("")
            lines.extend(render_path(scenario, verdict.witness))
    lines.append("=" * WIDTH)
    return "\n".join(lines)


def render_stats(stats: StateSpaceStats, scenario: Scenario) -> str:
    lines = _banner(f"STATE SPACE of {scenario.name}")
    lines.extend([
        f"  Reachable states: {stats.states}",
        f"  Transitions: {stats.transitions}",
        f"  Diameter: {stats.diameter}",
    ])
    if not stats.complete:
        lines.append("  [!] Budget exhausted: counts are partial")
    lines.append("=" * WIDTH)
    return "\n".join(lines)


def render_estimate(result: Estimate, scenario: Scenario) -> str:
    lines = _banner(f"ESTIMATE {result.proposition} on {scenario.name}")
    lines.extend([
        f"  Runs: {result.runs} (family seed {result.seed}, horizon {result.max_ticks} ticks)",
        f"  Reached: {result.hits} ({result.fraction:.1%})",
    ])
    if result.mean_ticks is not None:
        lines.append(f"  Mean ticks to reach: {result.mean_ticks:.1f}")
    lines.append("=" * WIDTH)
    return "\n".join(lines)


def render_trace_summary(trace: Trace, output: Optional[str] = None) -> str:
    ending = "deadlock" if trace.deadlocked else (f"stopped by {trace.stopped_by}" if trace.stopped_by else "tick limit")
    lines = [
        f"    - Ticks: {len(trace)}",
        f"    - Ended by: {ending}",
        f"    - Initial state digest: {trace.initial}",
    ]
    if output:
        lines.append(f"    - Trace written to {output}")
    return "\n".join(lines)


def render_choices(scenario: Scenario, state, options: Sequence[Transition]) -> str:
    """The current state and its numbered enabled transitions, for interactive stepping."""
    lines = ["", "  State:"]
    lines.extend(f"    {part}" for part in scenario.describe_parts(state))
    if scenario.propositions:
        holding = [name for name, fn in sorted(scenario.propositions.items()) if fn(state)]
        lines.append(f"  Holding: {', '.join(holding) if holding else '-'}")
    if not options:
        lines.append("  [!] Deadlock: no transition enabled")
    for index, option in enumerate(options):
        lines.append(f"  {index:>3}) {option.label}")
    return "\n".join(lines)
