"""
Command-line front end.

Subcommands:
    sim       run one seeded simulation and write its trace
    check     check a formula; the verdict (and witness) goes to --output
    estimate  Monte Carlo estimate of how often a proposition is reached
    parse     parse and validate an ISPL description
    stats     exhaustive state-space statistics
    step      choose transitions interactively

Exit status: 0 success or Holds, 1 property Fails, 2 usage or config
error, 3 resource limit.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

from .config import Invocation, load_run_file, log_level
from .engine.base import InterpretedScenario, Scenario
from .engine.checker import Status, check, state_space_stats
from .engine.simulator import estimate, make_rng, simulate
from .errors import ISPLError, ISPLSyntaxError, ScenarioConfigError, SwarmError
from .interp.model import dump
from .interp.parser import format_ispl, parse_with_diagnostics
from .report import render_choices, render_estimate, render_stats, render_trace_summary, render_verdict
from .scenarios import build_scenario
from .scenarios.flocking import flocking_ispl_text
from .scenarios.foraging import foraging_ispl_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILS = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3

SUBCOMMANDS = ("sim", "check", "estimate", "parse", "stats", "step")


class UsageError(SwarmError):
    """Invalid command-line usage."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmcoord",
        description="Swarm coordination kernel: simulate, check and estimate coordination scenarios",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    python main.py check --config configs/flocking_ispl_2robots.json
    python main.py sim --config configs/flocking_voter.json --seed 7 --output trace.jsonl
    python main.py estimate --config configs/flocking_voter.json --runs 200
    python main.py parse --ispl models/flocking_2robots.ispl
    python main.py check --set scenario.scenario=foraging_scel --formula "AG !double_found"

Environment:
    SWARMCOORD_STATE_BUDGET, SWARMCOORD_WORKERS, SWARMCOORD_LOG_LEVEL
        """
    )
    parser.add_argument('subcommand', choices=SUBCOMMANDS, help='What to do')
    parser.add_argument('--config', help='JSON run file ({"scenario": {...}, "run": {...}})')
    parser.add_argument(
        '--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
        help='Override a config key, e.g. scenario.arena.width=4 (repeatable)'
    )
    parser.add_argument('--ispl', help='ISPL file to run (selects the "ispl" scenario)')
    parser.add_argument('--seed', type=int, help='Run seed (default 0)')
    parser.add_argument('--max-ticks', type=int, help='Simulation horizon in ticks')
    parser.add_argument('--runs', type=int, help='Number of runs for estimate')
    parser.add_argument('--budget', type=int, help='Checker state budget')
    parser.add_argument('--workers', type=int, help='Checker worker processes for large frontiers')
    parser.add_argument('--formula', help='Formula to check, e.g. "AF consensus"')
    parser.add_argument('--proposition', help='Proposition for estimate (or to stop a simulation)')
    parser.add_argument('--output', help='Trace, verdict or pretty-printed ISPL output path')
    parser.add_argument('--witness', action='store_true', help='Print the witness path of a verdict')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    return parser


_FLAG_KEYS = (
    ('seed', 'run.seed'),
    ('max_ticks', 'run.max_ticks'),
    ('runs', 'run.runs'),
    ('budget', 'run.budget'),
    ('workers', 'run.workers'),
    ('formula', 'run.formula'),
    ('proposition', 'run.proposition'),
    ('output', 'run.output'),
)


def invocation_from_args(args: argparse.Namespace) -> Invocation:
    """
    Merge a run file, --set overrides and flags, in increasing priority.

    Raises:
        ScenarioConfigError: on unreadable files, unknown keys or bad values
    """
    overrides: List[str] = list(args.overrides)
    if args.ispl:
        overrides += ["scenario.scenario=ispl", f"scenario.ispl_path={json.dumps(args.ispl)}"]
    for attr_name, key in _FLAG_KEYS:
        value = getattr(args, attr_name)
        if value is not None:
            overrides.append(f"{key}={json.dumps(value)}")
    run_file = load_run_file(args.config, overrides)
    return Invocation(
        subcommand=args.subcommand,
        config_path=args.config,
        overrides=overrides,
        scenario=run_file.scenario,
        run=run_file.run,
    )


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def _default_formula(scenario: Scenario) -> str:
    if isinstance(scenario, InterpretedScenario) and scenario.system.spec.formulae:
        return str(scenario.system.spec.formulae[0])
    raise UsageError("no formula given (use --formula or run.formula)")


def _ispl_text(invocation: Invocation) -> str:
    cfg = invocation.scenario
    if cfg.scenario == "ispl":
        try:
            return Path(cfg.ispl_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ScenarioConfigError(f"cannot read {cfg.ispl_path}: {exc}") from None
    if cfg.scenario == "foraging_ispl":
        return foraging_ispl_text(cfg)
    if cfg.scenario == "flocking_ispl":
        return flocking_ispl_text(cfg)
    raise UsageError(f"scenario {cfg.scenario} is not an interpreted system")


def cmd_sim(invocation: Invocation, out: TextIO) -> int:
    run = invocation.run
    scenario = build_scenario(invocation.scenario)
    print(f"[*] Simulating {scenario.name} (seed {run.seed}, max {run.max_ticks} ticks)", file=out)
    trace = simulate(scenario, run.seed, run.max_ticks, stop_when=run.proposition)
    if run.output:
        trace.write(run.output)
    print(render_trace_summary(trace, run.output), file=out)
    if not run.output:
        out.write(trace.to_jsonl())
    return EXIT_OK


def cmd_check(invocation: Invocation, out: TextIO, show_witness: bool = False) -> int:
    run = invocation.run
    scenario = build_scenario(invocation.scenario)
    formula = run.formula or _default_formula(scenario)
    print(f"[*] Checking {formula} on {scenario.name} (budget {run.budget}, {run.workers} worker(s))", file=out)
    verdict = check(scenario, formula, budget=run.budget, workers=run.workers)
    print(render_verdict(verdict, scenario, show_witness), file=out)
    output = run.output
    if output is None and verdict.fails:
        output = f"{scenario.name}_counterexample.json"
    if output is not None:
        _write(output, json.dumps(verdict.to_dict(scenario), indent=2, sort_keys=True) + "\n")
        print(f"[*] Verdict written to {output}", file=out)
    if verdict.status is Status.RESOURCE_LIMIT:
        return EXIT_LIMIT
    return EXIT_FAILS if verdict.fails else EXIT_OK


def cmd_estimate(invocation: Invocation, out: TextIO) -> int:
    run = invocation.run
    if not run.proposition:
        raise UsageError("estimate needs a proposition (use --proposition or run.proposition)")
    scenario = build_scenario(invocation.scenario)
    print(f"[*] Estimating {run.proposition} on {scenario.name} over {run.runs} runs", file=out)
    result = estimate(scenario, run.proposition, run.runs, run.max_ticks, run.seed)
    print(render_estimate(result, scenario), file=out)
    if run.output:
        _write(run.output, json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_parse(invocation: Invocation, out: TextIO) -> int:
    text = _ispl_text(invocation)
    spec, diagnostics = parse_with_diagnostics(text)
    print(f"[*] Parsed {len(spec.participants)} agent(s), {len(spec.evaluation)} proposition(s)", file=out)
    for diagnostic in diagnostics:
        print(f"[!] {diagnostic}", file=out)
    out.write(dump(spec))
    if invocation.run.output:
        _write(invocation.run.output, format_ispl(spec))
        print(f"[*] Pretty-printed source written to {invocation.run.output}", file=out)
    return EXIT_OK


def cmd_stats(invocation: Invocation, out: TextIO) -> int:
    run = invocation.run
    scenario = build_scenario(invocation.scenario)
    print(f"[*] Exploring {scenario.name} (budget {run.budget})", file=out)
    stats = state_space_stats(scenario, budget=run.budget, workers=run.workers)
    print(render_stats(stats, scenario), file=out)
    if run.output:
        _write(run.output, json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK if stats.complete else EXIT_LIMIT


def cmd_step(invocation: Invocation, out: TextIO, inp: TextIO) -> int:
    """Pick transitions by index; 'q' or end of input quits."""
    run = invocation.run
    scenario = build_scenario(invocation.scenario)
    state = scenario.sample_initial(make_rng(run.seed))
    print(f"[*] Stepping {scenario.name}; enter an index, or q to quit", file=out)
    for tick in range(run.max_ticks):
        options = scenario.transitions(state)
        print(render_choices(scenario, state, options), file=out)
        if not options:
            break
        out.write(f"[{tick}]> ")
        out.flush()
        line = inp.readline()
        if not line or line.strip().lower() == "q":
            break
        try:
            choice = options[int(line.strip())]
        except (ValueError, IndexError):
            print(f"[!] Expected an index between 0 and {len(options) - 1}", file=out)
            continue
        state = choice.target
    return EXIT_OK


def run(invocation: Invocation, out: Optional[TextIO] = None, inp: Optional[TextIO] = None, show_witness: bool = False) -> int:
    """
    Execute one invocation.

    Returns:
        Exit status (0 success or Holds, 1 Fails, 2 usage/config error, 3 resource limit)
    """
    out = out or sys.stdout
    inp = inp or sys.stdin
    logger.debug("running %s with overrides %s", invocation.subcommand, invocation.overrides)
    try:
        if invocation.subcommand == "sim":
            return cmd_sim(invocation, out)
        if invocation.subcommand == "check":
            return cmd_check(invocation, out, show_witness)
        if invocation.subcommand == "estimate":
            return cmd_estimate(invocation, out)
        if invocation.subcommand == "parse":
            return cmd_parse(invocation, out)
        if invocation.subcommand == "stats":
            return cmd_stats(invocation, out)
        return cmd_step(invocation, out, inp)
    except ISPLSyntaxError as exc:
        print(f"[!] Syntax error at {exc}", file=out)
    except (ISPLError, ScenarioConfigError, UsageError) as exc:
        print(f"[!] {exc}", file=out)
    except (KeyError, ValueError) as exc:
        print(f"[!] {exc}", file=out)
    return EXIT_USAGE


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else log_level(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None, inp: Optional[TextIO] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    configure_logging(args.verbose)
    out = out or sys.stdout
    try:
        invocation = invocation_from_args(args)
    except ScenarioConfigError as exc:
        print(f"[!] Config error: {exc}", file=out)
        return EXIT_USAGE
    return run(invocation, out, inp, show_witness=args.witness)
