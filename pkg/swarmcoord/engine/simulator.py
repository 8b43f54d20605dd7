"""
Interleaving simulator and Monte Carlo estimator.

Each tick collects the enabled atomic transitions of the current state and
commits one, chosen uniformly with a PCG64 generator seeded from the run
seed. Given the same scenario and seed, runs are identical.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..config import PRNG_ALGORITHM
from .base import Event, Scenario, State, Trace, as_scenario

logger = logging.getLogger(__name__)


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an integer seed or a SeedSequence."""
    return np.random.Generator(np.random.PCG64(seed))


def simulate(
    scenario,
    seed: int,
    max_ticks: int,
    stop_when: Optional[str] = None,
    initial: Optional[State] = None,
) -> Trace:
    """
    Run one seeded simulation.

    Args:
        scenario: Scenario (or interpreted system) to run
        seed: 64-bit run seed
        max_ticks: Maximum number of committed transitions
        stop_when: Optional proposition name; the run ends once it holds
        initial: Start state (sampled from the initial states when None)

    Returns:
        Trace of the run; a deadlock ends the run and is recorded
    """
    if max_ticks < 0:
        raise ValueError(f"max_ticks must be >= 0, got {max_ticks}")
    scenario = as_scenario(scenario)
    rng = make_rng(seed)
    stop = scenario.proposition(stop_when) if stop_when else None

    state = initial if initial is not None else scenario.sample_initial(rng)
    trace = Trace(
        scenario=scenario.name,
        seed=int(seed),
        prng=PRNG_ALGORITHM,
        initial=scenario.digest(state),
        states=[state],
    )
    for tick in range(max_ticks):
        if stop is not None and stop(state):
            trace.stopped_by = stop_when
            break
        options = scenario.transitions(state)
        if not options:
            trace.deadlocked = True
            logger.debug("%s deadlocked at tick %d", scenario.name, tick)
            break
        choice = options[int(rng.integers(len(options)))] if len(options) > 1 else options[0]
        after = choice.target
        trace.events.append(Event(
            tick=tick,
            actor=choice.actor,
            action=choice.action,
            delta=scenario.delta(state, after),
            state=scenario.digest(after),
        ))
        trace.states.append(after)
        state = after
    else:
        if stop is not None and stop(state):
            trace.stopped_by = stop_when
    return trace


def replay(scenario, trace: Trace, initial: Optional[State] = None) -> Trace:
    """
    Re-run a trace from its seed and length.

    Pass the same ``initial`` the original run was given, if any; otherwise
    the start state is re-sampled from the seed as in the original run.
    """
    return simulate(scenario, trace.seed, len(trace.events), stop_when=trace.stopped_by, initial=initial)


def run_seeds(seed: int, runs: int) -> List[int]:
    """Independent 64-bit seeds for a family of runs, spawned from one SeedSequence."""
    children = np.random.SeedSequence(seed).spawn(runs)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


@dataclass
class Estimate:
    """Fraction of runs in which a proposition was reached."""
    proposition: str
    runs: int
    hits: int
    max_ticks: int
    seed: int
    hit_ticks: List[int] = field(default_factory=list)

    @property
    def fraction(self) -> float:
        return self.hits / self.runs if self.runs else 0.0

    @property
    def mean_ticks(self) -> Optional[float]:
        if not self.hit_ticks:
            return None
        return float(np.mean(self.hit_ticks))

    def to_dict(self) -> dict:
        return {
            'proposition': self.proposition,
            'runs': self.runs,
            'hits': self.hits,
            'fraction': self.fraction,
            'max_ticks': self.max_ticks,
            'seed': self.seed,
            'mean_ticks_to_hit': self.mean_ticks,
        }


def estimate(scenario, proposition: str, runs: int, max_ticks: int, seed: int) -> Estimate:
    """
    Estimate how often a proposition is reached within max_ticks.

    Args:
        scenario: Scenario to run
        proposition: Proposition name (``true``/``false`` always exist)
        runs: Number of independent runs (>= 1)
        max_ticks: Tick horizon per run
        seed: Family seed; per-run seeds are spawned from it

    Returns:
        Estimate with the hit count and fraction
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    scenario = as_scenario(scenario)
    holds = scenario.proposition(proposition)
    result = Estimate(proposition=proposition, runs=runs, hits=0, max_ticks=max_ticks, seed=seed)
    for run_seed in run_seeds(seed, runs):
        trace = simulate(scenario, run_seed, max_ticks, stop_when=proposition)
        if holds(trace.states[-1]):
            result.hits += 1
            result.hit_ticks.append(len(trace.events))
    logger.info("%s: %s reached in %d/%d runs", scenario.name, proposition, result.hits, runs)
    return result
