"""
Bounded explicit-state checker for AG, AF, EF and EG over named propositions.

Semantics:
- Paths are maximal: they are infinite, or end in a deadlocked state.
- A-formulas must hold from every initial state, E-formulas from at least one.
- AG/EF run a level-synchronous breadth-first search and return a shortest
  witness. AF/EG run a depth-first search restricted to the states satisfying
  the invariant part and return a lasso (prefix plus cycle) or a path ending
  in deadlock.
- Exploring more distinct states than the budget yields RESOURCE_LIMIT.

Searches work on successor states only; step labels are recomputed for the
states of the returned path. With more than one worker, large breadth-first
frontiers of scenarios with plain-value states are expanded in forked worker
processes, chunk by chunk, and merged back in frontier order.
"""

import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from ..config import DEFAULT_STATE_BUDGET
from ..interp.model import Formula
from ..interp.parser import parse_formula
from .base import Scenario, State, as_scenario

logger = logging.getLogger(__name__)

# Frontiers smaller than this are expanded in-process
PARALLEL_MIN_FRONTIER = 4096
CHUNKS_PER_WORKER = 4

_forked_scenario: Optional[Scenario] = None


class Status(Enum):
    HOLDS = "holds"
    FAILS = "fails"
    RESOURCE_LIMIT = "resource_limit"


@dataclass
class Path:
    """
    A finite path, optionally closed into a lasso.

    ``labels[i]`` names the step from ``states[i]`` to ``states[i + 1]``. With
    ``loop_to`` set, the last state steps back to ``states[loop_to]`` by
    ``loop_label``. With ``deadlock`` set, the last state has no successor.
    """
    states: List[State]
    labels: List[str] = field(default_factory=list)
    loop_to: Optional[int] = None
    loop_label: Optional[str] = None
    deadlock: bool = False

    @property
    def is_lasso(self) -> bool:
        return self.loop_to is not None

    @property
    def prefix(self) -> List[State]:
        return self.states if self.loop_to is None else self.states[: self.loop_to]

    @property
    def cycle(self) -> List[State]:
        return [] if self.loop_to is None else self.states[self.loop_to:]


@dataclass
class Verdict:
    """Checker outcome with its witness (counterexample or example path)."""
    formula: Formula
    status: Status
    explored: int
    transitions: int
    witness: Optional[Path] = None

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is Status.FAILS

    @property
    def witness_kind(self) -> Optional[str]:
        if self.witness is None:
            return None
        return "counterexample" if self.fails else "example"

    def to_dict(self, scenario: Optional[Scenario] = None) -> Dict:
        data = {
            'formula': str(self.formula),
            'status': self.status.value,
            'explored': self.explored,
            'transitions': self.transitions,
            'witness': None,
        }
        if self.witness is not None:
            render = scenario.describe if scenario is not None else repr
            data['witness'] = {
                'kind': self.witness_kind,
                'states': [render(s) for s in self.witness.states],
                'labels': list(self.witness.labels),
                'loop_to': self.witness.loop_to,
                'loop_label': self.witness.loop_label,
                'deadlock': self.witness.deadlock,
            }
        return data


class _BudgetExceeded(Exception):
    pass


def _expand_chunk(states: Sequence[State]) -> List[List[State]]:
    return [_forked_scenario.successor_states(s) for s in states]


def _can_fork() -> bool:
    return "fork" in multiprocessing.get_all_start_methods()


class _Explorer:
    """Successor computation with a distinct-state budget and an optional process pool."""

    def __init__(self, scenario: Scenario, budget: int, workers: int = 1):
        self.scenario = scenario
        self.budget = budget
        self.workers = max(1, workers)
        self.seen = set()
        self.transitions = 0
        self._pool: Optional[ProcessPoolExecutor] = None

    def __enter__(self) -> "_Explorer":
        return self

    def __exit__(self, *exc) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def visit(self, state: State) -> bool:
        """Record a state; True when it is new."""
        if state in self.seen:
            return False
        if len(self.seen) >= self.budget:
            raise _BudgetExceeded()
        self.seen.add(state)
        return True

    def successors(self, state: State) -> List[State]:
        result = self.scenario.successor_states(state)
        self.transitions += len(result)
        return result

    def _parallel(self, frontier: Sequence[State]) -> bool:
        return (
            self.workers > 1
            and self.scenario.value_states
            and len(frontier) >= PARALLEL_MIN_FRONTIER
            and _can_fork()
        )

    def expand(self, frontier: Sequence[State]) -> List[List[State]]:
        """Successors of a whole frontier, in frontier order whatever the worker count."""
        if not self._parallel(frontier):
            return [self.successors(s) for s in frontier]
        global _forked_scenario
        if self._pool is None:
            _forked_scenario = self.scenario
            self._pool = ProcessPoolExecutor(
                max_workers=self.workers, mp_context=multiprocessing.get_context("fork")
            )
            logger.debug("%s: forked %d checker workers", self.scenario.name, self.workers)
        size = -(-len(frontier) // (self.workers * CHUNKS_PER_WORKER))
        chunks = [frontier[i:i + size] for i in range(0, len(frontier), size)]
        results: List[List[State]] = []
        for block in self._pool.map(_expand_chunk, chunks):
            results.extend(block)
        self.transitions += sum(len(r) for r in results)
        return results

    def labelled(self, states: Sequence[State], loop_to: Optional[int] = None) -> Tuple[List[str], Optional[str]]:
        """Step labels along a path: the first enabled transition reaching each next state."""
        labels = [self._label(before, after) for before, after in zip(states, states[1:])]
        loop_label = None if loop_to is None else self._label(states[-1], states[loop_to])
        return labels, loop_label

    def _label(self, before: State, after: State) -> str:
        for transition in self.scenario.transitions(before):
            if transition.target == after:
                return transition.label
        raise ValueError(f"{self.scenario.name}: no transition between consecutive path states")


def _formula(formula: Union[str, Formula]) -> Formula:
    return parse_formula(formula) if isinstance(formula, str) else formula


def _reach(explorer: _Explorer, target: Callable[[State], bool]) -> Optional[Path]:
    """Breadth-first search from the initial states for a state satisfying target."""
    parent: Dict[State, Optional[State]] = {}
    frontier: List[State] = []
    for state in explorer.scenario.initial_states():
        if explorer.visit(state):
            parent[state] = None
            if target(state):
                return _rebuild(explorer, parent, state)
            frontier.append(state)
    while frontier:
        layer: List[State] = []
        for state, outgoing in zip(frontier, explorer.expand(frontier)):
            for succ in outgoing:
                if not explorer.visit(succ):
                    continue
                parent[succ] = state
                if target(succ):
                    return _rebuild(explorer, parent, succ)
                layer.append(succ)
        frontier = layer
    return None


def _rebuild(explorer: _Explorer, parent: Dict[State, Optional[State]], last: State) -> Path:
    states = [last]
    link = parent[last]
    while link is not None:
        states.append(link)
        link = parent[link]
    states.reverse()
    labels, _ = explorer.labelled(states)
    return Path(states, labels)


def _persist(explorer: _Explorer, inside: Callable[[State], bool]) -> Optional[Path]:
    """
    Depth-first search for a maximal path that stays inside forever:
    a cycle reachable within inside-states, or an inside-state deadlock.
    """
    finished = set()
    for root in explorer.scenario.initial_states():
        if root in finished or not inside(root):
            continue
        explorer.visit(root)
        on_stack: Dict[State, int] = {root: 0}
        stack: List[Tuple[State, List[State], int]] = []
        outgoing = explorer.successors(root)
        if not outgoing:
            return Path([root], [], deadlock=True)
        stack.append((root, outgoing, 0))
        while stack:
            state, outgoing, index = stack[-1]
            if index >= len(outgoing):
                stack.pop()
                del on_stack[state]
                finished.add(state)
                continue
            stack[-1] = (state, outgoing, index + 1)
            succ = outgoing[index]
            if not inside(succ) or succ in finished:
                continue
            if succ in on_stack:
                states = [entry[0] for entry in stack]
                labels, loop_label = explorer.labelled(states, on_stack[succ])
                return Path(states, labels, loop_to=on_stack[succ], loop_label=loop_label)
            explorer.visit(succ)
            succ_out = explorer.successors(succ)
            if not succ_out:
                states = [entry[0] for entry in stack] + [succ]
                labels, _ = explorer.labelled(states)
                return Path(states, labels, deadlock=True)
            on_stack[succ] = len(stack)
            stack.append((succ, succ_out, 0))
    return None


def check(
    scenario,
    formula: Union[str, Formula],
    budget: int = DEFAULT_STATE_BUDGET,
    workers: int = 1,
) -> Verdict:
    """
    Check a formula over a finite-state scenario.

    Args:
        scenario: Scenario, InterpretedSystem or SystemSpec
        formula: ``AG p``, ``AF p``, ``EF p`` or ``EG p`` (``p`` may be ``!name``)
        budget: Maximum number of distinct states to explore
        workers: Processes used to expand large breadth-first frontiers;
            verdicts and witnesses do not depend on it

    Returns:
        Verdict with a witness: a counterexample for failing A-formulas, an
        example for holding E-formulas
    """
    scenario = as_scenario(scenario)
    formula = _formula(formula)
    p = scenario.proposition(formula.prop, formula.negated)
    with _Explorer(scenario, budget, workers) as explorer:
        try:
            if formula.op in ("AG", "EF"):
                target = (lambda s: not p(s)) if formula.op == "AG" else p
                path = _reach(explorer, target)
            else:
                inside = (lambda s: not p(s)) if formula.op == "AF" else p
                path = _persist(explorer, inside)
        except _BudgetExceeded:
            logger.info("%s: budget of %d states exhausted checking %s", scenario.name, budget, formula)
            return Verdict(formula, Status.RESOURCE_LIMIT, len(explorer.seen), explorer.transitions)

    found = path is not None
    if formula.is_universal:
        status = Status.FAILS if found else Status.HOLDS
    else:
        status = Status.HOLDS if found else Status.FAILS
    logger.info("%s: %s %s after %d states", scenario.name, formula, status.value, len(explorer.seen))
    return Verdict(formula, status, len(explorer.seen), explorer.transitions, path)


@dataclass
class StateSpaceStats:
    states: int
    transitions: int
    diameter: int
    complete: bool = True

    def to_dict(self) -> Dict:
        return {
            'states': self.states,
            'transitions': self.transitions,
            'diameter': self.diameter,
            'complete': self.complete,
        }


def state_space_stats(scenario, budget: int = DEFAULT_STATE_BUDGET, workers: int = 1) -> StateSpaceStats:
    """
    Exhaustive breadth-first exploration of the reachable state space.

    Returns:
        Reachable state count, labelled transition count and diameter (the
        largest breadth-first depth from the initial states); counts are
        partial and ``complete`` is False when the budget runs out
    """
    scenario = as_scenario(scenario)
    depth = 0
    frontier: List[State] = []
    with _Explorer(scenario, budget, workers) as explorer:
        try:
            for state in scenario.initial_states():
                if explorer.visit(state):
                    frontier.append(state)
            while frontier:
                layer = []
                for outgoing in explorer.expand(frontier):
                    for succ in outgoing:
                        if explorer.visit(succ):
                            layer.append(succ)
                if layer:
                    depth += 1
                frontier = layer
        except _BudgetExceeded:
            return StateSpaceStats(len(explorer.seen), explorer.transitions, depth, complete=False)
        return StateSpaceStats(len(explorer.seen), explorer.transitions, depth)


def validate_path(scenario, path: Path, formula: Optional[Union[str, Formula]] = None) -> bool:
    """
    Check that a path is genuine and, given a formula, that it witnesses it.

    The path must start in an initial state and follow enabled transitions;
    a lasso must close with a real transition and a deadlock claim must be
    true. For AG and EF the last state must violate/satisfy p; for AF and EG
    every state must avoid/satisfy p and the path must be a lasso or end in
    deadlock.
    """
    scenario = as_scenario(scenario)
    if not path.states or not scenario.is_initial(path.states[0]):
        return False
    for before, after in zip(path.states, path.states[1:]):
        if after not in {t.target for t in scenario.transitions(before)}:
            return False
    last = path.states[-1]
    if path.loop_to is not None:
        if not 0 <= path.loop_to < len(path.states):
            return False
        if path.states[path.loop_to] not in {t.target for t in scenario.transitions(last)}:
            return False
    if path.deadlock and scenario.transitions(last):
        return False
    if formula is None:
        return True
    formula = _formula(formula)
    p = scenario.proposition(formula.prop, formula.negated)
    if formula.op == "AG":
        return not p(last)
    if formula.op == "EF":
        return p(last)
    inside = (lambda s: not p(s)) if formula.op == "AF" else p
    maximal = path.loop_to is not None or path.deadlock
    return maximal and all(inside(s) for s in path.states)
