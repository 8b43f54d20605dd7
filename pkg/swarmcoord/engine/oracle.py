"""
Matrix fixpoint oracle for small state spaces.

Builds the full transition relation as a scipy.sparse matrix and evaluates
EF, EG, AF and AG as textbook fixpoints over boolean vectors. It shares no
search code with the checker and serves as its reference.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Union

import numpy as np
from scipy import sparse

from ..interp.model import Formula
from ..interp.parser import parse_formula
from .base import Scenario, State, as_scenario

logger = logging.getLogger(__name__)

ORACLE_LIMIT = 10 ** 4


@dataclass
class ExplicitGraph:
    states: List[State]
    initial: np.ndarray          # bool, per state
    matrix: sparse.csr_matrix    # adjacency, 0/1

    @property
    def out_degree(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    @property
    def deadlocks(self) -> np.ndarray:
        return self.out_degree == 0


def build_graph(scenario: Scenario, limit: int = ORACLE_LIMIT) -> ExplicitGraph:
    """
    Enumerate the reachable graph.

    Raises:
        ValueError: if more than ``limit`` states are reachable
    """
    index: Dict[State, int] = {}
    states: List[State] = []
    rows, cols = [], []
    queue = []
    for state in scenario.initial_states():
        if state not in index:
            index[state] = len(states)
            states.append(state)
            queue.append(state)
    initial_count = len(states)
    head = 0
    while head < len(queue):
        state = queue[head]
        head += 1
        for transition in scenario.transitions(state):
            succ = transition.target
            if succ not in index:
                if len(states) >= limit:
                    raise ValueError(f"oracle limit of {limit} states exceeded")
                index[succ] = len(states)
                states.append(succ)
                queue.append(succ)
            rows.append(index[state])
            cols.append(index[succ])
    n = len(states)
    matrix = sparse.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(n, n))
    matrix.data[:] = 1
    initial = np.zeros(n, dtype=bool)
    initial[:initial_count] = True
    return ExplicitGraph(states, initial, matrix)


def _ex(graph: ExplicitGraph, z: np.ndarray) -> np.ndarray:
    return graph.matrix.dot(z.astype(np.int64)) > 0


def _ax(graph: ExplicitGraph, z: np.ndarray) -> np.ndarray:
    """All successors in z (vacuously true in deadlocks)."""
    return graph.matrix.dot(z.astype(np.int64)) == graph.out_degree


def fixpoint(graph: ExplicitGraph, op: str, p: np.ndarray) -> np.ndarray:
    """Set of states satisfying ``op p``, as a boolean vector."""
    n = len(graph.states)
    dead = graph.deadlocks
    if op in ("EF", "AF"):
        z = np.zeros(n, dtype=bool)
        step = (lambda z: p | _ex(graph, z)) if op == "EF" else (lambda z: p | (~dead & _ax(graph, z)))
    else:
        z = np.ones(n, dtype=bool)
        step = (lambda z: p & (dead | _ex(graph, z))) if op == "EG" else (lambda z: p & _ax(graph, z))
    while True:
        updated = step(z)
        if np.array_equal(updated, z):
            return z
        z = updated


def oracle_check(scenario, formula: Union[str, Formula], limit: int = ORACLE_LIMIT) -> bool:
    """True iff the formula holds, with A-formulas over all and E-formulas over some initial states."""
    scenario = as_scenario(scenario)
    formula = parse_formula(formula) if isinstance(formula, str) else formula
    graph = build_graph(scenario, limit)
    prop = scenario.proposition(formula.prop, formula.negated)
    p = np.array([bool(prop(s)) for s in graph.states], dtype=bool)
    sat = fixpoint(graph, formula.op, p)
    init = sat[graph.initial]
    return bool(init.all()) if formula.is_universal else bool(init.any())
