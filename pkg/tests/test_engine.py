"""
Tests for the engine: simulated network, simulator, estimator, checker and
the matrix fixpoint oracle.
"""

import json

import numpy as np
import pytest

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from swarmcoord.engine import (
    ExplicitScenario,
    Network,
    Path,
    Status,
    check,
    estimate,
    oracle_check,
    replay,
    run_seeds,
    simulate,
    state_space_stats,
    validate_path,
)
import swarmcoord.engine.checker as checker_module
from swarmcoord.engine.oracle import build_graph, fixpoint
from swarmcoord.kernel import AgentId

A, B, C = AgentId(0), AgentId(1), AgentId(2)


def _branching():
    """
    0 -> 1 <-> 2 (p at 2) and 0 -> 3 (q at 3, deadlocked).
    """
    return ExplicitScenario(
        "branching",
        initial=[0],
        edges={0: [1, 3], 1: [2], 2: [1]},
        labels={'p': [2], 'q': [3]},
    )


def _chain(length):
    return ExplicitScenario(
        "chain",
        initial=[0],
        edges={i: [i + 1] for i in range(length - 1)},
        labels={'end': [length - 1]},
    )


def _grid(side):
    """Right/down moves on a side x side grid; p at the far corner."""
    edges = {}
    for x in range(side):
        for y in range(side):
            targets = []
            if x + 1 < side:
                targets.append((x + 1, y))
            if y + 1 < side:
                targets.append((x, y + 1))
            targets.append((x, y))
            edges[(x, y)] = targets
    return ExplicitScenario("grid", [(0, 0)], edges, {'p': [(side - 1, side - 1)]})


def _random_scenario(rng, index):
    n = int(rng.integers(1, 13))
    edges = {
        s: [int(t) for t in rng.integers(0, n, size=int(rng.integers(0, 4)))]
        for s in range(n)
    }
    initial = sorted({int(s) for s in rng.integers(0, n, size=int(rng.integers(1, 3)))})
    labelled = [s for s in range(n) if rng.random() < 0.4]
    return ExplicitScenario(f"random{index}", initial, edges, {'p': labelled})


class TestNetwork:
    """Tests for per-pair FIFO queues."""

    def test_fifo_per_pair(self):
        net, _ = Network().send(A, B, "m1")
        net, _ = net.send(A, B, "m2")
        first, net = net.pop(A, B)
        second, net = net.pop(A, B)
        assert (first, second) == ("m1", "m2")
        assert net.is_empty()

    def test_full_queue_drops(self):
        net = Network(capacity=1)
        net, accepted = net.send(A, B, "m1")
        assert accepted
        net, accepted = net.send(A, B, "m2")
        assert not accepted, "A full queue must reject the message"
        assert net.queue(A, B) == ("m1",)

    def test_canonical_form(self):
        one, _ = Network().send(A, B, "x")
        one, _ = one.send(C, A, "y")
        two, _ = Network().send(C, A, "y")
        two, _ = two.send(A, B, "x")
        assert one == two
        assert hash(one) == hash(two)

    def test_broadcast_and_heads(self):
        net = Network().broadcast(A, [C, B], "hello")
        assert net.heads() == [(A, B, "hello"), (A, C, "hello")]
        assert net.pending == 2

    def test_pop_empty_raises(self):
        with pytest.raises(KeyError):
            Network().pop(A, B)


class TestSimulator:
    """Tests for seeded interleaving runs."""

    def test_same_seed_same_trace(self):
        scenario = _grid(4)
        first = simulate(scenario, seed=42, max_ticks=30)
        second = simulate(scenario, seed=42, max_ticks=30)
        assert first.to_jsonl() == second.to_jsonl(), "Runs must be byte-identical for a seed"

    def test_trace_file_layout(self, tmp_path):
        trace = simulate(_grid(3), seed=1, max_ticks=5)
        path = tmp_path / "run.jsonl"
        trace.write(path)
        lines = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
        assert lines[0]['type'] == 'header'
        assert lines[0]['prng'] == 'PCG64'
        assert [l['type'] for l in lines[1:-1]] == ['event'] * 5
        assert lines[-1] == {'type': 'end', 'ticks': 5, 'deadlocked': False, 'stopped_by': None}

    def test_zero_ticks(self):
        trace = simulate(_grid(3), seed=7, max_ticks=0)
        assert len(trace) == 0
        assert trace.states == [(0, 0)]

    def test_negative_ticks_rejected(self):
        with pytest.raises(ValueError):
            simulate(_grid(3), seed=7, max_ticks=-1)

    def test_deadlock_ends_run(self):
        trace = simulate(_chain(3), seed=0, max_ticks=10)
        assert len(trace) == 2
        assert trace.deadlocked

    def test_stop_when(self):
        trace = simulate(_chain(5), seed=0, max_ticks=10, stop_when="end")
        assert trace.stopped_by == "end"
        assert trace.states[-1] == 4
        assert not trace.deadlocked, "The stop proposition is checked before deadlock"

    def test_given_initial_state(self):
        trace = simulate(_chain(5), seed=0, max_ticks=1, initial=3)
        assert trace.states == [3, 4]

    def test_replay_reproduces(self):
        scenario = _grid(4)
        trace = simulate(scenario, seed=99, max_ticks=12)
        assert replay(scenario, trace).to_jsonl() == trace.to_jsonl()

    def test_unknown_stop_proposition(self):
        with pytest.raises(KeyError):
            simulate(_grid(3), seed=0, max_ticks=3, stop_when="nowhere")


class TestEstimate:
    """Tests for Monte Carlo estimation."""

    def test_run_seeds_are_deterministic_and_distinct(self):
        seeds = run_seeds(2024, 20)
        assert seeds == run_seeds(2024, 20)
        assert len(set(seeds)) == 20

    def test_always_true_hits_immediately(self):
        result = estimate(_grid(3), "true", runs=5, max_ticks=10, seed=3)
        assert result.fraction == 1.0
        assert result.mean_ticks == 0.0

    def test_unreachable_never_hits(self):
        result = estimate(_branching(), "false", runs=5, max_ticks=10, seed=3)
        assert result.hits == 0
        assert result.mean_ticks is None

    def test_fraction_between_branches(self):
        """From 0 each run commits to the p-loop or the dead end with equal odds."""
        result = estimate(_branching(), "p", runs=200, max_ticks=5, seed=11)
        assert 0.3 < result.fraction < 0.7, f"Expected roughly half, got {result.fraction}"
        again = estimate(_branching(), "p", runs=200, max_ticks=5, seed=11)
        assert again.hits == result.hits, "Estimates must be reproducible for a seed"

    def test_zero_runs_rejected(self):
        with pytest.raises(ValueError):
            estimate(_grid(3), "p", runs=0, max_ticks=5, seed=0)

    def test_to_dict(self):
        data = estimate(_chain(2), "end", runs=3, max_ticks=5, seed=0).to_dict()
        assert data['hits'] == 3
        assert data['mean_ticks_to_hit'] == 1.0


class TestChecker:
    """Tests for AG, EF, AF and EG with witnesses."""

    def test_ef_example_is_shortest(self):
        verdict = check(_branching(), "EF p")
        assert verdict.holds
        assert verdict.witness.states == [0, 1, 2]
        assert validate_path(_branching(), verdict.witness, "EF p")

    def test_ag_counterexample(self):
        verdict = check(_branching(), "AG !q")
        assert verdict.fails
        assert verdict.witness.states == [0, 3]
        assert validate_path(_branching(), verdict.witness, "AG !q")

    def test_af_fails_on_deadlock(self):
        """A path ending in a deadlock that never meets p refutes AF p."""
        verdict = check(_branching(), "AF p")
        assert verdict.fails
        assert verdict.witness.deadlock
        assert verdict.witness.states[-1] == 3
        assert validate_path(_branching(), verdict.witness, "AF p")

    def test_af_holds_when_every_branch_meets_p(self):
        scenario = ExplicitScenario("loop", [0], {0: [1], 1: [2], 2: [1]}, {'p': [2]})
        assert check(scenario, "AF p").holds

    def test_eg_lasso(self):
        scenario = ExplicitScenario("self-loop", [0], {0: [0, 1]}, {'p': [1]})
        verdict = check(scenario, "EG !p")
        assert verdict.holds
        assert verdict.witness.is_lasso
        assert verdict.witness.cycle == [0]
        assert validate_path(scenario, verdict.witness, "EG !p")

    def test_af_counterexample_lasso(self):
        scenario = ExplicitScenario("stall", [0], {0: [1, 2], 1: [1], 2: [2]}, {'p': [2]})
        verdict = check(scenario, "AF p")
        assert verdict.fails
        assert verdict.witness.is_lasso
        assert verdict.witness.states == [0, 1]
        assert validate_path(scenario, verdict.witness, "AF p")

    def test_quantification_over_initial_states(self):
        """A-formulas need every initial state, E-formulas just one."""
        scenario = ExplicitScenario("two-starts", [0, 1], {0: [0], 1: [1]}, {'p': [0]})
        assert check(scenario, "AG p").fails
        assert check(scenario, "EG p").holds
        assert check(scenario, "EF p").holds
        assert check(scenario, "AF p").fails

    def test_constant_propositions(self):
        assert check(_branching(), "AG true").holds
        assert check(_branching(), "EF false").fails

    def test_unknown_proposition(self):
        with pytest.raises(KeyError):
            check(_branching(), "EF r")

    def test_budget_exhaustion(self):
        verdict = check(_chain(100), "AG true", budget=10)
        assert verdict.status is Status.RESOURCE_LIMIT
        assert verdict.witness is None
        assert check(_chain(100), "AG true", budget=100).holds, "Exactly enough budget must suffice"

    @pytest.mark.parametrize("formula", ["AG !p", "EF p", "AF p", "EG !p"])
    def test_worker_count_does_not_change_verdicts(self, formula):
        scenario = _grid(12)
        verdicts = [check(scenario, formula, workers=w) for w in (1, 2, 4)]
        assert len({v.status for v in verdicts}) == 1
        witnesses = [v.witness.states if v.witness else None for v in verdicts]
        assert witnesses[0] == witnesses[1] == witnesses[2], "Witnesses must not depend on worker count"

    @pytest.mark.parametrize("formula", ["AG !p", "EF p", "AF p", "EG !p"])
    def test_forked_workers_match_in_process_expansion(self, monkeypatch, formula):
        """With the threshold lowered every frontier goes through the process pool."""
        monkeypatch.setattr(checker_module, "PARALLEL_MIN_FRONTIER", 1)
        scenario = _grid(12)
        single = check(scenario, formula, workers=1)
        pooled = check(scenario, formula, workers=3)
        assert pooled.status is single.status
        assert (pooled.explored, pooled.transitions) == (single.explored, single.transitions)
        if single.witness is not None:
            assert pooled.witness.states == single.witness.states
            assert pooled.witness.labels == single.witness.labels
            assert validate_path(scenario, pooled.witness, formula)

    def test_forked_stats_match_in_process_stats(self, monkeypatch):
        monkeypatch.setattr(checker_module, "PARALLEL_MIN_FRONTIER", 1)
        scenario = _grid(9)
        assert state_space_stats(scenario, workers=4) == state_space_stats(scenario, workers=1)

    def test_witness_labels_follow_enabled_transitions(self):
        """Searches carry states only; labels are recovered from the scenario afterwards."""
        verdict = check(_branching(), "EF p")
        labels = [t.label for t in _branching().transitions(0) if t.target == 1][:1]
        labels += [t.label for t in _branching().transitions(1) if t.target == 2][:1]
        assert verdict.witness.labels == labels

    def test_lasso_carries_its_closing_label(self):
        verdict = check(_branching(), "EG !q")
        assert verdict.witness.is_lasso
        last = verdict.witness.states[-1]
        back = verdict.witness.states[verdict.witness.loop_to]
        assert verdict.witness.loop_label in {t.label for t in _branching().transitions(last) if t.target == back}

    def test_verdict_serialisation(self):
        data = check(_branching(), "AG !q").to_dict(_branching())
        assert data['status'] == 'fails'
        assert data['witness']['kind'] == 'counterexample'
        assert data['witness']['states'] == ['0', '3']
        assert len(data['witness']['labels']) == 1


class TestValidatePath:
    """Fabricated witnesses are rejected."""

    def test_missing_edge(self):
        assert not validate_path(_branching(), Path([0, 2]))

    def test_not_initial(self):
        assert not validate_path(_branching(), Path([1, 2]))

    def test_false_deadlock_claim(self):
        assert not validate_path(_branching(), Path([0, 1], deadlock=True))

    def test_bad_loop(self):
        assert not validate_path(_branching(), Path([0, 1], loop_to=0))

    def test_wrong_formula(self):
        assert not validate_path(_branching(), Path([0, 1]), "EF p")


class TestStateSpaceStats:
    """Tests for exhaustive exploration counts."""

    def test_chain(self):
        stats = state_space_stats(_chain(5))
        assert (stats.states, stats.transitions, stats.diameter, stats.complete) == (5, 4, 4, True)

    def test_single_state_no_moves(self):
        stats = state_space_stats(ExplicitScenario("empty", [0], {}))
        assert (stats.states, stats.transitions, stats.diameter) == (1, 0, 0)

    def test_partial_when_budget_runs_out(self):
        stats = state_space_stats(_chain(50), budget=10)
        assert not stats.complete
        assert stats.states == 10

    def test_grid_counts(self):
        stats = state_space_stats(_grid(3))
        assert stats.states == 9
        assert stats.transitions == 9 + 12, "Every cell has a self-loop plus its right/down moves"
        assert stats.diameter == 4


class TestOracle:
    """The checker agrees with the fixpoint oracle."""

    def test_fixpoints_on_branching(self):
        graph = build_graph(_branching())
        p = np.array([s == 2 for s in graph.states])
        ef = dict(zip(graph.states, fixpoint(graph, "EF", p).tolist()))
        af = dict(zip(graph.states, fixpoint(graph, "AF", p).tolist()))
        assert ef == {0: True, 1: True, 2: True, 3: False}
        assert af == {0: False, 1: True, 2: True, 3: False}, "The dead end at 3 blocks AF from 0"

    def test_limit(self):
        with pytest.raises(ValueError):
            build_graph(_chain(20), limit=10)

    def test_random_graphs_agree(self):
        """Fifty random graphs, every operator, both polarities."""
        rng = np.random.Generator(np.random.PCG64(20240601))
        for index in range(50):
            scenario = _random_scenario(rng, index)
            for op in ("AG", "AF", "EF", "EG"):
                for prop in ("p", "!p"):
                    formula = f"{op} {prop}"
                    verdict = check(scenario, formula)
                    expected = oracle_check(scenario, formula)
                    assert verdict.holds == expected, f"{scenario.name}: {formula} disagrees with the oracle"
                    if verdict.witness is not None:
                        assert validate_path(scenario, verdict.witness, formula), \
                            f"{scenario.name}: invalid witness for {formula}"

    def test_duality(self):
        """AF p holds exactly when EG !p fails; AG p exactly when EF !p fails."""
        rng = np.random.Generator(np.random.PCG64(7))
        for index in range(30):
            scenario = _random_scenario(rng, index)
            assert check(scenario, "AF p").holds == check(scenario, "EG !p").fails
            assert check(scenario, "AG p").holds == check(scenario, "EF !p").fails
