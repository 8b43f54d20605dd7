"""
Tests for the foraging and flocking scenario builders, including the
exhaustive verdicts the shipped configs are expected to reproduce.
"""

import time

import numpy as np
import pytest

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from swarmcoord.config import CONFIG_DIR, load_run_file, scenario_config
from swarmcoord.engine import check, estimate, simulate, state_space_stats, validate_path
from swarmcoord.errors import ScenarioConfigError
from swarmcoord.kernel import AgentId, Position, euclidean, ktuple
from swarmcoord.scenarios import TupleSpaceScenario, build_scenario, flocking_ispl_text, foraging_ispl_text
from swarmcoord.scenarios.common import default_positions, initial_direction, static_graph
from swarmcoord.scenarios.flocking import flocking_definitions
from swarmcoord.scenarios.foraging import ForagerProgram, ItemProgram, Miss, Request, Waiting
from swarmcoord.scenarios.programs import StepContext
from swarmcoord.tuplespace import NIL, SELF, Call, Put, Qry, TupleSystem, make_component, seq, step_process, texpr, tplexpr
from swarmcoord.world import Arena


def _from_config(name, *overrides):
    run_file = load_run_file(str(CONFIG_DIR / name), overrides)
    return build_scenario(run_file.scenario), run_file.run


def _build(**fields):
    return build_scenario(scenario_config(**fields))


class TestCommon:
    """Tests for placements, seeded directions and topologies."""

    def test_row_major_placement(self):
        cells = default_positions(Arena(3, 3), 4)
        assert cells == [Position(1, 1), Position(2, 1), Position(3, 1), Position(1, 2)]

    def test_placement_offset(self):
        assert default_positions(Arena(3, 3), 1, offset=1) == [Position(2, 1)]

    def test_direction_seeded_by_squared_id(self):
        expected = int(np.random.Generator(np.random.PCG64(9)).integers(8)) * 45
        assert initial_direction(3, 0, 45) == expected

    def test_static_topologies(self):
        ids = [AgentId(i) for i in range(4)]
        assert static_graph("range", ids) is None
        assert static_graph("complete", ids).number_of_edges() == 6
        assert static_graph("ring", ids).number_of_edges() == 4
        assert static_graph("star", ids).degree(AgentId(0)) == 3

    def test_bad_position_count(self):
        with pytest.raises(ScenarioConfigError):
            _build(scenario="foraging_broadcast", foragers=2, forager_positions=[[1, 1]])

    def test_bad_initial_direction(self):
        with pytest.raises(ScenarioConfigError):
            _build(scenario="flocking_voter", agents=2, initial_directions=[0, 30])

    def test_direction_step_must_divide_circle(self):
        with pytest.raises(ScenarioConfigError):
            scenario_config(scenario="flocking_vstig", direction_step=50)

    def test_duplicate_item_positions(self):
        with pytest.raises(ScenarioConfigError):
            scenario_config(scenario="foraging_scel", items=2, item_positions=[[1, 1], [1, 1]])


class TestForagingBroadcast:
    """Message-passing foraging keeps the double-credit race."""

    def test_ids_and_programs(self):
        scenario = _build(scenario="foraging_broadcast", foragers=2, items=1, arena={'width': 3, 'height': 3})
        assert isinstance(scenario.programs[AgentId(0)], ForagerProgram)
        assert isinstance(scenario.programs[AgentId(1)], ForagerProgram)
        assert isinstance(scenario.programs[AgentId(2)], ItemProgram), "Items take the ids after the foragers"
        state = scenario.initial_states()[0]
        assert state.position_map()[AgentId(2)] == Position(1, 1)
        assert state.position_map()[AgentId(0)] == Position(2, 1)

    def test_double_credit_reachable(self):
        scenario, run = _from_config("foraging_broadcast.json")
        started = time.perf_counter()
        verdict = check(scenario, run.formula)
        elapsed = time.perf_counter() - started
        assert verdict.holds, "Two foragers can be credited with the same item"
        assert validate_path(scenario, verdict.witness, run.formula)
        assert elapsed < 10, f"Race check took {elapsed:.1f}s"

    def test_shipped_race_starts_apart(self):
        run_file = load_run_file(str(CONFIG_DIR / "foraging_broadcast.json"))
        assert run_file.scenario.walk
        assert run_file.scenario.forager_positions is None, "Foragers must walk to the item"

    def test_default_placement_race_is_quick(self):
        scenario = _build(scenario="foraging_broadcast", foragers=2, items=1, arena={'width': 3, 'height': 3})
        started = time.perf_counter()
        verdict = check(scenario, "EF double_credit")
        elapsed = time.perf_counter() - started
        assert verdict.holds
        assert validate_path(scenario, verdict.witness, "EF double_credit")
        assert any("walk to" in label for label in verdict.witness.labels), "Foragers start away from the item"
        assert elapsed < 10, f"Race check took {elapsed:.1f}s"

    def _context(self, *neighbours):
        return StepContext(Arena(3, 3), Position(2, 1), frozenset(AgentId(n) for n in neighbours), {})

    def test_request_waits_for_items_only(self):
        program = ForagerProgram(frozenset({AgentId(2)}))
        outcomes = program.on_step(AgentId(0), None, self._context(1, 2))
        (request,) = [o for o in outcomes if o.label == "broadcast request"]
        assert request.local == Waiting(1), "Only the item in range is expected to answer"
        assert request.sends == ((None, Request(AgentId(0), Position(2, 1))),)
        assert len(outcomes) == 4, "One request plus a walk to each of the three neighbour cells"

    def test_waiting_forager_does_not_repeat(self):
        program = ForagerProgram(frozenset({AgentId(2)}))
        assert program.on_step(AgentId(0), Waiting(1), self._context(2)) == []
        assert program.on_step(AgentId(0), AgentId(2), self._context(2)) == []

    def test_misses_return_forager_to_searching(self):
        program = ForagerProgram(frozenset({AgentId(2), AgentId(3)}))
        miss = Miss(AgentId(2), AgentId(0))
        (first,) = program.on_message(AgentId(0), Waiting(2), AgentId(2), miss, self._context(2, 3))
        assert first.local == Waiting(1)
        (last,) = program.on_message(AgentId(0), Waiting(1), AgentId(3), Miss(AgentId(3), AgentId(0)), self._context(2, 3))
        assert last.local is None

    def test_out_of_range_item_answers_with_miss(self):
        item = ItemProgram(sense_range=0)
        ctx = StepContext(Arena(3, 3), Position(1, 1), frozenset({AgentId(0)}), {})
        (outcome,) = item.on_message(AgentId(2), None, AgentId(0), Request(AgentId(0), Position(2, 1)), ctx)
        assert outcome.sends == ((AgentId(0), Miss(AgentId(2), AgentId(0))),)

    def test_co_located_forager_collects(self):
        scenario = _build(
            scenario="foraging_broadcast", foragers=1, items=1, walk=False,
            item_positions=[[2, 2]], forager_positions=[[2, 2]], arena={'width': 3, 'height': 3},
        )
        assert check(scenario, "EF collected").holds
        trace = simulate(scenario, seed=5, max_ticks=200, stop_when="collected")
        assert trace.stopped_by == "collected"

    def test_out_of_range_never_collects(self):
        scenario = _build(
            scenario="foraging_broadcast", foragers=1, items=1, walk=False,
            sense_range=0, arena={'width': 3, 'height': 3},
        )
        verdict = check(scenario, "AG !collected")
        assert verdict.holds, f"Expected no pickup, got {verdict.status}"


class TestForagingTupleSpace:
    """Lock-based foraging never credits an item twice."""

    def test_simulated_runs_keep_mutual_exclusion(self):
        scenario, _ = _from_config("foraging_scel.json")
        double = scenario.proposition("double_found")
        for seed in range(5):
            trace = simulate(scenario, seed=seed, max_ticks=300)
            assert not any(double(s) for s in trace.states), f"seed {seed} found an item twice"

    def test_foragers_start_idle(self):
        scenario, _ = _from_config("foraging_scel.json")
        state = scenario.initial_states()[0]
        assert scenario.proposition("all_idle")(state)
        assert state.component(AgentId(2)).repo.count(ktuple("lock")) == 1

    def test_mutual_exclusion_exhaustive(self):
        scenario, run = _from_config("foraging_scel.json")
        started = time.perf_counter()
        verdict = check(scenario, run.formula, budget=run.budget)
        elapsed = time.perf_counter() - started
        assert verdict.holds, f"AG !double_found should hold, got {verdict.status}"
        assert elapsed < 60, f"Exhaustive check took {elapsed:.1f}s"

    def test_mutual_exclusion_two_items(self):
        scenario, run = _from_config("foraging_scel.json", "scenario.items=2")
        started = time.perf_counter()
        verdict = check(scenario, run.formula, budget=run.budget)
        elapsed = time.perf_counter() - started
        assert verdict.holds, f"AG !double_found should hold, got {verdict.status}"
        assert elapsed < 60, f"Exhaustive check took {elapsed:.1f}s"

    def test_both_foragers_can_reach_the_item(self):
        scenario, _ = _from_config("foraging_scel.json")

        def at_item(state, forager):
            return state.component(AgentId(forager)).attrs.lookup("pos") == Position(1, 1)

        scenario.propositions["both_there"] = lambda s: at_item(s, 0) and at_item(s, 1)
        assert check(scenario, "EF both_there").holds, "Both foragers should be able to contend for the lock"

    def test_idle_forager_waits_without_walk(self):
        scenario, _ = _from_config("foraging_scel.json")
        state = scenario.initial_states()[0]
        assert step_process(state, AgentId(0)) == [], "Without walk an idle forager only takes advertisements"

    def test_idle_forager_walks_when_no_food(self):
        scenario = _build(scenario="foraging_scel", foragers=1, items=0, arena={'width': 3, 'height': 3})
        transitions = scenario.transitions(scenario.initial_states()[0])
        assert sorted(t.action.split("; ")[1] for t in transitions) == ["walk to (1,2)", "walk to (2,1)"]
        for t in transitions:
            forager = t.target.component(AgentId(0))
            assert forager.repo.count(ktuple("randomWalk")) == 0, "The world takes the walk request at once"
            assert t.target.mobility.intents == ()
        assert check(scenario, "AG all_idle").holds

    def test_advertisements_are_kept_once(self):
        scenario, _ = _from_config("foraging_scel.json")
        state = scenario.initial_states()[0]
        for _ in range(3):
            (outcome,) = step_process(state, AgentId(2))
            state = outcome.system
        advert = ktuple("food", Position(1, 1))
        assert state.component(AgentId(0)).repo.count(advert) == 1
        assert state.component(AgentId(1)).repo.count(advert) == 1


class TestTupleSpaceActuation:
    """moveTo and randomWalk tuples are taken by the world when they are put."""

    def _traveller(self):
        process = seq(
            Put(SELF, texpr("moveTo", Position(3, 1))),
            Qry(SELF, tplexpr("reached", Position(3, 1))),
            NIL,
        )
        comp = make_component(0, [ktuple("pos", Position(1, 1)), ktuple("reached", Position(1, 1))], ("pos",), [process])
        return TupleSpaceScenario("travel", Arena(3, 3), TupleSystem((comp,)))

    def test_move_to_starts_travel_in_the_same_step(self):
        scenario = self._traveller()
        (first,) = scenario.transitions(scenario.initial_states()[0])
        traveller = first.target.component(AgentId(0))
        assert traveller.attrs.lookup("pos") == Position(2, 1)
        assert traveller.repo.count(ktuple("moveTo", Position(3, 1))) == 0
        assert traveller.repo.count(ktuple("reached", Position(1, 1))) == 0, "Stale arrivals are cleared"
        assert first.target.mobility.get(AgentId(0)) is not None

    def test_arrival_releases_the_query(self):
        scenario = self._traveller()
        (first,) = scenario.transitions(scenario.initial_states()[0])
        (second,) = scenario.transitions(first.target)
        assert second.action == "move to (3,1)"
        arrived = second.target.component(AgentId(0))
        assert arrived.repo.count(ktuple("reached", Position(3, 1))) == 1
        assert second.target.mobility.intents == ()
        (third,) = scenario.transitions(second.target)
        assert third.action.startswith("qry")


class TestForagingInterpreted:
    """The grid-robot interpreted system."""

    def test_collected_reachable(self):
        scenario, run = _from_config("foraging_ispl.json")
        verdict = check(scenario, run.formula)
        assert verdict.holds
        assert validate_path(scenario, verdict.witness, run.formula)

    def test_counter_starts_at_zero(self):
        scenario, _ = _from_config("foraging_ispl.json")
        system = scenario.system
        assert all(system.value(s, "Environment", "foundItems") == 0 for s in scenario.initial_states())
        assert all(system.value(s, "Environment", "item1") for s in scenario.initial_states())

    def test_pick_only_on_item_cell(self):
        scenario, _ = _from_config("foraging_ispl.json")
        system = scenario.system
        on_item = system.make_state({
            "Environment.item1": True, "Environment.itemX1": 2, "Environment.itemY1": 2,
            "Environment.foundItems": 0, "Robot1.PosX": 2, "Robot1.PosY": 2,
        })
        elsewhere = system.make_state({
            "Environment.item1": True, "Environment.itemX1": 2, "Environment.itemY1": 2,
            "Environment.foundItems": 0, "Robot1.PosX": 1, "Robot1.PosY": 2,
        })
        assert "Pick1" in system.enabled_actions("Robot1", on_item)
        assert "Pick1" not in system.enabled_actions("Robot1", elsewhere)

    def test_simultaneous_picks_count_once(self):
        cfg = scenario_config(
            scenario="foraging_ispl", robots=2, items=1, arena={'width': 2, 'height': 2},
            item_positions=[[1, 1]], forager_positions=[[1, 1], [1, 1]],
        )
        scenario = build_scenario(cfg)
        system = scenario.system
        (start,) = scenario.initial_states()
        both = dict(system.joint_successors(start))[("none", "Pick1", "Pick1")]
        assert system.value(both, "Environment", "foundItems") == 1
        assert not system.value(both, "Environment", "item1")

    def test_generated_text_names_robots(self):
        text = foraging_ispl_text(scenario_config(scenario="foraging_ispl", robots=2, items=2))
        assert "Agent Robot2" in text
        assert "EF collected;" in text


class TestFlockingInterpreted:
    """Watch-and-imitate flocking."""

    def test_single_robot_state_space(self):
        scenario = _build(scenario="flocking_ispl", robots=1, arena={'width': 2, 'height': 2})
        stats = state_space_stats(scenario)
        assert (stats.states, stats.transitions, stats.diameter) == (64, 96, 0)

    def test_wall_forces_watch(self):
        scenario = _build(scenario="flocking_ispl", robots=1, arena={'width': 2, 'height': 2})
        system = scenario.system
        state = system.make_state({
            "Environment.lastDir": "Left", "Robot1.PosX": 1, "Robot1.PosY": 2, "Robot1.dir": "Up",
        })
        assert system.enabled_actions("Robot1", state) == ("Watch",)

    def test_torus_wraps(self):
        cfg = scenario_config(scenario="flocking_ispl", robots=1, arena={'width': 3, 'height': 3, 'topology': 'toroidal'})
        scenario = build_scenario(cfg)
        system = scenario.system
        state = system.make_state({
            "Environment.lastDir": "Up", "Robot1.PosX": 1, "Robot1.PosY": 3, "Robot1.dir": "Up",
        })
        moved = dict(system.joint_successors(state))[("none", "MoveUp")]
        assert system.value(moved, "Robot1", "PosY") == 1

    def test_highest_mover_sets_last_direction(self):
        text = flocking_ispl_text(scenario_config(scenario="flocking_ispl", robots=2))
        assert "lastDir = Up if Robot1.Action = MoveUp and Robot2.Action = Watch;" in text
        assert "lastDir = Up if Robot2.Action = MoveUp;" in text

    @pytest.mark.slow
    def test_two_robots_agree(self):
        scenario, run = _from_config("flocking_ispl_2robots.json")
        verdict = check(scenario, run.formula, budget=run.budget)
        assert verdict.holds, f"Two robots must always agree, got {verdict.status}"
        assert verdict.explored <= 10 ** 7

    @pytest.mark.slow
    def test_three_robots_can_disagree_forever(self):
        scenario, run = _from_config("flocking_ispl_3robots.json")
        verdict = check(scenario, run.formula, budget=run.budget)
        assert verdict.fails
        assert verdict.witness.is_lasso, "The counterexample should be a cycle avoiding consensus"
        assert validate_path(scenario, verdict.witness, run.formula)

    @pytest.mark.slow
    def test_toroidal_verdict_is_definite(self):
        """No verdict is asserted for the torus; it must still be decided within budget."""
        scenario, run = _from_config("flocking_ispl_toroidal.json")
        verdict = check(scenario, run.formula, budget=run.budget)
        assert verdict.holds or verdict.fails
        if verdict.witness is not None:
            assert validate_path(scenario, verdict.witness, run.formula)


class TestFlockingStigmergy:
    """Headings shared through a virtual stigmergy key."""

    def test_equal_headings_never_turn(self):
        scenario = _build(scenario="flocking_vstig", agents=3, initial_directions=[90, 90, 90])
        trace = simulate(scenario, seed=3, max_ticks=150)
        assert not any(e.action.startswith("turn") for e in trace.events)
        assert all(scenario.proposition("aligned")(s) for s in trace.states)

    def test_conflicting_writes_converge(self):
        """Two agents in range converge to the (ts, writer)-maximum entry."""
        scenario = _build(
            scenario="flocking_vstig", agents=2, initial_directions=[0, 180],
            agent_positions=[[5, 5], [5, 6]], comm_range=2,
        )
        trace = simulate(scenario, seed=1, max_ticks=400, stop_when="consensus")
        assert trace.stopped_by == "consensus"
        local = dict(trace.states[-1].locals)
        assert local[AgentId(0)].replica.lookup("direction").writer == AgentId(1)

    def test_simulation_is_reproducible(self):
        scenario, _ = _from_config("flocking_vstig.json")
        assert simulate(scenario, 8, 200).to_jsonl() == simulate(scenario, 8, 200).to_jsonl()


class TestFlockingVoter:
    """Voter-model flocking."""

    def test_single_agent_keeps_direction(self):
        scenario = _build(scenario="flocking_voter", agents=1, initial_directions=[135])
        trace = simulate(scenario, seed=0, max_ticks=100)
        assert all(s.local(AgentId(0)).direction == 135 for s in trace.states)

    def test_pair_reaches_consensus_for_every_seed(self):
        scenario = _build(scenario="flocking_voter", agents=2, topology="complete", initial_directions=[0, 90])
        result = estimate(scenario, "consensus", runs=20, max_ticks=2000, seed=4)
        assert result.hits == result.runs

    def test_zealot_decides_consensus_value(self):
        scenario = _build(
            scenario="flocking_voter", agents=3, topology="complete",
            initial_directions=[0, 90, 180], zealots=[0], voter_period=2,
        )
        for seed in range(10):
            trace = simulate(scenario, seed=seed, max_ticks=500, stop_when="consensus")
            if trace.stopped_by == "consensus":
                final = trace.states[-1]
                assert final.local(AgentId(1)).direction == 0, "Consensus must settle on the zealot's direction"

    @pytest.mark.slow
    def test_complete_ten_agents(self):
        scenario, run = _from_config("flocking_voter.json")
        result = estimate(scenario, run.proposition, run.runs, run.max_ticks, run.seed)
        assert result.fraction >= 0.95, f"Consensus in only {result.fraction:.1%} of runs"


class TestFlockingTupleSpace:
    """Direction queries over attribute predicates, with and without clocks."""

    def test_consensus_reachable(self):
        scenario, run = _from_config("flocking_scel.json", "scenario.initial_directions=[0, 90, 180]")
        verdict = check(scenario, run.formula)
        assert verdict.holds
        assert validate_path(scenario, verdict.witness, run.formula)

    def test_lamport_consensus_reachable(self):
        scenario, run = _from_config("flocking_scel_lamport.json", "scenario.initial_directions=[0, 90, 180]")
        assert check(scenario, run.formula).holds

    def test_isolated_agent_is_stuck(self):
        scenario = _build(scenario="flocking_scel_lamport", agents=1)
        stats = state_space_stats(scenario)
        assert (stats.states, stats.transitions) == (1, 0)

    def _pair(self, a_time):
        definitions = flocking_definitions(lamport=True, clock_bound=4)
        interface = ("pos", "direction", "time", "range")
        a = make_component(0, [
            ktuple("pos", Position(1, 1)), ktuple("range", 2),
            ktuple("direction", 0, a_time), ktuple("time", a_time),
        ], interface, [Call("P")])
        b = make_component(1, [
            ktuple("pos", Position(2, 1)), ktuple("range", 2),
            ktuple("direction", 90, 0), ktuple("time", 0),
        ], interface, [Call("P")])
        return TupleSystem((a, b), definitions, euclidean, 2)

    def test_out_of_date_neighbour_ignored(self):
        system = self._pair(a_time=2)
        assert step_process(system, AgentId(0)) == [], "A neighbour with an older clock must be ignored"

    def test_adopter_clock_passes_source(self):
        system = self._pair(a_time=2)
        for _ in range(3):
            (outcome,) = step_process(system, AgentId(1))
            system = outcome.system
        adopter = system.component(AgentId(1))
        assert adopter.attrs.lookup("direction") == 0
        assert adopter.attrs.lookup("time") == 3
        assert adopter.repo.count(ktuple("direction", 0, 3)) == 1

    def test_clock_is_written_before_direction(self):
        """The adopter publishes its new clock first, then the stamped direction."""
        system = self._pair(a_time=2)
        for _ in range(2):
            (outcome,) = step_process(system, AgentId(1))
            system = outcome.system
        adopter = system.component(AgentId(1))
        assert adopter.repo.count(ktuple("time", 3)) == 1, "The clock must be advanced first"
        assert adopter.repo.count(ktuple("direction", 0, 3)) == 0, "The direction follows the clock"
