"""
Tests for tuple-space components, attribute-addressed actions and process
stepping.
"""

import pytest

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from swarmcoord.errors import ProcessError
from swarmcoord.kernel import AgentId, Binder, Position, Var, attr, compare, euclidean, ktuple, template, within
from swarmcoord.tuplespace import (
    NIL,
    SELF,
    Call,
    Definition,
    Get,
    Put,
    Qry,
    Repository,
    Succ,
    TupleSystem,
    act_get,
    act_put,
    act_qry,
    choice,
    make_component,
    seq,
    step_process,
    texpr,
    tplexpr,
)

A, B, C = AgentId(0), AgentId(1), AgentId(2)


def _system(*components, definitions=None, bound=None):
    return TupleSystem(tuple(components), definitions or {}, euclidean, bound)


def _swarm(procs_a=(), definitions=None):
    a = make_component(0, [ktuple("pos", Position(1, 1)), ktuple("task", "idle")], ("pos", "task"), procs_a)
    b = make_component(1, [ktuple("pos", Position(1, 2)), ktuple("task", "idle"), ktuple("lock")], ("pos", "task"))
    c = make_component(2, [ktuple("pos", Position(5, 5)), ktuple("task", "work")], ("pos", "task"))
    return _system(a, b, c, definitions=definitions)


class TestRepository:
    """Tests for the multiset of tuples."""

    def test_add_count_remove(self):
        repo = Repository.of([ktuple("food"), ktuple("food"), ktuple("lock")])
        assert repo.count(ktuple("food")) == 2
        assert len(repo) == 3
        repo = repo.remove(ktuple("food"))
        assert repo.count(ktuple("food")) == 1

    def test_remove_absent_raises(self):
        with pytest.raises(KeyError):
            Repository().remove(ktuple("lock"))

    def test_bound_saturates(self):
        repo = Repository()
        for _ in range(5):
            repo = repo.add(ktuple("food"), bound=2)
        assert repo.count(ktuple("food")) == 2

    def test_interface_tuples_are_singletons(self):
        repo = Repository.of([ktuple("pos", Position(1, 1))])
        repo = repo.add(ktuple("pos", Position(2, 1)), singleton_heads=("pos",))
        assert repo.distinct() == [ktuple("pos", Position(2, 1))]

    def test_canonical_order(self):
        one = Repository.of([ktuple("b"), ktuple("a")])
        two = Repository.of([ktuple("a"), ktuple("b")])
        assert one == two, "Insertion order must not matter"


class TestComponent:
    """Tests for exposed attributes."""

    def test_attributes_mirror_interface_tuples(self):
        comp = make_component(0, [ktuple("pos", Position(1, 1)), ktuple("secret", 7)], ("pos",))
        assert comp.attrs.lookup("pos") == Position(1, 1)
        assert comp.attrs.lookup("secret") is None, "Only interface heads are exposed"

    def test_deposit_refreshes_interface(self):
        sys_ = _swarm()
        sys_ = sys_.deposit(A, ktuple("task", "work"))
        assert sys_.component(A).attrs.lookup("task") == "work"
        assert sys_.component(A).repo.count(ktuple("task", "idle")) == 0

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            _system(make_component(0, []), make_component(0, []))


class TestActions:
    """Tests for put, get and qry."""

    def test_put_self(self):
        sys_ = act_put(_swarm(), A, SELF, ktuple("food", Position(3, 3)))
        assert sys_.component(A).repo.count(ktuple("food", Position(3, 3))) == 1

    def test_put_reaches_every_satisfying_component_but_not_actor(self):
        sys_ = act_put(_swarm(), A, within(2), ktuple("hello"))
        assert sys_.component(B).repo.count(ktuple("hello")) == 1
        assert sys_.component(C).repo.count(ktuple("hello")) == 0, "C is out of range"
        assert sys_.component(A).repo.count(ktuple("hello")) == 0, "The actor is never a predicate target"

    def test_put_without_recipients_is_a_no_op(self):
        before = _swarm()
        after = act_put(before, A, compare(attr("task"), "=", "sleep"), ktuple("hello"))
        assert after == before

    def test_get_withdraws_from_matching_component(self):
        outcomes = act_get(_swarm(), A, compare(attr("task"), "=", "idle"), template("lock"))
        assert len(outcomes) == 1
        system, bindings, source = outcomes[0]
        assert source == B
        assert system.component(B).repo.count(ktuple("lock")) == 0

    def test_get_disabled_when_nothing_matches(self):
        assert act_get(_swarm(), A, SELF, template("lock")) == []

    def test_get_one_outcome_per_distinct_match(self):
        sys_ = act_put(_swarm(), A, SELF, ktuple("food", Position(2, 2)))
        sys_ = act_put(sys_, A, SELF, ktuple("food", Position(3, 3)))
        sys_ = act_put(sys_, A, SELF, ktuple("food", Position(3, 3)))
        outcomes = act_get(sys_, A, SELF, template("food", Binder("f")))
        assert sorted(o.bindings["f"] for o in outcomes) == [Position(2, 2), Position(3, 3)]

    def test_qry_leaves_system_unchanged(self):
        before = _swarm()
        outcomes = act_qry(before, A, within(2), template("task", Binder("t")))
        assert [o.bindings["t"] for o in outcomes] == ["idle"]
        assert all(o.system == before for o in outcomes)


class TestProcesses:
    """Tests for process stepping."""

    def test_choice_offers_both_branches(self):
        defs = {'P': Definition("P", (), choice(
            seq(Get(SELF, tplexpr("task", Binder("t"))), NIL),
            seq(Put(SELF, texpr("x")), NIL),
        ))}
        outcomes = step_process(_swarm([Call("P")], defs), A)
        labels = sorted(o.label for o in outcomes)
        assert labels == ['get("task", "idle")@self', 'put("x")@self']
        assert all(o.continuation.is_nil for o in outcomes)

    def test_bindings_flow_into_continuation(self):
        defs = {'P': Definition("P", (), seq(
            Get(SELF, tplexpr("task", Binder("t"))),
            Put(SELF, texpr("seen", Var("t"))),
            NIL,
        ))}
        sys_ = step_process(_swarm([Call("P")], defs), A)[0].system
        (outcome,) = step_process(sys_, A)
        assert outcome.system.component(A).repo.count(ktuple("seen", "idle")) == 1

    def test_parametric_invocation(self):
        defs = {'Q': Definition("Q", ("v",), seq(Put(SELF, texpr("got", Var("v"))), NIL))}
        (outcome,) = step_process(_swarm([Call("Q", (3,))], defs), A)
        assert outcome.system.component(A).repo.count(ktuple("got", 3)) == 1

    def test_blocked_process_has_no_outcome(self):
        defs = {'P': Definition("P", (), seq(Get(SELF, tplexpr("lock")), NIL))}
        assert step_process(_swarm([Call("P")], defs), A) == []

    def test_predicate_target_with_bound_variable(self):
        """A variable in a predicate target is replaced by its bound value before evaluation."""
        defs = {'P': Definition("P", ("here",), seq(
            Get(compare(attr("pos"), "=", Var("here")), tplexpr("lock")),
            NIL,
        ))}
        (outcome,) = step_process(_swarm([Call("P", (Position(1, 2),))], defs), A)
        assert outcome.system.component(B).repo.count(ktuple("lock")) == 0

    def test_saturating_successor(self):
        defs = {'T': Definition("T", (), seq(
            Qry(SELF, tplexpr("time", Binder("t"))),
            Put(SELF, texpr("time", Succ("t", 2))),
            Call("T"),
        ))}
        comp = make_component(0, [ktuple("time", 1)], ("time",), [Call("T")])
        sys_ = _system(comp, definitions=defs)
        for _ in range(6):
            sys_ = step_process(sys_, A)[0].system
        assert sys_.component(A).attrs.lookup("time") == 2, "The clock must stop at its bound"

    def test_unknown_process(self):
        with pytest.raises(ProcessError):
            step_process(_swarm([Call("Missing")], {}), A)

    def test_unbound_variable(self):
        defs = {'P': Definition("P", (), seq(Put(SELF, texpr("x", Var("nope"))), NIL))}
        with pytest.raises(ProcessError):
            step_process(_swarm([Call("P")], defs), A)
