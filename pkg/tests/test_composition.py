import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from verifier.automata_core import Alphabet, MutexRelation
from verifier.composition import (
    JointState,
    Participation,
    SyncSet,
    build_regulated_system,
    check_well_formed,
    sync_compose,
)
from verifier.contract_model import trivial_contract
from verifier.errors import ConfigurationError
from verifier.random_systems import random_party, random_party_pair, random_systems

from conftest import label, party, single_state_contract


def brute_force_moves(s1, s2, sync, mutex, q1, q2):
    """Every label the three composition rules allow at (q1, q2)"""
    g = sync.members
    found = set()
    for a, _ in s1.moves(q1):
        for b, _ in s2.moves(q2):
            if a & g and (a & g) == (b & g) and mutex.allows(a | b):
                found.add(a | b)
    found |= {a for a, _ in s1.moves(q1) if not a & g}
    found |= {b for b, _ in s2.moves(q2) if not b & g}
    return found


class TestCompositionRules:
    def setup_method(self):
        self.sigma = Alphabet.of(["a", "b", "c"])
        self.sync = SyncSet.of(self.sigma, ["a"])

    def test_local_moves_are_interleaved(self):
        s1 = party("s1", self.sigma, [("q", {"b"}, "q1")])
        s2 = party("s2", self.sigma, [("q", {"c"}, "q2")])
        composed = sync_compose(s1, s2, self.sync)
        moves = {(t.label, t.participation) for t in composed.moves(composed.initial)}
        assert moves == {(label("b"), Participation.PARTY1), (label("c"), Participation.PARTY2)}

    def test_joint_move_needs_equal_synchronized_part(self):
        s1 = party("s1", self.sigma, [("q", {"a", "b"}, "q")])
        s2 = party("s2", self.sigma, [("q", {"a", "c"}, "q"), ("q", {"c"}, "q")])
        composed = sync_compose(s1, s2, self.sync)
        joint = [t for t in composed.moves(composed.initial) if t.participation is Participation.BOTH]
        assert [t.label for t in joint] == [label("a", "b", "c")]

    def test_synchronized_action_never_moves_alone(self):
        s1 = party("s1", self.sigma, [("q", {"a"}, "q")])
        s2 = party("s2", self.sigma, [("q", {"b"}, "q")])
        composed = sync_compose(s1, s2, self.sync)
        assert composed.acts(composed.initial) == {label("b")}

    def test_mutex_blocks_joint_union(self):
        mutex = MutexRelation([("b", "c")])
        s1 = party("s1", self.sigma, [("q", {"a", "b"}, "q")])
        s2 = party("s2", self.sigma, [("q", {"a", "c"}, "q")])
        composed = sync_compose(s1, s2, self.sync, mutex)
        assert composed.deadlocks() == [JointState("q", "q")]

    def test_mutex_in_sync_is_rejected(self):
        s1 = party("s1", self.sigma, [("q", {"a"}, "q")])
        with pytest.raises(ConfigurationError):
            sync_compose(s1, s1, self.sync, MutexRelation([("a", "b")]))

    def test_joint_state_text(self):
        assert str(JointState("q1", "q2")) == "(q1,q2)"
        assert str(JointState("q1", "q2", "c")) == "(q1,q2)_{c}"


class TestWellFormedness:
    def test_disagreeing_parties_deadlock(self, ab):
        sync = SyncSet.of(ab, ["a", "b"])
        left = party("left", ab, [("p0", {"a"}, "p0")], initial="p0")
        right = party("right", ab, [("q0", {"b"}, "q0")], initial="q0")
        assert check_well_formed(left, right, sync) == [JointState("p0", "q0")]
        with pytest.raises(ConfigurationError, match="deadlocked"):
            build_regulated_system(left, right, sync, trivial_contract(ab))

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_flags_exactly_the_states_without_rule_applications(self, seed):
        s1, s2, sync, mutex = random_party_pair(np.random.default_rng(seed))
        composed = sync_compose(s1, s2, sync, mutex)
        for state in composed.states:
            expected = brute_force_moves(s1, s2, sync, mutex, state.q1, state.q2)
            assert composed.acts(state) == expected, f"moves differ at {state}"
        flagged = set(check_well_formed(s1, s2, sync, mutex))
        assert flagged == {s for s in composed.states if not composed.acts(s)}


class TestRegulatedSystem:
    def test_contract_layer_follows_every_label(self, ab):
        sync = SyncSet.of(ab, [])
        s1 = party("s1", ab, [("q", {"a"}, "q")])
        s2 = party("s2", ab, [("q", {"b"}, "q")])
        ca = single_state_contract(ab, "O<1>(a)")
        system = build_regulated_system(s1, s2, sync, ca)
        assert system.states == (JointState("q", "q", "c0"),)
        assert {str(t) for t in system.transitions} == {
            "(q,q)_{c0} -{a}-> (q,q)_{c0} [party1-only]",
            "(q,q)_{c0} -{b}-> (q,q)_{c0} [party2-only]",
        }

    def test_trace_to_reaches_state(self, banking):
        system = banking.regulated()
        target = next(s for s in system.states if s.qa == "(l1,r1)")
        assert system.trace_to(target) == [label("login", "malicious")]
        assert system.distance(target) == 1

    def test_rejects_contract_over_other_alphabet(self, ab):
        s1 = party("s1", ab, [("q", {"a"}, "q")])
        other = Alphabet.of(["a", "b", "c"])
        with pytest.raises(ConfigurationError):
            build_regulated_system(s1, s1, SyncSet.of(ab, []), trivial_contract(other))


class TestRandomParties:
    def test_empty_labels_only_when_allowed(self):
        sigma = Alphabet.of(["a"])
        idle = [random_party(np.random.default_rng(seed), "s", sigma, MutexRelation(), empty_labels=0.0)
                for seed in range(50)]
        assert not any(t.label == frozenset() for s in idle for t in s.transitions)
        busy = [random_party(np.random.default_rng(seed), "s", sigma, MutexRelation(), empty_labels=1.0)
                for seed in range(50)]
        assert any(t.label == frozenset() for s in busy for t in s.transitions)

    def test_random_systems_include_idle_moves(self):
        systems = list(random_systems(20121, 100))
        assert any(t.label == frozenset() for system in systems
                   for automaton in system.parties for t in automaton.transitions)
