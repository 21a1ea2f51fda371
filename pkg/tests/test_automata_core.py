import pytest
from hypothesis import given, strategies as st

from verifier.automata_core import (
    ActionLiteral,
    Alphabet,
    MultiActionAutomaton,
    MutexRelation,
    Transition,
    action_set,
    acts_of,
    format_action_set,
    label_key,
    next_of,
    powerset,
    validate_mutex,
)
from verifier.errors import ConfigurationError, UnknownStateError

from conftest import label, party

actions = st.sets(st.sampled_from("abcde"), max_size=5)


class TestAlphabet:
    def test_rejects_empty_and_duplicates(self):
        with pytest.raises(ConfigurationError):
            Alphabet.of([])
        with pytest.raises(ConfigurationError):
            Alphabet.of(["a", "a"])

    def test_membership_and_subsets(self, ab):
        assert "a" in ab and "c" not in ab
        assert ab.subsets() == [label(), label("a"), label("b"), label("a", "b")]


class TestLabels:
    @given(actions)
    def test_powerset_size_and_order(self, members):
        subsets = powerset(members)
        assert len(subsets) == 2 ** len(members), "every subset appears once"
        assert subsets == sorted(subsets, key=label_key), "subsets come in label order"

    def test_format_is_sorted(self):
        assert format_action_set({"b", "a"}) == "{a,b}"
        assert format_action_set(set()) == "{}"

    def test_action_set_dedupes(self):
        assert action_set(["b", "a", "a"]) == frozenset({"a", "b"})
        assert action_set() == frozenset()


class TestActionLiteral:
    def test_parse_collapses_double_negation(self):
        assert ActionLiteral.parse("!!a") == ActionLiteral("a")
        assert ActionLiteral.parse(" ! b") == ActionLiteral("b", False)

    @given(st.sampled_from("abc"), st.booleans())
    def test_negation_is_an_involution(self, action, positive):
        literal = ActionLiteral(action, positive)
        assert literal.negate().negate() == literal
        assert literal.negate() != literal

    def test_parse_rejects_empty(self):
        with pytest.raises(ValueError):
            ActionLiteral.parse("!")


class TestMutexRelation:
    def test_symmetric(self):
        mutex = MutexRelation([("a", "b")])
        assert mutex.excludes("a", "b") and mutex.excludes("b", "a")
        assert mutex == MutexRelation([("b", "a")])

    def test_irreflexive(self):
        with pytest.raises(ConfigurationError):
            MutexRelation([("a", "a")])

    def test_allows(self):
        mutex = MutexRelation([("a", "b")])
        assert mutex.allows(label("a", "c"))
        assert not mutex.allows(label("a", "b", "c"))
        assert mutex.violations_in(label("a", "b")) == [("a", "b")]


class TestMultiActionAutomaton:
    def test_acts_and_next(self, ab):
        aut = party("s", ab, [("q", {"a"}, "r"), ("q", set(), "q"), ("r", {"a", "b"}, "q")])
        assert acts_of(aut, "q") == {label(), label("a")}
        assert next_of(aut, "r") == {(label("a", "b"), "q")}

    def test_duplicate_transitions_collapse(self, ab):
        aut = party("s", ab, [("q", {"a"}, "q"), ("q", ["a"], "q")])
        assert len(aut.transitions) == 1

    def test_rejects_unknown_initial_and_undeclared_actions(self, ab):
        with pytest.raises(ConfigurationError):
            MultiActionAutomaton("s", ab, ("q",), "x", ())
        with pytest.raises(ConfigurationError):
            party("s", ab, [("q", {"c"}, "q")])

    def test_unknown_state_lookup(self, ab):
        aut = party("s", ab, [("q", {"a"}, "q")])
        with pytest.raises(UnknownStateError):
            aut.moves("nowhere")

    def test_validate_mutex(self, ab):
        aut = party("s", ab, [("q", {"a", "b"}, "q"), ("q", {"a"}, "q")])
        offending = validate_mutex(aut, MutexRelation([("a", "b")]))
        assert offending == [Transition("q", label("a", "b"), "q")]
        assert validate_mutex(aut, None) == []
