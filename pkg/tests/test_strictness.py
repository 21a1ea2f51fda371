import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from verifier.automata_core import Alphabet, MutexRelation
from verifier.contract_model import PARTIES, Modality, clause_universe, other_party, parse_clause
from verifier.errors import BoundExceededError, PreconditionError
from verifier.random_systems import random_isomorphic_pair
from verifier.satisfaction import breach_incapable
from verifier.strictness import (
    COUNTERPARTY_OBLIGATION,
    EXCLUSIVE_OBLIGATION,
    MONOTONICITY,
    OBLIGATION_OVER_PERMISSION,
    POINTWISE,
    ConfigurationSpace,
    OracleBounds,
    ca_stricter,
    clause_of,
    clause_replace_related,
    clause_stricter,
    clause_stricter_semantic,
    clause_stricter_syntactic,
    realize,
    relation_of,
    structurally_isomorphic,
)

O, P = Modality.OBLIGATION, Modality.PERMISSION
SYNC_SETS = [(), ("a",)]


def c(text):
    return parse_clause(text)


class TestObligationOverPermission:
    @pytest.mark.parametrize("sync", SYNC_SETS)
    def test_holds_for_every_literal_and_party(self, sync):
        space = ConfigurationSpace(["a"], sync)
        for party in PARTIES:
            for positive in (True, False):
                weaker = clause_of(P, party, "a", positive)
                stricter = clause_of(O, party, "a", positive)
                verdict = clause_stricter_semantic(weaker, stricter, ["a"], sync, space=space, reverse=False)
                assert all(verdict.forward.values()), f"{weaker} ⊑ {stricter} with G={sync}"


class TestCounterpartyObligation:
    def test_holds_on_a_single_synchronized_action(self):
        verdict = clause_stricter_semantic(c("P<1>(a)"), c("O<2>(a)"), ["a"], ["a"], reverse=False)
        assert verdict.holds

    def test_offer_that_never_fires_breaks_it(self):
        verdict = clause_stricter_semantic(c("P<1>(a)"), c("O<2>(a)"), ["a", "c"], ["a", "c"], reverse=False)
        assert not verdict.holds
        counterexample = verdict.evidence["counterexample"]
        assert counterexample["party"] == 2

    def test_holds_when_every_offer_can_fire(self):
        bounds = OracleBounds(live_offers=True)
        verdict = clause_stricter_semantic(c("P<1>(a)"), c("O<2>(a)"), ["a", "c"], ["a", "c"],
                                           bounds=bounds, reverse=False)
        assert verdict.holds

    @pytest.mark.parametrize("positive", [True, False])
    @pytest.mark.parametrize("party", PARTIES)
    def test_single_synchronized_action(self, party, positive):
        weaker = clause_of(P, party, "a", positive)
        stricter = clause_of(O, other_party(party), "a", positive)
        verdict = clause_stricter_semantic(weaker, stricter, ["a"], ["a"], reverse=False)
        if positive:
            assert verdict.holds
        else:
            # the other party offers {a} and can never be matched
            assert not verdict.holds
            assert verdict.evidence["counterexample"]["party"] == other_party(party)
        live = clause_stricter_semantic(weaker, stricter, ["a"], ["a"], bounds=OracleBounds(live_offers=True),
                                        reverse=False)
        assert live.holds


class TestExclusiveInversions:
    def setup_method(self):
        self.mutex = MutexRelation([("a", "b")])
        self.space = ConfigurationSpace(["a", "b"], (), self.mutex)

    @pytest.mark.parametrize("party", PARTIES)
    def test_obligation_inversion(self, party):
        weaker, stricter = clause_of(O, party, "a", False), clause_of(O, party, "b")
        for p in PARTIES:
            assert self.space.clause_counterexample(p, weaker, stricter) is None

    @pytest.mark.parametrize("party", PARTIES)
    def test_permission_inversion(self, party):
        weaker, stricter = clause_of(P, party, "a", False), clause_of(P, party, "b")
        for p in PARTIES:
            assert self.space.clause_counterexample(p, weaker, stricter) is None

    def test_cross_party_obligation_fails_on_a_lone_move(self):
        found = self.space.clause_counterexample(1, c("O<1>(!b)"), c("O<2>(a)"))
        assert found is not None
        assert any("not viable for party 1" in reason for reason in found.failed)


class TestCrossPartyPermission:
    def setup_method(self):
        self.mutex = MutexRelation([("a", "b")])
        self.weaker, self.stricter = c("P<2>(!b)"), c("P<1>(a)")

    def test_incomparable_with_synchronized_actions(self):
        verdict = clause_stricter_semantic(self.weaker, self.stricter, ["a", "b"], ["a", "b"], self.mutex)
        assert verdict.relation == "incomparable"
        counterexample = verdict.evidence["counterexample"]
        assert counterexample["party"] == 1
        assert counterexample["party1_menu"] == ["{b}"]
        assert counterexample["party2_menu"] == ["{a}", "{b}"]

    def test_counterexample_is_a_real_system(self):
        space = ConfigurationSpace(["a", "b"], ["a", "b"], self.mutex)
        found = space.clause_counterexample(1, self.weaker, self.stricter)
        sigma = Alphabet.of(["a", "b"])
        under_stricter = realize(found, found.context + (self.stricter,), sigma, ["a", "b"], self.mutex)
        under_weaker = realize(found, found.context + (self.weaker,), sigma, ["a", "b"], self.mutex)
        assert breach_incapable(1, under_stricter)
        assert not breach_incapable(1, under_weaker)

    def test_holds_when_nothing_is_synchronized(self):
        space = ConfigurationSpace(["a", "b"], (), self.mutex)
        for p in PARTIES:
            assert space.clause_counterexample(p, self.weaker, self.stricter) is None


class TestPreorder:
    @pytest.mark.parametrize("sync", SYNC_SETS)
    def test_reflexive_and_transitive(self, sync):
        space = ConfigurationSpace(["a"], sync)
        universe = clause_universe(["a"])
        related = np.array([
            [all(space.clause_counterexample(p, w, s) is None for p in PARTIES) for s in universe]
            for w in universe
        ])
        assert related.diagonal().all()
        composed = (related.astype(int) @ related.astype(int)) > 0
        assert not (composed & ~related).any(), "strictness is not transitive"


class TestSyntactic:
    def test_single_rule(self):
        derivation = clause_stricter_syntactic(c("P<1>(a)"), c("O<1>(a)"))
        assert derivation.rules == [OBLIGATION_OVER_PERMISSION]

    def test_chain_uses_transitivity(self):
        mutex = MutexRelation([("a", "b")])
        derivation = clause_stricter_syntactic(c("P<1>(!a)"), c("O<1>(b)"), (), mutex)
        assert derivation.rules[1] == "transitivity"
        assert derivation.steps[0][0] == c("P<1>(!a)")
        assert derivation.steps[-1][1] == c("O<1>(b)")
        assert set(derivation.rules) <= {OBLIGATION_OVER_PERMISSION, EXCLUSIVE_OBLIGATION,
                                         "exclusive-permission-inversion", "transitivity"}

    def test_counterparty_rule_needs_synchronization_and_live_offers(self):
        assert clause_stricter_syntactic(c("P<1>(a)"), c("O<2>(a)"), live_offers=True) is None
        assert clause_stricter_syntactic(c("P<1>(a)"), c("O<2>(a)"), ["a"]) is None
        derivation = clause_stricter_syntactic(c("P<1>(a)"), c("O<2>(a)"), ["a"], live_offers=True)
        assert derivation.rules == [COUNTERPARTY_OBLIGATION]

    def test_exclusive_rules_need_local_actions(self):
        mutex = MutexRelation([("a", "b")])
        assert clause_stricter_syntactic(c("O<1>(!a)"), c("O<1>(b)"), (), mutex).rules == [EXCLUSIVE_OBLIGATION]
        assert clause_stricter_syntactic(c("O<1>(!a)"), c("O<1>(b)"), ["b"], mutex) is None
        assert clause_stricter_syntactic(c("O<1>(!b)"), c("O<2>(a)"), (), mutex, live_offers=True) is None

    def test_reflexivity(self):
        assert clause_stricter_syntactic(c("O<2>(!a)"), c("O<2>(!a)")).rules == ["reflexivity"]

    def test_verdict_in_both_directions(self):
        assert clause_stricter(c("P<1>(a)"), c("O<1>(a)"), ["a"]).relation == "stricter-global"
        assert clause_stricter(c("O<1>(a)"), c("P<1>(a)"), ["a"]).relation == "reverse-stricter"
        assert clause_stricter(c("O<1>(a)"), c("O<1>(a)"), ["a"]).relation == "equivalent"

    @pytest.mark.parametrize("live_offers", [False, True])
    @pytest.mark.parametrize("sync", [(), ("a",), ("b",), ("a", "b")])
    def test_derivations_hold_for_both_parties(self, sync, live_offers):
        bounds = OracleBounds(max_sigma=2, max_menu=3, max_context=1, live_offers=live_offers)
        space = ConfigurationSpace(["a", "b"], sync, bounds=bounds)
        for weaker in clause_universe(["a", "b"]):
            for stricter in clause_universe(["a", "b"]):
                if clause_stricter_syntactic(weaker, stricter, sync, None, ["a", "b"], live_offers) is None:
                    continue
                for p in PARTIES:
                    assert space.clause_counterexample(p, weaker, stricter) is None, f"{weaker} ⊑ {stricter}"

    @pytest.mark.parametrize("live_offers", [False, True])
    def test_exclusive_derivations_hold_for_both_parties(self, live_offers):
        mutex = MutexRelation([("a", "b")])
        space = ConfigurationSpace(["a", "b"], (), mutex, OracleBounds(live_offers=live_offers))
        for weaker in clause_universe(["a", "b"]):
            for stricter in clause_universe(["a", "b"]):
                if clause_stricter_syntactic(weaker, stricter, (), mutex, ["a", "b"], live_offers) is None:
                    continue
                for p in PARTIES:
                    assert space.clause_counterexample(p, weaker, stricter) is None, f"{weaker} ⊑ {stricter}"


class TestRelation:
    def test_relation_names(self):
        assert relation_of({1: True, 2: True}, {1: True, 2: True}) == "equivalent"
        assert relation_of({1: True, 2: False}, {1: False, 2: False}) == "incomparable"
        assert relation_of({1: True}, {1: False}, scope=1) == "stricter-for-party-1"
        assert relation_of({1: False, 2: False}, {1: True, 2: True}) == "reverse-stricter"


class TestContractAutomata:
    def test_monotone_pairs_need_no_oracle(self):
        rng = np.random.default_rng(7)
        weaker, stricter = random_isomorphic_pair(rng, Alphabet.of(["a", "b"]))
        verdict = ca_stricter(weaker, stricter)
        assert verdict.method == MONOTONICITY

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_superset_labelling_is_stricter_pointwise(self, seed):
        rng = np.random.default_rng(seed)
        sigma = Alphabet.of(["a", "b"])
        weaker, stricter = random_isomorphic_pair(rng, sigma)
        assert ca_stricter(weaker, stricter).holds
        space = ConfigurationSpace(sigma, ["a"])
        for q in weaker.states:
            for p in PARTIES:
                assert space.compare(p, weaker.clauses(q), stricter.clauses(q)) is None

    def test_pointwise_when_labellings_cross(self):
        rng = np.random.default_rng(3)
        sigma = Alphabet.of(["a"])
        base, _ = random_isomorphic_pair(rng, sigma, max_states=1)
        weaker = base.with_contract({"c0": [c("P<1>(a)")]}, name="weaker")
        stricter = base.with_contract({"c0": [c("O<1>(a)")]}, name="stricter")
        verdict = ca_stricter(weaker, stricter, ["a"])
        assert verdict.method == POINTWISE
        assert verdict.holds
        assert verdict.relation == "stricter-global"

    def test_rejects_non_isomorphic_automata(self, banking):
        with pytest.raises(PreconditionError):
            ca_stricter(banking.contracts["left"], banking.contract())
        assert structurally_isomorphic(banking.contracts["left"], banking.contract()) is None

    def test_clause_replacement(self, banking):
        left = banking.contracts["left"]
        replaced = left.with_contract({"l0": [c("O<1>(!transfer)")], "l1": [c("O<1>(transfer)")]})
        assert clause_replace_related(left, replaced, c("P<1>(transfer)"), c("O<1>(transfer)"))
        assert not clause_replace_related(left, replaced, c("P<1>(transfer)"), c("O<2>(transfer)"))


class TestBounds:
    def test_alphabet_too_large(self):
        with pytest.raises(BoundExceededError):
            ConfigurationSpace(["a", "b", "c", "d"], bounds=OracleBounds(max_sigma=3))

    @pytest.mark.parametrize("max_context", [0, 1, 2])
    def test_context_bound_is_inclusive(self, max_context):
        space = ConfigurationSpace(["a"], bounds=OracleBounds(max_context=max_context))
        sizes = [len(context) for context in space.contexts()]
        assert max(sizes) == max_context
        assert sizes.count(1) == (len(space.pool) if max_context >= 1 else 0)
