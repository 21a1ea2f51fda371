"""
Per-party contract satisfaction on a regulated system, violation reports with blame,
and breach-incapability.

Blame convention: at a state, party b is blamed when b fails to offer the other
party what that party's permissions and obligations require; on a transition,
party b is blamed when the label is not viable for b's own obligations, unless
the other party moved alone.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from verifier.automata_core import ActionSet, MutexRelation, acts_of, format_action_set, label_key
from verifier.composition import ComposedTransition, JointState, Participation, RegulatedSystem
from verifier.contract_model import Clause, PARTIES, other_party
from verifier.errors import ConfigurationError, PreconditionError

logger = logging.getLogger(__name__)

Location = Union[JointState, ComposedTransition]

PERMISSION = "permission"
OBLIGATION_OFFER = "obligation-offer"
OBLIGATION_TRANSITION = "obligation-transition"


def norms(clauses: Iterable[Clause], party: int) -> Tuple[FrozenSet[str], FrozenSet[str]]:
    """(O_p, F_p) for a clause set"""
    obliged, forbidden = set(), set()
    for clause in clauses:
        if clause.is_obligation and clause.party == party:
            (obliged if clause.literal.positive else forbidden).add(clause.action)
    return frozenset(obliged), frozenset(forbidden)


def minimal_extension(label: ActionSet, obliged: FrozenSet[str], forbidden: FrozenSet[str],
                      local_actions: FrozenSet[str], mutex: Optional[MutexRelation]) -> Optional[ActionSet]:
    """Smallest A' within the local actions making `label | A'` viable and mutex-free.

    Growing A' beyond the missing obligations can only add forbidden or clashing
    actions, so the smallest candidate decides the existential exactly.
    """
    if forbidden & label:
        return None
    missing = obliged - label
    if not missing <= local_actions or missing & forbidden:
        return None
    if mutex and not mutex.allows(label | missing):
        return None
    return frozenset(missing)


@dataclass(frozen=True)
class StateCondition:
    """One existential a blamed party must meet from its menu at a state"""
    kind: str
    clause: Optional[Clause]
    beneficiary: int
    accepts: Callable[[ActionSet], bool]
    obligations: Tuple[Clause, ...] = ()

    def describe(self) -> str:
        return str(self.clause) if self.clause else "obligations(" + ",".join(map(str, self.obligations)) + ")"


def state_conditions(blamed: int, clauses: Iterable[Clause], sync_members: FrozenSet[str],
                     local_actions: FrozenSet[str], mutex: Optional[MutexRelation]) -> List[StateCondition]:
    """Conditions on the blamed party's menu at a contract state with `clauses`"""
    clauses = sorted(set(clauses))
    beneficiary = other_party(blamed)
    obliged, forbidden = norms(clauses, beneficiary)
    conditions: List[StateCondition] = []

    for clause in clauses:
        if not clause.is_permission or clause.party != beneficiary:
            continue
        # Permission to perform local actions cannot be violated
        if clause.action not in sync_members:
            continue
        conditions.append(StateCondition(
            PERMISSION, clause, beneficiary,
            _permission_predicate(clause, obliged, forbidden, local_actions, mutex),
        ))

    if obliged or forbidden:
        obligations = tuple(c for c in clauses if c.is_obligation and c.party == beneficiary)
        conditions.append(StateCondition(
            OBLIGATION_OFFER, None, beneficiary,
            lambda label: minimal_extension(label, obliged, forbidden, local_actions, mutex) is not None,
            obligations,
        ))
    return conditions


def _permission_predicate(clause: Clause, obliged, forbidden, local_actions, mutex) -> Callable[[ActionSet], bool]:
    action = clause.action
    positive = clause.literal.positive

    def accepts(label: ActionSet) -> bool:
        if (action in label) != positive:
            return False
        return minimal_extension(label, obliged, forbidden, local_actions, mutex) is not None

    return accepts


def transition_viable(blamed: int, label: ActionSet, participation: Participation,
                      clauses: Iterable[Clause]) -> bool:
    if participation.moved_alone(other_party(blamed)):
        return True
    obliged, forbidden = norms(clauses, blamed)
    return obliged <= label and not (forbidden & label)


@dataclass
class ViolationReport:
    party: int
    kind: str
    location: Location
    clause: Optional[Clause]
    obligations: Tuple[Clause, ...]
    reason: Dict
    witness_trace: List[ActionSet] = field(default_factory=list)

    @property
    def location_kind(self) -> str:
        return "transition" if isinstance(self.location, ComposedTransition) else "state"

    @property
    def clause_text(self) -> str:
        if self.clause is not None:
            return str(self.clause)
        return "obligations(" + ",".join(str(c) for c in self.obligations) + ")"

    @property
    def state(self) -> JointState:
        return self.location.source if isinstance(self.location, ComposedTransition) else self.location

    def to_dict(self) -> Dict:
        if isinstance(self.location, ComposedTransition):
            location = {"kind": "transition", "transition": {
                "source": str(self.location.source),
                "label": format_action_set(self.location.label),
                "target": str(self.location.target),
                "participation": self.location.participation.value,
            }}
        else:
            location = {"kind": "state", "state": str(self.location)}
        return {
            "party": self.party,
            "location": location,
            "clause": self.clause_text,
            "reason": self.reason,
            "witness_trace": [format_action_set(label) for label in self.witness_trace],
        }

    def to_line(self) -> str:
        where = str(self.location)
        trace = ";".join(format_action_set(label) for label in self.witness_trace) or "-"
        return f"party {self.party} violates {self.clause_text} at {self.location_kind} {where} [{self.kind}] trace={trace}"


@dataclass
class BreachResult:
    party: int
    incapable: bool
    witness: Optional[ViolationReport] = None

    @property
    def witness_trace(self) -> List[ActionSet]:
        return self.witness.witness_trace if self.witness else []

    def __bool__(self) -> bool:
        return self.incapable


class SatisfactionChecker:
    def __init__(self, system: RegulatedSystem):
        """
        Evaluate the satisfaction predicates over one built regulated system.

        Args:
            system (RegulatedSystem): reachable behaviour with parties, sync set and contract
        """
        self.system = system
        self.sync_members = system.sync.members
        self.local_actions = system.sync.complement
        self.stats = {
            'states': 0,
            'transitions': 0,
            'violations': 0,
        }

    def menu(self, party: int, state: JointState) -> List[ActionSet]:
        return sorted(acts_of(self.system.party(party), state.party(party)), key=label_key)

    def clauses_at(self, state: JointState) -> FrozenSet[Clause]:
        return self.system.contract.clauses(state.qa)

    def _conditions(self, blamed: int, state: JointState) -> List[StateCondition]:
        return state_conditions(blamed, self.clauses_at(state), self.sync_members, self.local_actions, self.system.mutex)

    def permission_single(self, state: JointState, party: int, clause: Clause) -> bool:
        if not clause.is_permission:
            raise PreconditionError(f"{clause} is not a permission")
        if clause.party == party:
            return True
        if clause.action not in self.sync_members:
            return True
        obliged, forbidden = norms(self.clauses_at(state), clause.party)
        accepts = _permission_predicate(clause, obliged, forbidden, self.local_actions, self.system.mutex)
        return any(accepts(label) for label in self.menu(party, state))

    def state_failures(self, party: int, state: JointState) -> List[Tuple[StateCondition, List[ActionSet]]]:
        menu = self.menu(party, state)
        return [
            (condition, menu)
            for condition in self._conditions(party, state)
            if not any(condition.accepts(label) for label in menu)
        ]

    def permission_state(self, party: int, state: JointState) -> bool:
        return all(c.kind != PERMISSION for c, _ in self.state_failures(party, state))

    def obligation_state(self, party: int, state: JointState) -> bool:
        return all(c.kind != OBLIGATION_OFFER for c, _ in self.state_failures(party, state))

    def obligation_transition(self, party: int, transition: ComposedTransition) -> bool:
        return transition_viable(party, transition.label, transition.participation, self.clauses_at(transition.source))

    def sat(self, party: int, location: Location) -> bool:
        if isinstance(location, ComposedTransition):
            return self.obligation_transition(party, location)
        return not self.state_failures(party, location)

    def _state_report(self, party: int, state: JointState, condition: StateCondition,
                      menu: List[ActionSet]) -> ViolationReport:
        obliged, forbidden = norms(self.clauses_at(state), condition.beneficiary)
        reason = {
            "rule": condition.kind,
            "blamed_menu": [format_action_set(label) for label in menu],
            "beneficiary": condition.beneficiary,
            "beneficiary_obliged": sorted(obliged),
            "beneficiary_forbidden": sorted(forbidden),
            "extension_space": sorted(self.local_actions),
            "candidates_checked": len(menu),
        }
        if condition.kind == PERMISSION:
            literal = condition.clause.literal
            reason["explanation"] = (
                f"no A in acts(q{party}) with {literal.action} {'in' if literal.positive else 'not in'} A "
                f"and A u A' viable for party {condition.beneficiary}, A' subset of G^c"
            )
        else:
            reason["explanation"] = (
                f"no A in acts(q{party}), A' subset of G^c with A u A' viable for party {condition.beneficiary}"
            )
        return ViolationReport(party, condition.kind, state, condition.clause, condition.obligations,
                               reason, self.system.trace_to(state))

    def _transition_report(self, party: int, transition: ComposedTransition) -> ViolationReport:
        clauses = self.clauses_at(transition.source)
        obliged, forbidden = norms(clauses, party)
        reason = {
            "rule": OBLIGATION_TRANSITION,
            "label": format_action_set(transition.label),
            "participation": transition.participation.value,
            "missing_obliged": sorted(obliged - transition.label),
            "forbidden_performed": sorted(forbidden & transition.label),
            "explanation": f"label not viable for party {party}",
        }
        obligations = tuple(sorted(c for c in clauses if c.is_obligation and c.party == party))
        return ViolationReport(party, OBLIGATION_TRANSITION, transition, None, obligations, reason,
                               self.system.trace_to(transition.source) + [transition.label])

    def find_violations(self, parties: Sequence[int] = PARTIES) -> List[ViolationReport]:
        reports: List[ViolationReport] = []
        for state in self.system.states:
            self.stats['states'] += 1
            for party in parties:
                for condition, menu in self.state_failures(party, state):
                    reports.append(self._state_report(party, state, condition, menu))
            for transition in self.system.moves(state):
                self.stats['transitions'] += 1
                for party in parties:
                    if not self.obligation_transition(party, transition):
                        reports.append(self._transition_report(party, transition))
        self.stats['violations'] = len(reports)
        logger.info(
            f"🔍 Checked {self.stats['states']} states and {self.stats['transitions']} transitions: "
            f"{len(reports)} violations"
        )
        return reports


# MAIN EXECUTION FUNCTIONS

def sat_perm_single(system: RegulatedSystem, state: JointState, party: int, clause: Clause) -> bool:
    return SatisfactionChecker(system).permission_single(state, party, clause)


def sat_perm_state(system: RegulatedSystem, party: int, state: JointState) -> bool:
    return SatisfactionChecker(system).permission_state(party, state)


def sat_obl_transition(system: RegulatedSystem, party: int, transition: ComposedTransition) -> bool:
    return SatisfactionChecker(system).obligation_transition(party, transition)


def sat_obl_state(system: RegulatedSystem, party: int, state: JointState) -> bool:
    return SatisfactionChecker(system).obligation_state(party, state)


def sat(system: RegulatedSystem, party: int, location: Location) -> bool:
    return SatisfactionChecker(system).sat(party, location)


def find_violations(system: RegulatedSystem) -> List[ViolationReport]:
    return SatisfactionChecker(system).find_violations()


def breach_incapable(party: int, system: RegulatedSystem) -> BreachResult:
    """Whether `party` can never be in violation; otherwise the violation with the shortest trace"""
    if system.deadlocks():
        raise ConfigurationError("Breach-incapability is only defined for well-formed systems")
    reports = SatisfactionChecker(system).find_violations(parties=(party,))
    if not reports:
        return BreachResult(party, True)
    witness = min(reports, key=lambda report: len(report.witness_trace))
    logger.info(f"⚠️  Party {party} can breach the contract: {witness.to_line()}")
    return BreachResult(party, False, witness)
