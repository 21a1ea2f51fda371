"""
Brute-force satisfaction evaluator.

Re-evaluates every satisfaction formula literally on a built regulated system:
every A' ranging over all subsets of the local actions, no shortcuts, nothing
shared with `verifier.satisfaction` beyond the system itself. Used to cross-check
`find_violations`.
"""

import logging
from typing import FrozenSet, List, Set, Tuple

from verifier.automata_core import ActionSet, acts_of, powerset
from verifier.composition import JointState, RegulatedSystem
from verifier.contract_model import Clause, Modality

logger = logging.getLogger(__name__)

# (party, kind, location, clause text)
ViolationKey = Tuple[int, str, str, str]


def _o(clauses, party) -> Set[str]:
    return {c.literal.action for c in clauses
            if c.modality is Modality.OBLIGATION and c.party == party and c.literal.positive}


def _f(clauses, party) -> Set[str]:
    return {c.literal.action for c in clauses
            if c.modality is Modality.OBLIGATION and c.party == party and not c.literal.positive}


def _viable(clauses, party, label) -> bool:
    return _o(clauses, party) <= set(label) and not (_f(clauses, party) & set(label))


def _mutex_free(system: RegulatedSystem, label) -> bool:
    return all(not (a in label and b in label) for a, b in system.mutex.pairs)


def _extensions(system: RegulatedSystem) -> List[ActionSet]:
    return powerset(system.alphabet.as_set() - system.sync.members)


def _offers(system: RegulatedSystem, offering: int, state: JointState, check) -> bool:
    """Exists A in the offering party's menu and A' over local actions with check(A, A u A')"""
    q = state.q1 if offering == 1 else state.q2
    for label in acts_of(system.party(offering), q):
        for extra in _extensions(system):
            joint = label | extra
            if _mutex_free(system, joint) and check(label, joint):
                return True
    return False


def _obligation_text(clauses, party) -> str:
    chosen = sorted(c for c in clauses if c.modality is Modality.OBLIGATION and c.party == party)
    return "obligations(" + ",".join(str(c) for c in chosen) + ")"


def brute_force_violations(system: RegulatedSystem) -> Set[ViolationKey]:
    found: Set[ViolationKey] = set()
    for state in system.states:
        clauses: FrozenSet[Clause] = system.contract.clauses(state.qa)
        for blamed in (1, 2):
            other = 3 - blamed
            # permissions of the other party
            for clause in clauses:
                if clause.modality is not Modality.PERMISSION or clause.party != other:
                    continue
                if clause.literal.action not in system.sync.members:
                    continue
                wanted = clause.literal

                def permission_check(label, joint, wanted=wanted):
                    present = wanted.action in label
                    return present == wanted.positive and _viable(clauses, other, joint)

                if not _offers(system, blamed, state, permission_check):
                    found.add((blamed, "permission", str(state), str(clause)))
            # obligations of the other party
            if _o(clauses, other) or _f(clauses, other):
                if not _offers(system, blamed, state, lambda label, joint: _viable(clauses, other, joint)):
                    found.add((blamed, "obligation-offer", str(state), _obligation_text(clauses, other)))

    for transition in system.transitions:
        clauses = system.contract.clauses(transition.source.qa)
        for party in (1, 2):
            movers = transition.participation.value
            if movers == f"party{3 - party}-only":
                continue
            if not _viable(clauses, party, transition.label):
                found.add((party, "obligation-transition", str(transition), _obligation_text(clauses, party)))
    logger.debug(f"Brute force found {len(found)} violations on '{system.name}'")
    return found


def report_keys(reports) -> Set[ViolationKey]:
    """The same key shape for `ViolationReport`s"""
    return {(r.party, r.kind, str(r.location), r.clause_text) for r in reports}
