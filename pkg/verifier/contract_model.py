"""
Deontic clauses and contract automata.

Only obligations and permissions are stored. Prohibition is accepted at the
edges (DSL, CLI) and rewritten to an obligation over the inverted literal.

A contract automaton keeps, per state, an ordered list of guarded arms. The
first arm whose guard holds for a label decides the successor; when none holds
the automaton stays put (implicit else) unless it was built with
`implicit_else=False`.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

from verifier.automata_core import (
    ActionLiteral,
    ActionSet,
    Alphabet,
    format_action_set,
    label_key,
    powerset,
)
from verifier.errors import ConfigurationError, UnknownStateError

logger = logging.getLogger(__name__)

PARTIES = (1, 2)

# Guards mentioning more distinct actions than this are not enumerated
MAX_GUARD_ATOMS = 16


def other_party(party: int) -> int:
    if party not in PARTIES:
        raise ValueError(f"Party must be 1 or 2, got {party!r}")
    return 3 - party


class Modality(str, Enum):
    OBLIGATION = "O"
    PERMISSION = "P"


@dataclass(frozen=True, order=True)
class Clause:
    modality: Modality
    party: int
    literal: ActionLiteral

    def __post_init__(self):
        if self.party not in PARTIES:
            raise ValueError(f"Clause party must be 1 or 2, got {self.party!r}")

    @property
    def action(self) -> str:
        return self.literal.action

    @property
    def is_permission(self) -> bool:
        return self.modality is Modality.PERMISSION

    @property
    def is_obligation(self) -> bool:
        return self.modality is Modality.OBLIGATION

    def __str__(self) -> str:
        return f"{self.modality.value}<{self.party}>({self.literal})"

    def __repr__(self) -> str:
        return f"Clause({self})"


_CLAUSE_PATTERN = re.compile(r"^\s*([OPF])\s*<\s*([A-Za-z0-9_]+)\s*>\s*\(\s*(!*\s*[A-Za-z_][A-Za-z0-9_]*)\s*\)\s*$")


def desugar_prohibition(party: int, literal: ActionLiteral) -> Clause:
    """F_p(x) is the obligation O_p(!x)"""
    return Clause(Modality.OBLIGATION, party, literal.negate())


def negate_clause(clause: Clause) -> Clause:
    """Opposite norm: !P_p(x) = O_p(!x) and !O_p(x) = P_p(!x)"""
    flipped = (
        Modality.OBLIGATION if clause.modality is Modality.PERMISSION else Modality.PERMISSION
    )
    return Clause(flipped, clause.party, clause.literal.negate())


def parse_clause(text: str, party_aliases: Optional[Mapping[str, int]] = None) -> Clause:
    """Parse the ASCII clause syntax `O<1>(a)`, `P<2>(!b)`, `F<1>(c)`"""
    match = _CLAUSE_PATTERN.match(text)
    if not match:
        raise ValueError(f"Malformed clause: {text!r} (expected e.g. O<1>(a), P<2>(!b), F<1>(c))")
    kind, party_text, literal_text = match.groups()
    if party_text in ("1", "2"):
        party = int(party_text)
    elif party_aliases and party_text in party_aliases:
        party = party_aliases[party_text]
    else:
        raise ValueError(f"Unknown party '{party_text}' in clause {text!r}")
    literal = ActionLiteral.parse(literal_text)
    if kind == "F":
        return desugar_prohibition(party, literal)
    return Clause(Modality(kind), party, literal)


def clause_universe(actions: Iterable[str]) -> List[Clause]:
    """Every clause over the given actions, in a fixed order"""
    return sorted(
        Clause(modality, party, ActionLiteral(action, positive))
        for modality in Modality
        for party in PARTIES
        for action in sorted(set(actions))
        for positive in (True, False)
    )


# Guards


class Guard:
    """Boolean condition over a transition label"""

    def holds(self, label: ActionSet) -> bool:
        raise NotImplementedError

    def atoms(self) -> Set[str]:
        raise NotImplementedError


@dataclass(frozen=True)
class Contains(Guard):
    action: str

    def holds(self, label: ActionSet) -> bool:
        return self.action in label

    def atoms(self) -> Set[str]:
        return {self.action}

    def __str__(self) -> str:
        return f"contains({self.action})"


@dataclass(frozen=True)
class Not(Guard):
    operand: Guard

    def holds(self, label: ActionSet) -> bool:
        return not self.operand.holds(label)

    def atoms(self) -> Set[str]:
        return self.operand.atoms()

    def __str__(self) -> str:
        return f"not {_wrap(self.operand)}"


@dataclass(frozen=True)
class And(Guard):
    left: Guard
    right: Guard

    def holds(self, label: ActionSet) -> bool:
        return self.left.holds(label) and self.right.holds(label)

    def atoms(self) -> Set[str]:
        return self.left.atoms() | self.right.atoms()

    def __str__(self) -> str:
        return f"{_wrap(self.left)} and {_wrap(self.right)}"


@dataclass(frozen=True)
class Or(Guard):
    left: Guard
    right: Guard

    def holds(self, label: ActionSet) -> bool:
        return self.left.holds(label) or self.right.holds(label)

    def atoms(self) -> Set[str]:
        return self.left.atoms() | self.right.atoms()

    def __str__(self) -> str:
        return f"{_wrap(self.left)} or {_wrap(self.right)}"


@dataclass(frozen=True)
class Else(Guard):
    """Matches every label"""

    def holds(self, label: ActionSet) -> bool:
        return True

    def atoms(self) -> Set[str]:
        return set()

    def __str__(self) -> str:
        return "else"


def _wrap(guard: Guard) -> str:
    return str(guard) if isinstance(guard, (Contains, Else)) else f"({guard})"


@dataclass(frozen=True)
class GuardArm:
    guard: Guard
    target: str

    def __str__(self) -> str:
        if isinstance(self.guard, Else):
            return f"else -> {self.target}"
        return f"on {self.guard} -> {self.target}"


# Contract automata


@dataclass(frozen=True, eq=False)
class ContractAutomaton:
    name: str
    alphabet: Alphabet
    states: Tuple[str, ...]
    initial: str
    arms: Mapping[str, Tuple[GuardArm, ...]]
    contract: Mapping[str, FrozenSet[Clause]]
    implicit_else: bool = True
    _atoms: Dict[str, FrozenSet[str]] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.states)) != len(self.states):
            raise ConfigurationError(f"Duplicate state ids in contract automaton '{self.name}'")
        if self.initial not in self.states:
            raise ConfigurationError(
                f"Initial state '{self.initial}' is not a state of contract automaton '{self.name}'"
            )
        known = set(self.states)
        sigma = self.alphabet.as_set()
        arms = {state: tuple(self.arms.get(state, ())) for state in self.states}
        contract = {state: frozenset(self.contract.get(state, ())) for state in self.states}
        extra = (set(self.arms) | set(self.contract)) - known
        if extra:
            raise ConfigurationError(f"Contract automaton '{self.name}' labels unknown states: {sorted(extra)}")
        atoms = {}
        for state, state_arms in arms.items():
            state_atoms: Set[str] = set()
            for arm in state_arms:
                if arm.target not in known:
                    raise ConfigurationError(
                        f"Arm '{arm}' of state '{state}' in '{self.name}' targets an unknown state"
                    )
                state_atoms |= arm.guard.atoms()
            undeclared = state_atoms - sigma
            if undeclared:
                raise ConfigurationError(
                    f"Guards of state '{state}' in '{self.name}' use undeclared actions: {sorted(undeclared)}"
                )
            for clause in contract[state]:
                if clause.action not in sigma:
                    raise ConfigurationError(
                        f"Clause {clause} in state '{state}' of '{self.name}' uses an undeclared action"
                    )
            atoms[state] = frozenset(state_atoms)
        object.__setattr__(self, "arms", arms)
        object.__setattr__(self, "contract", contract)
        object.__setattr__(self, "_atoms", atoms)

    def _check(self, state: str) -> None:
        if state not in self.arms:
            raise UnknownStateError(self.name, state)

    def clauses(self, state: str) -> FrozenSet[Clause]:
        self._check(state)
        return self.contract[state]

    def guard_atoms(self, state: str) -> FrozenSet[str]:
        self._check(state)
        return self._atoms[state]

    def matching_arm(self, state: str, label: ActionSet) -> Optional[GuardArm]:
        self._check(state)
        for arm in self.arms[state]:
            if arm.guard.holds(label):
                return arm
        return None

    def step(self, state: str, label: ActionSet) -> str:
        arm = self.matching_arm(state, label)
        if arm is not None:
            return arm.target
        if self.implicit_else:
            return state
        raise ConfigurationError(
            f"Contract automaton '{self.name}' is not total: no arm of state '{state}' "
            f"matches {format_action_set(label)}"
        )

    def representative_labels(self, state: str) -> List[ActionSet]:
        """One label per assignment of the actions the state's guards mention.

        Guards only look at those actions, so these labels exercise every arm
        the state can take.
        """
        atoms = self.guard_atoms(state)
        if len(atoms) > MAX_GUARD_ATOMS:
            raise ConfigurationError(
                f"State '{state}' of '{self.name}' has guards over {len(atoms)} actions "
                f"(limit {MAX_GUARD_ATOMS})"
            )
        return powerset(atoms)

    def successors(self, state: str) -> List[Tuple[ActionSet, str]]:
        """Distinct successors of `state`, each with the smallest label reaching it"""
        seen: Dict[str, ActionSet] = {}
        for label in self.representative_labels(state):
            target = self.step(state, label)
            if target not in seen:
                seen[target] = label
        return sorted(((label, target) for target, label in seen.items()), key=lambda m: (label_key(m[0]), m[1]))

    def reachable_states(self) -> List[str]:
        order = [self.initial]
        seen = {self.initial}
        index = 0
        while index < len(order):
            for _, target in self.successors(order[index]):
                if target not in seen:
                    seen.add(target)
                    order.append(target)
            index += 1
        return order

    def with_contract(self, contract: Mapping[str, Iterable[Clause]], name: Optional[str] = None) -> "ContractAutomaton":
        """Same structure, different clause labelling"""
        return ContractAutomaton(
            name=name or self.name,
            alphabet=self.alphabet,
            states=self.states,
            initial=self.initial,
            arms=self.arms,
            contract={state: frozenset(contract.get(state, ())) for state in self.states},
            implicit_else=self.implicit_else,
        )

    def __repr__(self) -> str:
        return f"ContractAutomaton({self.name!r}, states={len(self.states)})"


def trivial_contract(alphabet: Alphabet, name: str = "trivial") -> ContractAutomaton:
    """One state, no clauses, every label loops"""
    return ContractAutomaton(name, alphabet, ("c0",), "c0", {"c0": ()}, {"c0": frozenset()})


def obliged_set(ca: ContractAutomaton, state: str, party: int) -> Set[str]:
    """O_p: actions party must perform"""
    return {
        c.action for c in ca.clauses(state)
        if c.is_obligation and c.party == party and c.literal.positive
    }


def forbidden_set(ca: ContractAutomaton, state: str, party: int) -> Set[str]:
    """F_p: actions party is obliged not to perform"""
    return {
        c.action for c in ca.clauses(state)
        if c.is_obligation and c.party == party and not c.literal.positive
    }


def viable_for(obliged: Set[str], forbidden: Set[str], label: Iterable[str]) -> bool:
    members = set(label)
    return obliged <= members and not (forbidden & members)


def viable(ca: ContractAutomaton, party: int, state: str, label: ActionSet) -> bool:
    return viable_for(obliged_set(ca, state, party), forbidden_set(ca, state, party), label)


def ca_step(ca: ContractAutomaton, state: str, label: ActionSet) -> str:
    return ca.step(state, label)


def product_state_name(left: str, right: str) -> str:
    return f"({left},{right})"


def ca_conjoin(first: ContractAutomaton, second: ContractAutomaton, name: Optional[str] = None) -> ContractAutomaton:
    """Synchronous product of two contract automata; each pair carries both clause sets.

    Only pairs reachable from the pair of initial states are materialized.
    """
    if first.alphabet.as_set() != second.alphabet.as_set():
        raise ConfigurationError(
            f"Cannot conjoin '{first.name}' and '{second.name}': alphabets differ"
        )
    name = name or f"{first.name}&{second.name}"
    initial = (first.initial, second.initial)
    order = [initial]
    seen = {initial}
    arms: Dict[str, Tuple[GuardArm, ...]] = {}
    contract: Dict[str, FrozenSet[Clause]] = {}
    index = 0
    while index < len(order):
        q, r = order[index]
        index += 1
        pair_name = product_state_name(q, r)
        contract[pair_name] = first.clauses(q) | second.clauses(r)

        left_arms = list(first.arms[q]) + [GuardArm(Else(), q)]
        right_arms = list(second.arms[r]) + [GuardArm(Else(), r)]
        # Lexicographic first match over (left, right) arms equals the
        # componentwise first match, because the right list always ends in else.
        product_arms = []
        for left_arm, right_arm in product(left_arms, right_arms):
            target = (left_arm.target, right_arm.target)
            product_arms.append(
                GuardArm(_conjoin_guards(left_arm.guard, right_arm.guard), product_state_name(*target))
            )
        atoms = first.guard_atoms(q) | second.guard_atoms(r)
        if len(atoms) > MAX_GUARD_ATOMS:
            raise ConfigurationError(f"Guards of {pair_name} mention too many actions to conjoin")
        for label in powerset(atoms):
            target = (first.step(q, label), second.step(r, label))
            if target not in seen:
                seen.add(target)
                order.append(target)
        arms[pair_name] = tuple(_prune_arms(product_arms, pair_name))

    states = tuple(product_state_name(q, r) for q, r in order)
    logger.debug(f"Conjoined '{first.name}' and '{second.name}' into {len(states)} states")
    return ContractAutomaton(
        name=name,
        alphabet=first.alphabet,
        states=states,
        initial=product_state_name(*initial),
        arms=arms,
        contract=contract,
        implicit_else=True,
    )


def _conjoin_guards(left: Guard, right: Guard) -> Guard:
    if isinstance(left, Else):
        return right
    if isinstance(right, Else):
        return left
    return And(left, right)


def _prune_arms(arms: List[GuardArm], state: str) -> List[GuardArm]:
    """Drop arms after the first unconditional one and a trailing self-loop else"""
    pruned = []
    for arm in arms:
        pruned.append(arm)
        if isinstance(arm.guard, Else):
            break
    if pruned and isinstance(pruned[-1].guard, Else) and pruned[-1].target == state:
        pruned.pop()
    return pruned


@dataclass
class CaValidationReport:
    """Outcome of validate_ca: errors make the automaton unusable, warnings do not"""
    automaton: str
    non_total: Dict[str, ActionSet] = field(default_factory=dict)
    implicit_else_states: List[str] = field(default_factory=list)
    unreachable_states: List[str] = field(default_factory=list)

    @property
    def total(self) -> bool:
        return not self.non_total

    def errors(self) -> List[str]:
        return [
            f"state '{state}' has no arm for label {format_action_set(label)}"
            for state, label in self.non_total.items()
        ]

    def warnings(self) -> List[str]:
        notes = [f"state '{state}' relies on the implicit else self-loop" for state in self.implicit_else_states]
        notes += [f"state '{state}' is unreachable" for state in self.unreachable_states]
        return notes


def validate_ca(ca: ContractAutomaton, strict: bool = False) -> CaValidationReport:
    """Check guard totality per state and look for unreachable states.

    Totality is decided exactly by enumerating assignments of the actions each
    state's guards mention. With `strict`, the implicit else does not count.
    """
    report = CaValidationReport(ca.name)
    for state in ca.states:
        for label in ca.representative_labels(state):
            if ca.matching_arm(state, label) is None:
                if strict or not ca.implicit_else:
                    report.non_total[state] = label
                else:
                    report.implicit_else_states.append(state)
                break
    reachable = set(_reachable_with_self_loops(ca))
    report.unreachable_states = [state for state in ca.states if state not in reachable]
    return report


def _reachable_with_self_loops(ca: ContractAutomaton) -> List[str]:
    """Reachability where an unmatched label stays in place, even for strict automata"""
    order = [ca.initial]
    seen = {ca.initial}
    index = 0
    while index < len(order):
        state = order[index]
        index += 1
        for label in ca.representative_labels(state):
            arm = ca.matching_arm(state, label)
            target = arm.target if arm is not None else state
            if target not in seen:
                seen.add(target)
                order.append(target)
    return order
