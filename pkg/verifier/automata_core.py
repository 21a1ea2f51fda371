"""
Alphabets, action literals, action sets, mutual exclusion and multi-action automata.

Transition labels are frozensets of action names. Anything that needs a stable
order (deduplication, printing, exploration) goes through `label_key`.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Set, Tuple

from verifier.errors import ConfigurationError, UnknownStateError

logger = logging.getLogger(__name__)

ActionSet = FrozenSet[str]


def action_set(actions: Iterable[str] = ()) -> ActionSet:
    """Build a transition label from any iterable of action names"""
    return frozenset(actions)


def label_key(label: Iterable[str]) -> Tuple[int, Tuple[str, ...]]:
    """Canonical sort key: smaller labels first, then lexicographic"""
    members = tuple(sorted(label))
    return (len(members), members)


def format_action_set(label: Iterable[str]) -> str:
    return "{" + ",".join(sorted(label)) + "}"


def powerset(actions: Iterable[str]) -> List[ActionSet]:
    """Every subset of `actions`, in `label_key` order"""
    ordered = sorted(set(actions))
    subsets = [
        frozenset(combo)
        for size in range(len(ordered) + 1)
        for combo in combinations(ordered, size)
    ]
    return sorted(subsets, key=label_key)


@dataclass(frozen=True)
class Alphabet:
    actions: Tuple[str, ...]

    def __post_init__(self):
        if len(self.actions) < 1:
            raise ConfigurationError("Alphabet must declare at least one action")
        seen: Set[str] = set()
        for action in self.actions:
            if not isinstance(action, str) or not action:
                raise ConfigurationError(f"Invalid action name: {action!r}")
            if action in seen:
                raise ConfigurationError(f"Duplicate action in alphabet: {action}")
            seen.add(action)

    @classmethod
    def of(cls, actions: Iterable[str]) -> "Alphabet":
        return cls(tuple(actions))

    def __contains__(self, action: object) -> bool:
        return action in self.actions

    def __iter__(self):
        return iter(self.actions)

    def __len__(self) -> int:
        return len(self.actions)

    def as_set(self) -> ActionSet:
        return frozenset(self.actions)

    def subsets(self) -> List[ActionSet]:
        return powerset(self.actions)


@dataclass(frozen=True, order=True)
class ActionLiteral:
    """An action `a` (positive) or its absence `!a` (negative)"""
    action: str
    positive: bool = True

    def negate(self) -> "ActionLiteral":
        return ActionLiteral(self.action, not self.positive)

    def __str__(self) -> str:
        return self.action if self.positive else f"!{self.action}"

    @classmethod
    def parse(cls, text: str) -> "ActionLiteral":
        text = text.strip()
        positive = True
        # `!!a` is accepted and collapses, matching the involution
        while text.startswith("!"):
            positive = not positive
            text = text[1:].strip()
        if not text:
            raise ValueError("Empty action literal")
        return cls(text, positive)


class MutexRelation:
    """Symmetric, irreflexive set of mutually exclusive action pairs"""

    def __init__(self, pairs: Iterable[Tuple[str, str]] = ()):
        normalized = set()
        for a, b in pairs:
            if a == b:
                raise ConfigurationError(f"An action cannot exclude itself: {a}#{b}")
            normalized.add(frozenset((a, b)))
        self._pairs: FrozenSet[FrozenSet[str]] = frozenset(normalized)

    @property
    def pairs(self) -> List[Tuple[str, str]]:
        return sorted(tuple(sorted(pair)) for pair in self._pairs)

    def excludes(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self._pairs

    def actions(self) -> Set[str]:
        return {action for pair in self._pairs for action in pair}

    def partners(self, action: str) -> Set[str]:
        return {other for pair in self._pairs if action in pair for other in pair if other != action}

    def violations_in(self, label: Iterable[str]) -> List[Tuple[str, str]]:
        members = set(label)
        return [pair for pair in self.pairs if pair[0] in members and pair[1] in members]

    def allows(self, label: Iterable[str]) -> bool:
        return not self.violations_in(label)

    def __len__(self) -> int:
        return len(self._pairs)

    def __bool__(self) -> bool:
        return bool(self._pairs)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, MutexRelation) and self._pairs == other._pairs

    def __hash__(self) -> int:
        return hash(self._pairs)

    def __repr__(self) -> str:
        return "MutexRelation(" + ", ".join(f"{a}#{b}" for a, b in self.pairs) + ")"


class Transition(NamedTuple):
    source: str
    label: ActionSet
    target: str

    def __str__(self) -> str:
        return f"{self.source} -{format_action_set(self.label)}-> {self.target}"


@dataclass(frozen=True)
class MultiActionAutomaton:
    """A party behaviour: states, an initial state and set-labelled transitions"""
    name: str
    alphabet: Alphabet
    states: Tuple[str, ...]
    initial: str
    transitions: Tuple[Transition, ...]
    _outgoing: Dict[str, Tuple[Tuple[ActionSet, str], ...]] = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        if len(set(self.states)) != len(self.states):
            raise ConfigurationError(f"Duplicate state ids in automaton '{self.name}'")
        if self.initial not in self.states:
            raise ConfigurationError(
                f"Initial state '{self.initial}' is not a state of automaton '{self.name}'"
            )
        known = set(self.states)
        sigma = self.alphabet.as_set()
        unique: Dict[Tuple[str, Tuple, str], Transition] = {}
        for t in self.transitions:
            if t.source not in known or t.target not in known:
                raise ConfigurationError(f"Transition {t} of '{self.name}' uses an unknown state")
            undeclared = set(t.label) - sigma
            if undeclared:
                raise ConfigurationError(
                    f"Transition {t} of '{self.name}' uses undeclared actions: {sorted(undeclared)}"
                )
            unique[(t.source, label_key(t.label), t.target)] = Transition(
                t.source, frozenset(t.label), t.target
            )
        ordered = tuple(unique[key] for key in sorted(unique, key=lambda k: (k[0], k[1], k[2])))
        object.__setattr__(self, "transitions", ordered)

        outgoing: Dict[str, List[Tuple[ActionSet, str]]] = {state: [] for state in self.states}
        for t in ordered:
            outgoing[t.source].append((t.label, t.target))
        object.__setattr__(
            self, "_outgoing", {state: tuple(moves) for state, moves in outgoing.items()}
        )

    def moves(self, state: str) -> Tuple[Tuple[ActionSet, str], ...]:
        try:
            return self._outgoing[state]
        except KeyError:
            raise UnknownStateError(self.name, state) from None

    def __repr__(self) -> str:
        return (
            f"MultiActionAutomaton({self.name!r}, states={len(self.states)}, "
            f"transitions={len(self.transitions)})"
        )


def acts_of(aut: MultiActionAutomaton, q: str) -> Set[ActionSet]:
    """Action sets on the outgoing transitions of `q`"""
    return {label for label, _ in aut.moves(q)}


def next_of(aut: MultiActionAutomaton, q: str) -> Set[Tuple[ActionSet, str]]:
    """(action set, target) pairs of the outgoing transitions of `q`"""
    return set(aut.moves(q))


def validate_mutex(aut: MultiActionAutomaton, mutex: Optional[MutexRelation]) -> List[Transition]:
    """Transitions whose label contains both members of some mutex pair"""
    if not mutex:
        return []
    offending = [t for t in aut.transitions if not mutex.allows(t.label)]
    for t in offending:
        logger.debug(f"Mutex offence in '{aut.name}': {t} contains {mutex.violations_in(t.label)}")
    return offending
