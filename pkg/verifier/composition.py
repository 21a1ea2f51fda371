"""
Synchronous composition of the two party automata and the regulated system built on top.

Only states reachable from the initial pair are materialized, explored breadth
first with outgoing transitions ordered by label, participation and target.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Set, Tuple

import networkx as nx

from verifier.automata_core import (
    ActionSet,
    Alphabet,
    MultiActionAutomaton,
    MutexRelation,
    format_action_set,
    label_key,
)
from verifier.contract_model import ContractAutomaton, validate_ca
from verifier.errors import ConfigurationError, UnknownStateError

logger = logging.getLogger(__name__)


class Participation(str, Enum):
    PARTY1 = "party1-only"
    PARTY2 = "party2-only"
    BOTH = "both"

    @classmethod
    def only(cls, party: int) -> "Participation":
        return cls.PARTY1 if party == 1 else cls.PARTY2

    def swap(self) -> "Participation":
        if self is Participation.BOTH:
            return self
        return Participation.PARTY2 if self is Participation.PARTY1 else Participation.PARTY1

    def moved_alone(self, party: int) -> bool:
        """True when only `party` took part in the move"""
        return self is Participation.only(party)


_PARTICIPATION_ORDER = {Participation.PARTY1: 0, Participation.PARTY2: 1, Participation.BOTH: 2}


class JointState(NamedTuple):
    q1: str
    q2: str
    qa: Optional[str] = None

    def party(self, party: int) -> str:
        return self.q1 if party == 1 else self.q2

    def __str__(self) -> str:
        base = f"({self.q1},{self.q2})"
        return base if self.qa is None else f"{base}_{{{self.qa}}}"


class ComposedTransition(NamedTuple):
    source: JointState
    label: ActionSet
    target: JointState
    participation: Participation

    def __str__(self) -> str:
        return f"{self.source} -{format_action_set(self.label)}-> {self.target} [{self.participation.value}]"


def _move_key(t: ComposedTransition):
    return (label_key(t.label), _PARTICIPATION_ORDER[t.participation], tuple(t.target))


@dataclass(frozen=True)
class SyncSet:
    """The synchronization set G over an alphabet"""
    alphabet: Alphabet
    members: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        undeclared = self.members - self.alphabet.as_set()
        if undeclared:
            raise ConfigurationError(f"Sync set uses undeclared actions: {sorted(undeclared)}")

    @classmethod
    def of(cls, alphabet: Alphabet, members: Iterable[str]) -> "SyncSet":
        return cls(alphabet, frozenset(members))

    @property
    def complement(self) -> FrozenSet[str]:
        return self.alphabet.as_set() - self.members

    def __contains__(self, action: object) -> bool:
        return action in self.members

    def check_mutex(self, mutex: Optional[MutexRelation]) -> None:
        if not mutex:
            return
        clashing = sorted(self.members & mutex.actions())
        if clashing:
            raise ConfigurationError(
                f"Mutually exclusive actions may not be synchronized: {clashing}"
            )


class ComposedAutomaton:
    """Explicit reachable product; immutable once built"""

    def __init__(self, name: str, alphabet: Alphabet, initial: JointState,
                 states: List[JointState], transitions: List[ComposedTransition]):
        self.name = name
        self.alphabet = alphabet
        self.initial = initial
        self.states: Tuple[JointState, ...] = tuple(states)
        self.transitions: Tuple[ComposedTransition, ...] = tuple(transitions)
        self._outgoing: Dict[JointState, List[ComposedTransition]] = {state: [] for state in self.states}
        for t in self.transitions:
            self._outgoing[t.source].append(t)
        self._graph: Optional[nx.DiGraph] = None

    def moves(self, state: JointState) -> Tuple[ComposedTransition, ...]:
        try:
            return tuple(self._outgoing[state])
        except KeyError:
            raise UnknownStateError(self.name, str(state)) from None

    def acts(self, state: JointState) -> Set[ActionSet]:
        return {t.label for t in self.moves(state)}

    def next(self, state: JointState) -> Set[Tuple[ActionSet, JointState]]:
        return {(t.label, t.target) for t in self.moves(state)}

    def deadlocks(self) -> List[JointState]:
        return [state for state in self.states if not self._outgoing[state]]

    def graph(self) -> nx.DiGraph:
        """Behaviour graph; parallel edges keep the first label in exploration order"""
        if self._graph is None:
            graph = nx.DiGraph()
            graph.add_nodes_from(self.states)
            for t in self.transitions:
                if not graph.has_edge(t.source, t.target):
                    graph.add_edge(t.source, t.target, label=t.label)
            self._graph = graph
        return self._graph

    def trace_to(self, state: JointState) -> List[ActionSet]:
        """Shortest sequence of labels leading from the initial state to `state`"""
        graph = self.graph()
        path = nx.shortest_path(graph, self.initial, state)
        return [graph.edges[u, v]["label"] for u, v in zip(path, path[1:])]

    def distance(self, state: JointState) -> int:
        return nx.shortest_path_length(self.graph(), self.initial, state)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, states={len(self.states)}, transitions={len(self.transitions)})"


class RegulatedSystem(ComposedAutomaton):
    """Behaviour of two parties composed over G, then over the full alphabet with a contract automaton"""

    def __init__(self, name: str, parties: Tuple[MultiActionAutomaton, MultiActionAutomaton],
                 sync: SyncSet, mutex: MutexRelation, contract: ContractAutomaton,
                 initial: JointState, states: List[JointState], transitions: List[ComposedTransition]):
        super().__init__(name, parties[0].alphabet, initial, states, transitions)
        self.parties = parties
        self.sync = sync
        self.mutex = mutex
        self.contract = contract

    def party(self, party: int) -> MultiActionAutomaton:
        return self.parties[party - 1]


def _explore(initial: JointState,
             successors: Callable[[JointState], List[ComposedTransition]]) -> Tuple[List[JointState], List[ComposedTransition]]:
    order = [initial]
    seen = {initial}
    transitions: List[ComposedTransition] = []
    index = 0
    while index < len(order):
        state = order[index]
        index += 1
        for t in sorted(set(successors(state)), key=_move_key):
            transitions.append(t)
            if t.target not in seen:
                seen.add(t.target)
                order.append(t.target)
    return order, transitions


def _check_parties(s1: MultiActionAutomaton, s2: MultiActionAutomaton, sync: SyncSet,
                   mutex: Optional[MutexRelation], allow_mutex_in_sync: bool = False) -> None:
    if s1.alphabet.as_set() != s2.alphabet.as_set():
        raise ConfigurationError(f"Parties '{s1.name}' and '{s2.name}' do not share an alphabet")
    if sync.alphabet.as_set() != s1.alphabet.as_set():
        raise ConfigurationError("Sync set is declared over a different alphabet")
    if not allow_mutex_in_sync:
        sync.check_mutex(mutex)


def _joint_moves(s1: MultiActionAutomaton, s2: MultiActionAutomaton, sync: SyncSet,
                 mutex: Optional[MutexRelation], q1: str, q2: str) -> List[Tuple[ActionSet, str, str, Participation]]:
    """The three composition rules applied at (q1, q2)"""
    g = sync.members
    moves = []
    left = s1.moves(q1)
    right = s2.moves(q2)
    for label, target in left:
        if not (label & g):
            moves.append((label, target, q2, Participation.PARTY1))
    for label, target in right:
        if not (label & g):
            moves.append((label, q1, target, Participation.PARTY2))
    for label_a, target_a in left:
        shared = label_a & g
        if not shared:
            continue
        for label_b, target_b in right:
            if (label_b & g) != shared:
                continue
            joint = label_a | label_b
            # Local actions of the two parties may clash on a joint move
            if mutex and not mutex.allows(joint):
                logger.debug(f"Joint move {format_action_set(joint)} at ({q1},{q2}) blocked by mutex")
                continue
            moves.append((joint, target_a, target_b, Participation.BOTH))
    return moves


def sync_compose(s1: MultiActionAutomaton, s2: MultiActionAutomaton, sync: SyncSet,
                 mutex: Optional[MutexRelation] = None, allow_mutex_in_sync: bool = False) -> ComposedAutomaton:
    """S1 ||_G S2 restricted to reachable states; every transition tagged with who moved"""
    _check_parties(s1, s2, sync, mutex, allow_mutex_in_sync)

    def successors(state: JointState) -> List[ComposedTransition]:
        return [
            ComposedTransition(state, label, JointState(t1, t2), tag)
            for label, t1, t2, tag in _joint_moves(s1, s2, sync, mutex, state.q1, state.q2)
        ]

    initial = JointState(s1.initial, s2.initial)
    states, transitions = _explore(initial, successors)
    logger.debug(f"Composed '{s1.name}' || '{s2.name}': {len(states)} states, {len(transitions)} transitions")
    return ComposedAutomaton(f"{s1.name}||{s2.name}", s1.alphabet, initial, states, transitions)


def check_well_formed(s1: MultiActionAutomaton, s2: MultiActionAutomaton, sync: SyncSet,
                      mutex: Optional[MutexRelation] = None) -> List[JointState]:
    """Reachable joint states with no outgoing transition (empty list iff well-formed)"""
    return sync_compose(s1, s2, sync, mutex).deadlocks()


def build_regulated_system(s1: MultiActionAutomaton, s2: MultiActionAutomaton, sync: SyncSet,
                           ca: ContractAutomaton, mutex: Optional[MutexRelation] = None,
                           strict_totality: bool = False, name: Optional[str] = None,
                           allow_mutex_in_sync: bool = False) -> RegulatedSystem:
    """(S1 ||_G S2) ||_Sigma A; the contract layer co-moves on every label and never blocks"""
    mutex = mutex or MutexRelation()
    _check_parties(s1, s2, sync, mutex, allow_mutex_in_sync)
    if ca.alphabet.as_set() != s1.alphabet.as_set():
        raise ConfigurationError(
            f"Contract automaton '{ca.name}' is not over the parties' alphabet"
        )
    ca_report = validate_ca(ca, strict=strict_totality)
    if not ca_report.total:
        raise ConfigurationError(
            f"Contract automaton '{ca.name}' is not total: " + "; ".join(ca_report.errors())
        )

    parties_layer = sync_compose(s1, s2, sync, mutex, allow_mutex_in_sync)
    deadlocked = parties_layer.deadlocks()
    if deadlocked:
        raise ConfigurationError(
            "Parties are not well-formed, deadlocked joint states: " + ", ".join(str(s) for s in deadlocked)
        )

    def successors(state: JointState) -> List[ComposedTransition]:
        return [
            ComposedTransition(state, t.label, JointState(t.target.q1, t.target.q2, ca.step(state.qa, t.label)), t.participation)
            for t in parties_layer.moves(JointState(state.q1, state.q2))
        ]

    initial = JointState(s1.initial, s2.initial, ca.initial)
    states, transitions = _explore(initial, successors)
    logger.info(f"📊 Regulated system built: {len(states)} states, {len(transitions)} transitions")
    return RegulatedSystem(
        name or f"<{s1.name},{s2.name}>^{ca.name}",
        (s1, s2), sync, mutex, ca, initial, states, transitions,
    )
