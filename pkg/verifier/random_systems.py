"""
Seeded random generation of small systems for property sweeps.

Everything draws from a `numpy.random.Generator`, so a seed reproduces the
whole sequence of systems.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from verifier.automata_core import (
    ActionSet,
    Alphabet,
    MultiActionAutomaton,
    MutexRelation,
    Transition,
    powerset,
)
from verifier.composition import RegulatedSystem, SyncSet, build_regulated_system, sync_compose
from verifier.contract_model import (
    And,
    Contains,
    ContractAutomaton,
    Guard,
    GuardArm,
    Not,
    Or,
    clause_universe,
)
from verifier.errors import ConfigurationError

logger = logging.getLogger(__name__)

ACTION_NAMES = ("a", "b", "c", "d", "e")


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    return np.random.default_rng(seed)


def _pick(rng: np.random.Generator, items: List, count: int) -> List:
    if not items or count <= 0:
        return []
    count = min(count, len(items))
    chosen = rng.choice(len(items), size=count, replace=False)
    return [items[i] for i in sorted(chosen)]


def random_alphabet(rng: np.random.Generator, max_sigma: int = 3) -> Alphabet:
    size = int(rng.integers(1, max_sigma + 1))
    return Alphabet.of(ACTION_NAMES[:size])


def random_sync(rng: np.random.Generator, alphabet: Alphabet) -> SyncSet:
    members = [action for action in alphabet if rng.random() < 0.5]
    return SyncSet.of(alphabet, members)


def random_mutex(rng: np.random.Generator, alphabet: Alphabet, sync: SyncSet) -> MutexRelation:
    """Pairs among local actions only, so the sync set stays mutex-free"""
    local = sorted(sync.complement)
    pairs = [(a, b) for i, a in enumerate(local) for b in local[i + 1:] if rng.random() < 0.5]
    return MutexRelation(pairs)


def valid_labels(alphabet: Alphabet, mutex: MutexRelation, allow_empty: bool = False) -> List[ActionSet]:
    return [
        label for label in powerset(alphabet)
        if (allow_empty or label) and mutex.allows(label)
    ]


def random_party(rng: np.random.Generator, name: str, alphabet: Alphabet, mutex: MutexRelation,
                 max_states: int = 3, max_moves: int = 2, empty_labels: float = 0.3) -> MultiActionAutomaton:
    """Every state gets at least one outgoing transition; idle {} moves in a share `empty_labels` of parties"""
    size = int(rng.integers(1, max_states + 1))
    states = tuple(f"{name}{i}" for i in range(size))
    labels = valid_labels(alphabet, mutex, allow_empty=rng.random() < empty_labels)
    transitions = []
    for state in states:
        for label in _pick(rng, labels, int(rng.integers(1, max_moves + 1))):
            transitions.append(Transition(state, label, states[int(rng.integers(size))]))
    return MultiActionAutomaton(name, alphabet, states, states[0], tuple(transitions))


def random_guard(rng: np.random.Generator, alphabet: Alphabet, depth: int = 1) -> Guard:
    action = alphabet.actions[int(rng.integers(len(alphabet)))]
    guard: Guard = Contains(action)
    roll = rng.random()
    if depth <= 0 or roll < 0.4:
        return guard
    if roll < 0.6:
        return Not(guard)
    other = random_guard(rng, alphabet, depth - 1)
    return And(guard, other) if roll < 0.8 else Or(guard, other)


def random_clauses(rng: np.random.Generator, alphabet: Alphabet, max_clauses: int = 3) -> frozenset:
    universe = clause_universe(alphabet)
    return frozenset(_pick(rng, universe, int(rng.integers(0, max_clauses + 1))))


def random_contract(rng: np.random.Generator, alphabet: Alphabet, max_states: int = 3,
                    max_clauses: int = 3, name: str = "ca") -> ContractAutomaton:
    size = int(rng.integers(1, max_states + 1))
    states = tuple(f"c{i}" for i in range(size))
    arms: Dict[str, Tuple[GuardArm, ...]] = {}
    contract: Dict[str, frozenset] = {}
    for state in states:
        arms[state] = tuple(
            GuardArm(random_guard(rng, alphabet), states[int(rng.integers(size))])
            for _ in range(int(rng.integers(0, 3)))
        )
        contract[state] = random_clauses(rng, alphabet, max_clauses)
    return ContractAutomaton(name, alphabet, states, states[0], arms, contract)


def random_party_pair(rng: np.random.Generator, max_sigma: int = 3, max_states: int = 3
                      ) -> Tuple[MultiActionAutomaton, MultiActionAutomaton, SyncSet, MutexRelation]:
    """Two parties over a shared alphabet; the pair may deadlock"""
    alphabet = random_alphabet(rng, max_sigma)
    sync = random_sync(rng, alphabet)
    mutex = random_mutex(rng, alphabet, sync)
    return (
        random_party(rng, "s", alphabet, mutex, max_states),
        random_party(rng, "t", alphabet, mutex, max_states),
        sync,
        mutex,
    )


def random_regulated_system(rng: np.random.Generator, max_sigma: int = 3, max_states: int = 3,
                            max_clauses: int = 3, attempts: int = 200) -> RegulatedSystem:
    """A well-formed regulated system; ill-formed party pairs are redrawn"""
    for _ in range(attempts):
        s1, s2, sync, mutex = random_party_pair(rng, max_sigma, max_states)
        if sync_compose(s1, s2, sync, mutex).deadlocks():
            continue
        ca = random_contract(rng, s1.alphabet, max_states, max_clauses)
        return build_regulated_system(s1, s2, sync, ca, mutex)
    raise ConfigurationError(f"No well-formed system drawn in {attempts} attempts")


def random_isomorphic_pair(rng: np.random.Generator, alphabet: Alphabet, max_states: int = 3,
                           max_clauses: int = 3) -> Tuple[ContractAutomaton, ContractAutomaton]:
    """Two structurally identical contract automata; the second labels a superset in every state"""
    first = random_contract(rng, alphabet, max_states, max_clauses, name="weaker")
    extended = {
        state: first.clauses(state) | random_clauses(rng, alphabet, max_clauses)
        for state in first.states
    }
    return first, first.with_contract(extended, name="stricter")


def random_systems(seed: int, count: int, **bounds) -> List[RegulatedSystem]:
    rng = make_rng(seed)
    systems = [random_regulated_system(rng, **bounds) for _ in range(count)]
    logger.info(f"🎲 Generated {len(systems)} random systems (seed {seed})")
    return systems