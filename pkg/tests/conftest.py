"""Shared builders and fixtures for the verifier tests."""

from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple

import pytest

from verifier.automata_core import Alphabet, MultiActionAutomaton, MutexRelation, Transition
from verifier.composition import RegulatedSystem, SyncSet, build_regulated_system
from verifier.contract_model import ContractAutomaton, parse_clause, trivial_contract
from verifier.dsl import SystemFile, load_system

SYSTEMS_DIR = Path(__file__).resolve().parent.parent / "systems"


def label(*actions: str) -> frozenset:
    return frozenset(actions)


def party(name: str, alphabet: Alphabet, moves: Sequence[Tuple[str, Iterable[str], str]],
          initial: str = "q") -> MultiActionAutomaton:
    """Automaton from (source, actions, target) triples; states in order of first mention"""
    states = [initial]
    for source, _, target in moves:
        for state in (source, target):
            if state not in states:
                states.append(state)
    return MultiActionAutomaton(
        name, alphabet, tuple(states), initial,
        tuple(Transition(s, frozenset(a), t) for s, a, t in moves),
    )


def single_state_contract(alphabet: Alphabet, *clauses: str, name: str = "ca") -> ContractAutomaton:
    return trivial_contract(alphabet, name).with_contract({"c0": [parse_clause(c) for c in clauses]})


def menu_system(alphabet: Alphabet, sync: Iterable[str], menu1, menu2, *clauses: str,
                mutex: Optional[MutexRelation] = None) -> RegulatedSystem:
    """Single-state parties looping on their menus under one contract state"""
    s1 = party("s1", alphabet, [("q", m, "q") for m in menu1])
    s2 = party("s2", alphabet, [("q", m, "q") for m in menu2])
    return build_regulated_system(s1, s2, SyncSet.of(alphabet, sync), single_state_contract(alphabet, *clauses), mutex)


@pytest.fixture
def banking() -> SystemFile:
    return load_system(SYSTEMS_DIR / "banking.cva")


@pytest.fixture
def fee() -> SystemFile:
    return load_system(SYSTEMS_DIR / "fee.cva")


@pytest.fixture
def ab() -> Alphabet:
    return Alphabet.of(["a", "b"])
