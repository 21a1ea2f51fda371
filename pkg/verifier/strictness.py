"""
Strictness between clauses and between contract automata.

`C ⊑ C'` reads "C' is at least as strict as C": whenever a party is satisfied
under C' it is also satisfied under C. Three procedures decide it:

* a syntactic relation closed under reflexivity and transitivity over the
  theorem rules (a networkx graph; a missing path is not a disproof),
* an exhaustive oracle over bounded configurations, vectorized with numpy
  bitmasks. A configuration is a single-state regulated system: a clause set,
  one menu of labels per party, and every move the composition derives from
  the two menus. Ill-formed (deadlocked) configurations are skipped, so every
  counterexample is a real system,
* for structurally isomorphic contract automata, the monotonicity fast path
  and the pointwise check on paired states.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from verifier.automata_core import (
    ActionLiteral,
    ActionSet,
    Alphabet,
    MultiActionAutomaton,
    MutexRelation,
    Transition,
    format_action_set,
    powerset,
)
from verifier.composition import Participation, RegulatedSystem, SyncSet, build_regulated_system
from verifier.contract_model import (
    MAX_GUARD_ATOMS,
    PARTIES,
    Clause,
    ContractAutomaton,
    Modality,
    clause_universe,
    other_party,
    trivial_contract,
)
from verifier.errors import BoundExceededError, ConfigurationError, PreconditionError
from verifier.satisfaction import state_conditions, transition_viable

logger = logging.getLogger(__name__)

SYNTACTIC = "syntactic"
SEMANTIC = "semantic-oracle"
MONOTONICITY = "monotonicity"
POINTWISE = "pointwise"

OBLIGATION_OVER_PERMISSION = "obligation-over-permission"
COUNTERPARTY_OBLIGATION = "counterparty-obligation-over-permission"
EXCLUSIVE_OBLIGATION = "exclusive-obligation-inversion"
EXCLUSIVE_PERMISSION = "exclusive-permission-inversion"
EXCLUSIVE_CROSS_PARTY = "exclusive-cross-party-obligation"


@dataclass(frozen=True)
class OracleBounds:
    """
    Enumeration limits of the semantic oracle.

    `max_context` is inclusive: contexts of 0 up to `max_context` extra
    clauses are tried. `live_offers` keeps only configurations where every
    offered label takes part in at least one composed move.
    """
    max_sigma: int = 3
    max_menu: int = 4
    max_context: int = 2
    live_offers: bool = False

    def to_dict(self) -> Dict:
        return {
            "max_sigma": self.max_sigma,
            "max_menu": self.max_menu,
            "max_context": self.max_context,
            "live_offers": self.live_offers,
        }


# Structural isomorphism


@dataclass(frozen=True)
class IsoWitness:
    """State bijection between two contract automata (reachable parts)"""
    mapping: Tuple[Tuple[str, str], ...]

    def as_dict(self) -> Dict[str, str]:
        return dict(self.mapping)

    def __call__(self, state: str) -> str:
        return self.as_dict()[state]


def structurally_isomorphic(first: ContractAutomaton, second: ContractAutomaton) -> Optional[IsoWitness]:
    """Simultaneous traversal from the initial states; clause labellings are ignored"""
    if first.alphabet.as_set() != second.alphabet.as_set():
        return None
    forward = {first.initial: second.initial}
    backward = {second.initial: first.initial}
    order = [(first.initial, second.initial)]
    index = 0
    while index < len(order):
        q, r = order[index]
        index += 1
        atoms = first.guard_atoms(q) | second.guard_atoms(r)
        if len(atoms) > MAX_GUARD_ATOMS:
            raise ConfigurationError(f"Guards of {q}/{r} mention too many actions to compare")
        for label in powerset(atoms):
            t1, t2 = first.step(q, label), second.step(r, label)
            if forward.get(t1, t2) != t2 or backward.get(t2, t1) != t1:
                logger.debug(f"Structures differ at ({q},{r}) on {format_action_set(label)}")
                return None
            if t1 not in forward:
                forward[t1] = t2
                backward[t2] = t1
                order.append((t1, t2))
    return IsoWitness(tuple(forward.items()))


@dataclass(frozen=True)
class ReplaceResult:
    related: bool
    note: str = ""

    def __bool__(self) -> bool:
        return self.related


def clause_replace_related(first: ContractAutomaton, second: ContractAutomaton,
                           clause: Clause, replacement: Clause) -> ReplaceResult:
    """Whether `second` is `first` with some occurrences of `clause` swapped for `replacement`"""
    witness = structurally_isomorphic(first, second)
    if witness is None:
        return ReplaceResult(False, "automata are not structurally isomorphic")
    for q, r in witness.mapping:
        before, after = first.clauses(q), second.clauses(r)
        allowed = {before}
        if clause in before:
            allowed.add((before - {clause}) | {replacement})
        if after not in allowed:
            return ReplaceResult(False, f"state {q} -> {r} differs beyond replacing {clause} with {replacement}")
    return ReplaceResult(True)


# Syntactic strictness


@dataclass(frozen=True)
class Derivation:
    """Chain of rule applications from the weaker to the stricter clause"""
    steps: Tuple[Tuple[Clause, Clause, str], ...] = ()

    @property
    def rules(self) -> List[str]:
        if not self.steps:
            return ["reflexivity"]
        names = [self.steps[0][2]]
        for _, _, rule in self.steps[1:]:
            names += ["transitivity", rule]
        return names

    def to_dict(self) -> Dict:
        return {
            "rules": self.rules,
            "steps": [{"from": str(a), "to": str(b), "rule": rule} for a, b, rule in self.steps],
        }


def clause_of(modality: Modality, party: int, action: str, positive: bool = True) -> Clause:
    return Clause(modality, party, ActionLiteral(action, positive))


def theorem_graph(actions: Iterable[str], sync_members: Iterable[str],
                  mutex: Optional[MutexRelation] = None, live_offers: bool = False) -> nx.DiGraph:
    """
    Edges C -> C' for every single-rule strictness fact over `actions`.

    Only facts the oracle confirms for both parties become edges. The
    counterparty rule needs `live_offers`: over all menus a synchronised
    offer the other party can never match refutes it. The exclusive
    inversions need both actions local. O_p̄(!b) ⊑ O_p(a) is never an edge
    since a lone move of p̄ with b breaks it in every mode.
    """
    actions = sorted(set(actions))
    sync_members = set(sync_members)
    graph = nx.DiGraph()
    graph.add_nodes_from(clause_universe(actions))

    def rule(weaker: Clause, stricter: Clause, name: str) -> None:
        if weaker != stricter and not graph.has_edge(weaker, stricter):
            graph.add_edge(weaker, stricter, rule=name)

    O, P = Modality.OBLIGATION, Modality.PERMISSION
    for party in PARTIES:
        other = other_party(party)
        for action in actions:
            for positive in (True, False):
                rule(clause_of(P, party, action, positive), clause_of(O, party, action, positive),
                     OBLIGATION_OVER_PERMISSION)
                if live_offers and action in sync_members:
                    rule(clause_of(P, party, action, positive), clause_of(O, other, action, positive),
                         COUNTERPARTY_OBLIGATION)
        for a, b in (mutex.pairs if mutex else []):
            if a in sync_members or b in sync_members:
                continue
            for x, y in ((a, b), (b, a)):
                rule(clause_of(O, party, x, False), clause_of(O, party, y), EXCLUSIVE_OBLIGATION)
                rule(clause_of(P, party, x, False), clause_of(P, party, y), EXCLUSIVE_PERMISSION)
    return graph


def _actions_of(clauses: Sequence[Clause], *extra: Iterable[str]) -> List[str]:
    names = {c.action for c in clauses}
    for group in extra:
        names |= set(group)
    return sorted(names)


def clause_stricter_syntactic(weaker: Clause, stricter: Clause, sync_members: Iterable[str] = (),
                              mutex: Optional[MutexRelation] = None,
                              alphabet: Optional[Iterable[str]] = None,
                              live_offers: bool = False) -> Optional[Derivation]:
    """Derivation of `weaker ⊑ stricter` from the theorem rules, or None"""
    if weaker == stricter:
        return Derivation()
    sync_members = list(sync_members)
    actions = list(alphabet) if alphabet is not None else _actions_of(
        [weaker, stricter], sync_members, mutex.actions() if mutex else ()
    )
    graph = theorem_graph(actions, sync_members, mutex, live_offers)
    if weaker not in graph or stricter not in graph or not nx.has_path(graph, weaker, stricter):
        return None
    path = nx.shortest_path(graph, weaker, stricter)
    return Derivation(tuple((u, v, graph.edges[u, v]["rule"]) for u, v in zip(path, path[1:])))


# Semantic oracle


@dataclass
class Counterexample:
    """A configuration where `party` is satisfied under the stricter side only"""
    party: int
    context: Tuple[Clause, ...]
    menus: Dict[int, List[ActionSet]]
    moves: List[Tuple[ActionSet, Participation]]
    failed: List[str] = field(default_factory=list)

    @property
    def menu(self) -> List[ActionSet]:
        return self.menus[self.party]

    @property
    def other_menu(self) -> List[ActionSet]:
        return self.menus[other_party(self.party)]

    def to_dict(self) -> Dict:
        return {
            "party": self.party,
            "context": [str(c) for c in self.context],
            "party1_menu": [format_action_set(label) for label in self.menus[1]],
            "party2_menu": [format_action_set(label) for label in self.menus[2]],
            "moves": [f"{format_action_set(label)} [{tag.value}]" for label, tag in self.moves],
            "failed": self.failed,
        }


@dataclass
class StrictnessVerdict:
    weaker: str
    stricter: str
    relation: str
    method: str
    scope: Optional[int] = None
    forward: Dict[int, bool] = field(default_factory=dict)
    backward: Dict[int, bool] = field(default_factory=dict)
    evidence: Dict = field(default_factory=dict)
    bounds: Optional[OracleBounds] = None

    @property
    def holds(self) -> bool:
        """`weaker ⊑ stricter` within the verdict's scope"""
        return self.relation in ("equivalent", "stricter-global", f"stricter-for-party-{self.scope}")

    def to_dict(self) -> Dict:
        return {
            "weaker": self.weaker,
            "stricter": self.stricter,
            "relation": self.relation,
            "method": self.method,
            "scope": self.scope if self.scope else "global",
            "per_party": {str(p): ok for p, ok in sorted(self.forward.items())},
            "reverse_per_party": {str(p): ok for p, ok in sorted(self.backward.items())},
            "bounds": self.bounds.to_dict() if self.bounds else None,
            "evidence": self.evidence,
        }


def relation_of(forward: Dict[int, bool], backward: Dict[int, bool], scope: Optional[int] = None) -> str:
    parties = (scope,) if scope else PARTIES
    ahead = all(forward.get(p, False) for p in parties)
    behind = all(backward.get(p, False) for p in parties)
    if ahead and behind:
        return "equivalent"
    if ahead:
        return f"stricter-for-party-{scope}" if scope else "stricter-global"
    if behind:
        return "reverse-stricter"
    return "incomparable"


def _bit_matrix(rows: List[Tuple[int, ...]], values: np.ndarray) -> np.ndarray:
    """OR of `values[i]` over the indices of each row"""
    out = np.zeros((len(rows),) + values.shape[1:], dtype=np.int64)
    for r, members in enumerate(rows):
        out[r] = np.bitwise_or.reduce(values[list(members)], axis=0)
    return out


class ConfigurationSpace:
    """Every bounded single-state configuration over one alphabet, sync set and mutex relation.

    Matrices indexed `[m1, m2]` hold one entry per pair of party menus.
    """

    def __init__(self, alphabet: Union[Alphabet, Iterable[str]], sync_members: Iterable[str] = (),
                 mutex: Optional[MutexRelation] = None, bounds: OracleBounds = OracleBounds()):
        actions = alphabet.actions if isinstance(alphabet, Alphabet) else tuple(alphabet)
        self.alphabet = Alphabet.of(sorted(set(actions)))
        if len(self.alphabet) > bounds.max_sigma:
            raise BoundExceededError(
                f"Alphabet has {len(self.alphabet)} actions; the oracle enumerates at most {bounds.max_sigma}"
            )
        self.sync_members = frozenset(sync_members)
        undeclared = self.sync_members - self.alphabet.as_set()
        if undeclared:
            raise ConfigurationError(f"Sync set uses undeclared actions: {sorted(undeclared)}")
        self.mutex = mutex or MutexRelation()
        self.local_actions = self.alphabet.as_set() - self.sync_members
        self.bounds = bounds
        self.pool = clause_universe(self.alphabet)

        self.labels: List[ActionSet] = [label for label in powerset(self.alphabet) if self.mutex.allows(label)]
        self.menus: List[Tuple[int, ...]] = [
            menu
            for size in range(1, min(bounds.max_menu, len(self.labels)) + 1)
            for menu in combinations(range(len(self.labels)), size)
        ]
        self.menu_masks = np.array([sum(1 << i for i in menu) for menu in self.menus], dtype=np.int64)

        self.moves: List[Tuple[ActionSet, Participation]] = [
            (label, tag)
            for label in self.labels
            for tag in ((Participation.BOTH,) if label & self.sync_members
                        else (Participation.PARTY1, Participation.PARTY2))
        ]
        if len(self.moves) > 62:
            raise BoundExceededError(f"{len(self.moves)} distinct moves do not fit the oracle's bitmasks")
        self._move_bit = {move: 1 << k for k, move in enumerate(self.moves)}
        self.all_moves = (1 << len(self.moves)) - 1
        self._build_compositions()
        self._sat: Dict[Tuple[int, FrozenSet[Clause]], np.ndarray] = {}
        logger.debug(
            f"Configuration space: {len(self.labels)} labels, {len(self.menus)} menus, "
            f"{int(self.valid.sum())} valid configurations"
        )

    def _build_compositions(self) -> None:
        count = len(self.labels)
        g = self.sync_members
        joint = np.zeros((count, count), dtype=np.int64)
        for i, left in enumerate(self.labels):
            for j, right in enumerate(self.labels):
                shared = left & g
                if shared and shared == (right & g) and self.mutex.allows(left | right):
                    joint[i, j] = self._move_bit[(left | right, Participation.BOTH)]
        alone = {
            party: np.array([
                0 if label & g else self._move_bit[(label, Participation.only(party))]
                for label in self.labels
            ], dtype=np.int64)
            for party in PARTIES
        }
        # partner[i, m] : joint moves of label i against menu m of the other party
        partner1 = _bit_matrix(self.menus, joint.T).T
        partner2 = _bit_matrix(self.menus, joint).T
        joint_moves = _bit_matrix(self.menus, partner1)
        alone1 = _bit_matrix(self.menus, alone[1][:, None])[:, 0]
        alone2 = _bit_matrix(self.menus, alone[2][:, None])[:, 0]
        self.config_moves = alone1[:, None] | alone2[None, :] | joint_moves
        self.valid = self.config_moves != 0
        if self.bounds.live_offers:
            fires1 = (partner1 != 0) | (alone[1] != 0)[:, None]
            fires2 = (partner2 != 0) | (alone[2] != 0)[:, None]
            live1 = np.array([fires1[list(menu)].all(axis=0) for menu in self.menus])
            live2 = np.array([fires2[list(menu)].all(axis=0) for menu in self.menus])
            self.valid &= live1 & live2.T

    def contexts(self) -> Iterator[Tuple[Clause, ...]]:
        for size in range(0, self.bounds.max_context + 1):
            yield from combinations(self.pool, size)

    def _conditions(self, blamed: int, clauses: FrozenSet[Clause]):
        return state_conditions(blamed, clauses, self.sync_members, self.local_actions, self.mutex)

    def _acceptable_moves(self, party: int, clauses: FrozenSet[Clause]) -> int:
        return sum(
            self._move_bit[(label, tag)]
            for label, tag in self.moves
            if transition_viable(party, label, tag, clauses)
        )

    def state_ok(self, blamed: int, clauses: FrozenSet[Clause]) -> np.ndarray:
        conditions = self._conditions(blamed, clauses)
        if not conditions:
            return np.ones(len(self.menus), dtype=bool)
        masks = np.array([
            sum(1 << i for i, label in enumerate(self.labels) if condition.accepts(label))
            for condition in conditions
        ], dtype=np.int64)
        return np.all((self.menu_masks[:, None] & masks[None, :]) != 0, axis=1)

    def satisfied(self, party: int, clauses: FrozenSet[Clause]) -> np.ndarray:
        """`[m1, m2]`: party meets the state conditions and every composed move is acceptable"""
        key = (party, clauses)
        if key not in self._sat:
            state = self.state_ok(party, clauses)
            rejected = np.int64(self.all_moves ^ self._acceptable_moves(party, clauses))
            moves_ok = (self.config_moves & rejected) == 0
            self._sat[key] = moves_ok & (state[:, None] if party == 1 else state[None, :])
        return self._sat[key]

    def menu_labels(self, index: int) -> List[ActionSet]:
        return [self.labels[i] for i in self.menus[index]]

    def configuration_moves(self, m1: int, m2: int) -> List[Tuple[ActionSet, Participation]]:
        bits = int(self.config_moves[m1, m2])
        return [move for k, move in enumerate(self.moves) if bits >> k & 1]

    def compare(self, party: int, weaker: FrozenSet[Clause], stricter: FrozenSet[Clause],
                context: Tuple[Clause, ...] = ()) -> Optional[Counterexample]:
        """First valid configuration where `party` is satisfied under `stricter` but not `weaker`"""
        bad = self.valid & self.satisfied(party, stricter) & ~self.satisfied(party, weaker)
        if not bad.any():
            return None
        other = other_party(party)
        # rows: blamed party's menus, columns: the other party's
        oriented = bad if party == 1 else bad.T
        other_fine = self.satisfied(other, stricter)
        other_fine = other_fine if party == 1 else other_fine.T
        row = int(np.argmax(oriented.any(axis=1)))
        covering = (self.menu_masks & self.menu_masks[row]) == self.menu_masks[row]
        candidates = oriented[row]
        for preferred in (candidates & other_fine[row] & covering, candidates & other_fine[row], candidates):
            if preferred.any():
                col = int(np.argmax(preferred))
                break
        m1, m2 = (row, col) if party == 1 else (col, row)
        return self._counterexample(party, weaker, context, m1, m2)

    def _counterexample(self, party: int, weaker: FrozenSet[Clause], context: Tuple[Clause, ...],
                        m1: int, m2: int) -> Counterexample:
        menus = {1: self.menu_labels(m1), 2: self.menu_labels(m2)}
        moves = self.configuration_moves(m1, m2)
        failed = [
            condition.describe()
            for condition in self._conditions(party, weaker)
            if not any(condition.accepts(label) for label in menus[party])
        ]
        failed += [
            f"{format_action_set(label)} [{tag.value}] not viable for party {party}"
            for label, tag in moves
            if not transition_viable(party, label, tag, weaker)
        ]
        return Counterexample(party, context, menus, moves, failed)

    def clause_counterexample(self, party: int, weaker: Clause, stricter: Clause) -> Optional[Counterexample]:
        for context in self.contexts():
            base = frozenset(context)
            found = self.compare(party, base | {weaker}, base | {stricter}, context)
            if found is not None:
                return found
        return None


def clause_stricter_semantic(weaker: Clause, stricter: Clause, alphabet: Union[Alphabet, Iterable[str]],
                             sync_members: Iterable[str] = (), mutex: Optional[MutexRelation] = None,
                             bounds: OracleBounds = OracleBounds(), party: Optional[int] = None,
                             space: Optional[ConfigurationSpace] = None,
                             reverse: bool = True) -> StrictnessVerdict:
    """Exhaustive bounded check of `weaker ⊑ stricter` per party (and the converse unless `reverse=False`)"""
    space = space or ConfigurationSpace(alphabet, sync_members, mutex, bounds)
    for clause in (weaker, stricter):
        if clause.action not in space.alphabet:
            raise ConfigurationError(f"Clause {clause} uses an action outside the alphabet")
    parties = (party,) if party else PARTIES
    forward, backward, evidence = {}, {}, {}
    for p in parties:
        found = space.clause_counterexample(p, weaker, stricter)
        forward[p] = found is None
        if found is not None:
            evidence.setdefault("counterexample", found.to_dict())
        if reverse:
            converse = space.clause_counterexample(p, stricter, weaker)
            backward[p] = converse is None
            if converse is not None:
                evidence.setdefault("reverse_counterexample", converse.to_dict())
    relation = relation_of(forward, backward, party)
    logger.debug(f"{weaker} vs {stricter}: {relation}")
    return StrictnessVerdict(str(weaker), str(stricter), relation, SEMANTIC, party,
                             forward, backward, evidence, space.bounds)


def clause_stricter(weaker: Clause, stricter: Clause, alphabet: Iterable[str], sync_members: Iterable[str] = (),
                    mutex: Optional[MutexRelation] = None, live_offers: bool = False) -> StrictnessVerdict:
    """Syntactic verdict in both directions; `incomparable` here only means no derivation was found"""
    alphabet = list(alphabet)
    ahead = clause_stricter_syntactic(weaker, stricter, sync_members, mutex, alphabet, live_offers)
    behind = clause_stricter_syntactic(stricter, weaker, sync_members, mutex, alphabet, live_offers)
    forward = {p: ahead is not None for p in PARTIES}
    backward = {p: behind is not None for p in PARTIES}
    evidence = {}
    if ahead is not None:
        evidence["derivation"] = ahead.to_dict()
    if behind is not None:
        evidence["reverse_derivation"] = behind.to_dict()
    return StrictnessVerdict(str(weaker), str(stricter), relation_of(forward, backward), SYNTACTIC,
                             None, forward, backward, evidence)


# Contract automata


def ca_stricter(weaker: ContractAutomaton, stricter: ContractAutomaton, sync_members: Iterable[str] = (),
                mutex: Optional[MutexRelation] = None, party: Optional[int] = None,
                bounds: OracleBounds = OracleBounds()) -> StrictnessVerdict:
    """Strictness of two structurally isomorphic contract automata, state by state"""
    witness = structurally_isomorphic(weaker, stricter)
    if witness is None:
        raise PreconditionError(
            f"'{weaker.name}' and '{stricter.name}' are not structurally isomorphic; "
            "strictness is only decided for isomorphic contract automata"
        )
    pairs = witness.mapping
    ahead = all(weaker.clauses(q) <= stricter.clauses(r) for q, r in pairs)
    behind = all(stricter.clauses(r) <= weaker.clauses(q) for q, r in pairs)
    method = MONOTONICITY if ahead or behind else POINTWISE
    evidence: Dict = {"isomorphism": dict(pairs)}
    spaces: List[ConfigurationSpace] = []

    def pointwise(p: int, converse: bool) -> bool:
        if not spaces:
            spaces.append(ConfigurationSpace(weaker.alphabet, sync_members, mutex, bounds))
        for q, r in pairs:
            low, high = weaker.clauses(q), stricter.clauses(r)
            if converse:
                low, high = high, low
            found = spaces[0].compare(p, low, high)
            if found is not None:
                key = "reverse_counterexample" if converse else "counterexample"
                evidence.setdefault(key, dict(found.to_dict(), state=q))
                return False
        return True

    parties = (party,) if party else PARTIES
    forward = {p: ahead or pointwise(p, False) for p in parties}
    backward = {p: behind or pointwise(p, True) for p in parties}
    relation = relation_of(forward, backward, party)
    logger.info(f"📊 {weaker.name} vs {stricter.name}: {relation} ({method})")
    return StrictnessVerdict(weaker.name, stricter.name, relation, method, party, forward, backward,
                             evidence, bounds if spaces else None)


def realize(counterexample: Counterexample, clauses: Iterable[Clause], alphabet: Alphabet,
            sync_members: Iterable[str], mutex: Optional[MutexRelation] = None) -> RegulatedSystem:
    """The single-state regulated system a counterexample describes, under `clauses`"""
    parties = [
        MultiActionAutomaton(f"p{p}", alphabet, ("q",), "q",
                             tuple(Transition("q", label, "q") for label in counterexample.menus[p]))
        for p in PARTIES
    ]
    ca = trivial_contract(alphabet, "witness").with_contract({"c0": frozenset(clauses)})
    sync = SyncSet.of(alphabet, sync_members)
    return build_regulated_system(parties[0], parties[1], sync, ca, mutex, allow_mutex_in_sync=True)
