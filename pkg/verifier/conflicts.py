"""
Conflicts between clauses and conflict detection on contract automata.

The conflict relation is the least relation over the finite clause universe
that contains the opposite-permission and exclusive-obligation seeds and is
closed under symmetry and under making either side stricter. Every member
keeps the derivation that first produced it, in breadth-first order, so
derivations are shortest and replayable.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

import networkx as nx

from verifier.automata_core import ActionSet, Alphabet, MutexRelation, format_action_set
from verifier.composition import RegulatedSystem
from verifier.contract_model import (
    PARTIES,
    Clause,
    ContractAutomaton,
    Modality,
    clause_universe,
    negate_clause,
)
from verifier.errors import PreconditionError
from verifier.strictness import (
    SEMANTIC,
    SYNTACTIC,
    ConfigurationSpace,
    Counterexample,
    OracleBounds,
    clause_of,
    theorem_graph,
)

logger = logging.getLogger(__name__)

OPPOSITE_PERMISSIONS = "opposite-permissions"
EXCLUSIVE_OBLIGATIONS = "exclusive-obligations"
SYMMETRY = "symmetry"
INCREASED_STRICTNESS = "increased-strictness"
NEGATION = "negation"

Pair = Tuple[Clause, Clause]


@dataclass(frozen=True)
class Step:
    rule: str
    pair: Pair
    strictness: Tuple[str, ...] = ()

    def to_dict(self) -> Dict:
        data = {"rule": self.rule, "pair": [str(self.pair[0]), str(self.pair[1])]}
        if self.strictness:
            data["strictness"] = list(self.strictness)
        return data


@dataclass(frozen=True)
class ConflictDerivation:
    steps: Tuple[Step, ...]

    @property
    def rules(self) -> List[str]:
        names: List[str] = []
        for step in self.steps:
            names.append(step.rule)
            names.extend(step.strictness)
        return names

    def extend(self, step: Step) -> "ConflictDerivation":
        return ConflictDerivation(self.steps + (step,))

    def to_dict(self) -> Dict:
        return {"rules": self.rules, "steps": [step.to_dict() for step in self.steps]}


class ConflictRelation:
    """Symmetric conflict relation with one derivation per ordered pair"""

    def __init__(self, alphabet: Alphabet, sync_members: Iterable[str], mutex: MutexRelation,
                 source: str, stronger: Dict[Clause, Dict[Clause, Tuple[str, ...]]],
                 members: Dict[Pair, ConflictDerivation]):
        self.alphabet = alphabet
        self.sync_members = frozenset(sync_members)
        self.mutex = mutex
        self.source = source
        self._stronger = stronger
        self._members = members

    def derivation(self, first: Clause, second: Clause) -> Optional[ConflictDerivation]:
        return self._members.get((first, second))

    def __contains__(self, pair: object) -> bool:
        return pair in self._members

    def __len__(self) -> int:
        return len(self._members)

    def ordered_pairs(self) -> List[Pair]:
        return sorted(self._members)

    def unordered_pairs(self) -> List[Pair]:
        return [pair for pair in self.ordered_pairs() if pair[0] <= pair[1]]

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.ordered_pairs())

    def stricter(self, weaker: Clause, stricter: Clause) -> Optional[Tuple[str, ...]]:
        """Strictness evidence used for closure, reflexivity included"""
        if weaker == stricter:
            return ("reflexivity",)
        return self._stronger.get(weaker, {}).get(stricter)

    def strengthenings(self, clause: Clause) -> List[Clause]:
        """`clause` and every clause the strictness source puts above it"""
        return [clause] + sorted(self._stronger.get(clause, {}))

    def replay(self, first: Clause, second: Clause) -> bool:
        """Re-check every step of the stored derivation against the seeds and the strictness source"""
        derivation = self.derivation(first, second)
        if derivation is None:
            return False
        previous: Optional[Pair] = None
        for step in derivation.steps:
            a, b = step.pair
            if step.rule == OPPOSITE_PERMISSIONS:
                ok = a.is_permission and b == negate_clause(a)
            elif step.rule == EXCLUSIVE_OBLIGATIONS:
                ok = (a.is_obligation and b.is_obligation and a.party == b.party
                      and a.literal.positive and b.literal.positive and self.mutex.excludes(a.action, b.action))
            elif step.rule == SYMMETRY:
                ok = previous == (b, a)
            elif step.rule == INCREASED_STRICTNESS:
                ok = previous is not None and previous[0] == a and self.stricter(previous[1], b) is not None
            else:
                ok = False
            if not ok:
                return False
            previous = step.pair
        return previous == (first, second)

    def to_dict(self) -> Dict:
        return {
            "source": self.source,
            "pairs": [
                {"clauses": [str(a), str(b)], "derivation": self._members[(a, b)].to_dict()}
                for a, b in self.unordered_pairs()
            ],
        }


def seeds(alphabet: Alphabet, mutex: MutexRelation) -> List[Tuple[Pair, ConflictDerivation]]:
    found = []
    for clause in clause_universe(alphabet):
        if clause.is_permission:
            pair = (clause, negate_clause(clause))
            found.append((pair, ConflictDerivation((Step(OPPOSITE_PERMISSIONS, pair, (NEGATION,)),))))
    for party in PARTIES:
        for a, b in mutex.pairs:
            pair = (clause_of(Modality.OBLIGATION, party, a), clause_of(Modality.OBLIGATION, party, b))
            found.append((pair, ConflictDerivation((Step(EXCLUSIVE_OBLIGATIONS, pair),))))
    return found


def syntactic_strengthenings(alphabet: Alphabet, sync_members: Iterable[str], mutex: MutexRelation,
                             live_offers: bool = False) -> Dict[Clause, Dict[Clause, Tuple[str, ...]]]:
    graph = theorem_graph(alphabet, sync_members, mutex, live_offers)
    stronger: Dict[Clause, Dict[Clause, Tuple[str, ...]]] = {}
    for clause in sorted(graph.nodes):
        paths = nx.single_source_shortest_path(graph, clause)
        stronger[clause] = {}
        for target in sorted(paths):
            path = paths[target]
            if target == clause:
                continue
            rules: List[str] = []
            for u, v in zip(path, path[1:]):
                if rules:
                    rules.append("transitivity")
                rules.append(graph.edges[u, v]["rule"])
            stronger[clause][target] = tuple(rules)
    return stronger


def semantic_strengthenings(alphabet: Alphabet, sync_members: Iterable[str], mutex: MutexRelation,
                            bounds: OracleBounds = OracleBounds()) -> Dict[Clause, Dict[Clause, Tuple[str, ...]]]:
    space = ConfigurationSpace(alphabet, sync_members, mutex, bounds)
    universe = space.pool
    stronger: Dict[Clause, Dict[Clause, Tuple[str, ...]]] = {clause: {} for clause in universe}
    for weaker in universe:
        for stricter in universe:
            if weaker == stricter:
                continue
            if all(space.clause_counterexample(p, weaker, stricter) is None for p in PARTIES):
                stronger[weaker][stricter] = (SEMANTIC,)
    return stronger


def conflict_closure(alphabet: Union[Alphabet, Iterable[str]], sync_members: Iterable[str] = (),
                     mutex: Optional[MutexRelation] = None, strictness_source: str = SYNTACTIC,
                     bounds: OracleBounds = OracleBounds()) -> ConflictRelation:
    """
    Least fixpoint of the seeds under symmetry and increased strictness.

    `bounds.live_offers` selects the strictness facts for both sources. The
    semantic source also relates vacuous clauses: a permission on a local
    action constrains no one, so every clause is stricter than it. With local
    actions the semantic closure then grows far past the syntactic one and
    derives self-pairs such as (O<1>(a), O<1>(a)).
    """
    if not isinstance(alphabet, Alphabet):
        alphabet = Alphabet.of(sorted(set(alphabet)))
    mutex = mutex or MutexRelation()
    sync_members = frozenset(sync_members)
    if strictness_source == SYNTACTIC:
        stronger = syntactic_strengthenings(alphabet, sync_members, mutex, bounds.live_offers)
    elif strictness_source in (SEMANTIC, "semantic"):
        strictness_source = SEMANTIC
        stronger = semantic_strengthenings(alphabet, sync_members, mutex, bounds)
    else:
        raise ValueError(f"Unknown strictness source: {strictness_source!r}")

    members: Dict[Pair, ConflictDerivation] = {}
    queue: deque = deque()

    def add(pair: Pair, derivation: ConflictDerivation) -> None:
        if pair not in members:
            members[pair] = derivation
            queue.append(pair)

    for pair, derivation in seeds(alphabet, mutex):
        add(pair, derivation)
    while queue:
        first, second = queue.popleft()
        derivation = members[(first, second)]
        add((second, first), derivation.extend(Step(SYMMETRY, (second, first))))
        for target, evidence in stronger.get(second, {}).items():
            add((first, target), derivation.extend(Step(INCREASED_STRICTNESS, (first, target), evidence)))

    logger.info(f"🔍 Conflict closure over {list(alphabet)}: {len(members) // 2} unordered pairs ({strictness_source})")
    return ConflictRelation(alphabet, sync_members, mutex, strictness_source, stronger, members)


def conflicts(first: Clause, second: Clause, relation: ConflictRelation) -> Optional[ConflictDerivation]:
    return relation.derivation(first, second)


def strictness_preserves_conflict(first: Clause, second: Clause, first_stricter: Clause, second_stricter: Clause,
                                  relation: ConflictRelation) -> bool:
    """Strengthening both sides of a conflict keeps it a conflict"""
    if (first, second) not in relation:
        raise PreconditionError(f"{first} and {second} are not in conflict")
    for weaker, stricter in ((first, first_stricter), (second, second_stricter)):
        if relation.stricter(weaker, stricter) is None:
            raise PreconditionError(f"{stricter} is not known to be stricter than {weaker}")
    return (first_stricter, second_stricter) in relation


@dataclass
class ConflictFinding:
    state: str
    pair: Pair
    derivation: ConflictDerivation
    trace: List[ActionSet] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "state": self.state,
            "clauses": [str(self.pair[0]), str(self.pair[1])],
            "derivation": self.derivation.rules,
            "trace": [format_action_set(label) for label in self.trace],
        }

    def to_line(self) -> str:
        trace = ";".join(format_action_set(label) for label in self.trace) or "-"
        return f"{self.state}: {self.pair[0]} conflicts with {self.pair[1]} via {','.join(self.derivation.rules)} trace={trace}"


def _conflicting_pairs(clauses: Iterable[Clause], relation: ConflictRelation) -> Iterator[Tuple[Pair, ConflictDerivation]]:
    for first, second in combinations(sorted(set(clauses)), 2):
        derivation = relation.derivation(first, second)
        if derivation is not None:
            yield (first, second), derivation


def ca_traces(ca: ContractAutomaton) -> Dict[str, List[ActionSet]]:
    """Shortest label sequence reaching each reachable state of a contract automaton"""
    traces = {ca.initial: []}
    order = [ca.initial]
    index = 0
    while index < len(order):
        state = order[index]
        index += 1
        for label, target in ca.successors(state):
            if target not in traces:
                traces[target] = traces[state] + [label]
                order.append(target)
    return traces


def find_conflicting_states(target: Union[ContractAutomaton, RegulatedSystem],
                            relation: ConflictRelation) -> List[ConflictFinding]:
    """Every conflicting clause pair per state; reachable states only for a regulated system"""
    findings: List[ConflictFinding] = []
    if isinstance(target, RegulatedSystem):
        for state in target.states:
            for pair, derivation in _conflicting_pairs(target.contract.clauses(state.qa), relation):
                findings.append(ConflictFinding(str(state), pair, derivation, target.trace_to(state)))
    else:
        traces = ca_traces(target)
        for state in target.states:
            for pair, derivation in _conflicting_pairs(target.clauses(state), relation):
                findings.append(ConflictFinding(state, pair, derivation, traces.get(state, [])))
    logger.info(f"🔍 {len(findings)} conflicting clause pairs found")
    return findings


def satisfying_configuration(first: Clause, second: Clause, space: ConfigurationSpace) -> Optional[Counterexample]:
    """A valid configuration where both parties are satisfied under both clauses, if any"""
    clauses = frozenset((first, second))
    both = space.valid & space.satisfied(1, clauses) & space.satisfied(2, clauses)
    if not both.any():
        return None
    m1, m2 = (int(i) for i in divmod(int(both.argmax()), both.shape[1]))
    return Counterexample(
        0, (first, second),
        {1: space.menu_labels(m1), 2: space.menu_labels(m2)},
        space.configuration_moves(m1, m2),
    )
