"""
The `.cva` system file format: tokenizer, recursive-descent parser with
diagnostics, and a pretty-printer.

    system bank {
      alphabet { login, transfer }
      sync { }
      mutex { }
      party john { init j0; state j0 { on {login} -> j0; } }
      party bank { init b0; state b0 { on {} -> b0; } }
      contract terms {
        init c0;
        state c0 {
          clauses { P<john>(transfer), F<1>(login) }
          on contains(login) and not contains(transfer) -> c0;
          else -> c0;
        }
      }
    }

Party labels are exact sets; contract arms carry guards over `contains(x)`
with `not`, `and`, `or`. Clause parties are `1`, `2` or a party block name.
`F<p>(x)` is read as `O<p>(!x)`.
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

from verifier.automata_core import (
    ActionLiteral,
    Alphabet,
    MultiActionAutomaton,
    MutexRelation,
    Transition,
    format_action_set,
    label_key,
)
from verifier.composition import RegulatedSystem, SyncSet, build_regulated_system
from verifier.contract_model import (
    And,
    Clause,
    Contains,
    ContractAutomaton,
    Else,
    Guard,
    GuardArm,
    Modality,
    Not,
    Or,
    ca_conjoin,
    desugar_prohibition,
)
from verifier.errors import ConfigurationError, DslError, VerificationError

logger = logging.getLogger(__name__)

ERROR = "error"
WARNING = "warning"

KEYWORDS = {
    "system", "alphabet", "sync", "mutex", "party", "contract", "init", "state",
    "on", "else", "clauses", "conjoin", "contains", "and", "or", "not",
}


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    line: int
    column: int
    code: str
    message: str

    @property
    def is_error(self) -> bool:
        return self.severity == ERROR

    def to_dict(self) -> Dict:
        return {
            "severity": self.severity,
            "line": self.line,
            "column": self.column,
            "code": self.code,
            "message": self.message,
        }

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity} [{self.code}] {self.message}"


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


_TOKEN_PATTERN = re.compile(
    r"""
    (?P<space>[ \t\r]+)
    |(?P<newline>\n)
    |(?P<comment>//[^\n]*)
    |(?P<arrow>->)
    |(?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    |(?P<number>[0-9]+)
    |(?P<punct>[{}()<>,;#!])
    |(?P<bad>.)
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> Tuple[List[Token], List[Diagnostic]]:
    tokens: List[Token] = []
    diagnostics: List[Diagnostic] = []
    line, line_start = 1, 0
    for match in _TOKEN_PATTERN.finditer(text):
        kind = match.lastgroup
        column = match.start() - line_start + 1
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind == "bad":
            diagnostics.append(Diagnostic(ERROR, line, column, "syntax", f"Unexpected character {match.group()!r}"))
        elif kind not in ("space", "comment"):
            tokens.append(Token(kind, match.group(), line, column))
    tokens.append(Token("eof", "", line, len(text) - line_start + 1))
    return tokens, diagnostics


# Raw syntax tree, kept with tokens so later checks can point at the source


@dataclass
class _RawLabel:
    brace: Token
    actions: List[Token]


@dataclass
class _RawClause:
    head: Token
    modality: str
    party: Token
    negations: int
    action: Token


@dataclass
class _RawArm:
    head: Token
    guard: Guard
    atoms: List[Token]
    target: Token


@dataclass
class _RawState:
    name: Token
    moves: List[Tuple[_RawLabel, Token]] = field(default_factory=list)
    clauses: List[_RawClause] = field(default_factory=list)
    arms: List[_RawArm] = field(default_factory=list)


@dataclass
class _RawBlock:
    keyword: Token
    name: Token
    inits: List[Token] = field(default_factory=list)
    states: List[_RawState] = field(default_factory=list)


@dataclass
class _RawSystem:
    name: Token
    alphabet: Optional[Tuple[Token, List[Token]]] = None
    sync: Optional[Tuple[Token, List[Token]]] = None
    mutex: Optional[Tuple[Token, List[Tuple[Token, Token]]]] = None
    parties: List[_RawBlock] = field(default_factory=list)
    contracts: List[_RawBlock] = field(default_factory=list)
    conjoin: Optional[Tuple[Token, Token, Token]] = None


class _Abort(Exception):
    """Raised after a syntax error has been recorded"""


class _Parser:
    def __init__(self, tokens: List[Token], diagnostics: List[Diagnostic]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics = diagnostics

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def fail(self, expected: str) -> None:
        token = self.current
        found = "end of file" if token.kind == "eof" else repr(token.text)
        self.diagnostics.append(
            Diagnostic(ERROR, token.line, token.column, "syntax", f"Expected {expected}, found {found}")
        )
        raise _Abort()

    def at(self, text: str) -> bool:
        return self.current.text == text and self.current.kind != "eof"

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            token = self.current
            self.pos += 1
            return token
        return None

    def expect(self, text: str) -> Token:
        token = self.accept(text)
        if token is None:
            self.fail(f"'{text}'")
        return token

    def identifier(self, what: str) -> Token:
        token = self.current
        if token.kind != "ident" or token.text in KEYWORDS:
            self.fail(what)
        self.pos += 1
        return token

    def identifier_list(self) -> List[Token]:
        self.expect("{")
        items: List[Token] = []
        if not self.at("}"):
            items.append(self.identifier("an action name"))
            while self.accept(","):
                items.append(self.identifier("an action name"))
        self.expect("}")
        return items

    # system

    def system(self) -> _RawSystem:
        self.expect("system")
        raw = _RawSystem(self.identifier("a system name"))
        self.expect("{")
        while not self.at("}"):
            keyword = self.current
            if self.accept("alphabet"):
                raw.alphabet = (keyword, self.identifier_list())
            elif self.accept("sync"):
                raw.sync = (keyword, self.identifier_list())
            elif self.accept("mutex"):
                raw.mutex = (keyword, self.mutex_pairs())
            elif self.accept("party"):
                raw.parties.append(self.block(keyword, self.party_state))
            elif self.accept("contract"):
                raw.contracts.append(self.block(keyword, self.contract_state))
            elif self.accept("conjoin"):
                raw.conjoin = (keyword, self.identifier("a contract name"), self.identifier("a contract name"))
                self.accept(";")
            else:
                self.fail("a section (alphabet, sync, mutex, party, contract, conjoin) or '}'")
        self.expect("}")
        if self.current.kind != "eof":
            self.fail("end of file")
        return raw

    def mutex_pairs(self) -> List[Tuple[Token, Token]]:
        self.expect("{")
        pairs: List[Tuple[Token, Token]] = []
        while not self.at("}"):
            left = self.identifier("an action name")
            self.expect("#")
            pairs.append((left, self.identifier("an action name")))
            if not self.accept(","):
                break
        self.expect("}")
        return pairs

    def block(self, keyword: Token, state_parser) -> _RawBlock:
        block = _RawBlock(keyword, self.identifier(f"a {keyword.text} name"))
        self.expect("{")
        while not self.at("}"):
            if self.accept("init"):
                block.inits.append(self.identifier("an initial state"))
                self.expect(";")
            elif self.accept("state"):
                state = _RawState(self.identifier("a state name"))
                self.expect("{")
                while not self.at("}"):
                    state_parser(state)
                self.expect("}")
                block.states.append(state)
            else:
                self.fail("'init', 'state' or '}'")
        self.expect("}")
        return block

    def party_state(self, state: _RawState) -> None:
        if not self.at("on"):
            self.fail("'on' or '}'")
        self.pos += 1
        brace = self.current
        label = _RawLabel(brace, self.identifier_list())
        self.expect("->")
        target = self.identifier("a target state")
        self.expect(";")
        state.moves.append((label, target))

    def contract_state(self, state: _RawState) -> None:
        head = self.current
        if self.accept("clauses"):
            self.expect("{")
            if not self.at("}"):
                state.clauses.append(self.clause())
                while self.accept(","):
                    state.clauses.append(self.clause())
            self.expect("}")
        elif self.accept("on"):
            atoms: List[Token] = []
            guard = self.guard_or(atoms)
            self.expect("->")
            state.arms.append(_RawArm(head, guard, atoms, self.identifier("a target state")))
            self.expect(";")
        elif self.accept("else"):
            self.expect("->")
            state.arms.append(_RawArm(head, Else(), [], self.identifier("a target state")))
            self.expect(";")
        else:
            self.fail("'clauses', 'on', 'else' or '}'")

    def clause(self) -> _RawClause:
        head = self.current
        if head.kind != "ident" or head.text not in ("O", "P", "F"):
            self.fail("a clause such as O<1>(a), P<2>(!b) or F<1>(c)")
        self.pos += 1
        self.expect("<")
        party = self.current
        if party.kind not in ("number", "ident"):
            self.fail("a party index or party name")
        self.pos += 1
        self.expect(">")
        self.expect("(")
        negations = 0
        while self.accept("!"):
            negations += 1
        action = self.identifier("an action name")
        self.expect(")")
        return _RawClause(head, head.text, party, negations, action)

    # guards: not binds tighter than and, and tighter than or

    def guard_or(self, atoms: List[Token]) -> Guard:
        guard = self.guard_and(atoms)
        while self.accept("or"):
            guard = Or(guard, self.guard_and(atoms))
        return guard

    def guard_and(self, atoms: List[Token]) -> Guard:
        guard = self.guard_not(atoms)
        while self.accept("and"):
            guard = And(guard, self.guard_not(atoms))
        return guard

    def guard_not(self, atoms: List[Token]) -> Guard:
        if self.accept("not"):
            return Not(self.guard_not(atoms))
        if self.accept("contains"):
            self.expect("(")
            action = self.identifier("an action name")
            self.expect(")")
            atoms.append(action)
            return Contains(action.text)
        if self.accept("("):
            guard = self.guard_or(atoms)
            self.expect(")")
            return guard
        self.fail("a guard (contains(x), not, parentheses)")


# Parsed system


@dataclass
class SystemFile:
    name: str
    alphabet: Alphabet
    sync: SyncSet
    mutex: MutexRelation
    parties: Tuple[MultiActionAutomaton, MultiActionAutomaton]
    contracts: Dict[str, ContractAutomaton]
    conjoin: Optional[Tuple[str, str]] = None
    spans: Dict[str, Tuple[int, int]] = field(default_factory=dict, compare=False)

    @property
    def party_names(self) -> Tuple[str, str]:
        return (self.parties[0].name, self.parties[1].name)

    def locate(self, kind: str, name: str) -> Tuple[int, int]:
        return self.spans.get(f"{kind}:{name}", self.spans.get("system", (1, 1)))

    def contract(self, name: Optional[str] = None) -> ContractAutomaton:
        """The named contract; by default the conjoined pair, else the first block"""
        if name is None:
            if self.conjoin:
                return ca_conjoin(self.contracts[self.conjoin[0]], self.contracts[self.conjoin[1]])
            return next(iter(self.contracts.values()))
        if name in self.contracts:
            return self.contracts[name]
        raise ConfigurationError(f"No contract named '{name}' in system '{self.name}'")

    def regulated(self, contract: Optional[str] = None, strict_totality: bool = False) -> RegulatedSystem:
        ca = self.contract(contract)
        return build_regulated_system(
            self.parties[0], self.parties[1], self.sync, ca, self.mutex,
            strict_totality=strict_totality, name=self.name,
        )

    def fingerprint(self) -> Tuple:
        """Structure of the system, independent of source layout"""
        contracts = tuple(
            (
                ca.name,
                ca.initial,
                tuple(
                    (
                        state,
                        tuple(str(c) for c in sorted(ca.clauses(state))),
                        tuple(str(arm) for arm in ca.arms[state]),
                    )
                    for state in ca.states
                ),
            )
            for ca in self.contracts.values()
        )
        return (
            self.name,
            self.alphabet.actions,
            tuple(sorted(self.sync.members)),
            tuple(self.mutex.pairs),
            self.parties,
            contracts,
            self.conjoin,
        )


@dataclass
class ParseResult:
    system: Optional[SystemFile]
    diagnostics: List[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.system is not None and not self.errors

    @property
    def errors(self) -> List[Diagnostic]:
        return [d for d in self.diagnostics if d.is_error]

    @property
    def warnings(self) -> List[Diagnostic]:
        return [d for d in self.diagnostics if not d.is_error]


class _Checker:
    """Semantic pass over the raw tree; collects every error it can find"""

    def __init__(self, raw: _RawSystem, diagnostics: List[Diagnostic]):
        self.raw = raw
        self.diagnostics = diagnostics
        self.sigma: List[str] = []
        self.spans: Dict[str, Tuple[int, int]] = {"system": (raw.name.line, raw.name.column)}

    def error(self, token: Token, code: str, message: str) -> None:
        self.diagnostics.append(Diagnostic(ERROR, token.line, token.column, code, message))

    def declared(self, token: Token) -> bool:
        if token.text in self.sigma:
            return True
        self.error(token, "undeclared-action", f"Action '{token.text}' is not declared in the alphabet")
        return False

    def build(self) -> Optional[SystemFile]:
        raw = self.raw
        alphabet = self.check_alphabet()
        sync_members = [t.text for t in (raw.sync[1] if raw.sync else []) if self.declared(t)]
        mutex = self.check_mutex(sync_members)
        aliases = self.check_party_names()
        parties = [self.check_party(block, mutex) for block in raw.parties]
        contracts = self.check_contracts(aliases)
        conjoin = self.check_conjoin(contracts)
        if any(d.is_error for d in self.diagnostics) or alphabet is None:
            return None
        sync = SyncSet.of(alphabet, sync_members)
        try:
            built_parties = tuple(self.make_party(alphabet, block, moves) for block, moves in zip(raw.parties, parties))
            built_contracts = {
                block.name.text: self.make_contract(alphabet, block, data) for block, data in zip(raw.contracts, contracts)
            }
        except _Abort:
            return None
        return SystemFile(
            name=raw.name.text,
            alphabet=alphabet,
            sync=sync,
            mutex=mutex,
            parties=built_parties,
            contracts=built_contracts,
            conjoin=conjoin,
            spans=self.spans,
        )

    def check_alphabet(self) -> Optional[Alphabet]:
        if self.raw.alphabet is None:
            self.error(self.raw.name, "empty-alphabet", "System declares no alphabet")
            return None
        keyword, actions = self.raw.alphabet
        if not actions:
            self.error(keyword, "empty-alphabet", "Alphabet must declare at least one action")
            return None
        for token in actions:
            if token.text in self.sigma:
                self.error(token, "duplicate-action", f"Action '{token.text}' is declared twice")
            else:
                self.sigma.append(token.text)
        return Alphabet.of(self.sigma)

    def check_mutex(self, sync_members: List[str]) -> MutexRelation:
        pairs = []
        for left, right in (self.raw.mutex[1] if self.raw.mutex else []):
            if not all([self.declared(left), self.declared(right)]):
                continue
            if left.text == right.text:
                self.error(left, "mutex-self", f"Action '{left.text}' cannot exclude itself")
                continue
            for token in (left, right):
                if token.text in sync_members:
                    self.error(token, "mutex-in-sync",
                               f"Action '{token.text}' is mutually exclusive and cannot be synchronized")
            pairs.append((left.text, right.text))
        return MutexRelation(pairs)

    def check_party_names(self) -> Dict[str, int]:
        parties = self.raw.parties
        if len(parties) != 2:
            anchor = parties[2].keyword if len(parties) > 2 else self.raw.name
            self.error(anchor, "party-count", f"A system needs exactly two party blocks, found {len(parties)}")
        aliases: Dict[str, int] = {}
        for index, block in enumerate(parties[:2], start=1):
            if block.name.text in aliases:
                self.error(block.name, "duplicate-party", f"Party name '{block.name.text}' is used twice")
            aliases[block.name.text] = index
            self.spans[f"party:{block.name.text}"] = (block.name.line, block.name.column)
        return aliases

    def check_states(self, block: _RawBlock) -> Optional[str]:
        """State ids are unique, exactly one init naming a declared state"""
        seen = set()
        for state in block.states:
            if state.name.text in seen:
                self.error(state.name, "duplicate-state",
                           f"State '{state.name.text}' is declared twice in {block.keyword.text} '{block.name.text}'")
            seen.add(state.name.text)
            self.spans[f"state:{block.name.text}.{state.name.text}"] = (state.name.line, state.name.column)
        if not block.inits:
            self.error(block.name, "missing-init", f"{block.keyword.text.capitalize()} '{block.name.text}' has no init")
            return None
        for extra in block.inits[1:]:
            self.error(extra, "multiple-init",
                       f"{block.keyword.text.capitalize()} '{block.name.text}' declares more than one initial state")
        initial = block.inits[0]
        if initial.text not in seen:
            self.error(initial, "unknown-state", f"Initial state '{initial.text}' is not declared")
        return initial.text

    def check_target(self, block: _RawBlock, target: Token) -> None:
        if target.text not in {s.name.text for s in block.states}:
            self.error(target, "unknown-state", f"Target state '{target.text}' is not declared in '{block.name.text}'")

    def check_party(self, block: _RawBlock, mutex: MutexRelation) -> List[Transition]:
        self.check_states(block)
        transitions = []
        for state in block.states:
            for label, target in state.moves:
                self.check_target(block, target)
                if not all([self.declared(t) for t in label.actions]):
                    continue
                actions = frozenset(t.text for t in label.actions)
                clashes = mutex.violations_in(actions)
                if clashes:
                    pairs = ", ".join(f"{a}#{b}" for a, b in clashes)
                    self.error(label.brace, "mutex-label",
                               f"Label {format_action_set(actions)} contains mutually exclusive actions ({pairs})")
                transitions.append(Transition(state.name.text, actions, target.text))
        return transitions

    def check_contracts(self, aliases: Dict[str, int]):
        if not self.raw.contracts:
            self.error(self.raw.name, "missing-contract", "System declares no contract block")
        names = set()
        checked = []
        for block in self.raw.contracts:
            if block.name.text in names:
                self.error(block.name, "duplicate-contract", f"Contract '{block.name.text}' is declared twice")
            names.add(block.name.text)
            self.spans[f"contract:{block.name.text}"] = (block.name.line, block.name.column)
            self.check_states(block)
            per_state = {}
            for state in block.states:
                clauses = [c for c in (self.clause(raw, aliases) for raw in state.clauses) if c is not None]
                for arm in state.arms:
                    self.check_target(block, arm.target)
                    for atom in arm.atoms:
                        self.declared(atom)
                per_state[state.name.text] = clauses
            checked.append(per_state)
        return checked

    def clause(self, raw: _RawClause, aliases: Dict[str, int]) -> Optional[Clause]:
        if raw.party.text in ("1", "2"):
            party = int(raw.party.text)
        elif raw.party.text in aliases:
            party = aliases[raw.party.text]
        else:
            self.error(raw.party, "unknown-party", f"Unknown party '{raw.party.text}' in clause")
            return None
        if not self.declared(raw.action):
            return None
        literal = ActionLiteral(raw.action.text, raw.negations % 2 == 0)
        if raw.modality == "F":
            return desugar_prohibition(party, literal)
        return Clause(Modality(raw.modality), party, literal)

    def check_conjoin(self, contracts) -> Optional[Tuple[str, str]]:
        if self.raw.conjoin is None:
            return None
        _, left, right = self.raw.conjoin
        names = {block.name.text for block in self.raw.contracts}
        for token in (left, right):
            if token.text not in names:
                self.error(token, "unknown-contract", f"Cannot conjoin unknown contract '{token.text}'")
        return (left.text, right.text)

    def make_party(self, alphabet: Alphabet, block: _RawBlock, transitions: List[Transition]) -> MultiActionAutomaton:
        try:
            return MultiActionAutomaton(
                block.name.text, alphabet, tuple(s.name.text for s in block.states), block.inits[0].text,
                tuple(transitions),
            )
        except VerificationError as e:
            self.error(block.name, "invalid-party", str(e))
            raise _Abort() from e

    def make_contract(self, alphabet: Alphabet, block: _RawBlock, clauses) -> ContractAutomaton:
        try:
            return ContractAutomaton(
                name=block.name.text,
                alphabet=alphabet,
                states=tuple(s.name.text for s in block.states),
                initial=block.inits[0].text,
                arms={s.name.text: tuple(GuardArm(a.guard, a.target.text) for a in s.arms) for s in block.states},
                contract={state: frozenset(items) for state, items in clauses.items()},
            )
        except VerificationError as e:
            self.error(block.name, "invalid-contract", str(e))
            raise _Abort() from e


def parse(text: str) -> ParseResult:
    tokens, diagnostics = tokenize(text)
    if diagnostics:
        return ParseResult(None, diagnostics)
    try:
        raw = _Parser(tokens, diagnostics).system()
    except _Abort:
        return ParseResult(None, diagnostics)
    system = _Checker(raw, diagnostics).build()
    if system is not None:
        logger.debug(f"Parsed system '{system.name}' with {len(system.contracts)} contract(s)")
    return ParseResult(system, diagnostics)


def load_system(path: Union[str, Path]) -> SystemFile:
    """Parse a file; raises DslError with every diagnostic when it is rejected"""
    result = parse(Path(path).read_text(encoding="utf-8"))
    if not result.ok:
        raise DslError(result.errors)
    return result.system


# Pretty-printer


def _names(items) -> str:
    return "{ " + ", ".join(items) + " }" if items else "{ }"


def pretty(system: SystemFile) -> str:
    lines = [f"system {system.name} {{"]
    lines.append(f"  alphabet {_names(system.alphabet.actions)}")
    lines.append(f"  sync {_names(sorted(system.sync.members))}")
    lines.append(f"  mutex {_names(f'{a}#{b}' for a, b in system.mutex.pairs)}")
    for party in system.parties:
        lines.append("")
        lines.append(f"  party {party.name} {{")
        lines.append(f"    init {party.initial};")
        for state in party.states:
            moves = sorted(party.moves(state), key=lambda m: (label_key(m[0]), m[1]))
            if not moves:
                lines.append(f"    state {state} {{ }}")
                continue
            lines.append(f"    state {state} {{")
            for label, target in moves:
                lines.append(f"      on {format_action_set(label)} -> {target};")
            lines.append("    }")
        lines.append("  }")
    for ca in system.contracts.values():
        lines.append("")
        lines.append(f"  contract {ca.name} {{")
        lines.append(f"    init {ca.initial};")
        for state in ca.states:
            lines.append(f"    state {state} {{")
            clauses = sorted(ca.clauses(state))
            if clauses:
                lines.append(f"      clauses {_names(str(c) for c in clauses)}")
            for arm in ca.arms[state]:
                lines.append(f"      {arm};")
            lines.append("    }")
        lines.append("  }")
    if system.conjoin:
        lines.append("")
        lines.append(f"  conjoin {system.conjoin[0]} {system.conjoin[1]};")
    lines.append("}")
    return "\n".join(lines) + "\n"
