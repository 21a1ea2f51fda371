"""
Graphviz DOT rendering of the three layers of a system file.

Each renderer yields DOT source line by line; `write_dot` joins and writes it.
States flagged as conflicting are drawn with a double border.
"""

import logging
from pathlib import Path
from typing import Iterable, Iterator, Optional, Set, Union

from verifier.automata_core import format_action_set
from verifier.composition import ComposedAutomaton, Participation, sync_compose
from verifier.contract_model import ContractAutomaton
from verifier.dsl import SystemFile

logger = logging.getLogger(__name__)

LAYERS = ("parties", "contract", "regulated")

_PARTICIPATION_STYLE = {
    Participation.PARTY1: "dashed",
    Participation.PARTY2: "dotted",
    Participation.BOTH: "solid",
}


def _gvescape(text: str) -> str:
    return str(text).replace("\\", "\\\\").replace('"', r"\"")


def _gvquote(text: str) -> str:
    return f'"{_gvescape(text)}"'


def _gvlabel(head: str, clauses=()) -> str:
    """State name, then one clause per line"""
    lines = [head] + [str(c) for c in sorted(clauses)]
    return '"' + "\\n".join(_gvescape(line) for line in lines) + '"'


def composed_dot(automaton: ComposedAutomaton, flagged: Iterable[str] = (),
                 contract: Optional[ContractAutomaton] = None) -> Iterator[str]:
    flagged = set(flagged)
    yield f"digraph {_gvquote(automaton.name)} {{\n"
    yield "  rankdir=LR;\n"
    yield '  __start [shape=point label=""];\n'
    for state in automaton.states:
        clauses = contract.clauses(state.qa) if contract is not None and state.qa is not None else ()
        attrs = [f"label={_gvlabel(str(state), clauses)}", "shape=ellipse"]
        if str(state) in flagged:
            attrs += ["peripheries=2", "color=red"]
        yield f"  {_gvquote(state)} [{' '.join(attrs)}];\n"
    yield f"  __start -> {_gvquote(automaton.initial)};\n"
    for t in automaton.transitions:
        yield (
            f"  {_gvquote(t.source)} -> {_gvquote(t.target)} "
            f"[label={_gvquote(format_action_set(t.label))} style={_PARTICIPATION_STYLE[t.participation]}];\n"
        )
    yield "}\n"


def contract_dot(ca: ContractAutomaton, flagged: Iterable[str] = ()) -> Iterator[str]:
    flagged = set(flagged)
    yield f"digraph {_gvquote(ca.name)} {{\n"
    yield "  rankdir=LR;\n"
    yield '  __start [shape=point label=""];\n'
    for state in ca.states:
        attrs = [f"label={_gvlabel(state, ca.clauses(state))}", "shape=box"]
        if state in flagged:
            attrs += ["peripheries=2", "color=red"]
        yield f"  {_gvquote(state)} [{' '.join(attrs)}];\n"
    yield f"  __start -> {_gvquote(ca.initial)};\n"
    for state in ca.states:
        for arm in ca.arms[state]:
            yield f"  {_gvquote(state)} -> {_gvquote(arm.target)} [label={_gvquote(arm.guard)}];\n"
    yield "}\n"


def render(system: SystemFile, layer: str, flagged: Iterable[str] = (),
           contract: Optional[str] = None, strict_totality: bool = False) -> str:
    if layer not in LAYERS:
        raise ValueError(f"Unknown layer '{layer}' (expected one of {', '.join(LAYERS)})")
    if layer == "parties":
        product = sync_compose(system.parties[0], system.parties[1], system.sync, system.mutex)
        lines = composed_dot(product, flagged)
    elif layer == "contract":
        lines = contract_dot(system.contract(contract), flagged)
    else:
        regulated = system.regulated(contract, strict_totality)
        lines = composed_dot(regulated, flagged, regulated.contract)
    return "".join(lines)


def write_dot(source: str, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(source, encoding="utf-8")
    logger.info(f"✅ DOT written to {path}")
    return path


def flagged_states(findings) -> Set[str]:
    return {finding.state for finding in findings}
