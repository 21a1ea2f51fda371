#!/usr/bin/env python3
"""
Command-line front end for the contract verifier.

    cva validate FILE
    cva check FILE [--party 1|2|both] [--ca NAME]
    cva conflicts FILE [--ca NAME | --conjoin A B] [--semantic]
    cva stricter --c1 CLAUSE --c2 CLAUSE [--sigma a,b --sync a --mutex a#b] [--semantic]
    cva export FILE --dot OUT [--layer parties|contract|regulated]
    cva simulate FILE --trace "{a,b};{c}"
    cva sweep [--oracle-only] [--live-offers]

Exit codes: 0 the property holds, 1 it fails, 2 invalid input or usage.
"""

import argparse
import json
import logging
import sys
from typing import Dict, List, Optional

from cva_config import CvaConfig, load_config_from_env
from verifier.automata_core import MutexRelation, format_action_set, validate_mutex
from verifier.composition import JointState, check_well_formed
from verifier.conflicts import conflict_closure, find_conflicting_states
from verifier.contract_model import ca_conjoin, parse_clause, validate_ca
from verifier.dot_export import LAYERS, flagged_states, render, write_dot
from verifier.dsl import ERROR, WARNING, Diagnostic, SystemFile, parse
from verifier.errors import DslError, VerificationError
from verifier.reports import conflicts_frame, save_frame, violations_frame
from verifier.satisfaction import SatisfactionChecker, breach_incapable
from verifier.strictness import OracleBounds, clause_stricter, clause_stricter_semantic

logger = logging.getLogger("cva")

EXIT_OK = 0
EXIT_FAILS = 1
EXIT_INVALID = 2

_GREEN = "\033[32m"
_RED = "\033[31m"
_RESET = "\033[0m"


class CliError(Exception):
    """Invalid input detected by the front end itself"""


class Output:
    """Writes command results to stdout, as text or a single JSON document"""

    def __init__(self, as_json: bool, color: bool):
        self.as_json = as_json
        self.color = color and not as_json

    def line(self, text: str = "", ok: Optional[bool] = None) -> None:
        if self.as_json:
            return
        if self.color and ok is not None:
            text = f"{_GREEN if ok else _RED}{text}{_RESET}"
        print(text)

    def document(self, data: Dict) -> None:
        if self.as_json:
            print(json.dumps(data, indent=2, sort_keys=False))


def _read_system(path: str) -> SystemFile:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise CliError(f"Cannot read {path}: {e.strerror or e}") from e
    result = parse(text)
    for diagnostic in result.warnings:
        print(f"{path}:{diagnostic}", file=sys.stderr)
    if not result.ok:
        raise DslError([d for d in result.errors])
    return result.system


def _bounds(args, config: CvaConfig) -> OracleBounds:
    return OracleBounds(
        max_sigma=args.max_sigma or config.max_sigma,
        max_menu=config.max_menu,
        max_context=config.max_context,
        live_offers=getattr(args, "live_offers", False),
    )


# validate


def validate_system(system: SystemFile, strict_totality: bool) -> List[Diagnostic]:
    """Totality, reachability, mutex and well-formedness diagnostics of a parsed file"""
    diagnostics: List[Diagnostic] = []
    for ca in system.contracts.values():
        line, column = system.locate("contract", ca.name)
        report = validate_ca(ca, strict=strict_totality)
        diagnostics += [Diagnostic(ERROR, line, column, "non-total", f"{ca.name}: {m}") for m in report.errors()]
        diagnostics += [Diagnostic(WARNING, line, column, "contract", f"{ca.name}: {m}") for m in report.warnings()]
    for party in system.parties:
        line, column = system.locate("party", party.name)
        for t in validate_mutex(party, system.mutex):
            diagnostics.append(Diagnostic(ERROR, line, column, "mutex-label", f"{party.name}: {t} violates the mutex relation"))
    line, column = system.locate("system", system.name)
    deadlocked = check_well_formed(system.parties[0], system.parties[1], system.sync, system.mutex)
    for state in deadlocked:
        diagnostics.append(Diagnostic(ERROR, line, column, "deadlock", f"joint state {state} has no outgoing transition"))
    if system.conjoin:
        try:
            system.contract()
        except VerificationError as e:
            diagnostics.append(Diagnostic(ERROR, line, column, "conjoin", str(e)))
    return diagnostics


def cmd_validate(args, config: CvaConfig, out: Output) -> int:
    system = _read_system(args.file)
    diagnostics = validate_system(system, args.strict_totality or config.strict_totality)
    errors = [d for d in diagnostics if d.is_error]
    for diagnostic in diagnostics:
        out.line(f"{args.file}:{diagnostic}", ok=not diagnostic.is_error)
    if not errors:
        out.line(f"✅ {system.name}: well-formed", ok=True)
    out.document({
        "system": system.name,
        "valid": not errors,
        "diagnostics": [d.to_dict() for d in diagnostics],
    })
    return EXIT_FAILS if errors else EXIT_OK


# check


def cmd_check(args, config: CvaConfig, out: Output) -> int:
    system = _read_system(args.file)
    regulated = system.regulated(args.ca, args.strict_totality or config.strict_totality)
    parties = (1, 2) if args.party == "both" else (int(args.party),)
    reports = SatisfactionChecker(regulated).find_violations(parties)
    verdicts = {p: breach_incapable(p, regulated) for p in parties}

    for report in reports:
        out.line(report.to_line(), ok=False)
    for p, verdict in verdicts.items():
        name = system.party_names[p - 1]
        if verdict:
            out.line(f"✅ party {p} ({name}) is breach-incapable", ok=True)
        else:
            trace = ";".join(format_action_set(label) for label in verdict.witness_trace) or "-"
            out.line(f"❌ party {p} ({name}) can breach the contract, shortest witness: {trace}", ok=False)
    out.document({
        "system": system.name,
        "contract": regulated.contract.name,
        "breach_incapable": {str(p): bool(v) for p, v in verdicts.items()},
        "violations": [r.to_dict() for r in reports],
    })
    if args.save_report:
        save_frame(violations_frame(reports), "check", system.name, config.reports_dir)
    return EXIT_OK if all(verdicts.values()) else EXIT_FAILS


# conflicts


def cmd_conflicts(args, config: CvaConfig, out: Output) -> int:
    system = _read_system(args.file)
    if args.conjoin:
        ca = ca_conjoin(system.contract(args.conjoin[0]), system.contract(args.conjoin[1]))
    else:
        ca = system.contract(args.ca)
    relation = conflict_closure(
        system.alphabet, system.sync.members, system.mutex,
        strictness_source="semantic" if args.semantic else "syntactic",
        bounds=_bounds(args, config),
    )
    findings = find_conflicting_states(ca, relation)
    for finding in findings:
        out.line(finding.to_line(), ok=False)
    states = sorted({f.state for f in findings})
    if not findings:
        out.line(f"✅ {ca.name}: no conflicting states", ok=True)
    else:
        out.line(f"❌ {ca.name}: {len(states)} conflicting state(s): {', '.join(states)}", ok=False)
    out.document({
        "system": system.name,
        "contract": ca.name,
        "strictness_source": relation.source,
        "conflicting_states": states,
        "conflicts": [f.to_dict() for f in findings],
    })
    if args.save_report:
        save_frame(conflicts_frame(findings), "conflicts", system.name, config.reports_dir)
    return EXIT_FAILS if findings else EXIT_OK


# stricter


def _split(text: Optional[str]) -> Optional[List[str]]:
    if text is None:
        return None
    return [item.strip() for item in text.split(",") if item.strip()]


def _mutex(text: Optional[str]) -> MutexRelation:
    pairs = []
    for item in _split(text) or []:
        if item.count("#") != 1:
            raise CliError(f"Malformed mutex pair {item!r} (expected a#b)")
        left, right = (part.strip() for part in item.split("#"))
        pairs.append((left, right))
    return MutexRelation(pairs)


def cmd_stricter(args, config: CvaConfig, out: Output) -> int:
    try:
        weaker = parse_clause(args.c1)
        stricter = parse_clause(args.c2)
    except ValueError as e:
        raise CliError(str(e)) from e
    mutex = _mutex(args.mutex)
    sigma = _split(args.sigma)
    if sigma is None:
        sigma = sorted({weaker.action, stricter.action} | mutex.actions())
    sync = _split(args.sync)
    if sync is None:
        sync = list(sigma)
    for action in {weaker.action, stricter.action} | set(sync) | mutex.actions():
        if action not in sigma:
            raise CliError(f"Action '{action}' is not in the alphabet {{{','.join(sigma)}}}")
    party = int(args.party) if args.party else None

    if args.semantic:
        verdict = clause_stricter_semantic(weaker, stricter, sigma, sync, mutex, _bounds(args, config), party=party)
    else:
        verdict = clause_stricter(weaker, stricter, sigma, sync, mutex, live_offers=args.live_offers)

    out.line(f"{weaker} vs {stricter}: {verdict.relation} ({verdict.method})", ok=verdict.holds)
    example = verdict.evidence.get("counterexample")
    if example:
        out.line(f"  counterexample for party {example['party']}:")
        out.line(f"    context: {', '.join(example['context']) or '-'}")
        out.line(f"    party 1 menu: {', '.join(example['party1_menu'])}")
        out.line(f"    party 2 menu: {', '.join(example['party2_menu'])}")
        out.line(f"    moves: {', '.join(example['moves'])}")
    derivation = verdict.evidence.get("derivation")
    if derivation:
        out.line(f"  derivation: {' > '.join(derivation['rules'])}")
    out.document(dict(verdict.to_dict(), sigma=sigma, sync=sync, mutex=[f"{a}#{b}" for a, b in mutex.pairs]))
    return EXIT_OK if verdict.holds else EXIT_FAILS


# export


def cmd_export(args, config: CvaConfig, out: Output) -> int:
    system = _read_system(args.file)
    strict = args.strict_totality or config.strict_totality
    relation = conflict_closure(system.alphabet, system.sync.members, system.mutex)
    flagged = set()
    if args.layer == "contract":
        flagged = flagged_states(find_conflicting_states(system.contract(args.ca), relation))
    elif args.layer == "regulated":
        flagged = flagged_states(find_conflicting_states(system.regulated(args.ca, strict), relation))
    path = write_dot(render(system, args.layer, flagged, args.ca, strict), args.dot)
    out.line(f"✅ {args.layer} layer of {system.name} written to {path}", ok=True)
    out.document({"system": system.name, "layer": args.layer, "dot": str(path), "flagged": sorted(flagged)})
    return EXIT_OK


# simulate


def parse_trace(text: str) -> List[frozenset]:
    steps = []
    for chunk in (part.strip() for part in text.split(";")):
        if not chunk:
            continue
        if not (chunk.startswith("{") and chunk.endswith("}")):
            raise CliError(f"Malformed trace step {chunk!r} (expected e.g. {{a,b}})")
        steps.append(frozenset(a.strip() for a in chunk[1:-1].split(",") if a.strip()))
    return steps


def cmd_simulate(args, config: CvaConfig, out: Output) -> int:
    system = _read_system(args.file)
    regulated = system.regulated(args.ca, args.strict_totality or config.strict_totality)
    checker = SatisfactionChecker(regulated)
    relation = conflict_closure(system.alphabet, system.sync.members, system.mutex)
    conflicting = flagged_states(find_conflicting_states(regulated, relation))
    steps = parse_trace(args.trace or "")

    def snapshot(state: JointState, index: int, label=None, transition=None) -> Dict:
        entry = {
            "step": index,
            "state": str(state),
            "clauses": [str(c) for c in sorted(checker.clauses_at(state))],
            "sat": {str(p): checker.sat(p, state) for p in (1, 2)},
            "conflicting": str(state) in conflicting,
        }
        if label is not None:
            entry["label"] = format_action_set(label)
            entry["transition_sat"] = {str(p): checker.sat(p, transition) for p in (1, 2)}
        return entry

    state = regulated.initial
    log = [snapshot(state, 0)]
    for index, label in enumerate(steps, start=1):
        matching = [t for t in regulated.moves(state) if t.label == label]
        if not matching:
            available = ", ".join(sorted({format_action_set(t.label) for t in regulated.moves(state)}))
            raise CliError(
                f"Step {index} {format_action_set(label)} is not enabled in {state}; available: {available}"
            )
        transition = matching[0]
        state = transition.target
        log.append(snapshot(state, index, label, transition))

    for entry in log:
        head = f"[{entry['step']}] " + (f"{entry['label']} -> " if "label" in entry else "") + entry["state"]
        sats = ", ".join(f"party {p}: {'sat' if ok else 'UNSAT'}" for p, ok in entry["sat"].items())
        flag = "  CONFLICT" if entry["conflicting"] else ""
        out.line(f"{head}  {{{', '.join(entry['clauses'])}}}  {sats}{flag}",
                 ok=all(entry["sat"].values()) and not entry["conflicting"])
    final = log[-1]
    out.document({"system": system.name, "steps": log})
    return EXIT_OK if all(final["sat"].values()) and not final["conflicting"] else EXIT_FAILS


# sweep


def cmd_sweep(args, config: CvaConfig, out: Output) -> int:
    from orchestrator import TheoremSweepOrchestrator

    orchestrator = TheoremSweepOrchestrator(
        bounds=_bounds(args, config),
        seed=config.seed,
        random_systems=args.systems or config.random_systems,
        reports_dir=config.reports_dir,
    )
    if args.oracle_only:
        rows = [orchestrator.run_oracle_equivalence()]
    else:
        rows = orchestrator.run_complete_sweep()
    for row in rows:
        out.line(
            f"{row['check']}: {row['outcome']} ({row['cases']} cases, {row['counterexamples']} counterexamples)",
            ok=orchestrator.acceptable(row),
        )
    out.document({"checks": rows})
    if args.save_report:
        orchestrator.save_reports(rows)
    return EXIT_OK if all(orchestrator.acceptable(row) for row in rows) else EXIT_FAILS


COMMANDS = {
    "validate": cmd_validate,
    "check": cmd_check,
    "conflicts": cmd_conflicts,
    "stricter": cmd_stricter,
    "export": cmd_export,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="Print the result as JSON")
    common.add_argument("--max-sigma", type=int, default=None, help="Alphabet bound of the semantic oracle")
    common.add_argument("--strict-totality", action="store_true", help="Disable the implicit else self-loop")
    common.add_argument("--save-report", action="store_true", help="Write a CSV report to the reports directory")

    parser = argparse.ArgumentParser(prog="cva", description="Two-party deontic contract verifier")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="Parse and validate a system file")
    p.add_argument("file")

    p = sub.add_parser("check", parents=[common], help="Find violations and decide breach-incapability")
    p.add_argument("file")
    p.add_argument("--party", choices=["1", "2", "both"], default="both")
    p.add_argument("--ca", help="Contract block to use instead of the default one")

    p = sub.add_parser("conflicts", parents=[common], help="Report conflicting states of a contract automaton")
    p.add_argument("file")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--ca", help="Contract block to analyse")
    group.add_argument("--conjoin", nargs=2, metavar=("A", "B"), help="Analyse the conjunction of two contracts")
    p.add_argument("--semantic", action="store_true", help="Close conflicts under oracle strictness")
    p.add_argument("--live-offers", action="store_true", help="Also strengthen with facts that need every offer to fire")

    p = sub.add_parser("stricter", parents=[common], help="Compare two clauses")
    p.add_argument("--c1", required=True, help="Weaker clause, e.g. P<1>(a)")
    p.add_argument("--c2", required=True, help="Stricter clause, e.g. O<1>(a)")
    p.add_argument("--sigma", help="Alphabet, comma separated (default: actions of the clauses and mutex)")
    p.add_argument("--sync", help="Synchronization set, comma separated (default: the whole alphabet)")
    p.add_argument("--mutex", help="Mutually exclusive pairs, e.g. a#b,c#d")
    p.add_argument("--party", choices=["1", "2"], help="Restrict the verdict to one party")
    p.add_argument("--semantic", action="store_true", help="Decide with the bounded oracle")
    p.add_argument("--live-offers", action="store_true", help="Only configurations where every offer can fire")

    p = sub.add_parser("export", parents=[common], help="Write a Graphviz DOT file")
    p.add_argument("file")
    p.add_argument("--dot", required=True, help="Output path")
    p.add_argument("--layer", choices=LAYERS, default="regulated")
    p.add_argument("--ca", help="Contract block to use instead of the default one")

    p = sub.add_parser("simulate", parents=[common], help="Replay a trace step by step")
    p.add_argument("file")
    p.add_argument("--trace", default="", help='Action sets separated by ";", e.g. "{a,b};{c}"')
    p.add_argument("--ca", help="Contract block to use instead of the default one")

    p = sub.add_parser("sweep", parents=[common], help="Run the strictness and oracle sweeps")
    p.add_argument("--oracle-only", action="store_true", help="Only cross-check satisfaction on random systems")
    p.add_argument("--systems", type=int, default=None, help="Number of random systems")
    p.add_argument("--live-offers", action="store_true", help="Only configurations where every offer can fire")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config_from_env()
    except ValueError as e:
        print(f"cva: {e}", file=sys.stderr)
        return EXIT_INVALID

    logging.basicConfig(
        level=getattr(logging, config.log_level),
        format='%(asctime)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    out = Output(args.json, config.color)
    try:
        return COMMANDS[args.command](args, config, out)
    except DslError as e:
        for diagnostic in e.diagnostics:
            print(f"{getattr(args, 'file', '')}:{diagnostic}", file=sys.stderr)
        return EXIT_INVALID
    except (VerificationError, CliError) as e:
        logger.error(f"❌ {e}")
        print(f"cva: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
