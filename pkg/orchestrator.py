#!/usr/bin/env python3
"""
Sweep Orchestrator for the strictness facts and the satisfaction cross-check
This script runs every sweep in order:
1. Strictness facts over every small alphabet, sync set and party, decided by the bounded oracle
2. The exclusive-permission inversion that does not carry over across parties
3. find_violations against the brute-force evaluator on seeded random systems
"""

import logging
import sys
from datetime import datetime
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import pandas as pd

from cva_config import load_config_from_env
from verifier.automata_core import MutexRelation, powerset
from verifier.contract_model import PARTIES, Clause, Modality, other_party
from verifier.oracle import brute_force_violations, report_keys
from verifier.random_systems import ACTION_NAMES, random_systems
from verifier.reports import save_frame, write_summary_report
from verifier.satisfaction import find_violations
from verifier.strictness import (
    COUNTERPARTY_OBLIGATION,
    EXCLUSIVE_CROSS_PARTY,
    EXCLUSIVE_OBLIGATION,
    EXCLUSIVE_PERMISSION,
    OBLIGATION_OVER_PERMISSION,
    ConfigurationSpace,
    OracleBounds,
    clause_of,
)

logger = logging.getLogger(__name__)

HOLD = "hold"
REFUTE = "refute"
RECORD = "record"

O, P = Modality.OBLIGATION, Modality.PERMISSION

# (sigma, sync members, mutex, clause party, weaker, stricter)
Case = Tuple[Tuple[str, ...], frozenset, MutexRelation, int, Clause, Clause]


class TheoremSweepOrchestrator:
    def __init__(self, bounds: OracleBounds = OracleBounds(), seed: int = 20121,
                 random_systems: int = 1000, reports_dir: str = "reports"):
        """
        Initialize the orchestrator

        Args:
            bounds: enumeration limits of the oracle; max_sigma also bounds the sweeps
            seed: seed of the random system generator
            random_systems: number of systems for the oracle cross-check
            reports_dir: where CSV and summary reports go
        """
        self.bounds = bounds
        self.seed = seed
        self.random_systems = random_systems
        self.reports_dir = reports_dir
        self._spaces: Dict[Tuple, ConfigurationSpace] = {}

    def space(self, sigma: Tuple[str, ...], sync: frozenset, mutex: MutexRelation,
              live_offers: bool = False) -> ConfigurationSpace:
        bounds = OracleBounds(self.bounds.max_sigma, self.bounds.max_menu, self.bounds.max_context, live_offers)
        key = (sigma, sync, mutex, live_offers)
        if key not in self._spaces:
            self._spaces[key] = ConfigurationSpace(sigma, sync, mutex, bounds)
        return self._spaces[key]

    @staticmethod
    def acceptable(row: Dict) -> bool:
        if row["expected"] == HOLD:
            return row["outcome"] == "confirmed"
        if row["expected"] == REFUTE:
            return row["outcome"] == "refuted"
        return row["outcome"] != "error"

    def _alphabets(self, smallest: int = 1) -> Iterator[Tuple[str, ...]]:
        for size in range(smallest, self.bounds.max_sigma + 1):
            yield ACTION_NAMES[:size]

    def _sweep(self, check: str, expected: str, cases: Callable[[], Iterator[Case]],
               live_offers: bool = False) -> Dict:
        live_offers = live_offers or self.bounds.live_offers
        logger.info("=" * 60)
        logger.info(f"SWEEP: {check}{' (live offers)' if live_offers else ''}")
        logger.info("=" * 60)
        row = {
            "check": check,
            "mode": "live-offers" if live_offers else "all-menus",
            "expected": expected,
            "outcome": "error",
            "cases": 0,
            "counterexamples": 0,
            "witness": None,
        }
        try:
            refuting_syncs, refuting_parties = set(), set()
            for sigma, sync, mutex, party, weaker, stricter in cases():
                row["cases"] += 1
                space = self.space(sigma, sync, mutex, live_offers)
                # strictness must hold for both parties, not only the clause's own
                for checked in PARTIES:
                    found = space.clause_counterexample(checked, weaker, stricter)
                    if found is None:
                        continue
                    row["counterexamples"] += 1
                    refuting_syncs.add("{" + ",".join(sorted(sync)) + "}")
                    refuting_parties.add(checked)
                    if row["witness"] is None:
                        row["witness"] = dict(found.to_dict(), clause_party=party, sigma=list(sigma),
                                              sync=sorted(sync), weaker=str(weaker), stricter=str(stricter))
                        logger.debug(f"Counterexample for {weaker} ⊑ {stricter}: {row['witness']}")
            row["outcome"] = "refuted" if row["counterexamples"] else "confirmed"
            row["refuting_sync_sets"] = sorted(refuting_syncs)
            row["refuting_parties"] = sorted(refuting_parties)
        except Exception as e:
            logger.error(f"❌ Error in sweep '{check}': {e}")
            return row
        mark = "✅" if self.acceptable(row) else "⚠️"
        logger.info(f"{mark} {check}: {row['outcome']} ({row['cases']} cases, {row['counterexamples']} counterexamples)")
        return row

    # strictness facts

    def run_obligation_over_permission(self) -> Dict:
        """P_p(x) ⊑ O_p(x) for both literals"""
        def cases():
            for sigma in self._alphabets():
                for sync in powerset(sigma):
                    for party in PARTIES:
                        for action in sigma:
                            for positive in (True, False):
                                yield (sigma, sync, MutexRelation(), party,
                                       clause_of(P, party, action, positive), clause_of(O, party, action, positive))
        return self._sweep(OBLIGATION_OVER_PERMISSION, HOLD, cases)

    def _counterparty_cases(self, synchronized: bool) -> Callable[[], Iterator[Case]]:
        """P_p(x) ⊑ O_p̄(x), x inside or outside the sync set"""
        def cases():
            for sigma in self._alphabets():
                for sync in powerset(sigma):
                    for party in PARTIES:
                        for action in sigma:
                            if (action in sync) != synchronized:
                                continue
                            for positive in (True, False):
                                yield (sigma, sync, MutexRelation(), party,
                                       clause_of(P, party, action, positive),
                                       clause_of(O, other_party(party), action, positive))
        return cases

    def run_counterparty_obligation(self, live_offers: bool = False) -> Dict:
        # over all menus a synchronised offer p can never match breaks the negative literal for p̄
        expected = HOLD if live_offers or self.bounds.live_offers else REFUTE
        return self._sweep(COUNTERPARTY_OBLIGATION, expected,
                           self._counterparty_cases(True), live_offers)

    def run_counterparty_local(self) -> Dict:
        return self._sweep(f"{COUNTERPARTY_OBLIGATION} (local action)", RECORD,
                           self._counterparty_cases(False))

    def _exclusive_cases(self, build: Callable[[int, str, str], Tuple[Clause, Clause]],
                         any_sync: bool = False) -> Callable[[], Iterator[Case]]:
        """a#b declared; by default a and b stay local"""
        def cases():
            for sigma in self._alphabets(smallest=2):
                mutex = MutexRelation([(sigma[0], sigma[1])])
                candidates = sigma if any_sync else sigma[2:]
                for sync in powerset(candidates):
                    for party in PARTIES:
                        for a, b in ((sigma[0], sigma[1]), (sigma[1], sigma[0])):
                            weaker, stricter = build(party, a, b)
                            yield (sigma, sync, mutex, party, weaker, stricter)
        return cases

    def run_exclusive_obligation_inversion(self) -> Dict:
        """O_p(!a) ⊑ O_p(b) for a#b"""
        return self._sweep(EXCLUSIVE_OBLIGATION, HOLD, self._exclusive_cases(
            lambda p, a, b: (clause_of(O, p, a, False), clause_of(O, p, b))))

    def run_exclusive_permission_inversion(self) -> Dict:
        """P_p(!a) ⊑ P_p(b) for a#b"""
        return self._sweep(EXCLUSIVE_PERMISSION, HOLD, self._exclusive_cases(
            lambda p, a, b: (clause_of(P, p, a, False), clause_of(P, p, b))))

    def run_exclusive_cross_party(self) -> Dict:
        """O_p̄(!b) ⊑ O_p(a) for a#b; a lone move of p̄ with b breaks it"""
        return self._sweep(EXCLUSIVE_CROSS_PARTY, RECORD, self._exclusive_cases(
            lambda p, a, b: (clause_of(O, other_party(p), b, False), clause_of(O, p, a))))

    def run_cross_party_permission(self) -> Dict:
        """P_p̄(!b) ⊑ P_p(a) for a#b does not hold; refuted once b is synchronized"""
        return self._sweep("cross-party-permission-inversion", REFUTE, self._exclusive_cases(
            lambda p, a, b: (clause_of(P, other_party(p), b, False), clause_of(P, p, a)), any_sync=True))

    # satisfaction cross-check

    def run_oracle_equivalence(self, count: Optional[int] = None) -> Dict:
        count = count or self.random_systems
        logger.info("=" * 60)
        logger.info(f"SWEEP: find_violations vs brute force on {count} random systems")
        logger.info("=" * 60)
        row = {
            "check": "satisfaction-oracle-equivalence",
            "mode": f"seed {self.seed}",
            "expected": HOLD,
            "outcome": "error",
            "cases": 0,
            "counterexamples": 0,
            "witness": None,
        }
        try:
            for index, system in enumerate(random_systems(self.seed, count, max_sigma=min(self.bounds.max_sigma, 3))):
                row["cases"] += 1
                fast = report_keys(find_violations(system))
                slow = brute_force_violations(system)
                if fast != slow:
                    row["counterexamples"] += 1
                    if row["witness"] is None:
                        row["witness"] = {
                            "system": index,
                            "only_fast": sorted(map(str, fast - slow)),
                            "only_brute_force": sorted(map(str, slow - fast)),
                        }
            row["outcome"] = "refuted" if row["counterexamples"] else "confirmed"
        except Exception as e:
            logger.error(f"❌ Error in oracle cross-check: {e}")
            return row
        logger.info(f"{'✅' if row['outcome'] == 'confirmed' else '❌'} {row['cases']} systems, "
                    f"{row['counterexamples']} disagreements")
        return row

    def run_complete_sweep(self) -> List[Dict]:
        start_time = datetime.now()

        logger.info("\n" + "🚀" * 30)
        logger.info("STRICTNESS & SATISFACTION SWEEP")
        logger.info("🚀" * 30)
        logger.info(f"Started at: {start_time.strftime('%Y-%m-%d %H:%M:%S')}")
        logger.info(f"Bounds: {self.bounds.to_dict()}\n")

        rows = [
            self.run_obligation_over_permission(),
            self.run_counterparty_obligation(),
            self.run_counterparty_obligation(live_offers=True),
            self.run_counterparty_local(),
            self.run_exclusive_obligation_inversion(),
            self.run_exclusive_permission_inversion(),
            self.run_exclusive_cross_party(),
            self.run_cross_party_permission(),
            self.run_oracle_equivalence(),
        ]

        end_time = datetime.now()
        duration = (end_time - start_time).total_seconds()

        logger.info("\n" + "=" * 60)
        logger.info("WORKFLOW SUMMARY")
        logger.info("=" * 60)
        for row in rows:
            status = '✅ AS EXPECTED' if self.acceptable(row) else '❌ UNEXPECTED'
            logger.info(f"{row['check']} [{row['mode']}]: {row['outcome']} {status}")
        logger.info(f"Total Duration: {duration:.2f} seconds")
        logger.info(f"Completed at: {end_time.strftime('%Y-%m-%d %H:%M:%S')}")
        logger.info("=" * 60)
        return rows

    def save_reports(self, rows: List[Dict]) -> Tuple[str, str]:
        frame = pd.DataFrame([
            {key: (str(value) if isinstance(value, (dict, list)) else value) for key, value in row.items()}
            for row in rows
        ])
        csv_path = save_frame(frame, "sweep", "strictness", self.reports_dir)
        notes = [
            f"{row['check']} [{row['mode']}] witness: {row['witness']}"
            for row in rows if row.get("witness")
        ]
        summary_rows = [dict(row, check=f"{row['check']} [{row['mode']}]") for row in rows]
        summary_path = write_summary_report("STRICTNESS & SATISFACTION SWEEP REPORT", summary_rows,
                                            self.reports_dir, notes, settings=self.bounds.to_dict())
        return csv_path, summary_path


def main():
    """Main entry point"""
    import argparse

    parser = argparse.ArgumentParser(
        description="Run the strictness sweeps and the satisfaction cross-check"
    )
    parser.add_argument("--oracle-only", action="store_true", help="Only run the satisfaction cross-check")
    parser.add_argument("--systems", type=int, default=None, help="Number of random systems")
    parser.add_argument("--live-offers", action="store_true",
                        help="Restrict every strictness sweep to configurations where each offer can fire")
    parser.add_argument("--save-report", action="store_true", help="Write CSV and summary reports")

    args = parser.parse_args()
    config = load_config_from_env()
    logging.basicConfig(
        level=getattr(logging, config.log_level),
        format='%(asctime)s - %(levelname)s - %(message)s'
    )

    orchestrator = TheoremSweepOrchestrator(
        bounds=OracleBounds(config.max_sigma, config.max_menu, config.max_context, args.live_offers),
        seed=config.seed,
        random_systems=args.systems or config.random_systems,
        reports_dir=config.reports_dir,
    )
    if args.oracle_only:
        rows = [orchestrator.run_oracle_equivalence()]
    else:
        rows = orchestrator.run_complete_sweep()
    if args.save_report:
        orchestrator.save_reports(rows)

    sys.exit(0 if all(orchestrator.acceptable(row) for row in rows) else 1)


if __name__ == "__main__":
    main()
