import pandas as pd

from verifier.conflicts import conflict_closure, find_conflicting_states
from verifier.reports import conflicts_frame, save_frame, violations_frame, write_summary_report
from verifier.satisfaction import find_violations


class TestFrames:
    def test_violations_frame(self, fee):
        frame = violations_frame(find_violations(fee.regulated()))
        assert list(frame.columns) == ["party", "kind", "location_kind", "location", "clause", "witness_trace"]
        assert set(frame["party"]) == {2}
        assert (frame["location_kind"] == "state").all()

    def test_empty_frames_keep_columns(self):
        assert list(violations_frame([]).columns)[0] == "party"
        assert list(conflicts_frame([]).columns) == ["state", "first", "second", "derivation", "trace"]

    def test_conflicts_frame(self, banking):
        relation = conflict_closure(banking.alphabet, banking.sync.members, banking.mutex)
        frame = conflicts_frame(find_conflicting_states(banking.contract(), relation))
        assert frame.loc[0, "state"] == "(l1,r1)"
        assert frame.loc[0, "trace"] == "{login,malicious}"


class TestFiles:
    def test_save_frame_name(self, tmp_path, fee):
        frame = violations_frame(find_violations(fee.regulated()))
        path = save_frame(frame, "check", "fee system", str(tmp_path), date="2026-01-02")
        assert path.endswith("check_fee_system_2026-01-02.csv")
        assert len(pd.read_csv(path)) == len(frame)

    def test_summary_report(self, tmp_path):
        rows = [
            {"check": "obligation-over-permission", "outcome": "confirmed", "cases": 4, "counterexamples": 0},
            {"check": "cross-party", "outcome": "refuted", "cases": 8, "counterexamples": 2},
        ]
        path = write_summary_report("SWEEP", rows, str(tmp_path), notes=["witness: x"],
                                    settings={"max_sigma": 2}, date="2026-01-02")
        text = open(path, encoding="utf-8").read()
        assert path.endswith("summary_report_2026-01-02.txt")
        assert "✅ obligation-over-permission: confirmed (4 cases, 0 counterexamples)" in text
        assert "❌ cross-party: refuted (8 cases, 2 counterexamples)" in text
        assert "max_sigma: 2" in text
        assert "witness: x" in text
