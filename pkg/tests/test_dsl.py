import pytest

from verifier.dsl import load_system, parse, pretty, tokenize
from verifier.errors import DslError

from conftest import SYSTEMS_DIR, label

VALID = """\
system tiny {
  alphabet { a, b, c }
  sync { a }
  mutex { b#c }
  party left {
    init p0;
    state p0 { on {a} -> p0; on {b} -> p1; }
    state p1 { on {} -> p0; }
  }
  party right {
    init q0;
    state q0 { on {a, c} -> q0; }
  }
  contract terms {
    init t0;
    state t0 {
      clauses { P<left>(a), F<2>(c), O<1>(!!b) }
      on contains(b) and not contains(c) -> t1;
    }
    state t1 {
      clauses { }
      else -> t0;
    }
  }
}
"""


def codes(text):
    return [d.code for d in parse(text).errors]


class TestTokenizer:
    def test_positions_and_comments(self):
        tokens, diagnostics = tokenize("system x { // note\n  alphabet }")
        assert diagnostics == []
        assert [(t.text, t.line, t.column) for t in tokens[:4]] == [
            ("system", 1, 1), ("x", 1, 8), ("{", 1, 10), ("alphabet", 2, 3),
        ]
        assert tokens[-1].kind == "eof"

    def test_bad_character(self):
        _, diagnostics = tokenize("system $")
        assert [(d.code, d.line, d.column) for d in diagnostics] == [("syntax", 1, 8)]


class TestParse:
    def test_valid_system(self):
        result = parse(VALID)
        assert result.ok, [str(d) for d in result.diagnostics]
        system = result.system
        assert system.name == "tiny"
        assert system.party_names == ("left", "right")
        assert system.sync.members == frozenset({"a"})
        assert system.mutex.excludes("b", "c")

    def test_clauses_use_aliases_and_desugar(self):
        ca = parse(VALID).system.contract("terms")
        assert sorted(str(c) for c in ca.clauses("t0")) == ["O<1>(b)", "O<2>(!c)", "P<1>(a)"]

    def test_guards(self):
        ca = parse(VALID).system.contract("terms")
        assert ca.step("t0", label("b")) == "t1"
        assert ca.step("t0", label("b", "c")) == "t0"
        assert ca.step("t1", label()) == "t0"

    def test_spans(self):
        system = parse(VALID).system
        assert system.locate("party", "right") == (10, 9)
        assert system.locate("contract", "terms") == (14, 12)
        assert system.locate("contract", "missing") == (1, 8)

    def test_default_contract_is_first_without_conjoin(self):
        system = parse(VALID).system
        assert system.contract().name == "terms"

    def test_syntax_error_position(self):
        result = parse("system x {\n  alphabet { a b }\n}")
        assert not result.ok
        (error,) = result.errors
        assert (error.code, error.line, error.column) == ("syntax", 2, 16)
        assert "Expected '}'" in error.message

    def test_missing_closing_brace(self):
        result = parse("system x {\n  alphabet { a }\n")
        assert "end of file" in result.errors[0].message


class TestSemanticDiagnostics:
    def test_undeclared_action_in_label(self):
        text = VALID.replace("on {a, c} -> q0", "on {a, z} -> q0")
        result = parse(text)
        (error,) = result.errors
        assert (error.code, error.line, error.column) == ("undeclared-action", 12, 23)

    def test_mutex_label_points_at_brace(self):
        text = VALID.replace("on {b} -> p1", "on {b, c} -> p1")
        (error,) = parse(text).errors
        assert (error.code, error.line, error.column) == ("mutex-label", 7, 33)
        assert "b#c" in error.message

    def test_mutex_in_sync(self):
        assert codes(VALID.replace("sync { a }", "sync { a, b }")) == ["mutex-in-sync"]

    def test_mutex_self(self):
        assert codes(VALID.replace("mutex { b#c }", "mutex { b#b }")) == ["mutex-self"]

    def test_duplicate_action(self):
        assert codes(VALID.replace("alphabet { a, b, c }", "alphabet { a, b, c, a }")) == ["duplicate-action"]

    def test_empty_alphabet(self):
        assert "empty-alphabet" in codes(VALID.replace("alphabet { a, b, c }", "alphabet { }"))

    def test_unknown_target_state(self):
        assert codes(VALID.replace("on {} -> p0", "on {} -> p9")) == ["unknown-state"]

    def test_duplicate_state(self):
        assert sorted(codes(VALID.replace("state p1 {", "state p0 {"))) == ["duplicate-state", "unknown-state"]

    def test_missing_and_multiple_init(self):
        assert codes(VALID.replace("    init q0;\n", "")) == ["missing-init"]
        assert codes(VALID.replace("init q0;", "init q0; init q0;")) == ["multiple-init"]

    def test_unknown_party_in_clause(self):
        assert codes(VALID.replace("P<left>(a)", "P<mallory>(a)")) == ["unknown-party"]

    def test_party_count(self):
        start = VALID.index("  party right")
        end = VALID.index("  contract terms")
        assert codes(VALID[:start] + VALID[end:]) == ["party-count"]

    def test_duplicate_party(self):
        assert codes(VALID.replace("party right", "party left")) == ["duplicate-party"]

    def test_missing_contract(self):
        start = VALID.index("  contract terms")
        assert codes(VALID[:start] + "}\n") == ["missing-contract"]

    def test_unknown_conjoin_contract(self):
        text = VALID.rstrip()[:-1] + "  conjoin terms other;\n}\n"
        assert codes(text) == ["unknown-contract"]

    def test_collects_several_errors(self):
        text = VALID.replace("on {a, c} -> q0", "on {a, z} -> q7").replace("P<left>(a)", "P<3>(a)")
        assert sorted(codes(text)) == ["undeclared-action", "unknown-party", "unknown-state"]


class TestSystemFiles:
    @pytest.mark.parametrize("name", ["banking", "fee", "deadlock", "permission_counterexample"])
    def test_pretty_round_trip(self, name):
        system = load_system(SYSTEMS_DIR / f"{name}.cva")
        again = parse(pretty(system))
        assert again.ok, [str(d) for d in again.diagnostics]
        assert again.system.fingerprint() == system.fingerprint()

    def test_banking_default_contract_is_conjoined(self, banking):
        assert banking.conjoin == ("left", "right")
        assert banking.contract().initial == "(l0,r0)"

    def test_load_rejects_invalid_file(self, tmp_path):
        path = tmp_path / "broken.cva"
        path.write_text(VALID.replace("sync { a }", "sync { a, b }"), encoding="utf-8")
        with pytest.raises(DslError) as excinfo:
            load_system(path)
        assert excinfo.value.diagnostics[0].code == "mutex-in-sync"
        assert str(excinfo.value).startswith("4:")
