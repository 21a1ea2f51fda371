import pytest

from verifier.conflicts import conflict_closure, find_conflicting_states
from verifier.dot_export import LAYERS, flagged_states, render, write_dot


@pytest.fixture
def conflicting(banking):
    relation = conflict_closure(banking.alphabet, banking.sync.members, banking.mutex)
    return flagged_states(find_conflicting_states(banking.regulated(), relation))


class TestRender:
    @pytest.mark.parametrize("layer", LAYERS)
    def test_every_layer_is_a_digraph(self, banking, layer):
        source = render(banking, layer)
        assert source.startswith("digraph ")
        assert source.rstrip().endswith("}")
        assert "__start ->" in source

    def test_participation_styles(self, banking):
        source = render(banking, "parties")
        assert 'label="{login}" style=solid' in source
        assert 'label="{malicious}" style=dotted' in source

    def test_regulated_nodes_carry_clauses(self, banking):
        source = render(banking, "regulated")
        assert "(j0,b0)_{(l1,r1)}\\nO<1>(!login)\\nO<1>(!transfer)\\nP<1>(transfer)" in source

    def test_flagged_states_get_a_double_border(self, banking, conflicting):
        assert conflicting == {"(j0,b0)_{(l1,r1)}"}
        source = render(banking, "regulated", conflicting)
        flagged = [line for line in source.splitlines() if "peripheries=2" in line]
        assert len(flagged) == 1
        assert flagged[0].lstrip().startswith('"(j0,b0)_{(l1,r1)}"')

    def test_contract_arms_are_guards(self, banking):
        source = render(banking, "contract", contract="left")
        assert '"l0" -> "l1" [label="contains(login)"]' in source

    def test_unknown_layer(self, banking):
        with pytest.raises(ValueError):
            render(banking, "everything")


class TestWriteDot:
    def test_creates_parent_directories(self, banking, tmp_path):
        path = write_dot(render(banking, "parties"), tmp_path / "out" / "banking.dot")
        assert path.read_text(encoding="utf-8").startswith("digraph")
