import pytest

from treeramsey.canonical import CanonicalTree
from treeramsey.ordinal import OMEGA, ONE, mul, omega_pow, ordinal
from treeramsey.rules import RuleColoring, RuleError, parse_rule

w = OMEGA


@pytest.fixture
def square():
    return CanonicalTree.of(0, omega_pow(2))


@pytest.fixture
def pair_same_block():
    s = (mul(w, 2) + 3,)
    return s, s + (mul(w, 2) + 1,)


@pytest.fixture
def pair_cross_block():
    s = (mul(w, 2) + 3,)
    return s, s + (ordinal(5),)


class TestSepTable:
    def test_lookup(self, square, pair_same_block, pair_cross_block):
        rule = RuleColoring.sep_table((1, 0))
        assert rule.k == 1
        assert rule.value(square, *pair_same_block) == 1
        assert rule.value(square, *pair_cross_block) == 0

    def test_constant(self, square, pair_same_block):
        rule = RuleColoring.constant(2, k=2)
        assert rule.value(square, *pair_same_block) == 2

    def test_palette_guard(self, square, pair_same_block):
        rule = RuleColoring(0, lambda tree, s, t: 1, "bad")
        with pytest.raises(RuleError):
            rule.value(square, *pair_same_block)


class TestParser:
    def test_table_form(self, square, pair_same_block, pair_cross_block):
        rule = parse_rule("F[sep] with F=(1,0)")
        assert rule.k == 1
        assert rule.value(square, *pair_same_block) == 1
        assert rule.value(square, *pair_cross_block) == 0

    def test_tau_mod(self, square, pair_same_block):
        rule = parse_rule("tau(w, s) mod 2")
        assert rule.k == 1
        assert rule.value(square, *pair_same_block) == 0
        high = (mul(w, 3) + 1,)
        assert rule.value(square, high, high + (ONE,)) == 1

    def test_depth(self, square, pair_same_block):
        rule = parse_rule("if depth(t) > 1 then 1 else 0")
        assert rule.value(square, *pair_same_block) == 1

    def test_comparison_between_primitives(self, square, pair_same_block, pair_cross_block):
        rule = parse_rule("if tau(w, s) == tau(w, t) then 0 else 1")
        assert rule.value(square, *pair_same_block) == 0
        assert rule.value(square, *pair_cross_block) == 1

    def test_nested_if(self, square, pair_cross_block):
        rule = parse_rule("if sep == 0 then 0 else if depth(t) > 5 then 1 else 2", k=2)
        assert rule.value(square, *pair_cross_block) == 2

    def test_round_trips_spec_format(self):
        rule = parse_rule("F[sep] with F=(2,1)")
        assert rule.source.startswith("F[sep]")
        assert rule.k == 2

    @pytest.mark.parametrize("bad", [
        "F[sep] with F=()",
        "tau(w)",
        "if sep then 1 else 0",
        "sep mod",
        "frobnicate",
    ])
    def test_rejects_malformed(self, bad):
        with pytest.raises(RuleError):
            parse_rule(bad)

    def test_table_index_guard(self, square, pair_cross_block):
        rule = parse_rule("F[sep] with F=(1)")
        with pytest.raises(RuleError):
            rule.value(square, *pair_cross_block)
