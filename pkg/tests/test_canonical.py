import pytest

from treeramsey.canonical import (
    CanonicalError,
    CanonicalTree,
    SeparationContext,
    instantiate,
    node_from_text,
    node_tau,
    node_tau_beta,
    node_to_text,
    rank_symbolic,
    separation,
    truncate,
)
from treeramsey.ordinal import OMEGA, ONE, ZERO, mul, omega_pow, ordinal

w = OMEGA
w2 = omega_pow(2)


@pytest.fixture
def square():
    return CanonicalTree.of(0, w2)


class TestMembership:
    def test_entries_must_decrease(self, square):
        assert (mul(w, 2), ordinal(5)) in square
        assert (ordinal(5), mul(w, 2)) not in square

    def test_bounds(self, square):
        assert (w2,) not in square
        assert (ZERO,) in square
        line = CanonicalTree.of(w, mul(w, 2))
        assert (w + 3,) in line
        assert (ordinal(3),) not in line

    def test_empty_tree(self):
        assert CanonicalTree.of(w, w).is_empty
        assert not CanonicalTree.of(0, 1).is_empty

    def test_node_text_round_trip(self):
        node = node_from_text("w*2+3, 5")
        assert node == (mul(w, 2) + 3, ordinal(5))
        assert node_from_text(node_to_text(node)) == node
        with pytest.raises(CanonicalError):
            node_from_text("1, w")


class TestRank:
    def test_headline(self):
        assert rank_symbolic(CanonicalTree.of(0, omega_pow(w))) == omega_pow(w)

    def test_empty(self):
        assert rank_symbolic(CanonicalTree.of(w, w)) == ZERO

    def test_shifted(self):
        assert rank_symbolic(CanonicalTree.of(w, mul(w, 2))) == w


class TestNodeTau:
    def test_from_last_entry(self, square):
        assert node_tau(square, (mul(w, 2) + 3,)) == mul(w, 2) + 3

    def test_leaf(self, square):
        assert node_tau(square, (mul(w, 2) + 3, ZERO)) == ZERO

    def test_finite_cross_check(self):
        tree = CanonicalTree.of(0, 3)
        assert node_tau(tree, (ordinal(2), ONE)) == ONE

    def test_shifted_alpha(self):
        line = CanonicalTree.of(w, mul(w, 2))
        assert node_tau(line, (w + 3,)) == ordinal(3)

    def test_rejects_outsiders(self, square):
        with pytest.raises(CanonicalError):
            node_tau(square, (w2,))

    @pytest.mark.parametrize("node,beta,expected", [
        ((mul(w, 2) + 3,), "w", 2),
        ((ordinal(5),), "w", 0),
        ((mul(w, 2) + 3,), "w^2", 0),
    ])
    def test_tau_beta(self, square, node, beta, expected):
        from treeramsey.ordinal import parse_ordinal
        assert node_tau_beta(square, parse_ordinal(beta), node) == ordinal(expected)


class TestSeparation:
    def test_same_block(self, square):
        s = (mul(w, 2) + 3,)
        assert separation(square, s, s + (mul(w, 2) + 1,)) == 0

    def test_cross_block(self, square):
        s = (mul(w, 2) + 3,)
        assert separation(square, s, s + (ordinal(5),)) == 1

    def test_single_layer(self):
        line = CanonicalTree.of(0, w)
        assert separation(line, (ordinal(5),), (ordinal(5), ordinal(2))) == 0

    def test_requires_comparable(self, square):
        with pytest.raises(CanonicalError):
            separation(square, (w,), (w + 1,))

    def test_requires_indecomposable_rank(self):
        bumpy = CanonicalTree.of(0, mul(w, 2))
        with pytest.raises(CanonicalError):
            separation(bumpy, (w,), (w, ONE))

    def test_context_layers(self):
        ctx = SeparationContext(omega_pow(3))
        assert ctx.lam == 3
        assert ctx.alphas == (w, w2, omega_pow(3))
        assert ctx.of_taus(mul(w2, 2) + w, mul(w2, 2) + 1) == 1
        assert ctx.of_taus(mul(w2, 2), w2) == 2


class TestTruncation:
    def test_full_small_tree(self):
        window = truncate(CanonicalTree.of(0, 3), 3, 3)
        assert len(window.tree) == 7
        assert window.tree.rank() == 3
        assert all(window.complete.values())

    def test_depth_one(self):
        window = truncate(CanonicalTree.of(0, w), 1, 4)
        assert len(window.tree) == 4
        assert window.tree.rank() == 1

    def test_sampled_roots_below_omega_squared(self):
        window = truncate(CanonicalTree.of(0, w2), 2, 2)
        roots = {node_to_text(window.node_of(i)) for i in window.tree.roots()}
        assert roots == {"w + 1", "w"}

    def test_tau_agreement_on_complete_windows(self):
        for n in (3, 5):
            window = instantiate(n)
            for i in window.tree.ids:
                assert ordinal(window.tree.tau(i)) == node_tau(window.source, window.node_of(i))

    def test_separation_cross_check_against_finite(self):
        # on a fully materialized window, symbolic separation matches the
        # index computed from finite tau values block by block
        window = truncate(CanonicalTree.of(0, w2), 3, 4)
        ctx = SeparationContext(w2)
        for i_s, i_t in window.tree.ordered_pairs():
            s, t = window.node_of(i_s), window.node_of(i_t)
            expected = ctx.of_taus(node_tau(window.source, s), node_tau(window.source, t))
            assert separation(window.source, s, t) == expected

    def test_truncation_respects_alpha_floor(self):
        window = truncate(CanonicalTree.of(w, mul(w, 2)), 2, 3)
        for i in window.tree.ids:
            node = window.node_of(i)
            assert all(entry >= w for entry in node)

    def test_rejects_degenerate_budgets(self):
        with pytest.raises(CanonicalError):
            truncate(CanonicalTree.of(0, 3), 0, 3)

    def test_empty_tree_gives_empty_window(self):
        window = truncate(CanonicalTree.of(w, w), 3, 3)
        assert len(window.tree) == 0
        assert window.tree.rank() == 0


class TestDerivativeIdentity:
    """Iterated derivatives of a window agree with symbolic membership on
    nodes whose full child set was materialized."""

    @pytest.mark.parametrize("beta,depth,width", [
        (ordinal(4), 4, 4),
        (w, 3, 3),
        (w2, 3, 3),
    ])
    def test_window_vs_symbolic(self, beta, depth, width):
        tree = CanonicalTree.of(0, beta)
        window = truncate(tree, depth, width)
        finite = window.tree
        closed = {i for i in finite.ids
                  if window.complete[i]
                  and all(window.complete[d] for d in finite.descendants(i))}
        assert closed, "sampling should complete at least the bottom layer"
        from treeramsey.ordinal import add
        for z in range(1, finite.rank() + 1):
            derived = set(finite.iterated_derivative(z).ids)
            shifted = CanonicalTree(add(tree.alpha, ordinal(z)), tree.beta)
            for i in closed:
                assert (i in derived) == (window.node_of(i) in shifted)
