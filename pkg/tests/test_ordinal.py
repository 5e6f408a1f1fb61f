import random

import pytest

from treeramsey.ordinal import (
    OMEGA,
    ONE,
    ZERO,
    OrdinalError,
    add,
    compare,
    descend_below,
    factorize,
    fundamental_sequence,
    is_additively_indecomposable,
    is_multiplicatively_indecomposable,
    left_divide,
    left_subtract,
    mul,
    omega_pow,
    ordinal,
    parse_ordinal,
    sum_decompose,
)
from treeramsey.generate import random_ordinal

w = OMEGA
w2 = omega_pow(2)


class TestCompare:
    def test_zero_one(self):
        assert compare(0, 1) == -1

    def test_equal(self):
        assert compare(w, w) == 0

    def test_leading_exponent_dominates(self):
        # w*2+1 has leading exponent 1, below the exponent 2 of w^2
        assert compare(mul(w, 2) + 1, w2) == -1

    def test_int_interop(self):
        assert ordinal(3) < w
        assert not (w < ordinal(3))


class TestAdd:
    def test_successor(self):
        assert add(w, 1) == parse_ordinal("w + 1")

    def test_absorption(self):
        assert add(1, w) == w

    def test_trailing_terms_dropped(self):
        assert add(w2 + w, w2) == mul(w2, 2)

    def test_associative_examples(self):
        a, b, c = parse_ordinal("w*2+1"), parse_ordinal("w^2"), parse_ordinal("3")
        assert add(add(a, b), c) == add(a, add(b, c))


class TestMul:
    def test_omega_squared(self):
        assert mul(w, w) == w2

    def test_left_absorption(self):
        assert mul(2, w) == w

    def test_sup_of_finite_products(self):
        # (w+1)*n = w*n + 1 for every finite n, so (w+1)*w = w^2
        for n in range(1, 6):
            assert mul(w + 1, n) == mul(w, n) + 1
        assert mul(w + 1, w) == w2

    def test_zero(self):
        assert mul(ZERO, w) == ZERO
        assert mul(w, ZERO) == ZERO


class TestOmegaPow:
    @pytest.mark.parametrize("e,expected", [
        (0, "1"),
        (1, "w"),
    ])
    def test_small(self, e, expected):
        assert str(omega_pow(e)) == expected

    def test_omega_exponent(self):
        assert omega_pow(w) == parse_ordinal("w^w")


class TestLeftSubtract:
    def test_basic(self):
        assert left_subtract(w, mul(w, 2)) == w
        assert left_subtract(ordinal(5), w) == w
        assert left_subtract(w + 1, mul(w, 2)) == w

    def test_rejects_larger(self):
        with pytest.raises(OrdinalError):
            left_subtract(w2, w)


class TestLeftDivide:
    def test_example(self):
        assert left_divide(w, mul(w, 2) + 3) == (ordinal(2), ordinal(3))

    def test_exact(self):
        assert left_divide(w2, w2) == (ONE, ZERO)

    def test_small_dividend(self):
        assert left_divide(w, 5) == (ZERO, ordinal(5))

    def test_rejects_zero(self):
        with pytest.raises(OrdinalError):
            left_divide(ZERO, w)

    def test_tail_adjustment(self):
        # (w+1)*2 = w*2+1 exceeds w*2, so the quotient drops to 1
        delta, rem = left_divide(w + 1, mul(w, 2))
        assert delta == ONE and rem == w


class TestIndecomposability:
    def test_additive(self):
        assert is_additively_indecomposable(w2)
        assert not is_additively_indecomposable(mul(w, 2))
        assert is_additively_indecomposable(1)
        assert not is_additively_indecomposable(0)

    def test_multiplicative(self):
        assert is_multiplicatively_indecomposable(2)
        assert not is_multiplicatively_indecomposable(w2)
        assert is_multiplicatively_indecomposable(w)
        assert is_multiplicatively_indecomposable(omega_pow(w))
        assert not is_multiplicatively_indecomposable(3)


class TestFactorize:
    def test_one(self):
        fact = factorize(ONE)
        assert fact.epsilons == () and fact.lam == 0

    def test_omega_cubed(self):
        fact = factorize(omega_pow(3))
        assert fact.epsilons == (ZERO, ZERO, ZERO)
        assert fact.lam == 3
        product = ONE
        for e in fact.epsilons:
            product = mul(product, omega_pow(omega_pow(e)))
        assert product == omega_pow(3)

    def test_mixed(self):
        fact = factorize(omega_pow(w + 1))
        assert fact.epsilons == (ONE, ZERO)
        assert fact.lam == 2
        assert fact.factors == (omega_pow(w), omega_pow(w + 1))
        assert fact.cofactors == (w, ONE)

    def test_prefix_times_cofactor(self):
        g = omega_pow(parse_ordinal("w^2 + w + 1"))
        fact = factorize(g)
        for a, r in zip(fact.factors, fact.cofactors):
            assert mul(a, r) == g

    def test_rejects_decomposable(self):
        with pytest.raises(OrdinalError):
            factorize(mul(w, 2))


class TestSumDecompose:
    def test_finite(self):
        sd = sum_decompose(3)
        assert list(sd) == [ZERO, ZERO, ZERO]
        assert sd.partial_sums == (ZERO, ONE, ordinal(2), ordinal(3))

    def test_with_coefficients(self):
        assert list(sum_decompose(mul(w, 2) + 1)) == [ONE, ONE, ZERO]

    def test_partial_sums_resum(self):
        g = w2 + mul(w, 2)
        sd = sum_decompose(g)
        assert list(sd) == [ordinal(2), ONE, ONE]
        assert sd.partial_sums[-1] == g
        acc = ZERO
        for e in sd:
            acc = add(acc, omega_pow(e))
        assert acc == g

    def test_rejects_zero(self):
        with pytest.raises(OrdinalError):
            sum_decompose(ZERO)


class TestTextSyntax:
    def test_round_trip(self):
        text = "w^(w + 1)*2 + w*3 + 5"
        value = parse_ordinal(text)
        assert parse_ordinal(str(value)) == value

    def test_normalization(self):
        assert parse_ordinal("1 + w") == w

    def test_whitespace_insensitive(self):
        assert parse_ordinal(" w ^ ( w ) ") == omega_pow(w)

    def test_bare_exponent(self):
        assert parse_ordinal("w^2") == w2

    def test_rejects_garbage(self):
        for bad in ("w^", "w*(2)", "q", "w^()", "1 +"):
            with pytest.raises(OrdinalError):
                parse_ordinal(bad)


class TestFundamentalSequences:
    def test_omega(self):
        assert fundamental_sequence(w, 3) == ordinal(3)

    def test_omega_squared(self):
        assert fundamental_sequence(w2, 2) == mul(w, 2)

    def test_omega_tower(self):
        assert fundamental_sequence(omega_pow(w), 3) == omega_pow(3)

    def test_rejects_successor(self):
        with pytest.raises(OrdinalError):
            fundamental_sequence(w + 1, 2)

    def test_descending_sample(self):
        assert descend_below(w2, 2) == [w + 1, w]
        assert descend_below(w, 4) == [ordinal(3), ordinal(2), ONE, ZERO]
        assert descend_below(mul(w, 2), 3) == [w + 2, w + 1, w]
        assert descend_below(w, 3, floor=ONE) == [ordinal(2), ONE]


class TestLaws:
    """Randomized exact laws; the acceptance suite runs the full volume."""

    def setup_method(self):
        self.rng = random.Random(20240817)

    def test_associativity_and_distributivity(self):
        for _ in range(150):
            a, b, c = (random_ordinal(self.rng) for _ in range(3))
            assert add(add(a, b), c) == add(a, add(b, c))
            assert mul(mul(a, b), c) == mul(a, mul(b, c))
            assert mul(a, add(b, c)) == add(mul(a, b), mul(a, c))

    def test_division_soundness(self):
        for _ in range(150):
            a = random_ordinal(self.rng)
            xi = random_ordinal(self.rng)
            if a.is_zero:
                continue
            delta, rem = left_divide(a, xi)
            assert add(mul(a, delta), rem) == xi
            assert compare(mul(a, add(delta, ONE)), xi) > 0

    def test_subtraction_round_trip(self):
        for _ in range(150):
            a, b = random_ordinal(self.rng), random_ordinal(self.rng)
            lo, hi = (a, b) if compare(a, b) <= 0 else (b, a)
            assert add(lo, left_subtract(lo, hi)) == hi

    def test_decompositions_reconstruct(self):
        for _ in range(100):
            g = random_ordinal(self.rng)
            if g.is_zero:
                continue
            acc = ZERO
            for e in sum_decompose(g):
                acc = add(acc, omega_pow(e))
            assert acc == g
            h = omega_pow(g)
            fact = factorize(h)
            prod = ONE
            for e in fact.epsilons:
                prod = mul(prod, omega_pow(omega_pow(e)))
            assert prod == h

    def test_hashable_and_unique(self):
        seen = {}
        for _ in range(100):
            g = random_ordinal(self.rng)
            seen[g] = str(g)
        for g, text in seen.items():
            assert parse_ordinal(text) == g
