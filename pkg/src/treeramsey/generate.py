"""Seeded random generators for property tests and the demo suite.

Everything is driven by a caller-supplied random.Random so runs are
reproducible from a single recorded seed.
"""

from __future__ import annotations

import random

from .ordinal import ZERO, Ordinal, add, mul, omega_pow, ordinal
from .tree_core import FiniteTree


def random_ordinal(rng: random.Random, height: int = 2, max_terms: int = 3,
                   max_coeff: int = 3) -> Ordinal:
    """Random normal form whose exponent tower is at most ``height`` deep."""
    if height <= 0:
        return ordinal(rng.randrange(0, 6))
    n_terms = rng.randrange(0, max_terms + 1)
    exponents = []
    seen = set()
    for _ in range(n_terms):
        e = random_ordinal(rng, height - 1, max_terms, max_coeff)
        if e not in seen:
            seen.add(e)
            exponents.append(e)
    exponents.sort(reverse=True)
    out = ZERO
    for e in exponents:
        out = add(out, mul(omega_pow(e), rng.randrange(1, max_coeff + 1)))
    return out


def random_tree(rng: random.Random, max_nodes: int = 40,
                max_rank: int | None = None, min_nodes: int = 1) -> FiniteTree:
    """Random forest with ids 0..n-1; ``max_rank`` caps every chain length."""
    n = rng.randrange(min_nodes, max_nodes + 1)
    parents: dict[int, int | None] = {}
    depth: dict[int, int] = {}
    for i in range(n):
        pool: list[int | None] = [None]
        pool += [t for t in range(i) if max_rank is None or depth[t] + 1 < max_rank]
        p = rng.choice(pool)
        parents[i] = p
        depth[i] = 0 if p is None else depth[p] + 1
    return FiniteTree.from_parents(parents)


def random_tree_of_rank(rng: random.Random, rank: int, max_nodes: int) -> FiniteTree:
    """Random tree of exactly the requested rank: a spine chain of that
    length plus random padding below the cap."""
    if rank < 1 or max_nodes < rank:
        raise ValueError("need max_nodes >= rank >= 1")
    parents: dict[int, int | None] = {0: None}
    depth = {0: 0}
    for i in range(1, rank):
        parents[i] = i - 1
        depth[i] = i
    n = rng.randrange(rank, max_nodes + 1)
    for i in range(rank, n):
        pool = [None] + [t for t in range(i) if depth[t] + 1 < rank]
        p = rng.choice(pool)
        parents[i] = p
        depth[i] = 0 if p is None else depth[p] + 1
    tree = FiniteTree.from_parents(parents)
    assert tree.rank() == rank
    return tree
