"""Constructive stabilization of colorings on finite trees.

Every operation returns the stabilized subtree together with the reduced
color function and a certificate whose checks are recomputed from scratch
on the output.  All existential choices in the underlying recursions are
resolved by minimum node id, so identical inputs give identical outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Mapping, Sequence

from .tree_core import FiniteTree, select_level_subset

select_levels = select_level_subset


class StabilizeError(ValueError):
    pass


class RamseyBudgetError(RuntimeError):
    """The exhaustive search would exceed the configured size budget."""

    def __init__(self, message: str, lower_bound: int, upper_bound: int | None = None):
        super().__init__(message)
        self.lower_bound = lower_bound
        self.upper_bound = upper_bound


# -- colorings ---------------------------------------------------------------


@dataclass(frozen=True)
class Coloring:
    """Explicit color assignment on nodes, ordered pairs, or leaf chains.

    Pair keys are (ancestor, descendant); chain keys are the full tuples
    ending at a leaf, with ``n`` the number of strictly increasing entries
    before the leaf.
    """

    arity: str
    k: int
    table: Mapping
    n: int | None = None

    def value(self, key):
        return self.table[key]

    @staticmethod
    def of_nodes(tree: FiniteTree, fn: Callable[[int], int], k: int | None = None) -> "Coloring":
        table = {t: fn(t) for t in tree.ids}
        return Coloring("nodes", _palette(table.values(), k), table)

    @staticmethod
    def of_pairs(tree: FiniteTree, fn: Callable[[int, int], int], k: int | None = None) -> "Coloring":
        table = {(s, t): fn(s, t) for s, t in tree.ordered_pairs()}
        return Coloring("pairs", _palette(table.values(), k), table)

    @staticmethod
    def of_leaf_chains(tree: FiniteTree, n: int, fn: Callable[..., int],
                       k: int | None = None) -> "Coloring":
        table = {chain: fn(*chain) for chain in tree.leaf_chains(n)}
        return Coloring("chains", _palette(table.values(), k), table, n=n)

    def to_json(self) -> dict:
        if self.arity == "nodes":
            body = {"arity": 1, "nodes": [[t, c] for t, c in sorted(self.table.items())]}
        elif self.arity == "pairs":
            body = {"arity": 2, "pairs": [[s, t, c] for (s, t), c in sorted(self.table.items())]}
        else:
            body = {"arity": "chains", "n": self.n,
                    "chains": [list(key) + [c] for key, c in sorted(self.table.items())]}
        return {"schema_version": 1, "k": self.k, **body}

    @staticmethod
    def from_json(data: dict) -> "Coloring":
        k = int(data.get("k", 0))
        arity = data.get("arity")
        if arity in (1, "1", "nodes") or "nodes" in data:
            table = {int(t): int(c) for t, c in data["nodes"]}
            return Coloring("nodes", k, table)
        if arity in (2, "2", "pairs") or "pairs" in data:
            table = {(int(s), int(t)): int(c) for s, t, c in data["pairs"]}
            return Coloring("pairs", k, table)
        if arity == "chains" or "chains" in data:
            n = int(data["n"])
            table = {tuple(int(x) for x in row[:-1]): int(row[-1]) for row in data["chains"]}
            return Coloring("chains", k, table, n=n)
        raise StabilizeError(f"unrecognized coloring document: {data.keys()}")

    @staticmethod
    def load(path: str) -> "Coloring":
        with open(path) as fh:
            return Coloring.from_json(json.load(fh))


def _palette(values: Iterable[int], k: int | None) -> int:
    top = max(values, default=0)
    if k is None:
        return top
    if top > k:
        raise StabilizeError(f"color {top} outside palette 0..{k}")
    return k


# -- certificates --------------------------------------------------------------


@dataclass
class CertificateCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Certificate:
    checks: list[CertificateCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(CertificateCheck(name, bool(passed), detail))

    def to_json(self) -> list[dict]:
        return [{"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks]


@dataclass
class StabilizationResult:
    ambient: FiniteTree
    subtree: FiniteTree
    mode: str
    reduced: object
    coloring: Coloring
    expected_rank: int
    certificate: Certificate = field(default_factory=Certificate)
    chain_length: int | None = None
    extra: dict = field(default_factory=dict)

    def recheck(self) -> Certificate:
        """Re-run the certificate from the stored data."""
        return _certify(self)

    def to_json(self) -> dict:
        reduced: object
        if self.mode == "levels":
            reduced = list(self.reduced)
        elif self.mode == "pairs":
            reduced = [[i, j, c] for (i, j), c in sorted(self.reduced.items())]
        elif self.mode == "leaf-chains":
            reduced = [list(key) + [c] for key, c in sorted(self.reduced.items())]
        else:
            reduced = self.reduced
        return {
            "schema_version": 1,
            "mode": self.mode,
            "ambient": self.ambient.to_json(),
            "subtree_ids": list(self.subtree.ids),
            "expected_rank": self.expected_rank,
            "reduced": reduced,
            "coloring": self.coloring.to_json(),
            "certificate": self.certificate.to_json(),
            "extra": self.extra,
        }


def _certify(result: StabilizationResult) -> Certificate:
    cert = Certificate()
    P, Q = result.ambient, result.subtree
    cert.add("rank-preserved", Q.rank() == result.expected_rank,
             f"rank(Q)={Q.rank()} required={result.expected_rank}")
    tau_p, tau_q = P.tau_map, Q.tau_map
    if result.mode != "ramsey-reduce":
        bad = [t for t in Q.ids if tau_q[t] != tau_p[t]]
        cert.add("tau-compatible", not bad, f"mismatch at {bad[:5]}")
    f = result.coloring
    if result.mode == "levels":
        F = result.reduced
        bad = [t for t in Q.ids if f.value(t) != F[tau_q[t]]]
        cert.add("level-colors-constant", not bad, f"disagrees at {bad[:5]}")
    elif result.mode == "pairs":
        G = result.reduced
        bad = [(s, t) for s, t in Q.ordered_pairs()
               if tau_q[s] > tau_q[t] and f.value((s, t)) != G[(tau_q[t], tau_q[s])]]
        cert.add("pair-colors-by-level", not bad, f"disagrees at {bad[:5]}")
    elif result.mode == "leaf-chains":
        F = result.reduced
        bad = [chain for chain in Q.leaf_chains(result.chain_length)
               if F[chain[:-1]] != f.value(chain)]
        cert.add("chain-colors-agree", not bad, f"disagrees at {bad[:3]}")
    elif result.mode == "ramsey-reduce":
        j = result.reduced["color"]
        picked = result.reduced["picked"]
        tau_amb = result.extra["pair_stage_tau"]
        bad = [(s, t) for s, t in Q.ordered_pairs()
               if tau_q[s] > tau_q[t] and f.value((s, t)) != j]
        cert.add("cross-level-monochromatic", not bad, f"off-color pairs {bad[:5]}")
        bad_levels = [t for t in Q.ids if picked[tau_q[t]] != tau_amb[t]]
        cert.add("levels-relabelled-in-order", not bad_levels,
                 f"level relabelling broken at {bad_levels[:5]}")
    return cert


def _finish(result: StabilizationResult) -> StabilizationResult:
    result.certificate = _certify(result)
    if not result.certificate.ok:
        failed = [c for c in result.certificate.checks if not c.passed]
        raise StabilizeError(
            f"internal stabilization defect: {failed[0].name}: {failed[0].detail}")
    return result


# -- leaf-chain stabilization ---------------------------------------------------


def stabilize_leaf_chains(tree: FiniteTree, n: int, coloring: Coloring) -> StabilizationResult:
    """Pass to an equal-rank subtree on which chain colors no longer depend
    on the closing leaf; the reduced function lives on the open chains."""
    if not tree.ids:
        raise StabilizeError("cannot stabilize the empty tree")
    if n < 0:
        raise StabilizeError("chain length must be non-negative")
    if coloring.arity != "chains" or coloring.n != n:
        raise StabilizeError("coloring must assign colors to chains of the given length")
    Q, F = _reduce_chains(tree, n, coloring.value)
    result = StabilizationResult(tree, Q, "leaf-chains", F, coloring,
                                 expected_rank=tree.rank(), chain_length=n)
    return _finish(result)


def _reduce_chains(P: FiniteTree, n: int, value) -> tuple[FiniteTree, dict]:
    rank = P.rank()
    if rank == 1:
        t = min(P.ids)
        Q = P.restrict([t])
        if n == 0:
            return Q, {(): value((t,))}
        if n == 1:
            return Q, {(t,): value((t, t))}
        return Q, {}
    core = P.iterated_derivative(rank - 1)
    t = min(core.ids)
    below = P.subtree_at(t, strict=True)
    S, F0 = _reduce_chains(below, n, value)
    if n == 0:
        return P.restrict(set(S.ids) | {t}), F0
    T, G = _reduce_chains(S, n - 1, lambda chain: value((t,) + chain))
    Q = P.restrict(set(T.ids) | {t})
    F: dict = {}
    for lam in Q.chains(n):
        F[lam] = G[lam[1:]] if lam[0] == t else F0[lam]
    return Q, F


def select_leafset(tree: FiniteTree, classes: Sequence[Iterable[int]]) -> tuple[int, FiniteTree]:
    """Pick a class index i and an equal-rank subtree whose leaves all fall
    in class i.  Ties resolve to the smallest index containing the leaf."""
    leaves = set(tree.leaves())
    classes = [frozenset(m) for m in classes]
    covered = frozenset().union(*classes) if classes else frozenset()
    if not leaves <= covered:
        raise StabilizeError(f"leaves {sorted(leaves - covered)[:5]} not covered")

    def class_of(chain: tuple[int, ...]) -> int:
        leaf = chain[0]
        return min(i for i, m in enumerate(classes) if leaf in m)

    Q, F = _reduce_chains(tree, 0, class_of)
    i = F[()]
    if set(Q.leaves()) != set(Q.ids) & classes[i]:
        raise StabilizeError("selected subtree leaves escape the chosen class")
    return i, Q


# -- node-coloring stabilization --------------------------------------------------


def stabilize_levels(tree: FiniteTree, coloring: Coloring) -> StabilizationResult:
    """Equal-rank subtree on which the color of a node depends only on its
    tau class, plus the per-level color table."""
    if not tree.ids:
        raise StabilizeError("cannot stabilize the empty tree")
    if coloring.arity != "nodes":
        raise StabilizeError("stabilize_levels expects a node coloring")
    Q, F = _reduce_levels(tree, coloring.value)
    result = StabilizationResult(tree, Q, "levels", tuple(F), coloring,
                                 expected_rank=tree.rank())
    return _finish(result)


def _reduce_levels(P: FiniteTree, value) -> tuple[FiniteTree, list[int]]:
    rank = P.rank()
    if rank == 1:
        t = min(P.ids)
        return P.restrict([t]), [value(t)]
    top = P.iterated_derivative(rank - 1)
    t = min(top.ids)
    inner, table = _reduce_levels(P.subtree_at(t, strict=True), value)
    return P.restrict(set(inner.ids) | {t}), table + [value(t)]


def extract_monochromatic(result: StabilizationResult, j: int) -> FiniteTree:
    """Union of the levels colored j in a level-stabilization result; its
    rank is the number of such levels."""
    if result.mode != "levels":
        raise StabilizeError("extraction needs a level-stabilization result")
    if not result.certificate.ok:
        raise StabilizeError("refusing to extract from an invalid certificate")
    picked = [i for i, c in enumerate(result.reduced) if c == j]
    if not picked:
        return result.subtree.restrict(())
    return select_levels(result.subtree, picked)


# -- pair-coloring stabilization ----------------------------------------------------


def stabilize_pairs_by_level(tree: FiniteTree, coloring: Coloring) -> StabilizationResult:
    """Equal-rank subtree where the color of a comparable pair depends only
    on the two tau classes; returns the table G over level pairs."""
    if not tree.ids:
        raise StabilizeError("cannot stabilize the empty tree")
    if coloring.arity != "pairs":
        raise StabilizeError("stabilize_pairs_by_level expects a pair coloring")
    Q, G = _reduce_pairs(tree, coloring.value)
    result = StabilizationResult(tree, Q, "pairs", G, coloring,
                                 expected_rank=tree.rank())
    return _finish(result)


def _reduce_pairs(P: FiniteTree, value) -> tuple[FiniteTree, dict]:
    rank = P.rank()
    if rank == 1:
        return P, {}
    top_level = rank - 1
    core = P.iterated_derivative(top_level)
    t = min(core.ids)
    inner, G = _reduce_pairs(P.subtree_at(t, strict=True), value)
    # make colors against the anchor depend only on the level below it
    stabilized, B = _reduce_levels(inner, lambda u: value((t, u)))
    Q = P.restrict(set(stabilized.ids) | {t})
    G = dict(G)
    for i, color in enumerate(B):
        G[(i, top_level)] = color
    return Q, G


# -- finite Ramsey machinery -----------------------------------------------------


RAMSEY_MAX_VERTICES = 9
RAMSEY_MAX_COLORS = 3


def find_clique_free_coloring(m: int, target: int, colors: int) -> dict | None:
    """An edge coloring of the complete graph on m vertices with no
    monochromatic ``target``-clique, or None when every coloring has one.

    Backtracking over edges in lexicographic order; color symmetry is
    broken by only allowing one brand-new color at each step.
    """
    edges = list(combinations(range(m), 2))
    assignment: dict[tuple[int, int], int] = {}

    def completes_clique(edge: tuple[int, int], c: int) -> bool:
        a, b = edge
        partners = [v for v in range(m)
                    if v not in edge
                    and assignment.get(_e(a, v)) == c and assignment.get(_e(b, v)) == c]
        if target == 2:
            return True
        for group in combinations(partners, target - 2):
            if all(assignment.get(_e(u, v)) == c for u, v in combinations(group, 2)):
                return True
        return False

    def extend(i: int, used: int) -> dict | None:
        if i == len(edges):
            return dict(assignment)
        edge = edges[i]
        for c in range(min(used + 1, colors)):
            if not completes_clique(edge, c):
                assignment[edge] = c
                out = extend(i + 1, max(used, c + 1))
                if out is not None:
                    return out
                del assignment[edge]
        return None

    return extend(0, 0)


def _e(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def has_monochromatic_subset(coloring: Mapping[tuple[int, int], int],
                             m: int, target: int) -> bool:
    for group in combinations(range(m), target):
        colors = {coloring[_e(u, v)] for u, v in combinations(group, 2)}
        if len(colors) <= 1:
            return True
    return False


def finite_ramsey(p: int, k: int,
                  max_vertices: int = RAMSEY_MAX_VERTICES,
                  max_colors: int = RAMSEY_MAX_COLORS) -> int:
    """Least r such that every (k+1)-coloring of the pairs from any set of
    more than r points has a monochromatic subset of p+1 points."""
    if p < 1 or k < 0:
        raise StabilizeError("need p >= 1 and k >= 0")
    if k + 1 > max_colors:
        raise RamseyBudgetError(
            f"{k + 1} colors exceed the search budget of {max_colors}",
            lower_bound=p)
    for m in range(2, max_vertices + 1):
        if find_clique_free_coloring(m, p + 1, k + 1) is None:
            return m - 1
    raise RamseyBudgetError(
        f"no complete graph on <= {max_vertices} vertices forces a "
        f"monochromatic {p + 1}-set with {k + 1} colors",
        lower_bound=max_vertices)


def ramsey_reduce_levels(tree: FiniteTree, p: int, coloring: Coloring) -> StabilizationResult:
    """Stabilize pairs by level, then keep p+1 levels whose cross colors
    agree; every cross-level pair of the output takes the same color."""
    k = coloring.k
    required = finite_ramsey(p, k)
    r = tree.rank() - 1
    if r < required:
        raise StabilizeError(
            f"rank {tree.rank()} too small: need rank >= {required + 1} "
            f"for p={p}, k={k}")
    staged = stabilize_pairs_by_level(tree, coloring)
    G = staged.reduced
    for subset in combinations(range(r + 1), p + 1):
        seen = {G[(i, j)] for i, j in combinations(subset, 2)}
        if len(seen) == 1:
            j = seen.pop()
            break
    else:  # pragma: no cover - excluded by the rank precondition
        raise StabilizeError("no monochromatic level subset found")
    reduced_tree = select_levels(staged.subtree, subset)
    tau_stage = staged.subtree.tau_map
    result = StabilizationResult(
        tree, reduced_tree, "ramsey-reduce",
        {"color": j, "picked": tuple(subset)},
        coloring, expected_rank=p + 1,
        extra={"pair_stage_tau": {t: tau_stage[t] for t in reduced_tree.ids},
               "pair_table": G})
    return _finish(result)
