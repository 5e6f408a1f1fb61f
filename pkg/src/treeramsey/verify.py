"""Brute-force oracles and obstruction colorings.

Everything here recomputes tree structure from the raw (ids, ancestors)
data with its own helpers instead of calling the constructive modules, so
a bug upstream cannot vouch for itself.  Searches are exhaustive within a
node budget and say so in the report.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .ordinal import is_multiplicatively_indecomposable, ordinal
from .tree_core import FiniteTree


class VerificationError(AssertionError):
    """A certified claim failed independent re-derivation."""


# -- independent structure helpers (deliberately not tree_core methods) -------


def _ancestor_map(tree: FiniteTree) -> dict[int, frozenset[int]]:
    return {t: a for t, a in zip(tree.ids, tree.anc)}


def _maximal(ids: frozenset[int], anc: Mapping[int, frozenset[int]]) -> frozenset[int]:
    covered = set()
    for t in ids:
        covered.update(anc[t] & ids)
    return frozenset(ids - covered)


def _rank_of(ids: frozenset[int], anc: Mapping[int, frozenset[int]]) -> int:
    cur, n = frozenset(ids), 0
    while cur:
        cur = cur - _maximal(cur, anc)
        n += 1
    return n


def _tau_of(ids: frozenset[int], anc: Mapping[int, frozenset[int]]) -> dict[int, int]:
    out: dict[int, int] = {}
    cur, z = frozenset(ids), 0
    while cur:
        for t in _maximal(cur, anc):
            out[t] = z
        cur = cur - _maximal(cur, anc)
        z += 1
    return out


# -- search reports ------------------------------------------------------------


@dataclass
class ColorBest:
    rank: int
    witness: tuple[int, ...]


@dataclass
class SearchReport:
    colors: dict[int, ColorBest] = field(default_factory=dict)
    explored: int = 0
    pruned: int = 0
    exhaustive: bool = True

    @property
    def best_rank(self) -> int:
        return max((b.rank for b in self.colors.values()), default=0)

    @property
    def best_witness(self) -> tuple[int, ...]:
        best = max(self.colors.values(), key=lambda b: (b.rank, tuple(-i for i in b.witness)),
                   default=None)
        return best.witness if best else ()

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "best_rank": self.best_rank,
            "best_ids": list(self.best_witness),
            "per_color": {str(j): {"rank": b.rank, "ids": list(b.witness)}
                          for j, b in sorted(self.colors.items())},
            "explored": self.explored,
            "pruned": self.pruned,
            "exhaustive": self.exhaustive,
        }


DEFAULT_NODE_BUDGET = 2_000_000


def max_monochromatic_rank(tree: FiniteTree, coloring, j: int,
                           node_budget: int = DEFAULT_NODE_BUDGET) -> SearchReport:
    """Largest rank of a subtree whose ordered pairs all take color j.

    Any id subset is a subtree under the induced order, so this is a
    branch-and-bound subset search with rank-monotone pruning.
    """
    anc = _ancestor_map(tree)
    order = list(tree.ids)
    pair_color = _pair_color_fn(tree, coloring)
    report = SearchReport(colors={j: ColorBest(0, ())})

    def compatible(t: int, chosen: list[int]) -> bool:
        for s in chosen:
            if s in anc[t] or t in anc[s]:
                lo, hi = (s, t) if s in anc[t] else (t, s)
                if pair_color(lo, hi) != j:
                    return False
        return True

    def dfs(idx: int, chosen: list[int], candidates: list[int]) -> None:
        report.explored += 1
        if report.explored > node_budget:
            report.exhaustive = False
            return
        pool = frozenset(chosen) | frozenset(candidates[idx:])
        bound = _rank_of(pool, anc)
        best = report.colors[j]
        if bound <= best.rank:
            report.pruned += 1
            return
        if idx == len(candidates):
            r = _rank_of(frozenset(chosen), anc)
            if r > best.rank:
                report.colors[j] = ColorBest(r, tuple(sorted(chosen)))
            return
        t = candidates[idx]
        if compatible(t, chosen):
            chosen.append(t)
            dfs(idx + 1, chosen, candidates)
            chosen.pop()
        dfs(idx + 1, chosen, candidates)

    dfs(0, [], order)
    if report.colors[j].rank == 0 and tree.ids:
        # a single node is always monochromatic (no pairs)
        report.colors[j] = ColorBest(1, (min(tree.ids),))
    return report


def max_monochromatic_rank_nodes(tree: FiniteTree, coloring, j: int) -> SearchReport:
    """Node-coloring variant: the color class itself is the best subtree,
    since dropping nodes never raises rank."""
    color = _node_color_fn(tree, coloring)
    anc = _ancestor_map(tree)
    keep = frozenset(t for t in tree.ids if color(t) == j)
    report = SearchReport(colors={j: ColorBest(_rank_of(keep, anc), tuple(sorted(keep)))})
    report.explored = len(tree.ids)
    return report


def _pair_color_fn(tree: FiniteTree, coloring):
    if callable(coloring):
        return coloring
    table = getattr(coloring, "table", coloring)
    return lambda s, t: table[(s, t)]


def _node_color_fn(tree: FiniteTree, coloring):
    if callable(coloring):
        return coloring
    table = getattr(coloring, "table", coloring)
    return lambda t: table[t]


# -- obstruction colorings ----------------------------------------------------


def multiplicative_obstruction(tree: FiniteTree, alpha: int):
    """Two-coloring of ordered pairs: 0 inside one alpha-block of
    derivatives, 1 across blocks."""
    if alpha < 1:
        raise ValueError("alpha must be at least 1")
    taus = _tau_of(frozenset(tree.ids), _ancestor_map(tree))

    def color(s: int, t: int) -> int:
        return 0 if taus[s] // alpha == taus[t] // alpha else 1

    return color


def additive_obstruction(tree: FiniteTree):
    """Node coloring by tau class (level index)."""
    taus = _tau_of(frozenset(tree.ids), _ancestor_map(tree))
    return lambda t: taus[t]


def check_R2_membership(g: "Ordinal | int") -> bool:
    """Ranks on which every finite pair coloring admits a full-rank
    monochromatic subtree are exactly the multiplicatively indecomposable
    ones; this is the membership predicate."""
    return is_multiplicatively_indecomposable(ordinal(g))


# -- cross validation ----------------------------------------------------------


@dataclass
class CrossReport:
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(passed for _, passed, _ in self.checks)

    def record(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append((name, passed, detail if not passed else ""))
        if not passed:
            raise VerificationError(f"{name}: {detail}")

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "ok": self.ok,
            "checks": [{"name": n, "passed": p, "detail": d} for n, p, d in self.checks],
        }


def cross_validate(result, node_budget: int = DEFAULT_NODE_BUDGET) -> CrossReport:
    """Re-derive every claim of a stabilization result with fresh scans.

    Any mismatch raises VerificationError naming the violated claim.
    ``result`` is a stabilize.StabilizationResult; only its data fields are
    touched here.
    """
    report = CrossReport()
    ambient: FiniteTree = result.ambient
    sub: FiniteTree = result.subtree
    anc = _ancestor_map(ambient)
    q_ids = frozenset(sub.ids)
    p_ids = frozenset(ambient.ids)
    report.record("subtree-nonempty", bool(q_ids) or not p_ids,
                  "empty output from a non-empty input")
    report.record("subtree-containment", q_ids <= p_ids,
                  f"{sorted(q_ids - p_ids)} outside the ambient tree")

    rank_q = _rank_of(q_ids, anc)
    report.record("rank-preserved", rank_q == result.expected_rank,
                  f"rank {rank_q} != required {result.expected_rank}")

    tau_p = _tau_of(p_ids, anc)
    tau_q = _tau_of(q_ids, anc)
    if result.mode in ("levels", "pairs", "leaf-chains"):
        mismatch = [t for t in q_ids if tau_q[t] != tau_p[t]]
        report.record("tau-compatible", not mismatch,
                      f"tau changes on nodes {sorted(mismatch)[:5]}")

    color = result.coloring
    if result.mode == "levels":
        table = result.reduced
        bad = [t for t in q_ids if color.value(t) != table[tau_q[t]]]
        report.record("level-colors-constant", not bad,
                      f"nodes {sorted(bad)[:5]} disagree with the level table")
        # monochromatic extraction can never beat the exhaustive optimum
        if len(p_ids) <= 18 and node_budget:
            for j in sorted(set(table)):
                picked = frozenset(t for t in q_ids if table[tau_q[t]] == j)
                opt = max_monochromatic_rank_nodes(ambient, color, j)
                report.record(
                    f"extraction-within-optimum[{j}]",
                    _rank_of(picked, anc) <= opt.colors[j].rank,
                    "extracted class outranks the exhaustive search")
    elif result.mode == "pairs":
        table = result.reduced
        bad = []
        for t in q_ids:
            for s in anc[t] & q_ids:
                i, jj = tau_q[t], tau_q[s]
                if i < jj and color.value((s, t)) != table[(i, jj)]:
                    bad.append((s, t))
        report.record("pair-colors-by-level", not bad,
                      f"pairs {bad[:5]} disagree with the level-pair table")
    elif result.mode == "leaf-chains":
        table = result.reduced
        bad = [chain for chain in sub.leaf_chains(result.chain_length)
               if table[chain[:-1]] != color.value(chain)]
        report.record("chain-colors-agree", not bad,
                      f"chains {bad[:3]} disagree with the reduced function")
        report.record("leaves-survive",
                      _maximal(q_ids, anc) <= frozenset(ambient.leaves()),
                      "subtree leaves are not ambient leaves")
    elif result.mode == "ramsey-reduce":
        j = result.reduced["color"]
        bad = []
        for t in q_ids:
            for s in anc[t] & q_ids:
                if tau_q[s] > tau_q[t] and color.value((s, t)) != j:
                    bad.append((s, t))
        report.record("cross-level-monochromatic", not bad,
                      f"pairs {bad[:5]} are not color {j}")
    return report
