"""Contractions and budgeted stabilization on canonical trees.

Infinite subtrees are handled as lazy pieces: generators that answer
membership, enumerate sampled children, and carry a declared symbolic rank
plus a declared position function.  Declared data are claims, not proofs;
every public construction is paired with an audit that materializes a
finite window at the given budget and rechecks the claims pair by pair,
comparing window ranks against equal-budget windows of reference trees.
An operation either returns with an all-pass audit or fails naming the
step that could not be certified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .canonical import (
    CanonicalNode,
    CanonicalTree,
    SeparationContext,
    node_tau,
    rank_symbolic,
    separation,
    truncate,
)
from .ordinal import (
    ONE,
    ZERO,
    IndecomposableFactorization,
    Ordinal,
    add,
    compare,
    descend_below,
    factorize,
    fundamental_sequence,
    is_additively_indecomposable,
    left_divide,
    left_subtract,
    mul,
    omega_pow,
    ordinal,
)
from .rules import RuleColoring
from .tree_core import FiniteTree


class TransfiniteError(ValueError):
    pass


class BudgetExhausted(RuntimeError):
    """A construction step could not be certified within the budget."""

    def __init__(self, step: str, message: str):
        super().__init__(f"{step}: {message}")
        self.step = step


class AuditFailure(AssertionError):
    def __init__(self, report: "AuditReport", check: "AuditCheck"):
        super().__init__(f"{report.construction}: {check.name}: {check.detail}")
        self.report = report
        self.step = check.name


@dataclass(frozen=True)
class Budget:
    depth: int = 3
    width: int = 3
    cap: int = 4

    @staticmethod
    def parse(text: str) -> "Budget":
        parts = [int(x) for x in text.split(",")]
        if len(parts) != 3 or min(parts) < 1:
            raise TransfiniteError(f"budget must be depth,width,cap with positive entries: {text!r}")
        return Budget(*parts)


@dataclass
class AuditCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class AuditReport:
    construction: str
    budget: Budget
    declared_rank: Ordinal
    checks: list[AuditCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(AuditCheck(name, bool(passed), detail))

    def require(self) -> "AuditReport":
        for c in self.checks:
            if not c.passed:
                raise AuditFailure(self, c)
        return self

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "construction": self.construction,
            "budget": [self.budget.depth, self.budget.width, self.budget.cap],
            "declared_rank": str(self.declared_rank),
            "ok": self.ok,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                       for c in self.checks],
        }


# -- entry maps ------------------------------------------------------------------


@dataclass(frozen=True)
class EntryMap:
    """Strictly increasing embedding of [0, size) into an entry range."""

    size: Ordinal
    apply: Callable[[Ordinal], Ordinal]
    unapply: Callable[[Ordinal], Ordinal | None]

    @staticmethod
    def identity(size: Ordinal) -> "EntryMap":
        return EntryMap(size, lambda y: y, lambda x: x if compare(x, size) < 0 else None)


def _prefix_products(fact: IndecomposableFactorization) -> list[Ordinal]:
    return list(fact.factors)


def _mixed_digits(x: Ordinal, prods: Sequence[Ordinal]) -> list[Ordinal] | None:
    """Digits of x in the mixed radix given by prefix products, low to high."""
    if not prods:
        return [] if x.is_zero else None
    if compare(x, prods[-1]) >= 0:
        return None
    digits: list[Ordinal] = [ZERO] * len(prods)
    rest = x
    for i in range(len(prods) - 1, 0, -1):
        q, rest = left_divide(prods[i - 1], rest)
        digits[i] = q
    digits[0] = rest
    return digits


def _mixed_value(digits: Sequence[Ordinal], prods: Sequence[Ordinal]) -> Ordinal:
    out = ZERO
    for i in range(len(prods) - 1, -1, -1):
        scale = prods[i - 1] if i else ONE
        out = add(out, mul(scale, digits[i]))
    return out


def digit_embedding(fact: IndecomposableFactorization, keep: Sequence[int]) -> EntryMap:
    """Embed the sub-product over the kept layers into the full value range
    by placing digits at the kept positions and zeros elsewhere."""
    keep = tuple(sorted(keep))
    if any(i < 0 or i >= fact.lam for i in keep):
        raise TransfiniteError(f"layers {keep} outside 0..{fact.lam - 1}")
    full = _prefix_products(fact)
    sub_fact = IndecomposableFactorization(
        _subproduct(fact, keep), tuple(fact.epsilons[i] for i in keep))
    sub = _prefix_products(sub_fact)

    def apply(y: Ordinal) -> Ordinal:
        ys = _mixed_digits(y, sub)
        if ys is None:
            raise TransfiniteError(f"{y} outside the contracted range")
        digits = [ZERO] * fact.lam
        for pos, d in zip(keep, ys):
            digits[pos] = d
        return _mixed_value(digits, full)

    def unapply(x: Ordinal) -> Ordinal | None:
        digits = _mixed_digits(x, full)
        if digits is None:
            return None
        if any(not digits[i].is_zero for i in range(fact.lam) if i not in keep):
            return None
        return _mixed_value([digits[i] for i in keep], sub)

    return EntryMap(sub_fact.gamma if keep else ONE, apply, unapply)


def _subproduct(fact: IndecomposableFactorization, keep: Sequence[int]) -> Ordinal:
    out = ONE
    for i in keep:
        out = mul(out, omega_pow(omega_pow(fact.epsilons[i])))
    return out


# -- lazy pieces -------------------------------------------------------------------
#
# A piece works with *relative* nodes: tuples of ambient entry values with no
# surrounding prefix.  Containers (unions, stacks) compose by concatenation,
# so a top-level piece's relative nodes are honest canonical nodes.


class Piece:
    declared_rank: Ordinal
    label: str = "piece"

    def roots(self, width: int) -> list[CanonicalNode]:
        raise NotImplementedError

    def children(self, node: CanonicalNode, width: int) -> list[CanonicalNode]:
        raise NotImplementedError

    def contains(self, node: CanonicalNode) -> bool:
        raise NotImplementedError

    def tau_declared(self, node: CanonicalNode) -> Ordinal:
        raise NotImplementedError


@dataclass(frozen=True)
class EntryPiece(Piece):
    """All decreasing sequences over an embedded entry set, shifted by base."""

    base: Ordinal
    emap: EntryMap
    label: str = "entries"

    @property
    def declared_rank(self) -> Ordinal:
        return self.emap.size

    def _entry(self, y: Ordinal) -> Ordinal:
        return add(self.base, self.emap.apply(y))

    def _unentry(self, e: Ordinal) -> Ordinal | None:
        if compare(e, self.base) < 0:
            return None
        return self.emap.unapply(left_subtract(self.base, e))

    def roots(self, width: int) -> list[CanonicalNode]:
        return [(self._entry(y),) for y in descend_below(self.emap.size, width)]

    def children(self, node: CanonicalNode, width: int) -> list[CanonicalNode]:
        y = self._unentry(node[-1])
        if y is None:
            raise TransfiniteError(f"node ends outside the piece: {node[-1]}")
        return [node + (self._entry(z),) for z in descend_below(y, width)]

    def contains(self, node: CanonicalNode) -> bool:
        if not node:
            return False
        ys = [self._unentry(e) for e in node]
        if any(y is None for y in ys):
            return False
        return all(compare(b, a) < 0 for a, b in zip(ys, ys[1:]))

    def tau_declared(self, node: CanonicalNode) -> Ordinal:
        y = self._unentry(node[-1])
        if y is None:
            raise TransfiniteError(f"node ends outside the piece: {node[-1]}")
        return y


@dataclass(frozen=True)
class UnionPiece(Piece):
    """Incomparable union of pieces hung below pairwise incomparable anchors."""

    parts: tuple[tuple[CanonicalNode, Piece], ...]
    rank: Ordinal
    label: str = "union"

    @property
    def declared_rank(self) -> Ordinal:
        return self.rank

    def _match(self, node: CanonicalNode):
        for anchor, piece in self.parts:
            la = len(anchor)
            if len(node) > la and tuple(node[:la]) == tuple(anchor):
                return anchor, piece
        return None

    def roots(self, width: int) -> list[CanonicalNode]:
        out = []
        for anchor, piece in self.parts:
            out.extend(anchor + r for r in piece.roots(width))
        return out

    def children(self, node: CanonicalNode, width: int) -> list[CanonicalNode]:
        hit = self._match(node)
        if hit is None:
            raise TransfiniteError("node lies in no part of the union")
        anchor, piece = hit
        return [anchor + c for c in piece.children(node[len(anchor):], width)]

    def contains(self, node: CanonicalNode) -> bool:
        hit = self._match(node)
        return hit is not None and hit[1].contains(node[len(hit[0]):])

    def tau_declared(self, node: CanonicalNode) -> Ordinal:
        hit = self._match(node)
        if hit is None:
            raise TransfiniteError("node lies in no part of the union")
        return hit[1].tau_declared(node[len(hit[0]):])


@dataclass(frozen=True)
class StackPiece(Piece):
    """Bands grafted in sequence: each band hangs below the leaves of the
    band above it, multiplying the band rank by the number of bands."""

    bands: tuple[tuple[Ordinal, Piece], ...]  # (entry range base, piece), low to high
    band_rank: Ordinal
    label: str = "stack"

    @property
    def declared_rank(self) -> Ordinal:
        return mul(self.band_rank, len(self.bands))

    def _band_of(self, e: Ordinal) -> int | None:
        for i, (b, _) in enumerate(self.bands):
            if compare(b, e) <= 0 and compare(e, add(b, self.band_rank)) < 0:
                return i
        return None

    def _split(self, node: CanonicalNode):
        """Cut into per-band segments; None when the node is not a member."""
        segs: list[tuple[int, CanonicalNode]] = []
        cur_band: int | None = None
        cur: CanonicalNode = ()
        for e in node:
            b = self._band_of(e)
            if b is None:
                return None
            if cur_band is None:
                if b != len(self.bands) - 1:
                    return None
                cur_band, cur = b, (e,)
            elif b == cur_band:
                cur = cur + (e,)
            else:
                if b != cur_band - 1:
                    return None
                piece = self.bands[cur_band][1]
                if not piece.contains(cur) or not piece.tau_declared(cur).is_zero:
                    return None
                segs.append((cur_band, cur))
                cur_band, cur = b, (e,)
        if cur_band is None or not self.bands[cur_band][1].contains(cur):
            return None
        segs.append((cur_band, cur))
        return segs

    def roots(self, width: int) -> list[CanonicalNode]:
        return list(self.bands[-1][1].roots(width))

    def children(self, node: CanonicalNode, width: int) -> list[CanonicalNode]:
        segs = self._split(node)
        if segs is None:
            raise TransfiniteError("node is not a member of the stack")
        b, seg = segs[-1]
        piece = self.bands[b][1]
        if piece.tau_declared(seg).is_zero:
            if b == 0:
                return []
            return [node + r for r in self.bands[b - 1][1].roots(width)]
        return [node[: len(node) - len(seg)] + c for c in piece.children(seg, width)]

    def contains(self, node: CanonicalNode) -> bool:
        return self._split(node) is not None

    def tau_declared(self, node: CanonicalNode) -> Ordinal:
        segs = self._split(node)
        if segs is None:
            raise TransfiniteError("node is not a member of the stack")
        b, seg = segs[-1]
        return add(mul(self.band_rank, b), self.bands[b][1].tau_declared(seg))


@dataclass(frozen=True)
class FilteredPiece(Piece):
    """Keep the nodes whose declared position has digits only on chosen
    layers; covers are found by a bounded walk through dropped nodes."""

    inner: Piece
    fact: IndecomposableFactorization
    keep: tuple[int, ...]
    expand_cap: int = 96
    label: str = "contracted"

    @property
    def declared_rank(self) -> Ordinal:
        return _subproduct(self.fact, self.keep)

    @property
    def _prods(self) -> list[Ordinal]:
        return _prefix_products(self.fact)

    @property
    def _sub_prods(self) -> list[Ordinal]:
        sub_fact = IndecomposableFactorization(
            self.declared_rank, tuple(self.fact.epsilons[i] for i in self.keep))
        return _prefix_products(sub_fact)

    def _position(self, node: CanonicalNode) -> Ordinal | None:
        digits = _mixed_digits(self.inner.tau_declared(node), self._prods)
        if digits is None:
            return None
        if any(not digits[i].is_zero for i in range(self.fact.lam) if i not in self.keep):
            return None
        return _mixed_value([digits[i] for i in self.keep], self._sub_prods)

    def _frontier(self, seeds: Iterable[CanonicalNode], width: int) -> list[CanonicalNode]:
        out: list[CanonicalNode] = []
        queue = list(seeds)
        spent = 0
        while queue and spent < self.expand_cap:
            node = queue.pop(0)
            spent += 1
            if self._position(node) is not None:
                out.append(node)
            else:
                queue.extend(self.inner.children(node, width))
        return out

    def roots(self, width: int) -> list[CanonicalNode]:
        return self._frontier(self.inner.roots(width), width)

    def children(self, node: CanonicalNode, width: int) -> list[CanonicalNode]:
        return self._frontier(self.inner.children(node, width), width)

    def contains(self, node: CanonicalNode) -> bool:
        return self.inner.contains(node) and self._position(node) is not None

    def tau_declared(self, node: CanonicalNode) -> Ordinal:
        pos = self._position(node)
        if pos is None:
            raise TransfiniteError("node is not a member of the contracted piece")
        return pos


@dataclass(frozen=True)
class LazySubtree:
    """Public face of a constructed subtree: the ambient tree, the piece
    generators, and the declared symbolic rank."""

    ambient: CanonicalTree
    piece: Piece
    label: str

    @property
    def declared_rank(self) -> Ordinal:
        return self.piece.declared_rank

    def contains(self, node: CanonicalNode) -> bool:
        return self.piece.contains(node)

    def roots(self, width: int) -> list[CanonicalNode]:
        return self.piece.roots(width)

    def children(self, node: CanonicalNode, width: int) -> list[CanonicalNode]:
        return self.piece.children(node, width)

    def tau_declared(self, node: CanonicalNode) -> Ordinal:
        return self.piece.tau_declared(node)

    def window(self, depth: int, width: int) -> tuple[FiniteTree, dict[int, CanonicalNode]]:
        return piece_window(self.piece, depth, width)


def piece_window(piece: Piece, depth: int, width: int) -> tuple[FiniteTree, dict[int, CanonicalNode]]:
    """Materialize the sampled window as a finite tree plus the node map."""
    parents: dict[int, int | None] = {}
    mapping: dict[int, CanonicalNode] = {}
    seen: dict[CanonicalNode, int] = {}

    def emit(node: CanonicalNode, parent: int | None) -> int | None:
        if node in seen:
            return None
        i = len(seen)
        seen[node] = i
        parents[i] = parent
        mapping[i] = node
        return i

    def expand(node: CanonicalNode, me: int, level: int) -> None:
        if level >= depth:
            return
        for child in piece.children(node, width):
            ci = emit(child, me)
            if ci is not None:
                expand(child, ci, level + 1)

    for root in piece.roots(width):
        ri = emit(root, None)
        if ri is not None:
            expand(root, ri, 1)
    return FiniteTree.from_parents(parents), mapping


def reference_window_rank(rank: Ordinal, budget: Budget) -> int:
    """Window rank of the canonical tree of the given rank at this budget."""
    if rank.is_zero:
        return 0
    return truncate(CanonicalTree.of(0, rank), budget.depth, budget.width).tree.rank()


def audit_declared_rank(sub: "LazySubtree", budget: Budget) -> AuditReport:
    """Check a declared rank against its equal-budget reference window.

    A declared rank is a claim, so shallow budgets may fail to separate
    close claims; growing the budget only sharpens the comparison.
    """
    report = AuditReport("declared-rank", budget, sub.declared_rank)
    window, _ = sub.window(budget.depth, budget.width)
    ref = reference_window_rank(sub.declared_rank, budget)
    report.add("window-rank-matches-declared", window.rank() == ref,
               f"window rank {window.rank()} vs reference {ref}")
    return report


# -- contractions -------------------------------------------------------------------


@dataclass(frozen=True)
class ContractionSpec:
    """Layer subset A of an additively indecomposable rank, with the
    enumeration of A and the contracted target rank (1 for empty A)."""

    gamma: Ordinal
    layers: frozenset[int]

    @staticmethod
    def of(gamma: "Ordinal | int", layers: Iterable[int]) -> "ContractionSpec":
        return ContractionSpec(ordinal(gamma), frozenset(int(i) for i in layers))

    @property
    def fact(self) -> IndecomposableFactorization:
        return factorize(self.gamma)

    @property
    def enumeration(self) -> tuple[int, ...]:
        return tuple(sorted(self.layers))

    @property
    def target(self) -> Ordinal:
        return _subproduct(self.fact, self.enumeration)

    def validate(self) -> None:
        lam = self.fact.lam
        bad = [i for i in self.layers if not 0 <= i < lam]
        if bad:
            raise TransfiniteError(f"layers {sorted(bad)} outside 0..{lam - 1}")


def contract(tree: CanonicalTree, spec: ContractionSpec) -> LazySubtree:
    """The subtree whose entries use only digits on the chosen layers; its
    separation values enumerate back into the ambient ones."""
    if not tree.alpha.is_zero:
        raise TransfiniteError("contraction is defined on trees with alpha = 0")
    if rank_symbolic(tree) != spec.gamma:
        raise TransfiniteError(
            f"tree rank {rank_symbolic(tree)} differs from the declared {spec.gamma}")
    spec.validate()
    emap = digit_embedding(spec.fact, spec.enumeration)
    return LazySubtree(tree, EntryPiece(ZERO, emap), label="contraction")


def audit_contraction(tree: CanonicalTree, spec: ContractionSpec,
                      sub: LazySubtree, budget: Budget) -> AuditReport:
    report = AuditReport("contraction", budget, sub.declared_rank)
    window, mapping = sub.window(budget.depth, budget.width)
    ref = reference_window_rank(sub.declared_rank, budget)
    report.add("window-rank-matches-declared", window.rank() == ref,
               f"window rank {window.rank()} vs reference {ref}")
    enum = spec.enumeration
    ctx_p = SeparationContext(spec.gamma)
    ctx_q = SeparationContext(sub.declared_rank) if enum else None
    checked = 0
    ok = True
    detail = ""
    for i_s, i_t in window.ordered_pairs():
        s, t = mapping[i_s], mapping[i_t]
        sp = ctx_p.of_taus(node_tau(tree, s), node_tau(tree, t))
        sq = ctx_q.of_taus(sub.tau_declared(s), sub.tau_declared(t))
        checked += 1
        if enum[sq] != sp:
            ok = False
            detail = f"pair ({s},{t}): ambient {sp} != mapped {enum[sq]}"
            break
    report.add("separation-enumerates", ok, detail or f"{checked} pairs checked")
    return report


def proto_align(tree: CanonicalTree, gamma: "Ordinal | int", layers: Iterable[int],
                zeta: "Ordinal | int") -> LazySubtree:
    """Blockwise contraction of a tree of rank gamma*zeta: each gamma-block
    is contracted to the chosen layers, preserving the block grid."""
    gamma, zeta = ordinal(gamma), ordinal(zeta)
    if not tree.alpha.is_zero:
        raise TransfiniteError("alignment is defined on trees with alpha = 0")
    if rank_symbolic(tree) != mul(gamma, zeta):
        raise TransfiniteError(
            f"tree rank {rank_symbolic(tree)} is not {gamma} * {zeta}")
    spec = ContractionSpec.of(gamma, layers)
    spec.validate()
    beta = spec.target
    inner = digit_embedding(spec.fact, spec.enumeration)
    size = mul(beta, zeta)

    def apply(z: Ordinal) -> Ordinal:
        q, y = left_divide(beta, z)
        return add(mul(gamma, q), inner.apply(y))

    def unapply(x: Ordinal) -> Ordinal | None:
        q, r = left_divide(gamma, x)
        y = inner.unapply(r)
        if y is None or compare(q, zeta) >= 0:
            return None
        return add(mul(beta, q), y)

    return LazySubtree(tree, EntryPiece(ZERO, EntryMap(size, apply, unapply)),
                       label="block-alignment")


def audit_alignment(tree: CanonicalTree, gamma: "Ordinal | int", layers: Iterable[int],
                    zeta: "Ordinal | int", sub: LazySubtree, budget: Budget) -> AuditReport:
    gamma, zeta = ordinal(gamma), ordinal(zeta)
    spec = ContractionSpec.of(gamma, layers)
    beta = spec.target
    enum = spec.enumeration
    report = AuditReport("block-alignment", budget, sub.declared_rank)
    window, mapping = sub.window(budget.depth, budget.width)
    ref = reference_window_rank(sub.declared_rank, budget)
    report.add("window-rank-matches-declared", window.rank() == ref,
               f"window rank {window.rank()} vs reference {ref}")
    grid_ok, dichotomy_ok = True, True
    detail_grid, detail_pair = "", ""
    ctx_g = SeparationContext(gamma)
    ctx_b = SeparationContext(beta) if enum else None
    for i, node in mapping.items():
        q_r = left_divide(beta, sub.tau_declared(node))[0]
        q_p = left_divide(gamma, node_tau(tree, node))[0]
        if q_r != q_p:
            grid_ok = False
            detail_grid = f"node {node}: block {q_r} vs ambient block {q_p}"
            break
    pairs = 0
    for i_s, i_t in window.ordered_pairs():
        s, t = mapping[i_s], mapping[i_t]
        qs = left_divide(beta, sub.tau_declared(s))[0]
        qt = left_divide(beta, sub.tau_declared(t))[0]
        pairs += 1
        if compare(qt, qs) < 0:
            continue  # blocks strictly ordered: nothing more to check
        if qs != qt:
            dichotomy_ok = False
            detail_pair = f"pair ({s},{t}): block order inverted"
            break
        eta = qs
        loc_r_s = left_subtract(mul(beta, eta), sub.tau_declared(s))
        loc_r_t = left_subtract(mul(beta, eta), sub.tau_declared(t))
        loc_p_s = left_subtract(mul(gamma, eta), node_tau(tree, s))
        loc_p_t = left_subtract(mul(gamma, eta), node_tau(tree, t))
        sq = ctx_b.of_taus(loc_r_s, loc_r_t)
        sp = ctx_g.of_taus(loc_p_s, loc_p_t)
        if enum[sq] != sp:
            dichotomy_ok = False
            detail_pair = f"pair ({s},{t}): block separation {sp} != mapped {enum[sq]}"
            break
    report.add("block-grid-preserved", grid_ok, detail_grid)
    report.add("in-block-separation-enumerates", dichotomy_ok,
               detail_pair or f"{pairs} pairs checked")
    return report


# -- graded roots and unions ------------------------------------------------------


@dataclass(frozen=True)
class GradedRoot:
    root: CanonicalNode
    eta: Ordinal
    anchor: CanonicalNode


def pick_graded_roots(tree: CanonicalTree, gamma: "Ordinal | int", count: int) -> list[GradedRoot]:
    """Roots of strictly increasing grade below a tree of rank gamma * w^(w^e),
    each with an anchor sitting exactly at the graded depth."""
    gamma = ordinal(gamma)
    if not tree.alpha.is_zero:
        raise TransfiniteError("graded roots need alpha = 0")
    rho = rank_symbolic(tree)
    eps = _split_top_factor(rho, gamma)
    out: list[GradedRoot] = []
    for q in range(1, count + 1):
        if eps.is_zero:
            eta = ordinal(q)
        elif eps.is_successor:
            eta = omega_pow(mul(omega_pow(eps.predecessor()), q))
        else:
            eta = omega_pow(omega_pow(fundamental_sequence(eps, q)))
        entry = mul(gamma, eta)
        if compare(entry, rho) >= 0:  # pragma: no cover - grades stay below the rank
            break
        node = (entry,)
        # the subtree at the root has rank entry+1 > gamma*eta, by construction
        assert compare(node_tau(tree, node), mul(gamma, eta)) >= 0
        out.append(GradedRoot(node, eta, node))
    return out


def _split_top_factor(rho: Ordinal, gamma: Ordinal) -> Ordinal:
    """The e with rho = gamma * w^(w^e); errors when no such e exists."""
    if not is_additively_indecomposable(rho):
        raise TransfiniteError(f"rank {rho} is not additively indecomposable")
    if gamma == ONE:
        diff = rho.leading_exponent
    else:
        if not is_additively_indecomposable(gamma):
            raise TransfiniteError(f"factor {gamma} is not additively indecomposable")
        diff = left_subtract(gamma.leading_exponent, rho.leading_exponent)
    if not is_additively_indecomposable(diff):
        raise TransfiniteError(f"rank {rho} does not factor as {gamma} * w^(w^e)")
    return diff.leading_exponent


def assemble_union(tree: CanonicalTree, parts: Sequence[tuple[CanonicalNode, LazySubtree]],
                   declared_rank: "Ordinal | None" = None) -> LazySubtree:
    """Incomparable union of pieces below distinct anchors.  The declared
    rank defaults to the largest part rank; pass the intended limit when the
    parts form a cofinal family."""
    anchors = [tuple(a) for a, _ in parts]
    for i, a in enumerate(anchors):
        for b in anchors[i + 1:]:
            la = min(len(a), len(b))
            if a[:la] == b[:la]:
                raise TransfiniteError(f"anchors {a} and {b} are comparable")
    wrapped = tuple((tuple(a), sub.piece) for a, sub in parts)
    if declared_rank is None:
        declared_rank = ZERO
        for _, sub in parts:
            if compare(declared_rank, sub.declared_rank) < 0:
                declared_rank = sub.declared_rank
    return LazySubtree(tree, UnionPiece(wrapped, ordinal(declared_rank)), label="union")


# -- block reduction ----------------------------------------------------------------


SegmentStabilizer = Callable[[Ordinal, CanonicalNode, Ordinal], tuple[Piece, tuple[int, ...]]]


def block_reduce(tree: CanonicalTree, n: int, rule: RuleColoring, budget: Budget,
                 inner: SegmentStabilizer | None = None,
                 ) -> tuple[LazySubtree, tuple[int, ...], AuditReport]:
    """Stabilize every block of a tree of rank gamma*(N+1), pigeonhole the
    per-block tables, and keep n+1 agreeing blocks stacked in order."""
    if not tree.alpha.is_zero:
        raise TransfiniteError("block reduction needs alpha = 0")
    rho = rank_symbolic(tree)
    if len(rho.terms) != 1:
        raise TransfiniteError(f"rank {rho} is not of the shape gamma*(N+1)")
    gamma = omega_pow(rho.leading_exponent)
    blocks = rho.terms[0][1]
    n_blocks_needed = n * (rule.k + 1) ** factorize(gamma).lam
    if blocks - 1 <= n_blocks_needed:
        raise TransfiniteError(
            f"need more than {n_blocks_needed + 1} blocks for n={n}, k={rule.k}; "
            f"tree has {blocks}")
    if inner is None:
        def inner(base: Ordinal, prefix: CanonicalNode, seg: Ordinal):
            return _stabilize_segment(tree, base, prefix, seg, rule, budget, budget.cap)
    tables: dict[tuple[int, ...], list[int]] = {}
    pieces: list[Piece] = []
    chosen: tuple[int, ...] | None = None
    for delta in range(blocks):
        piece, table = inner(mul(gamma, delta), (), gamma)
        pieces.append(piece)
        hits = tables.setdefault(tuple(table), [])
        hits.append(delta)
        if len(hits) == n + 1 and chosen is None:
            chosen = tuple(table)
    if chosen is None:  # pragma: no cover - excluded by the block-count bound
        raise BudgetExhausted("block-table-pigeonhole",
                              f"no table repeated {n + 1} times across {blocks} blocks")
    picked = tuple(tables[chosen][: n + 1])
    bands = tuple((mul(gamma, d), pieces[d]) for d in picked)
    sub = LazySubtree(tree, StackPiece(bands, gamma), label="block-reduction")
    report = _audit_block_reduction(tree, sub, gamma, picked, chosen, rule, budget)
    return sub, chosen, report.require()


def _audit_block_reduction(tree: CanonicalTree, sub: LazySubtree, gamma: Ordinal,
                           picked: tuple[int, ...], table: tuple[int, ...],
                           rule: RuleColoring, budget: Budget) -> AuditReport:
    report = AuditReport("block-reduction", budget, sub.declared_rank)
    window, mapping = sub.window(budget.depth, budget.width)
    ref = reference_window_rank(sub.declared_rank, budget)
    report.add("window-rank-matches-declared", window.rank() == ref,
               f"window rank {window.rank()} vs reference {ref}")
    grid_ok, detail = True, ""
    for node in mapping.values():
        mine = left_divide(gamma, sub.tau_declared(node))[0].as_int()
        ambient = left_divide(gamma, node_tau(tree, node))[0].as_int()
        if picked[mine] != ambient:
            grid_ok = False
            detail = f"node {node}: level {mine} should sit in block {picked[mine]}, found {ambient}"
            break
    report.add("levels-map-to-picked-blocks", grid_ok, detail)
    ctx = SeparationContext(gamma) if factorize(gamma).lam else None
    colors_ok, detail_c, pairs = True, "", 0
    for i_s, i_t in window.ordered_pairs():
        s, t = mapping[i_s], mapping[i_t]
        qs = left_divide(gamma, sub.tau_declared(s))[0]
        qt = left_divide(gamma, sub.tau_declared(t))[0]
        if qs != qt:
            continue  # cross-block colors are not constrained here
        eta = left_divide(gamma, node_tau(tree, s))[0]
        loc_s = left_subtract(mul(gamma, eta), node_tau(tree, s))
        loc_t = left_subtract(mul(gamma, eta), node_tau(tree, t))
        sep_idx = ctx.of_taus(loc_s, loc_t)
        pairs += 1
        if rule.value(tree, s, t) != table[sep_idx]:
            colors_ok = False
            detail_c = f"pair ({s},{t}): color {rule.value(tree, s, t)} != table[{sep_idx}]"
            break
    report.add("in-block-colors-recovered", colors_ok,
               detail_c or f"{pairs} pairs checked")
    return report


# -- the budgeted stabilizer ---------------------------------------------------------


@dataclass
class TransfiniteResult:
    subtree: LazySubtree
    table: tuple[int, ...]
    report: AuditReport

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "declared_rank": str(self.subtree.declared_rank),
            "table": list(self.table),
            "audit": self.report.to_json(),
        }


def stabilize_transfinite(tree: CanonicalTree, rule: RuleColoring,
                          budget: Budget = Budget()) -> TransfiniteResult:
    """Budgeted search for an equal-rank subtree on which the rule coloring
    is a function of the separation index.

    Follows the layered recursion: finite top layers are handled by
    stacking stabilized blocks below graded roots, successor layers by
    contracting recursively stabilized subtrees, and limit layers by
    unions over a cofinal family.  Either returns with an all-pass audit
    or raises naming the uncertifiable step.
    """
    if not tree.alpha.is_zero:
        raise TransfiniteError("stabilization needs alpha = 0")
    rho = rank_symbolic(tree)
    if rho.is_zero or not is_additively_indecomposable(rho):
        raise TransfiniteError(f"rank {rho} is not additively indecomposable")
    lam = factorize(rho).lam
    if rule.k == 0:
        piece: Piece = EntryPiece(ZERO, EntryMap.identity(rho))
        table = (0,) * lam
    else:
        piece, table = _stabilize_segment(tree, ZERO, (), rho, rule, budget, budget.cap)
    sub = LazySubtree(tree, piece, label="stabilized")
    report = _audit_stabilization(tree, sub, table, rule, budget)
    return TransfiniteResult(sub, table, report.require())


def _audit_stabilization(tree: CanonicalTree, sub: LazySubtree, table: tuple[int, ...],
                         rule: RuleColoring, budget: Budget) -> AuditReport:
    report = AuditReport("stabilization", budget, sub.declared_rank)
    window, mapping = sub.window(budget.depth, budget.width)
    report.add("window-nonempty", bool(window.ids), "")
    ref = reference_window_rank(sub.declared_rank, budget)
    report.add("window-rank-matches-declared", window.rank() == ref,
               f"window rank {window.rank()} vs reference {ref}")
    ctx = SeparationContext(sub.declared_rank)
    report.add("table-spans-layers", len(table) == ctx.lam,
               f"table size {len(table)} vs {ctx.lam} layers")
    sep_ok, col_ok = True, True
    detail_s, detail_c = "", ""
    pairs = 0
    for i_s, i_t in window.ordered_pairs():
        s, t = mapping[i_s], mapping[i_t]
        sq = ctx.of_taus(sub.tau_declared(s), sub.tau_declared(t))
        sp = separation(tree, s, t)
        pairs += 1
        if sq != sp and sep_ok:
            sep_ok = False
            detail_s = f"pair ({s},{t}): subtree separation {sq} != ambient {sp}"
        if table[sq] != rule.value(tree, s, t) and col_ok:
            col_ok = False
            detail_c = (f"pair ({s},{t}): table[{sq}]={table[sq]} "
                        f"!= color {rule.value(tree, s, t)}")
        if not sep_ok and not col_ok:
            break
    report.add("separation-preserved", sep_ok, detail_s or f"{pairs} pairs checked")
    report.add("colors-recovered", col_ok, detail_c or f"{pairs} pairs checked")
    return report


def _stabilize_segment(tree: CanonicalTree, base: Ordinal, prefix: CanonicalNode,
                       rho: Ordinal, rule: RuleColoring, budget: Budget,
                       cap: int) -> tuple[Piece, tuple[int, ...]]:
    """Stabilize the rule on the segment of entries [base, base+rho) below
    ``prefix``; returns a relative piece of declared rank rho with its table."""
    if rho == ONE:
        return EntryPiece(base, EntryMap.identity(ONE)), ()
    if cap <= 0:
        raise BudgetExhausted("recursion-cap", f"segment of rank {rho} left unexplored")
    fact = factorize(rho)
    gamma_p = fact.factors[-2] if fact.lam >= 2 else ONE
    eps = fact.epsilons[-1]
    if eps.is_zero:
        return _segment_finite_top(tree, base, prefix, rho, gamma_p, rule, budget, cap)
    if eps.is_successor:
        return _segment_successor(tree, base, prefix, rho, gamma_p, eps, rule, budget, cap)
    return _segment_limit(tree, base, prefix, rho, gamma_p, eps, rule, budget, cap)


def _segment_finite_top(tree, base, prefix, rho, gamma_p, rule, budget, cap):
    width = budget.width
    rep_entry = add(base, mul(gamma_p, width))
    bands: list[tuple[Ordinal, Piece]] = []
    band_table: tuple[int, ...] | None = None
    for delta in range(width):
        b_base = add(base, mul(gamma_p, delta))
        piece, table = _stabilize_segment(
            tree, b_base, prefix + (rep_entry,), gamma_p, rule, budget, cap - 1)
        if band_table is None:
            band_table = table
        elif table != band_table:
            raise BudgetExhausted(
                "level-table-unanimity",
                f"blocks disagree: {table} vs {band_table} at block {delta}")
        bands.append((b_base, piece))
    parts = []
    for q in range(1, width + 1):
        anchor = (add(base, mul(gamma_p, q)),)
        parts.append((anchor, StackPiece(tuple(bands[:q]), gamma_p)))
    union = UnionPiece(tuple(parts), rho)
    j = _cross_color(tree, union, prefix, gamma_p, rule, budget)
    return union, band_table + (j,)


def _cross_color(tree, union: UnionPiece, prefix: CanonicalNode, gamma_p: Ordinal,
                 rule: RuleColoring, budget: Budget) -> int:
    window, mapping = piece_window(union, budget.depth, budget.width)
    seen: int | None = None
    for i_s, i_t in window.ordered_pairs():
        s, t = mapping[i_s], mapping[i_t]
        qs = left_divide(gamma_p, union.tau_declared(s))[0]
        qt = left_divide(gamma_p, union.tau_declared(t))[0]
        if qs == qt:
            continue
        c = rule.value(tree, prefix + s, prefix + t)
        if seen is None:
            seen = c
        elif c != seen:
            raise BudgetExhausted(
                "cross-level-color",
                f"colors {seen} and {c} both appear across levels")
    if seen is None:
        raise BudgetExhausted(
            "cross-level-color",
            "no cross-level pair fits in the window; deepen the budget")
    return seen


def _segment_successor(tree, base, prefix, rho, gamma_p, eps, rule, budget, cap):
    lam_low = factorize(rho).lam - 1
    delta = eps.predecessor()
    grades: list[tuple[CanonicalNode, Piece, tuple[int, ...], Ordinal]] = []
    for q in range(1, budget.width + 1):
        eta = omega_pow(mul(omega_pow(delta), q))
        sub_rho = mul(gamma_p, eta)
        anchor_entry = add(base, sub_rho)
        piece, table = _stabilize_segment(
            tree, base, prefix + (anchor_entry,), sub_rho, rule, budget, cap - 1)
        grades.append(((anchor_entry,), piece, table, sub_rho))
    low = _majority([g[2][:lam_low] for g in grades], "low-table-unanimity")
    kept = [g for g in grades if g[2][:lam_low] == low]
    votes: dict[int, int] = {}
    for _, _, table, _ in kept:
        for c in table[lam_low:]:
            votes[c] = votes.get(c, 0) + 1
    if not votes:
        raise BudgetExhausted("upper-color-vote", "no upper layers materialized")
    j = min(c for c, v in votes.items() if v == max(votes.values()))
    parts = []
    for anchor, piece, table, sub_rho in kept:
        upper = tuple(i for i in range(lam_low, len(table)) if table[i] == j)
        keep = tuple(range(lam_low)) + upper
        parts.append((anchor, _contract_piece(piece, sub_rho, keep)))
    return UnionPiece(tuple(parts), rho), low + (j,)


def _segment_limit(tree, base, prefix, rho, gamma_p, eps, rule, budget, cap):
    grades: list[tuple[CanonicalNode, Piece, tuple[int, ...]]] = []
    for q in range(1, budget.width + 1):
        eps_q = fundamental_sequence(eps, q)
        sub_rho = mul(gamma_p, omega_pow(omega_pow(eps_q)))
        anchor_entry = add(base, sub_rho)
        piece, table = _stabilize_segment(
            tree, base, prefix + (anchor_entry,), sub_rho, rule, budget, cap - 1)
        grades.append(((anchor_entry,), piece, table))
    table = _majority([g[2] for g in grades], "limit-table-unanimity")
    parts = tuple((anchor, piece) for anchor, piece, tab in grades if tab == table)
    return UnionPiece(parts, rho), table


def _majority(tables: list[tuple[int, ...]], step: str) -> tuple[int, ...]:
    counts: dict[tuple[int, ...], int] = {}
    for t in tables:
        counts[t] = counts.get(t, 0) + 1
    best = max(counts.values())
    if best <= len(tables) // 2 and len(counts) > 1:
        raise BudgetExhausted(step, f"no table reaches a majority: {counts}")
    for t in tables:  # first table attaining the best count wins
        if counts[t] == best:
            return t
    raise BudgetExhausted(step, "no tables materialized")  # pragma: no cover


def _contract_piece(piece: Piece, rho: Ordinal, keep: tuple[int, ...]) -> Piece:
    fact = factorize(rho)
    if keep == tuple(range(fact.lam)):
        return piece
    return FilteredPiece(piece, fact, keep)
