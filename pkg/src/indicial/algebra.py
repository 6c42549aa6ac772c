"""Algebraic passes: expansion, metric/Kronecker contraction, canonical form.

Canonicalization works per term by brute-force minimization.  The candidate
set is the orbit of the term under three commuting kinds of rearrangement:
reordering of factors that share the same label-free shape, permutations of
each factor's ordinary derivative indices (partials commute), and the label
permutations of every declared symmetry block (signed for antisymmetric
blocks).  Each candidate has its dummies renamed in first-occurrence order
and the lexicographically least structure wins.  If the minimum is reachable
with both signs the term is identically zero and is dropped.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from itertools import permutations, product
from math import factorial

from .errors import CanformSizeError, ConflictingDeclarationError, SemanticError
from .exprs import (
    DIM_SYMBOL,
    Expression,
    Factor,
    FactorLike,
    InertDeriv,
    KDELTA,
    Term,
    coarse_key,
    rename_term_dummies,
    structural_key,
    validate_expression,
)
from .session import Session, SymmetryBlock

CANDIDATE_CAP = factorial(10)


def expand(session: Session, expr: Expression) -> Expression:
    """Distribute products over sums.

    Construction already keeps expressions as flat term lists with per-copy
    dummy freshening, so this validates and returns the input; it exists so
    simplification pipelines can be written in the conventional order.
    """
    return validate_expression(expr)


def decsym(session: Session, name: str, cov_arity: int, contra_arity: int,
           cov_blocks, contra_blocks) -> None:
    """Record permutation symmetries of ``name`` over its index positions.

    Block positions are 1-based within their variance class, ``all`` meaning
    the whole class.  Positions are stored as absolute slot offsets and apply
    to any occurrence whose slots at those offsets share a variance, so a
    declaration over contravariant slots also covers the fully lowered form.
    """
    rank = cov_arity + contra_arity
    session.register_arity(name, rank)

    def build(specs, offset, size):
        blocks = []
        for kind, items in specs:
            if kind not in ("sym", "anti"):
                raise SemanticError(f"unknown symmetry kind {kind!r}")
            if items == "all":
                positions = tuple(range(offset, offset + size))
            else:
                for i in items:
                    if not 1 <= i <= size:
                        raise SemanticError(
                            f"symmetry position {i} outside arity {size}"
                        )
                positions = tuple(offset + i - 1 for i in items)
            if len(set(positions)) != len(positions):
                raise ConflictingDeclarationError(
                    f"repeated position in symmetry block for {name!r}"
                )
            if len(positions) >= 2:
                blocks.append(SymmetryBlock(kind, positions))
        return blocks

    blocks = tuple(
        build(cov_blocks, 0, cov_arity) + build(contra_blocks, cov_arity, contra_arity)
    )
    used = [p for b in blocks for p in b.positions]
    if len(set(used)) != len(used):
        raise ConflictingDeclarationError(
            f"overlapping symmetry blocks declared for {name!r}"
        )
    existing = session.symmetries.get(name)
    if existing is not None and existing != blocks:
        raise ConflictingDeclarationError(
            f"{name!r} already carries a different symmetry declaration"
        )
    session.symmetries[name] = blocks


# ---------------------------------------------------------------------------
# contraction


def _is_metric(session: Session, f: FactorLike) -> bool:
    return (
        isinstance(f, Factor)
        and f.name == session.metric
        and f.rank == 2
        and not f.derivs
        and f.slots[0][1] == f.slots[1][1]
    )


def _is_kdelta(f: FactorLike) -> bool:
    return isinstance(f, Factor) and f.name == KDELTA and f.rank == 2


def _replace_first_position(f: FactorLike, label: str, up: bool,
                            new_label: str, new_up: bool):
    """Replace the first position matching (label, up); None if absent."""
    if isinstance(f, Factor):
        for i, (lbl, u) in enumerate(f.slots):
            if lbl == label and u == up:
                slots = f.slots[:i] + ((new_label, new_up),) + f.slots[i + 1:]
                return Factor(f.name, slots, f.derivs)
        if not up:
            for i, d in enumerate(f.derivs):
                if d == label:
                    if new_up:
                        return None  # derivative slots stay covariant
                    derivs = f.derivs[:i] + (new_label,) + f.derivs[i + 1:]
                    return Factor(f.name, f.slots, derivs)
        return None
    for i, g in enumerate(f.factors):
        replaced = _replace_first_position(g, label, up, new_label, new_up)
        if replaced is not None:
            return InertDeriv(
                f.factors[:i] + (replaced,) + f.factors[i + 1:], f.index
            )
    if not up and f.index == label:
        if new_up:
            return None
        return InertDeriv(f.factors, new_label)
    return None


def _apply_dim(session: Session, coeff: Fraction, factors: list) -> Fraction:
    if session.dimension is not None:
        return coeff * session.dimension
    factors.append(Factor(DIM_SYMBOL))
    return coeff


def _contract_level(session: Session, factors: list[FactorLike],
                    coeff: Fraction) -> tuple[list[FactorLike], Fraction]:
    changed = True
    while changed:
        changed = False

        # Kronecker delta: trace, then absorption into any slot.
        for i, f in enumerate(factors):
            if not _is_kdelta(f):
                continue
            (l0, u0), (l1, u1) = f.slots
            if l0 == l1 and u0 != u1:
                del factors[i]
                coeff = _apply_dim(session, coeff, factors)
                changed = True
                break
            for (lbl, up), other in (((l0, u0), l1), ((l1, u1), l0)):
                hit = None
                for j, g in enumerate(factors):
                    if j == i:
                        continue
                    replaced = _replace_first_position(g, lbl, not up, other, not up)
                    if replaced is not None:
                        hit = (j, replaced)
                        break
                if hit is not None:
                    j, replaced = hit
                    factors[j] = replaced
                    del factors[i]
                    changed = True
                    break
            if changed:
                break
        if changed:
            continue

        # Metric-metric: full contraction to the dimension, else to a delta.
        metric_ids = [i for i, f in enumerate(factors) if _is_metric(session, f)]
        for ai in range(len(metric_ids)):
            for bi in range(ai + 1, len(metric_ids)):
                i, j = metric_ids[ai], metric_ids[bi]
                f, g = factors[i], factors[j]
                if f.slots[0][1] == g.slots[0][1]:
                    continue  # need one raised and one lowered copy
                fl = {lbl for lbl, _ in f.slots}
                gl = {lbl for lbl, _ in g.slots}
                shared = fl & gl
                if len(shared) == 2:
                    for k in sorted((i, j), reverse=True):
                        del factors[k]
                    coeff = _apply_dim(session, coeff, factors)
                    changed = True
                elif len(shared) == 1:
                    rest_f = next(s for s in f.slots if s[0] not in shared)
                    rest_g = next(s for s in g.slots if s[0] not in shared)
                    down = rest_f if not rest_f[1] else rest_g
                    up = rest_f if rest_f[1] else rest_g
                    for k in sorted((i, j), reverse=True):
                        del factors[k]
                    factors.append(Factor(KDELTA, (down, up)))
                    changed = True
                if changed:
                    break
            if changed:
                break
        if changed:
            continue

        # Metric raising/lowering against a plain factor slot.
        for i in metric_ids:
            f = factors[i]
            for (lbl, up), (other, _) in (
                (f.slots[0], f.slots[1]),
                (f.slots[1], f.slots[0]),
            ):
                for j, g in enumerate(factors):
                    if j == i or not isinstance(g, Factor):
                        continue
                    if _is_metric(session, g):
                        continue
                    for k, (slbl, sup) in enumerate(g.slots):
                        if slbl == lbl and sup != up:
                            slots = g.slots[:k] + ((other, up),) + g.slots[k + 1:]
                            factors[j] = Factor(g.name, slots, g.derivs)
                            del factors[i]
                            changed = True
                            break
                    if changed:
                        break
                if changed:
                    break
            if changed:
                break
        if changed:
            continue

    # Contractions wholly inside inert bodies.
    for i, f in enumerate(factors):
        if isinstance(f, InertDeriv):
            body, coeff = _contract_level(session, list(f.factors), coeff)
            factors[i] = InertDeriv(tuple(body), f.index)
    return factors, coeff


def contract(session: Session, expr: Expression) -> Expression:
    """Apply metric and Kronecker-delta contractions to a fixpoint."""
    out = []
    for t in expr.terms:
        factors, coeff = _contract_level(session, list(t.factors), t.coeff)
        if coeff != 0:
            out.append(Term(coeff, tuple(factors)))
    return Expression(tuple(out))


# ---------------------------------------------------------------------------
# canonical form


def _applicable_blocks(session: Session, f: Factor):
    blocks = []
    for b in session.blocks_for(f.name):
        if any(p >= f.rank for p in b.positions):
            continue
        variances = {f.slots[p][1] for p in b.positions}
        if len(variances) == 1:
            blocks.append(b)
    return blocks


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _factor_variants(session: Session, f: FactorLike):
    """All signed rearrangements of one factor-like object."""
    if isinstance(f, InertDeriv):
        return [
            (InertDeriv(body, f.index), sign)
            for body, sign in list(_level_variants(session, f.factors))
        ]
    options = [(f.slots, 1)]
    for block in _applicable_blocks(session, f):
        extended = []
        for slots, sign in options:
            labels = [slots[p][0] for p in block.positions]
            for perm in permutations(range(len(labels))):
                new_slots = list(slots)
                for pos, src in zip(block.positions, perm):
                    new_slots[pos] = (labels[src], slots[pos][1])
                psign = _perm_sign(perm) if block.kind == "anti" else 1
                extended.append((tuple(new_slots), sign * psign))
        options = extended
    variants = []
    for slots, sign in options:
        for dperm in permutations(f.derivs):
            variants.append((Factor(f.name, slots, dperm), sign))
    return variants


def _distinct_permutations(items, key):
    """Orderings of ``items`` that differ under ``key``; duplicates of
    structurally identical items are emitted once."""
    pool = sorted(items, key=key)

    def rec(remaining):
        if not remaining:
            yield ()
            return
        previous = None
        for i, item in enumerate(remaining):
            k = key(item)
            if previous is not None and k == previous:
                continue
            previous = k
            for rest in rec(remaining[:i] + remaining[i + 1:]):
                yield (item,) + rest

    yield from rec(pool)


def _level_variants(session: Session, factors: tuple[FactorLike, ...]):
    """Signed arrangements of a factor tuple: orderings within equal-shape
    groups crossed with every per-factor variant."""
    order = sorted(range(len(factors)), key=lambda i: (coarse_key(factors[i]), i))
    groups: list[list[int]] = []
    for i in order:
        if groups and coarse_key(factors[groups[-1][0]]) == coarse_key(factors[i]):
            groups[-1].append(i)
        else:
            groups.append([i])

    def group_orders(g):
        return _distinct_permutations(g, key=lambda i: structural_key(factors[i]))

    for group_perm in product(*(group_orders(g) for g in groups)):
        arrangement = [i for g in group_perm for i in g]
        per_factor = [_factor_variants(session, factors[i]) for i in arrangement]
        for combo in product(*per_factor):
            fs = tuple(v for v, _ in combo)
            sign = 1
            for _, s in combo:
                sign *= s
            yield fs, sign


def _variant_count(session: Session, f: FactorLike) -> int:
    if isinstance(f, InertDeriv):
        return _level_count(session, f.factors)
    n = factorial(len(f.derivs))
    for block in _applicable_blocks(session, f):
        n *= factorial(len(block.positions))
    return n


def _level_count(session: Session, factors) -> int:
    n = 1
    groups: dict = {}
    for f in factors:
        groups.setdefault(coarse_key(f), []).append(f)
    for members in groups.values():
        n *= factorial(len(members))
        for k in Counter(structural_key(f) for f in members).values():
            n //= factorial(k)
    for f in factors:
        n *= _variant_count(session, f)
    return n


def canonical_term(session: Session, t: Term):
    """Minimize one term over its rearrangement orbit.

    Returns (key, canonical Term) or None when the orbit reaches the same
    structure with both signs, which forces the term to vanish.
    """
    count = _level_count(session, t.factors)
    if count > CANDIDATE_CAP:
        raise CanformSizeError(
            f"term needs {count} canonicalization candidates (cap {CANDIDATE_CAP})"
        )
    best_key = None
    best_term = None
    best_signs: set[int] = set()
    for fs, sign in _level_variants(session, t.factors):
        candidate = rename_term_dummies(Term(t.coeff * sign, fs))
        key = structural_key(candidate)
        if best_key is None or key < best_key:
            best_key = key
            best_term = candidate
            best_signs = {sign}
        elif key == best_key:
            best_signs.add(sign)
    if len(best_signs) == 2:
        return None
    return best_key, best_term


def canform(session: Session, expr: Expression) -> Expression:
    """Canonical form: deterministic representative of the expression class
    under dummy relabeling, commuting partials, and declared symmetries.

    Alpha-equivalent terms are collected and zero coefficients dropped, so
    canonical equality coincides with structural equality.
    """
    buckets: dict = {}
    for t in expr.terms:
        result = canonical_term(session, t)
        if result is None:
            continue
        key, canon = result
        if key in buckets:
            prev_coeff, prev = buckets[key]
            buckets[key] = (prev_coeff + canon.coeff, prev)
        else:
            buckets[key] = (canon.coeff, canon)
    terms = [
        Term(coeff, rep.factors)
        for key, (coeff, rep) in sorted(buckets.items(), key=lambda kv: kv[0])
        if coeff != 0
    ]
    return Expression(tuple(terms))
