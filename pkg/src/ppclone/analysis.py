"""Structure of invariant relations: projections, signatures, criticality, linkedness.

Coordinates are 0-based.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .closure import Space, close
from .congruences import Partition, is_congruence
from .core import Relation, Sort, Verdict
from .errors import (
    ArityTooLarge,
    BadCoordinateSet,
    ForbiddenInsideR,
    NoParallelogramProperty,
    NotInvariant,
    NotTransitiveWithoutPP,
)

MAX_PP_ARITY = 20


def _coords(R: Relation, I: Iterable[int]) -> tuple[int, ...]:
    I = tuple(I)
    if not I or list(I) != sorted(set(I)) or I[0] < 0 or I[-1] >= R.arity:
        raise BadCoordinateSet(f"{I} is not a nonempty increasing subset of 0..{R.arity - 1}")
    return I


def projection(R: Relation, I: Iterable[int], name: str | None = None) -> Relation:
    I = _coords(R, I)
    if name is None:
        name = f"{R.name}_" + "_".join(str(i + 1) for i in I)
    return Relation(name, tuple(R.sorts[i] for i in I), {tuple(t[i] for i in I) for t in R.tuples}, check=False)


def restrict_sort(sorts: Sequence[Sort], tuples: Iterable[Sequence[int]]) -> Sort:
    """The subalgebra sort on ``tuples`` inside the product of ``sorts``.

    A single full coordinate returns its sort unchanged.
    """
    tuples = sorted({tuple(t) for t in tuples})
    if len(sorts) == 1:
        vals = [t[0] for t in tuples]
        if len(vals) == sorts[0].size:
            return sorts[0]
        return Sort.subalgebra(sorts[0], vals)
    prod = Sort.product(sorts)
    codes = [prod.encode(t) for t in tuples]
    if len(codes) == prod.size:
        return prod
    return Sort.subalgebra(prod, codes)


def is_invariant(R: Relation) -> bool:
    return not close(R.sorts, R.tuples, stop=lambda new: True).stopped


def require_invariant(R: Relation) -> None:
    if not is_invariant(R):
        raise NotInvariant(f"relation {R.name} is not closed under the sort algebras")


def is_subdirect(R: Relation) -> bool:
    return all(len({t[i] for t in R.tuples}) == R.sorts[i].size for i in range(R.arity))


def _splits(n: int) -> Iterable[tuple[int, ...]]:
    rest = list(range(1, n))
    for r in range(0, n - 1):
        for extra in itertools.combinations(rest, r):
            yield (0,) + extra


def _split_violation(R: Relation, I: Sequence[int]):
    J = [j for j in range(R.arity) if j not in I]
    nbrs: dict[tuple, set[tuple]] = {}
    lefts: dict[tuple, list[tuple]] = {}
    for t in R.tuples:
        a = tuple(t[i] for i in I)
        c = tuple(t[j] for j in J)
        nbrs.setdefault(a, set()).add(c)
        lefts.setdefault(c, []).append(a)
    for c in sorted(lefts):
        group = lefts[c]
        a = group[0]
        for b in group[1:]:
            if nbrs[a] != nbrs[b]:
                x, y = (a, b) if nbrs[a] - nbrs[b] else (b, a)
                d = min(nbrs[x] - nbrs[y])
                return (tuple(I), x, y, c, d)
    return None


def has_parallelogram_property(R: Relation) -> Verdict:
    """PP across every split; witness ``(I, a, b, c, d)`` with (a,c),(a,d),(b,c) in R, (b,d) not."""
    if R.arity > MAX_PP_ARITY:
        raise ArityTooLarge(f"parallelogram check is limited to arity {MAX_PP_ARITY}")
    for I in _splits(R.arity):
        w = _split_violation(R, I)
        if w is not None:
            return Verdict(False, w)
    return Verdict(True)


def signature(R: Relation) -> frozenset[tuple[int, int, int]]:
    """Triples (i, a, b) realised by two tuples agreeing on coordinates before i."""
    out: set[tuple[int, int, int]] = set()
    for i in range(R.arity):
        groups: dict[tuple, set[int]] = {}
        for t in R.tuples:
            groups.setdefault(t[:i], set()).add(t[i])
        for vals in groups.values():
            out.update((i, a, b) for a in vals for b in vals)
    return frozenset(out)


def depends_on(R: Relation, i: int) -> bool:
    if not 0 <= i < R.arity:
        raise BadCoordinateSet(f"coordinate {i} outside 0..{R.arity - 1}")
    if R.arity == 1:
        return 0 < len(R) < R.sorts[0].size
    rest = {t[:i] + t[i + 1:] for t in R.tuples}
    return len(R) != len(rest) * R.sorts[i].size


def dummy_coordinates(R: Relation) -> tuple[int, ...]:
    return tuple(i for i in range(R.arity) if not depends_on(R, i))


@dataclass(frozen=True)
class CriticalReport:
    is_critical: bool
    dummy_coordinates: tuple[int, ...]
    cover: Relation
    key_tuples: tuple[tuple[int, ...], ...]

    @property
    def meet_irreducible(self) -> bool:
        return len(self.key_tuples) > 0


def _complement_codes(R: Relation, space: Space) -> np.ndarray:
    have = space.encode(np.asarray(R.tuples, dtype=np.int64).reshape(-1, R.arity)) if len(R) else np.zeros(0, np.int64)
    mask = np.ones(space.total, dtype=bool)
    mask[have] = False
    return np.nonzero(mask)[0]


def cover_and_keys(R: Relation) -> CriticalReport:
    """The intersection R* of all subpowers strictly above R, and the key tuples R* minus R.

    Runs one closure per tuple outside R (each stopped as soon as it is known
    to contain the current candidate cover).
    """
    require_invariant(R)
    dummies = dummy_coordinates(R)
    space = Space(R.sorts)
    outside = _complement_codes(R, space)
    if outside.size == 0:
        return CriticalReport(False, dummies, R, ())
    base = np.asarray(R.tuples, dtype=np.int64).reshape(-1, R.arity)
    nR = base.shape[0]

    def closure_with(code: int, good: set[int] | None):
        seeds = np.concatenate([base, space.decode([code])])
        stop = None if good is None else (lambda new: any(int(c) in good for c in new))
        return close(R.sorts, seeds, closed_prefix=nR, stop=stop)

    in_R = set(space.encode(base).tolist())
    v = int(outside[0])
    X = set(closure_with(v, None).codes.tolist())
    good = {v}
    reducible = False
    for t in outside[1:].tolist():
        if t in good:
            continue
        res = closure_with(t, good)
        if res.stopped:
            good.add(t)
            continue
        Y = X & set(res.codes.tolist())
        new = sorted(Y - in_R)
        if not new:
            reducible = True
            break
        v = new[0]
        X = set(closure_with(v, None).codes.tolist())
        good.add(v)
    if reducible:
        return CriticalReport(False, dummies, R, ())
    tuples = [tuple(int(a) for a in row) for row in space.decode(np.array(sorted(X), dtype=np.int64))]
    cover = Relation(f"{R.name}*", R.sorts, tuples, check=False)
    keys = tuple(sorted(set(cover.tuples) - set(R.tuples)))
    return CriticalReport(not dummies, dummies, cover, keys)


def linkedness_congruence(R: Relation, I: Iterable[int], check_pp: bool = True) -> Partition:
    """theta_I on proj_I(R): elements are indices into ``projection(R, I).tuples``."""
    I = _coords(R, I)
    if len(I) == R.arity:
        raise BadCoordinateSet("linkedness needs a proper coordinate subset")
    if check_pp:
        v = has_parallelogram_property(R)
        if not v:
            raise NoParallelogramProperty(f"{R.name} fails the parallelogram property: {v.witness}")
    J = [j for j in range(R.arity) if j not in I]
    P = projection(R, I)
    index = {t: k for k, t in enumerate(P.tuples)}
    lefts: dict[tuple, list[int]] = {}
    for t in R.tuples:
        lefts.setdefault(tuple(t[j] for j in J), []).append(index[tuple(t[i] for i in I)])
    labels = list(range(len(P)))

    def find(x: int) -> int:
        while labels[x] != x:
            labels[x] = labels[labels[x]]
            x = labels[x]
        return x

    for group in lefts.values():
        for k in group[1:]:
            a, b = find(group[0]), find(k)
            if a != b:
                labels[max(a, b)] = min(a, b)
    theta = Partition.from_labels([find(k) for k in range(len(P))])
    if not check_pp:
        # without PP the "shares a witness" relation need not be transitive
        related = {(a, b) for g in lefts.values() for a in g for b in g}
        for a, b in itertools.product(range(len(P)), repeat=2):
            if theta.related(a, b) and (a, b) not in related:
                raise NotTransitiveWithoutPP(f"linkedness on {I} is not transitive")
    sort = restrict_sort(P.sorts, P.tuples)
    if not is_congruence(sort.algebra, theta):
        raise NotInvariant(f"linkedness relation on {I} is not a congruence")
    return theta


def is_reduced(R: Relation) -> bool:
    return all(linkedness_congruence(R, (i,)).is_identity() for i in range(R.arity)) if R.arity > 1 else True


def parallelogram_closure(R: Relation) -> Relation:
    """Least invariant relation above R with the parallelogram property."""
    cur = set(close(R.sorts, R.tuples).tuples())
    if R.arity == 1:
        return R.with_tuples(cur)
    while True:
        changed = False
        for I in _splits(R.arity):
            J = [j for j in range(R.arity) if j not in I]
            # complete every connected component of the bipartite left/right graph
            parent: dict = {}

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for t in cur:
                a = ("L", tuple(t[i] for i in I))
                c = ("R", tuple(t[j] for j in J))
                parent.setdefault(a, a)
                parent.setdefault(c, c)
                ra, rc = find(a), find(c)
                if ra != rc:
                    parent[ra] = rc
            comps: dict = {}
            for node in parent:
                comps.setdefault(find(node), ([], []))[0 if node[0] == "L" else 1].append(node[1])
            for ls, rs in comps.values():
                for a in ls:
                    for c in rs:
                        t = [0] * R.arity
                        for i, x in zip(I, a):
                            t[i] = x
                        for j, x in zip(J, c):
                            t[j] = x
                        t = tuple(t)
                        if t not in cur:
                            cur.add(t)
                            changed = True
        if not changed:
            break
        grown = set(close(R.sorts, sorted(cur)).tuples())
        cur = grown
    return R.with_tuples(cur, name=f"{R.name}_pp")


def maximal_avoiding(R: Relation, forbidden: Sequence[int]) -> Relation:
    """Greedy lexicographic extension of R to a maximal subpower omitting ``forbidden``."""
    forbidden = tuple(int(a) for a in forbidden)
    if forbidden in R:
        raise ForbiddenInsideR(f"{forbidden} already lies in {R.name}")
    require_invariant(R)
    space = Space(R.sorts)
    fcode = int(space.encode(np.array([forbidden]))[0])
    cur = np.asarray(R.tuples, dtype=np.int64).reshape(-1, R.arity)
    inside = np.zeros(space.total, dtype=bool)
    if cur.size:
        inside[space.encode(cur)] = True
    for code in range(space.total):
        if inside[code] or code == fcode:
            continue
        seeds = np.concatenate([cur, space.decode([code])])
        res = close(R.sorts, seeds, closed_prefix=cur.shape[0], stop=lambda new: bool(np.any(new == fcode)))
        if not res.stopped:
            cur = res.digits
            inside[res.codes] = True
    return R.with_tuples((tuple(int(a) for a in row) for row in cur), name=f"{R.name}_max")


def maximal_omitting_triple(R: Relation, i: int, a: int, b: int) -> Relation:
    """Greedy colexicographic extension of R to a maximal subpower whose signature omits ``(i, a, b)``.

    The triple is tracked through the prefixes ``t[:i]`` seen with ``t[i] = a``
    and with ``t[i] = b``; a closure is abandoned once the two meet.
    """
    if (i, a, b) in signature(R):
        raise ForbiddenInsideR(f"({i}, {a}, {b}) already lies in the signature of {R.name}")
    require_invariant(R)
    space = Space(R.sorts)
    cur = np.asarray(R.tuples, dtype=np.int64).reshape(-1, R.arity)
    inside = np.zeros(space.total, dtype=bool)
    if cur.size:
        inside[space.encode(cur)] = True
    w, lo = int(space.weights[i]), int(space.weights[i] * space.sizes[i])  # code // lo is the prefix before i

    def prefixes(codes: np.ndarray) -> tuple[set[int], set[int]]:
        vals = (codes // w) % int(space.sizes[i])
        pre = codes // lo
        return set(pre[vals == a].tolist()), set(pre[vals == b].tolist())

    base_a, base_b = prefixes(space.encode(cur)) if cur.size else (set(), set())
    # colexicographic order: varying early coordinates first keeps them free,
    # so the omitted triple tends to be cut out by a constraint near coordinate i
    colex = space.encode(np.array(list(itertools.product(*(range(int(z)) for z in space.sizes[::-1]))),
                                  dtype=np.int64).reshape(-1, R.arity)[:, ::-1])
    for code in colex.tolist():
        if inside[code]:
            continue
        pa, pb = set(base_a), set(base_b)
        ta, tb = prefixes(np.array([code]))
        pa |= ta
        pb |= tb
        if a == b or pa & pb:
            continue

        def clash(new: np.ndarray) -> bool:
            na, nb = prefixes(new)
            pa.update(na)
            pb.update(nb)
            return bool(pa & pb)

        seeds = np.concatenate([cur, space.decode([code])])
        res = close(R.sorts, seeds, closed_prefix=cur.shape[0], stop=clash)
        if not res.stopped:
            cur = res.digits
            inside[res.codes] = True
            base_a, base_b = pa, pb
    return R.with_tuples((tuple(int(x) for x in row) for row in cur), name=f"{R.name}_max")


@dataclass(frozen=True)
class Part:
    """One conjunct of a decomposition: ``relation`` constrains coordinates ``coords``."""

    coords: tuple[int, ...]
    relation: Relation
    origin: str
    source: Relation | None = None  # signature parts: the relation on its support before dummies are dropped


def critical_decomposition(R: Relation, k: int) -> list[Part]:
    """Parts whose cylindrified intersection is R.

    The non-full projections to at most k coordinates, and for each triple
    missing from the signature of the parallelogram closure a maximal subpower
    whose signature still omits it.  Such a subpower is sought first as a
    cylinder over at most three coordinates; dummy coordinates are dropped.
    """
    n = R.arity
    if n <= k or len(R) == 0:
        return [Part(tuple(range(n)), R, "whole")]
    Rp = parallelogram_closure(R)
    parts: list[Part] = []
    for size in range(1, k + 1):
        for I in itertools.combinations(range(n), size):
            P = projection(R, I)
            if not P.is_full():
                parts.append(Part(I, P, "projection"))
    sig = signature(Rp)
    found: list[tuple[tuple[int, ...], frozenset]] = []  # (support J, signature of the part on J)
    for i in range(n):
        present = sorted({t[i] for t in Rp.tuples})
        for a in present:
            for b in range(R.sorts[i].size):
                if (i, a, b) in sig:
                    continue
                if any(i in J and (J.index(i), a, b) not in s for J, s in found):
                    continue
                J, S = _omitting_part(Rp, i, a, b)
                found.append((J, signature(S)))
                keep = tuple(j for j in range(len(J)) if depends_on(S, j))
                rel = projection(S, keep, name=f"{R.name}_S{len(found)}") if keep else S
                parts.append(Part(tuple(J[j] for j in keep), rel, f"signature({i},{a},{b})", S))
    return parts


def _omitting_part(Rp: Relation, i: int, a: int, b: int, max_support: int = 3) -> tuple[tuple[int, ...], Relation]:
    """A maximal relation on few coordinates whose cylinder omits ``(i, a, b)`` from its signature.

    Supports J containing i are tried by size up to ``max_support``; the
    projection of Rp to J must already omit the triple.  Falls back to all
    coordinates.
    """
    n = Rp.arity
    others = [j for j in range(n) if j != i]
    for size in range(1, min(max_support, n - 1) + 1):
        for rest in itertools.combinations(others, size - 1):
            J = tuple(sorted(rest + (i,)))
            P = projection(Rp, J)
            if (J.index(i), a, b) not in signature(P):
                return J, maximal_omitting_triple(P, J.index(i), a, b)
    return tuple(range(n)), maximal_omitting_triple(Rp, i, a, b)


def intersect_parts(sorts: Sequence[Sort], parts: Sequence[Part], name: str = "R") -> Relation:
    """Intersection of the parts, each extended by full coordinates outside its support."""
    space = Space(sorts)
    digits = space.decode(np.arange(space.total, dtype=np.int64))
    mask = np.ones(space.total, dtype=bool)
    for part in parts:
        if not part.coords:
            if len(part.relation) == 0:
                mask[:] = False
            continue
        sub = Space(part.relation.sorts)
        allowed = np.zeros(sub.total, dtype=bool)
        if len(part.relation):
            allowed[sub.encode(np.asarray(part.relation.tuples))] = True
        mask &= allowed[sub.encode(digits[:, list(part.coords)])]
    return Relation(name, sorts, [tuple(int(a) for a in row) for row in digits[mask]], check=False)
