"""Construction and verification of pp-definitions.

Every builder returns a :class:`DefinitionResult` whose formula has been
evaluated over its basis and compared with the target relation.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    Part,
    cover_and_keys,
    critical_decomposition,
    depends_on,
    has_parallelogram_property,
    intersect_parts,
    is_subdirect,
    linkedness_congruence,
    projection,
    restrict_sort,
)
from .core import (
    Algebra,
    BasisRegistry,
    EqAtom,
    LengthReport,
    OperationTable,
    PpFormula,
    RelAtom,
    Relation,
    Sort,
    Verdict,
    conjunction,
    evaluate_pp_formula,
    formula_length,
    simplify_equalities,
    substitute_basis,
)
from .errors import (
    ArityMismatch,
    EmptyUnsupported,
    NoEdgeTermFound,
    NoParallelogramProperty,
    NotAffine,
    NotAPowerSort,
    NotSubdirect,
    PreconditionFailed,
    RecursionInvariantBroken,
    SortMismatch,
    UnrelatedSorts,
    VerificationFailed,
    BudgetExhausted,
)
from .fixtures import lin_name
from .polymorphisms import (
    IdentityScheme,
    edge_parameter_from_basic_operations,
    find_term,
    is_compatible,
    satisfies_identity_scheme,
)

METHODS = ("baker_pixley", "affine", "chain", "composite")


@dataclass
class DefinitionResult:
    formula: PpFormula
    basis: BasisRegistry
    report: LengthReport
    method: str
    notes: list[str] = field(default_factory=list)


def _xs(n: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n))


def _pruned(formula: PpFormula, basis: BasisRegistry) -> BasisRegistry:
    out = BasisRegistry()
    for s in formula.free_sorts + formula.bound_sorts:
        out.add_sort(s)
    for sym in formula.symbols:
        out.add(basis[sym])
    return out


def verify_definition(result: DefinitionResult, R: Relation) -> Verdict:
    """Tuple-set equality between the formula's relation and R; witness is a differing tuple."""
    got = evaluate_pp_formula(result.formula, result.basis)
    if got.sorts != R.sorts:
        return Verdict(False, None, "sorts differ")
    a, b = set(got.tuples), set(R.tuples)
    if a == b:
        return Verdict(True)
    diff = min(a ^ b)
    side = "extra" if diff in a else "missing"
    return Verdict(False, diff, f"{side} tuple {diff}")


def _finish(formula: PpFormula, basis: BasisRegistry, R: Relation, method: str,
            notes: Sequence[str] = ()) -> DefinitionResult:
    formula = formula.renamed(R.name).canonical()
    result = DefinitionResult(formula, _pruned(formula, basis), formula_length(formula, method), method, list(notes))
    check = verify_definition(result, R)
    if not check:
        raise VerificationFailed(f"{method} definition of {R.name} is wrong: {check.detail}")
    return result


def single_atom(R: Relation, method: str = "chain") -> DefinitionResult:
    basis = BasisRegistry([R])
    return _finish(PpFormula.single_atom(R), basis, R, method)


def _singleton_subuniverses(sort: Sort) -> list[int]:
    out = []
    for a in range(sort.size):
        if all(op.table[op.index((a,) * op.arity)] == a for op in sort.algebra.operations):
            out.append(a)
    return out


def empty_definition(R: Relation, method: str) -> DefinitionResult:
    """``EX y y' . C_a(y) & C_b(y') & y = y'`` for two distinct constants a, b."""
    for sort in dict.fromkeys(R.sorts):
        consts = _singleton_subuniverses(sort)
        if len(consts) >= 2:
            a, b = consts[:2]
            ca = Relation(f"C_{a}", (sort,), [(a,)])
            cb = Relation(f"C_{b}", (sort,), [(b,)])
            basis = BasisRegistry([ca, cb])
            phi = PpFormula(R.name, _xs(R.arity), R.sorts, ("y1", "y2"), (sort, sort),
                            (RelAtom(ca.name, ("y1",)), RelAtom(cb.name, ("y2",)), EqAtom("y1", "y2")))
            return _finish(phi, basis, R, method)
    raise EmptyUnsupported("the empty relation needs two distinct one-element subuniverses")


# ---------------------------------------------------------------------------
# Baker-Pixley


def baker_pixley(R: Relation, k: int) -> DefinitionResult:
    """Conjunction of all projections of R to at most k coordinates."""
    n = R.arity
    if n <= k:
        return single_atom(R, "baker_pixley")
    basis = BasisRegistry()
    xs = _xs(n)
    atoms = []
    for size in range(1, k + 1):
        for I in itertools.combinations(range(n), size):
            P = basis.add(projection(R, I))
            atoms.append(RelAtom(P.name, (xs[i] for i in I)))
    phi = PpFormula(R.name, xs, R.sorts, (), (), tuple(atoms))
    return _finish(phi, basis, R, "baker_pixley")


# ---------------------------------------------------------------------------
# affine relations over Z_p


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, int(p**0.5) + 1))


def _rref(M: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    M = M.copy() % p
    rows, cols = M.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(M[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        M[[r, piv]] = M[[piv, r]]
        M[r] = (M[r] * pow(int(M[r, c]), -1, p)) % p
        for i in range(rows):
            if i != r and M[i, c]:
                M[i] = (M[i] - M[i, c] * M[r]) % p
        pivots.append(c)
        r += 1
    return M[:r], pivots


def affine_equations(R: Relation, p: int) -> list[tuple[tuple[int, ...], int]]:
    """Equations ``c . x = b (mod p)`` cutting out the nonempty affine relation R."""
    T = np.asarray(R.tuples, dtype=np.int64)
    t0 = T[0]
    B, pivots = _rref((T - t0) % p, p)
    n = R.arity
    eqs = []
    for f in (c for c in range(n) if c not in pivots):
        c = np.zeros(n, dtype=np.int64)
        c[f] = 1
        for r, pc in enumerate(pivots):
            c[pc] = (-B[r, f]) % p
        eqs.append((tuple(int(a) for a in c), int(c @ t0 % p)))
    return eqs


def _signed(c: int, p: int) -> int:
    c %= p
    return c if c <= p - c else c - p


def affine_definition(R: Relation, p: int | None = None) -> DefinitionResult:
    """Gaussian elimination over Z_p, each equation written as an addition chain."""
    sorts = set(R.sorts)
    if len(sorts) != 1:
        raise SortMismatch("affine definitions need a single-sorted relation")
    sort = R.sorts[0]
    p = sort.size if p is None else p
    if sort.size != p or not _is_prime(p):
        raise NotAffine(f"sort of size {sort.size} is not Z_{p} for a prime {p}")
    if len(R) == 0:
        return empty_definition(R, "affine")
    m = OperationTable.from_function("x-y+z", 3, p, lambda x, y, z: (x - y + z) % p)
    if not is_compatible(m, R):
        raise NotAffine(f"{R.name} is not closed under x - y + z mod {p}")
    lin = Relation(lin_name(p), (sort,) * 3, [(a, b, (a + b) % p) for a in range(p) for b in range(p)])
    basis = BasisRegistry([lin])
    xs = _xs(R.arity)
    bound: list[str] = []
    atoms: list = []
    for coeffs, b in affine_equations(R, p):
        terms = [(_signed(c, p), j) for j, c in enumerate(coeffs) if c % p]
        if all(c < 0 for c, _ in terms):
            terms = [(-c, j) for c, j in terms]
            b = (-b) % p
        units: list[tuple[int, str]] = []
        for c, j in terms:
            units += [(1 if c > 0 else -1, xs[j])] * abs(c)
        first = next(i for i, (s, _) in enumerate(units) if s > 0)
        acc = units.pop(first)[1]
        for sign, var in units:
            y = f"y{len(bound) + 1}"
            bound.append(y)
            atoms.append(RelAtom(lin.name, (acc, var, y) if sign > 0 else (y, var, acc)))
            acc = y
        const = basis.add(Relation(f"C_{b}", (sort,), [(b,)]))
        atoms.append(RelAtom(const.name, (acc,)))
    phi = PpFormula(R.name, xs, R.sorts, tuple(bound), (sort,) * len(bound), tuple(atoms))
    return _finish(phi, basis, R, "affine")


# ---------------------------------------------------------------------------
# transport along powers and HS


def flatten(R: Relation) -> Relation:
    """View R over a power sort B = A^k as an (n*k)-ary relation over A."""
    B = R.sorts[0]
    if B.kind != "pow" or any(s != B for s in R.sorts):
        raise NotAPowerSort(f"{R.name} is not a relation over a single power sort")
    A = B.parents[0]
    tuples = [sum((B.decode(a) for a in t), ()) for t in R.tuples]
    return Relation(f"{R.name}_flat", (A,) * (R.arity * B.data), tuples)


def diagonal_lift(Q: Relation, power: Sort) -> Relation:
    """``Q' = {(e(x1), ..., e(xm))}`` with e the diagonal map into ``power``."""
    k = power.data
    return Relation(f"{Q.name}_diag", (power,) * Q.arity,
                    [tuple(power.encode((a,) * k) for a in t) for t in Q.tuples])


def power_transport(R: Relation, k: int) -> tuple[Relation, DefinitionResult]:
    """Flatten R over ``A^k`` and build the glue reconstructing R from the flattening.

    The glue quantifies one diagonal variable per flattened coordinate and ties
    it to its block through the projections ``P_i``.
    """
    B = R.sorts[0]
    basis = BasisRegistry()
    if k == 1 and B.kind != "pow":
        # A^1 is A itself: the flattening is R and the diagonal map is the identity
        if any(s != B for s in R.sorts):
            raise NotAPowerSort(f"{R.name} is not a relation over a single sort")
        flat = R.renamed(f"{R.name}_flat")
        lifted = basis.add(flat.renamed(f"{flat.name}_diag"))
    else:
        flat = flatten(R)
        if B.data != k:
            raise ArityMismatch(f"{R.name} lives over a power with exponent {B.data}, not {k}")
        lifted = basis.add(diagonal_lift(flat, B))
    n = R.arity
    xs = _xs(n)
    zs = tuple(f"z{j + 1}" for j in range(n * k))
    atoms: list = []
    if k == 1:
        atoms += [EqAtom(xs[j], zs[j]) for j in range(n)]
    else:
        P = [basis.add(Relation(f"P_{i + 1}", (B, B), [(b, B.encode((B.decode(b)[i],) * k)) for b in range(B.size)]))
             for i in range(k)]
        for j in range(n):
            for i in range(k):
                atoms.append(RelAtom(P[i].name, (xs[j], zs[j * k + i])))
    atoms.append(RelAtom(lifted.name, zs))
    glue = PpFormula(R.name, xs, R.sorts, zs, (B,) * len(zs), tuple(atoms))
    return flat, _finish(glue, basis, R, "composite")


def lift_definition(result: DefinitionResult, power: Sort) -> tuple[PpFormula, BasisRegistry]:
    """Rewrite a definition over A into one over the diagonal of ``A^k``."""
    basis = BasisRegistry()
    names = {}
    for sym in result.formula.symbols:
        names[sym] = basis.add(diagonal_lift(result.basis[sym], power)).name
    atoms = [a if isinstance(a, EqAtom) else RelAtom(names[a.symbol], a.args) for a in result.formula.atoms]
    phi = result.formula
    return PpFormula(phi.name, phi.free, (power,) * len(phi.free), phi.bound, (power,) * len(phi.bound), atoms), basis


def compose(outer: DefinitionResult, symbol: str, inner: DefinitionResult, R: Relation, method: str,
            notes: Sequence[str] = ()) -> DefinitionResult:
    """Substitute ``inner`` for the atom ``symbol`` of ``outer``; other atoms are kept."""
    translations = {s: PpFormula.single_atom(outer.basis[s], symbol=s) for s in outer.formula.symbols if s != symbol}
    translations[symbol] = inner.formula
    phi = simplify_equalities(substitute_basis(outer.formula, translations))
    basis = BasisRegistry()
    for s in outer.formula.symbols:
        if s != symbol:
            basis.add(outer.basis[s])
    basis.update(inner.basis)
    return _finish(phi, basis, R, method, list(outer.notes) + list(inner.notes) + list(notes))


def power_definition(R: Relation, define_flat) -> DefinitionResult:
    """Define R over ``A^k`` by defining its flattening with ``define_flat`` and lifting."""
    B = R.sorts[0]
    flat, glue = power_transport(R, B.data)
    inner = define_flat(flat)
    phi, basis = lift_definition(inner, B)
    lifted_symbol = f"{flat.name}_diag"
    lifted = DefinitionResult(phi, basis, formula_length(phi), inner.method)
    return compose(glue, lifted_symbol, lifted, R, "composite")


def _hs_map(sort: Sort) -> tuple[Sort, list[int], dict[int, int]]:
    """(base sort, S, h) with h: S -> elements of ``sort`` a surjective homomorphism."""
    if sort.kind == "base":
        return sort, list(range(sort.size)), {a: a for a in range(sort.size)}
    if sort.kind in ("prod", "pow"):
        raise UnrelatedSorts(f"sort {sort.id} is a product, not in HS of a base algebra")
    base, S, h = _hs_map(sort.parents[0])
    if sort.kind == "sub":
        pos = {e: i for i, e in enumerate(sort.data)}
        S2 = [a for a in S if h[a] in pos]
        return base, S2, {a: pos[h[a]] for a in S2}
    block = sort.block_of
    return base, S, {a: block[h[a]] for a in S}


def hs_transport(R: Relation) -> tuple[Relation, DefinitionResult]:
    """Pull R back to the common base algebra and glue with homomorphism graphs."""
    maps = [_hs_map(s) for s in R.sorts]
    bases = {m[0] for m in maps}
    if len(bases) != 1:
        raise UnrelatedSorts("sorts do not come from one base algebra")
    base = bases.pop()
    target = set(R.tuples)
    pre = [t for t in itertools.product(*(m[1] for m in maps))
           if tuple(m[2][a] for m, a in zip(maps, t)) in target]
    Rp = Relation(f"{R.name}_pre", (base,) * R.arity, pre)
    basis = BasisRegistry([Rp])
    xs = _xs(R.arity)
    ys = tuple(f"y{i + 1}" for i in range(R.arity))
    atoms: list = []
    for x, y, s, (_, S, h) in zip(xs, ys, R.sorts, maps):
        if s == base:
            atoms.append(EqAtom(y, x))
        else:
            G = basis.add(Relation(f"G_{s.id}", (base, s), [(a, h[a]) for a in S]))
            atoms.append(RelAtom(G.name, (y, x)))
    atoms.append(RelAtom(Rp.name, ys))
    glue = PpFormula(R.name, xs, R.sorts, ys, (base,) * len(ys), tuple(atoms))
    return Rp, _finish(glue, basis, R, "composite")


# ---------------------------------------------------------------------------
# reduction and the inductive chain


def reduce_critical(R: Relation) -> tuple[Relation, DefinitionResult]:
    """Quotient every coordinate by its linkedness congruence.

    R must be subdirect with the parallelogram property; the glue says
    ``x_i / theta_i = y_i`` and R_red(y).
    """
    if not is_subdirect(R):
        raise NotSubdirect(f"{R.name} is not subdirect")
    pp = has_parallelogram_property(R)
    if not pp:
        raise NoParallelogramProperty(f"{R.name} fails the parallelogram property: {pp.witness}")
    sorts = []
    blocks = []
    for i, s in enumerate(R.sorts):
        theta = linkedness_congruence(R, (i,), check_pp=False) if R.arity > 1 else None
        if theta is None or theta.is_identity():
            sorts.append(s)
            blocks.append(None)
        else:
            q = Sort.quotient(s, theta)
            sorts.append(q)
            blocks.append(q.block_of)
    red = Relation(f"{R.name}_red", sorts,
                   {tuple(a if b is None else b[a] for a, b in zip(t, blocks)) for t in R.tuples})
    basis = BasisRegistry([red])
    xs = _xs(R.arity)
    ys = tuple(f"y{i + 1}" for i in range(R.arity))
    atoms: list = []
    for x, y, s, q, b in zip(xs, ys, R.sorts, sorts, blocks):
        if b is None:
            atoms.append(EqAtom(x, y))
        else:
            G = basis.add(Relation(f"G_{q.id}", (s, q), [(a, b[a]) for a in range(s.size)]))
            atoms.append(RelAtom(G.name, (x, y)))
    atoms.append(RelAtom(red.name, ys))
    glue = PpFormula(R.name, xs, R.sorts, ys, tuple(sorts), tuple(atoms))
    if R.arity > 1:
        for i in range(R.arity):
            if not linkedness_congruence(red, (i,), check_pp=False).is_identity():
                raise PreconditionFailed("reduced", i)
    return red, _finish(glue, basis, R, "chain")


def chain_preconditions(R: Relation) -> Verdict:
    """Reduced, critical, subdirect and parallelogram property; witness names the failing check."""
    if not is_subdirect(R):
        bad = next(i for i in range(R.arity) if len({t[i] for t in R.tuples}) != R.sorts[i].size)
        return Verdict(False, ("subdirect", bad))
    pp = has_parallelogram_property(R)
    if not pp:
        return Verdict(False, ("parallelogram", pp.witness))
    if R.arity > 1:
        for i in range(R.arity):
            theta = linkedness_congruence(R, (i,), check_pp=False)
            if not theta.is_identity():
                return Verdict(False, ("reduced", (i, str(theta))))
    rep = cover_and_keys(R)
    if not rep.is_critical:
        return Verdict(False, ("critical", rep.dummy_coordinates or "meet-reducible"))
    return Verdict(True)


def chain_decompose(R: Relation, check: bool = True, _depth: int = 0) -> DefinitionResult:
    """Define a reduced critical subdirect PP relation by a chain of ternary atoms.

    Coordinates 1 and 2 are merged into the quotient of their projection by
    the linkedness congruence, giving ``EX y . Q(x1, x2, y) & R'(y, x3, ...)``.
    """
    if check:
        pre = chain_preconditions(R)
        if not pre:
            if _depth:
                raise RecursionInvariantBroken(
                    f"intermediate relation {R.name} fails '{pre.witness[0]}' ({pre.witness[1]}); "
                    f"sorts {[s.id for s in R.sorts]}, tuples {list(R.tuples)}")
            raise PreconditionFailed(pre.witness[0], pre.witness[1])
    n = R.arity
    if n <= 3:
        return single_atom(R, "chain")
    P = projection(R, (0, 1))
    theta = linkedness_congruence(R, (0, 1), check_pp=False)
    pair_sort = restrict_sort(P.sorts, P.tuples)
    A12 = Sort.quotient(pair_sort, theta)
    index = {t: i for i, t in enumerate(P.tuples)}
    block = A12.block_of
    Q = Relation(f"{R.name}_Q", (R.sorts[0], R.sorts[1], A12), [t + (block[index[t]],) for t in P.tuples])
    Rn = Relation(f"{R.name}_R", (A12,) + R.sorts[2:], {(block[index[t[:2]]],) + t[2:] for t in R.tuples})
    inner = chain_decompose(Rn, check, _depth + 1)
    xs = _xs(n)
    phi = PpFormula(R.name, xs, R.sorts, ("y1",), (A12,),
                    (RelAtom(Q.name, (xs[0], xs[1], "y1")), RelAtom(Rn.name, ("y1",) + xs[2:])))
    outer = DefinitionResult(phi, BasisRegistry([Q, Rn]), formula_length(phi), "chain")
    return compose(outer, Rn.name, inner, R, "chain")


# ---------------------------------------------------------------------------
# the full pipeline


def _subdirect_restriction(R: Relation) -> tuple[Relation, DefinitionResult] | None:
    """Restrict each sort to the projection of R; None when R is already subdirect."""
    if is_subdirect(R):
        return None
    sorts, maps = [], []
    for i, s in enumerate(R.sorts):
        vals = sorted({t[i] for t in R.tuples})
        if len(vals) == s.size:
            sorts.append(s)
            maps.append(None)
        else:
            sub = Sort.subalgebra(s, vals)
            sorts.append(sub)
            maps.append({a: k for k, a in enumerate(vals)})
    Rsd = Relation(f"{R.name}_sd", sorts, [tuple(a if m is None else m[a] for a, m in zip(t, maps)) for t in R.tuples])
    basis = BasisRegistry([Rsd])
    xs = _xs(R.arity)
    args: list[str] = []
    bound: list[tuple[str, Sort]] = []
    atoms: list = []
    for x, s, q, m in zip(xs, R.sorts, sorts, maps):
        if m is None:
            args.append(x)
        else:
            y = f"y{len(bound) + 1}"
            bound.append((y, q))
            G = basis.add(Relation(f"E_{q.id}", (s, q), [(a, k) for a, k in m.items()]))
            atoms.append(RelAtom(G.name, (x, y)))
            args.append(y)
    atoms.append(RelAtom(Rsd.name, args))
    glue = PpFormula.build(R.name, list(zip(xs, R.sorts)), bound, atoms)
    return Rsd, _finish(glue, basis, R, "composite")


def _define_part(S: Relation, notes: list[str]) -> DefinitionResult:
    """Short definition of one decomposition part (critical with PP when arity > 3)."""
    if S.arity <= 3:
        return single_atom(S, "composite")
    # each stage is (glue defining `target` from relation `symbol`)
    stages: list[tuple[DefinitionResult, str, Relation]] = []
    cur = S
    restricted = _subdirect_restriction(cur)
    if restricted is not None:
        stages.append((restricted[1], restricted[0].name, cur))
        cur = restricted[0]
    try:
        red, glue = reduce_critical(cur)
        stages.append((glue, red.name, cur))
        result = chain_decompose(red)
    except (PreconditionFailed, RecursionInvariantBroken, NoParallelogramProperty) as exc:
        notes.append(f"part {S.name}: chain construction not applicable ({exc}); kept as one atom")
        return single_atom(S, "composite")
    for glue, symbol, target in reversed(stages):
        result = compose(glue, symbol, result, target, "composite")
    return result


def _prune_parts(R: Relation, parts: list[Part]) -> list[Part]:
    """Drop parts whose removal leaves the intersection equal to R."""
    keep = list(parts)
    i = len(keep) - 1
    while i >= 0 and len(keep) > 1:
        trial = keep[:i] + keep[i + 1:]
        if intersect_parts(R.sorts, trial) == R:
            keep = trial
        i -= 1
    return keep


def edge_parameter(R: Relation, algebra: Algebra | None = None, budget: int | None = None) -> int:
    """k from the basic operations, else from a k-edge polymorphism of R itself (k = 2, 3)."""
    alg = algebra or R.sorts[0].algebra
    k = edge_parameter_from_basic_operations(alg)
    if k is not None:
        return k
    if len(set(R.sorts)) == 1:
        for k in (2, 3):
            try:
                if find_term(BasisRegistry([R]), IdentityScheme.edge(k), budget=budget) is not None:
                    return k
            except BudgetExhausted:
                break
    raise NoEdgeTermFound(f"no edge term of arity <= 4 found for {R.name}")


def composite_definition(R: Relation, k: int | None = None, algebra: Algebra | None = None,
                         prune: bool = True) -> DefinitionResult:
    """Critical decomposition, then per part: subdirect restriction, reduction, chain."""
    if len(R) == 0:
        try:
            return empty_definition(R, "composite")
        except EmptyUnsupported:
            return single_atom(R, "composite")
    k = edge_parameter(R, algebra) if k is None else k
    parts = critical_decomposition(R, k)
    if prune and len(parts) > 1:
        parts = _prune_parts(R, parts)
    notes: list[str] = []
    xs = _xs(R.arity)
    pieces = []
    basis = BasisRegistry()
    for part in parts:
        if len(part.coords) == 0:
            continue
        res = _define_part(part.relation, notes)
        basis.update(res.basis)
        pieces.append((res.formula, [xs[i] for i in part.coords]))
    phi = conjunction(R.name, list(zip(xs, R.sorts)), pieces)
    return _finish(simplify_equalities(phi), basis, R, "composite", notes)


def _is_affine_over_prime(R: Relation) -> bool:
    s = R.sorts[0]
    if any(t != s for t in R.sorts) or not _is_prime(s.size) or len(R) == 0:
        return False
    p = s.size
    m = OperationTable.from_function("x-y+z", 3, p, lambda x, y, z: (x - y + z) % p)
    return bool(is_compatible(m, R))


def _nu_arity(algebra: Algebra) -> int | None:
    for op in algebra.operations:
        if op.arity >= 3 and satisfies_identity_scheme(op, IdentityScheme.nu(op.arity)):
            return op.arity
    return None


def short_pp_definition(R: Relation, algebra: Algebra | None = None, k: int | None = None,
                        method: str = "auto") -> DefinitionResult:
    """Verified pp-definition of an invariant relation R.

    ``auto`` picks, in order: a single atom for arity <= 3; Baker-Pixley when a
    basic operation is a near-unanimity operation; for an affine relation over a
    prime field, the shorter of Gaussian elimination and the chain construction
    (the latter only when its preconditions hold); the composite pipeline otherwise.
    """
    method = method.replace("-", "_")
    if method.startswith("affine"):
        _, _, p = method.partition(":")
        return affine_definition(R, int(p) if p else None)
    alg = algebra or R.sorts[0].algebra
    if method == "baker_pixley":
        if k is None:
            r = _nu_arity(alg)
            if r is None:
                raise NoEdgeTermFound("no near-unanimity basic operation; pass k explicitly")
            k = r - 1
        return baker_pixley(R, k)
    if method == "chain":
        return chain_decompose(R)
    if method == "composite":
        return composite_definition(R, k, alg)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if R.arity <= 3:
        return single_atom(R, "chain")
    single = len(set(R.sorts)) == 1 and R.sorts[0].kind == "base"
    if single:
        r = _nu_arity(alg)
        if r is not None:
            return baker_pixley(R, r - 1 if k is None else k)
        if _is_affine_over_prime(R) or (len(R) == 0 and _is_prime(R.sorts[0].size)):
            try:
                best = affine_definition(R)
            except EmptyUnsupported:
                return composite_definition(R, k, alg)
            if chain_preconditions(R):
                chained = chain_decompose(R)
                if chained.report.length < best.report.length:
                    best = chained
            return best
    return composite_definition(R, k, alg)


def certificate_definition(R: Relation, algebra: Algebra | None = None) -> DefinitionResult:
    """Definition used for separation certificates: the fixed linear basis when R is affine, else auto."""
    if len(set(R.sorts)) == 1 and R.sorts[0].kind == "base" and _is_affine_over_prime(R):
        return affine_definition(R)
    return short_pp_definition(R, algebra)
