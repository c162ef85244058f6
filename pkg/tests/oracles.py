"""Brute-force reference implementations, deliberately independent of the package internals."""

from __future__ import annotations

import itertools


def table_fn(op):
    """Operation as a dict from argument tuples to values (lexicographic table order)."""
    cells = itertools.product(range(op.domain_size), repeat=op.arity)
    return dict(zip(cells, (int(v) for v in op.table)))


def naive_closure(algebra, tuples):
    """Fixpoint of coordinate-wise application of every basic operation."""
    fns = [(op.arity, table_fn(op)) for op in algebra.operations]
    S = {tuple(t) for t in tuples}
    while True:
        new = set()
        rows = sorted(S)
        for arity, f in fns:
            for args in itertools.product(rows, repeat=arity):
                t = tuple(f[col] for col in zip(*args))
                if t not in S:
                    new.add(t)
        if not new:
            return S
        S |= new


def is_closed(algebra, S):
    return naive_closure(algebra, S) == set(S)


def all_subuniverses(algebra, n):
    """Every closed subset of A^n, by checking all 2^(|A|^n) subsets."""
    space = list(itertools.product(range(algebra.size), repeat=n))
    out = []
    for mask in range(1 << len(space)):
        S = {t for i, t in enumerate(space) if mask >> i & 1}
        if is_closed(algebra, S):
            out.append(frozenset(S))
    return out


def brute_evaluate(free_sorts, bound_sorts, free, bound, atoms, basis):
    """Solution set of a pp-formula by enumerating every assignment; atoms are (symbol|None, vars)."""
    names = list(free) + list(bound)
    sizes = [s.size for s in list(free_sorts) + list(bound_sorts)]
    sets = {sym: set(basis[sym].tuples) for sym, _ in atoms if sym is not None}
    out = set()
    for values in itertools.product(*(range(k) for k in sizes)):
        env = dict(zip(names, values))
        if all((env[vs[0]] == env[vs[1]]) if sym is None else tuple(env[v] for v in vs) in sets[sym]
               for sym, vs in atoms):
            out.add(values[: len(free)])
    return out


def formula_set(phi, basis):
    from ppclone.core import EqAtom

    atoms = [(None, (a.left, a.right)) if isinstance(a, EqAtom) else (a.symbol, tuple(a.args)) for a in phi.atoms]
    return brute_evaluate(phi.free_sorts, phi.bound_sorts, phi.free, phi.bound, atoms, basis)


def affine_span(p, n, gens):
    """Affine hull of ``gens`` in Z_p^n via linear combinations of differences."""
    gens = [tuple(g) for g in gens]
    if not gens:
        return set()
    g0 = gens[0]
    diffs = [tuple((a - b) % p for a, b in zip(g, g0)) for g in gens[1:]]
    out = set()
    for coeffs in itertools.product(range(p), repeat=len(diffs)):
        t = list(g0)
        for c, d in zip(coeffs, diffs):
            t = [(x + c * y) % p for x, y in zip(t, d)]
        out.add(tuple(t))
    return out


def random_formula(rng, basis, sort, max_vars=6, max_atoms=6, name="phi"):
    """A random pp-formula over single-sorted ``basis`` with at most ``max_vars`` variables."""
    from ppclone.core import EqAtom, PpFormula, RelAtom

    total = int(rng.integers(1, max_vars + 1))
    n_free = int(rng.integers(1, total + 1))
    free = tuple(f"x{i + 1}" for i in range(n_free))
    bound = tuple(f"y{i + 1}" for i in range(total - n_free))
    names = free + bound
    symbols = sorted(basis.keys())
    atoms = []
    for _ in range(int(rng.integers(0, max_atoms + 1))):
        if rng.random() < 0.15:
            atoms.append(EqAtom(*(names[int(i)] for i in rng.integers(0, total, 2))))
        else:
            sym = symbols[int(rng.integers(len(symbols)))]
            atoms.append(RelAtom(sym, (names[int(i)] for i in rng.integers(0, total, basis[sym].arity))))
    return PpFormula(name, free, (sort,) * n_free, bound, (sort,) * len(bound), tuple(atoms))


def join_evaluate(phi, basis):
    """Solution set by joining atoms one at a time, projecting bound variables once no later atom needs them."""
    from ppclone.core import EqAtom

    atoms = [((a.left, a.right), None) if isinstance(a, EqAtom) else (tuple(a.args), set(basis[a.symbol].tuples))
             for a in phi.atoms]
    bound = set(phi.bound)
    cols: list[str] = []
    rows: set[tuple] = {()}
    for k, (vs, rel) in enumerate(atoms):
        if rel is None:
            rel = {(a, a) for a in range(phi.sort_of(vs[0]).size)}
        new_cols = cols + [v for v in dict.fromkeys(vs) if v not in cols]
        out = set()
        for r in rows:
            env = dict(zip(cols, r))
            for t in rel:
                e = dict(env)
                if all(e.setdefault(v, x) == x for v, x in zip(vs, t)):
                    out.add(tuple(e[c] for c in new_cols))
        later = {v for w, _ in atoms[k + 1:] for v in w}
        keep = [c for c in new_cols if c not in bound or c in later]
        idx = [new_cols.index(c) for c in keep]
        cols, rows = keep, {tuple(r[i] for i in idx) for r in out}
    for v in phi.free:  # unconstrained free variables range over their sort
        if v not in cols:
            rows = {r + (a,) for r in rows for a in range(phi.sort_of(v).size)}
            cols = cols + [v]
    idx = [cols.index(v) for v in phi.free]
    return {tuple(r[i] for i in idx) for r in rows}


def fast_closure(algebra, n, gens):
    """Semi-naive fixpoint over integer-coded tuples, vectorised with numpy (single ternary operation)."""
    import numpy as np

    (op,) = algebra.operations
    assert op.arity == 3
    s = algebra.size
    table = np.asarray(op.table, dtype=np.int64).reshape(s, s, s)
    rows = np.unique(np.asarray(gens, dtype=np.int64).reshape(-1, n), axis=0)
    seen = {tuple(r) for r in rows.tolist()}
    frontier = rows
    while frontier.size:
        allr = np.asarray(sorted(seen), dtype=np.int64).reshape(-1, n)
        found = []
        # every triple with at least one frontier row, the frontier in each position
        for pos in range(3):
            A = [allr, allr, allr]
            A[pos] = frontier
            i, j, k = np.meshgrid(np.arange(len(A[0])), np.arange(len(A[1])), np.arange(len(A[2])), indexing="ij")
            img = table[A[0][i.ravel()], A[1][j.ravel()], A[2][k.ravel()]]
            found.append(np.unique(img, axis=0))
        new = {tuple(r) for r in np.unique(np.concatenate(found), axis=0).tolist()} - seen
        seen |= new
        frontier = np.asarray(sorted(new), dtype=np.int64).reshape(-1, n)
    return seen
