"""Compatibility of operations with relations, identity schemes and term search."""

from __future__ import annotations

import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .closure import CHUNK
from .core import Algebra, OperationTable, Relation, Verdict, _Csp
from .errors import ArityMismatch, BudgetExhausted, SortMismatch

DEFAULT_BUDGET = 10**8


def default_budget() -> int:
    raw = os.environ.get("PPCLONE_BUDGET")
    return int(float(raw)) if raw else DEFAULT_BUDGET


@dataclass(frozen=True)
class IdentityScheme:
    """A list of two-variable identities ``f(pattern) = result``.

    Patterns are strings over ``x``/``y``; ``result`` is ``"x"`` or ``"y"``.
    """

    kind: str
    arity: int
    rows: tuple[tuple[str, str], ...]
    param: int = 0

    @classmethod
    def edge(cls, k: int) -> "IdentityScheme":
        if k < 2:
            raise ValueError("edge terms need k >= 2")
        n = k + 1
        rows = [("yy" + "x" * (n - 2), "x"), ("yxy" + "x" * (n - 3), "x")]
        for i in range(3, n):
            rows.append(("x" * i + "y" + "x" * (n - i - 1), "x"))
        return cls("edge", n, tuple(rows), k)

    @classmethod
    def maltsev(cls) -> "IdentityScheme":
        return cls("maltsev", 3, (("xxy", "y"), ("yxx", "y")))

    @classmethod
    def nu(cls, arity: int) -> "IdentityScheme":
        if arity < 3:
            raise ValueError("near-unanimity operations have arity >= 3")
        rows = tuple(("x" * i + "y" + "x" * (arity - i - 1), "x") for i in range(arity))
        return cls("nu", arity, rows, arity)

    @classmethod
    def majority(cls) -> "IdentityScheme":
        s = cls.nu(3)
        return cls("majority", 3, s.rows, 3)

    @classmethod
    def parse(cls, text: str) -> "IdentityScheme":
        kind, _, arg = text.partition(":")
        kind = kind.strip().lower()
        if kind == "edge":
            return cls.edge(int(arg))
        if kind == "maltsev":
            return cls.maltsev()
        if kind == "nu":
            return cls.nu(int(arg))
        if kind == "majority":
            return cls.majority()
        raise ValueError(f"unknown identity scheme {text!r}")

    @property
    def edge_parameter(self) -> int:
        """The k for which operations of this scheme yield a k-edge term."""
        if self.kind == "edge":
            return self.param
        if self.kind == "maltsev":
            return 2
        return self.arity - 1

    def __str__(self) -> str:
        if self.kind in ("edge", "nu"):
            return f"{self.kind}:{self.param}"
        return self.kind

    def cells(self, size: int) -> dict[tuple[int, ...], int]:
        """Argument tuples forced by the identities, with forced values.

        Raises ValueError if two identities force different values on one cell.
        """
        forced: dict[tuple[int, ...], int] = {}
        for pattern, result in self.rows:
            for x in range(size):
                for y in range(size):
                    env = {"x": x, "y": y}
                    cell = tuple(env[c] for c in pattern)
                    val = env[result]
                    if forced.setdefault(cell, val) != val:
                        raise ValueError(f"identities clash at {cell}")
        return forced


def _single_sort_size(R: Relation) -> int:
    sizes = {s for s in R.sorts}
    if len(sizes) != 1:
        raise SortMismatch(f"relation {R.name} is not single-sorted")
    return R.sorts[0].size


def is_compatible(op: OperationTable, R: Relation) -> Verdict:
    """Coordinate-wise images of all ``arity``-tuples of rows stay in ``R``.

    On failure the witness is ``(rows, image)`` for the lexicographically first
    offending selection of rows.
    """
    if _single_sort_size(R) != op.domain_size:
        raise SortMismatch(f"{op.name} acts on {op.domain_size} elements, {R.name} on {R.sorts[0].size}")
    rows = np.asarray(R.tuples, dtype=np.int64).reshape(-1, R.arity)
    m = rows.shape[0]
    s = op.domain_size
    weights = s ** np.arange(R.arity - 1, -1, -1, dtype=np.int64)
    codes = rows @ weights  # sorted, since tuples are in lexicographic order
    if op.arity == 0:
        image = np.full(R.arity, op.table[0], dtype=np.int64)
        ok = m > 0 and int(image @ weights) in set(codes.tolist())
        return Verdict(True) if ok else Verdict(False, ((), tuple(int(a) for a in image)))
    if m == 0:
        return Verdict(True)
    count = m**op.arity
    for start in range(0, count, CHUNK):
        flat = np.arange(start, min(count, start + CHUNK), dtype=np.int64)
        sel = np.unravel_index(flat, (m,) * op.arity)
        cell = np.zeros((flat.size, R.arity), dtype=np.int64)
        for q in range(op.arity):
            cell = cell * s + rows[sel[q]]
        image = op.table[cell]
        ic = image @ weights
        pos = np.minimum(np.searchsorted(codes, ic), m - 1)
        bad = np.nonzero(codes[pos] != ic)[0]
        if bad.size:
            b = int(bad[0])
            chosen = tuple(R.tuples[int(sel[q][b])] for q in range(op.arity))
            return Verdict(False, (chosen, tuple(int(a) for a in image[b])))
    return Verdict(True)


def is_polymorphism(op: OperationTable, gamma: Mapping[str, Relation]) -> Verdict:
    for name, R in gamma.items():
        v = is_compatible(op, R)
        if not v:
            return Verdict(False, (name, v.witness), f"not compatible with {name}")
    return Verdict(True)


def satisfies_identity_scheme(op: OperationTable, scheme: IdentityScheme) -> Verdict:
    """Check every identity under every evaluation; witness ``(pattern, x, y, value, expected)``."""
    if op.arity != scheme.arity:
        raise ArityMismatch(f"{op.name} has arity {op.arity}, scheme {scheme} needs {scheme.arity}")
    for pattern, result in scheme.rows:
        for x in range(op.domain_size):
            for y in range(op.domain_size):
                env = {"x": x, "y": y}
                val = op(*(env[c] for c in pattern))
                if val != env[result]:
                    return Verdict(False, (pattern, x, y, val, env[result]),
                                   f"{op.name}({','.join(pattern)}) = {val} != {env[result]} at x={x}, y={y}")
    return Verdict(True)


def basic_operation_with_scheme(algebra: Algebra, scheme: IdentityScheme) -> OperationTable | None:
    for op in algebra.operations:
        if op.arity == scheme.arity and satisfies_identity_scheme(op, scheme):
            return op
    return None


def edge_parameter_from_basic_operations(algebra: Algebra) -> int | None:
    """Smallest k such that some basic operation is Mal'tsev, NU or k-edge."""
    best = None
    for op in algebra.operations:
        cands = []
        if op.arity == 3:
            cands += [IdentityScheme.maltsev(), IdentityScheme.edge(2)]
        if op.arity >= 3:
            cands.append(IdentityScheme.nu(op.arity))
            cands.append(IdentityScheme.edge(op.arity - 1))
        for sch in cands:
            if satisfies_identity_scheme(op, sch):
                k = sch.edge_parameter
                best = k if best is None else min(best, k)
    return best


def _compatibility_constraints(R: Relation, arity: int, size: int) -> list[tuple[tuple[int, ...], set[tuple[int, ...]]]]:
    rows = np.asarray(R.tuples, dtype=np.int64).reshape(-1, R.arity)
    m = rows.shape[0]
    allowed_full = set(R.tuples)
    out: dict[tuple[int, ...], None] = {}
    if m == 0:
        return []
    count = m**arity
    for start in range(0, count, CHUNK):
        flat = np.arange(start, min(count, start + CHUNK), dtype=np.int64)
        sel = np.unravel_index(flat, (m,) * arity)
        cell = np.zeros((flat.size, R.arity), dtype=np.int64)
        for q in range(arity):
            cell = cell * size + rows[sel[q]]
        for row in np.unique(cell, axis=0).tolist():
            out.setdefault(tuple(row))
    cons = []
    for cells in out:
        scope = tuple(dict.fromkeys(cells))
        first = [cells.index(c) for c in scope]
        allowed = {tuple(t[f] for f in first) for t in allowed_full
                   if all(t[j] == t[first[scope.index(c)]] for j, c in enumerate(cells))}
        cons.append((scope, allowed))
    return cons


def find_term(gamma: Mapping[str, Relation], scheme: IdentityScheme, budget: int | None = None,
              domain_size: int | None = None, name: str | None = None) -> OperationTable | None:
    """Lexicographically least operation satisfying ``scheme`` and preserving ``gamma``.

    Identity-forced cells are fixed first; remaining cells are filled in
    lexicographic order, values ascending, with forward checking.  Returns
    None when the search space is exhausted and BudgetExhausted when the node
    budget runs out first.
    """
    sizes = {R.sorts[0].size for R in gamma.values()} | ({domain_size} if domain_size else set())
    for R in gamma.values():
        _single_sort_size(R)
    if len(sizes) != 1:
        raise SortMismatch("term search needs a single-sorted language")
    size = sizes.pop()
    budget = default_budget() if budget is None else int(budget)
    r = scheme.arity
    n_cells = size**r
    try:
        forced = scheme.cells(size)
    except ValueError:
        return None
    weights = [size ** (r - 1 - q) for q in range(r)]
    constraints = []
    for R in gamma.values():
        constraints += _compatibility_constraints(R, r, size)
    csp = _Csp([size] * n_cells, constraints)
    doms = [set(range(size)) for _ in range(n_cells)]
    for cell, val in forced.items():
        doms[sum(a * w for a, w in zip(cell, weights))] = {val}
    doms = csp.initial_domains(doms)
    if doms is None:
        return None
    order = list(range(n_cells))
    nodes = 0

    def search(i: int, d: list[set[int]]) -> list[set[int]] | None:
        nonlocal nodes
        if i == n_cells:
            return d
        v = order[i]
        for a in sorted(d[v]):
            nodes += 1
            if nodes > budget:
                raise BudgetExhausted(f"term search exceeded {budget} nodes")
            nd = csp.assign(d, v, a)
            if nd is not None:
                out = search(i + 1, nd)
                if out is not None:
                    return out
        return None

    # assigning forced singletons first re-propagates them through every constraint
    for cell in sorted(forced):
        idx = sum(a * w for a, w in zip(cell, weights))
        doms = csp.assign(doms, idx, next(iter(doms[idx])))
        if doms is None:
            return None
    sol = search(0, doms)
    if sol is None:
        return None
    return OperationTable(name or str(scheme).replace(":", ""), r, size, [next(iter(s)) for s in sol])
