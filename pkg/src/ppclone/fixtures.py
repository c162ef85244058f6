"""Small algebras and constraint languages used in examples and tests."""

from __future__ import annotations

import itertools

from .core import Algebra, BasisRegistry, OperationTable, Relation, Sort


def affine_algebra(n: int, name: str | None = None) -> Algebra:
    """``Z_n`` with the Mal'tsev operation ``x - y + z mod n``.

    For ``n = 2`` this is ``x + y + z mod 2``.
    """
    m = OperationTable.from_function("m", 3, n, lambda x, y, z: (x - y + z) % n)
    return Algebra(name or f"Z{n}", n, [m])


def boolean_majority() -> Algebra:
    maj = OperationTable.from_function("maj", 3, 2, lambda x, y, z: int(x + y + z >= 2))
    return Algebra("Maj2", 2, [maj])


def median_chain(n: int = 3) -> Algebra:
    med = OperationTable.from_function("med", 3, n, lambda x, y, z: sorted((x, y, z))[1])
    return Algebra(f"Med{n}", n, [med])


def dual_discriminator(n: int = 3) -> Algebra:
    """``d(x,y,z) = x`` if ``x = y`` else ``z``: a majority operation on any set."""
    d = OperationTable.from_function("d", 3, n, lambda x, y, z: x if x == y else z)
    return Algebra(f"DD{n}", n, [d])


def trivial_algebra() -> Algebra:
    return Algebra("One", 1, [OperationTable("f", 3, 1, [0])])


def lin_name(p: int) -> str:
    return "R_Lin" if p == 2 else f"R_Lin_{p}"


def r_lin(sort: Sort, p: int | None = None) -> Relation:
    """``{(a, b, c) : a + b = c mod p}``."""
    p = sort.size if p is None else p
    return Relation(lin_name(p), (sort,) * 3, [(a, b, (a + b) % p) for a in range(p) for b in range(p)])


def constant(sort: Sort, a: int) -> Relation:
    return Relation(f"C_{a}", (sort,), [(a,)])


def linear_basis(sort: Sort) -> BasisRegistry:
    """``{R_Lin, C_0, ..., C_{p-1}}`` over a ``Z_p`` sort."""
    return BasisRegistry([r_lin(sort)] + [constant(sort, a) for a in range(sort.size)])


def two_sat_language(sort: Sort) -> BasisRegistry:
    """Clause relations ``R_ij = {0,1}^2 minus (i, j)``."""
    rels = []
    for i, j in itertools.product(range(2), repeat=2):
        rels.append(Relation(f"R_{i}{j}", (sort, sort), [t for t in itertools.product(range(2), repeat=2) if t != (i, j)]))
    return BasisRegistry(rels)


def parity_relation(sort: Sort, n: int, b: int = 0, name: str = "Parity") -> Relation:
    """Solutions of ``x1 + ... + xn = b`` modulo the sort size."""
    p = sort.size
    return Relation(name, (sort,) * n, [t for t in itertools.product(range(p), repeat=n) if sum(t) % p == b])
