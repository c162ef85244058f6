"""Congruences of finite algebras: generation, lattices, quotients."""

from __future__ import annotations

import itertools
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .core import Algebra, Relation, Sort, Verdict
from .errors import DomainTooLarge, ElementOutOfRange, NotACongruence, NotInLattice

MAX_LATTICE_SIZE = 12


@dataclass(frozen=True)
class Partition:
    """An equivalence on ``0..size-1`` given by least-member representatives."""

    reps: tuple[int, ...]

    def __post_init__(self) -> None:
        reps = tuple(int(r) for r in self.reps)
        object.__setattr__(self, "reps", reps)
        for a, r in enumerate(reps):
            if not 0 <= r <= a or reps[r] != r:
                raise ValueError(f"invalid representative {r} for element {a}")

    @classmethod
    def identity(cls, size: int) -> "Partition":
        return cls(tuple(range(size)))

    @classmethod
    def full(cls, size: int) -> "Partition":
        return cls((0,) * size)

    @classmethod
    def from_blocks(cls, size: int, blocks: Iterable[Iterable[int]]) -> "Partition":
        reps = list(range(size))
        for block in blocks:
            block = sorted(block)
            for a in block:
                reps[a] = block[0]
        return cls(tuple(reps))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        first: dict[int, int] = {}
        return cls(tuple(first.setdefault(lab, a) for a, lab in enumerate(labels)))

    @property
    def size(self) -> int:
        return len(self.reps)

    def blocks(self) -> list[tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for a, r in enumerate(self.reps):
            out.setdefault(r, []).append(a)
        return [tuple(b) for _, b in sorted(out.items())]

    def block_index(self) -> tuple[int, ...]:
        """Element -> index of its block, blocks ordered by least member."""
        order = {r: i for i, r in enumerate(sorted(set(self.reps)))}
        return tuple(order[r] for r in self.reps)

    @property
    def n_blocks(self) -> int:
        return len(set(self.reps))

    def related(self, a: int, b: int) -> bool:
        return self.reps[a] == self.reps[b]

    def is_identity(self) -> bool:
        return all(r == a for a, r in enumerate(self.reps))

    def is_full(self) -> bool:
        return all(r == 0 for r in self.reps)

    def __le__(self, other: "Partition") -> bool:
        return all(other.reps[a] == other.reps[r] for a, r in enumerate(self.reps))

    def __lt__(self, other: "Partition") -> bool:
        return self <= other and self != other

    def meet(self, other: "Partition") -> "Partition":
        return Partition.from_labels(list(zip(self.reps, other.reps)))

    def join(self, other: "Partition") -> "Partition":
        ds = DisjointSet(range(self.size))
        for a in range(self.size):
            ds.merge(a, self.reps[a])
            ds.merge(a, other.reps[a])
        return _from_disjoint_set(ds, self.size)

    def __str__(self) -> str:
        return "|".join(" ".join(str(a) for a in b) for b in self.blocks())


def _from_disjoint_set(ds: DisjointSet, size: int) -> Partition:
    least: dict[int, int] = {}
    for a in range(size):
        least.setdefault(ds[a], a)
    return Partition(tuple(least[ds[a]] for a in range(size)))


def _algebra_of(a: Algebra | Sort) -> Algebra:
    return a.algebra if isinstance(a, Sort) else a


def _translations(algebra: Algebra):
    """Basic translations as (op, position, other-args grid) triples, lazily."""
    for op in algebra.operations:
        if op.arity == 0:
            continue
        tab = op.table.reshape((algebra.size,) * op.arity)
        for p in range(op.arity):
            # move argument p last: rows indexed by the other arguments
            moved = np.moveaxis(tab, p, -1).reshape(-1, algebra.size)
            yield moved


def congruence_generated(algebra: Algebra, pairs: Iterable[tuple[int, int]]) -> Partition:
    """Least congruence containing ``pairs`` (union-find closed under unary polynomials)."""
    n = algebra.size
    ds = DisjointSet(range(n))
    queue: deque[tuple[int, int]] = deque()
    for a, b in pairs:
        if not (0 <= a < n and 0 <= b < n):
            raise ElementOutOfRange(f"pair ({a}, {b}) outside a {n}-element algebra")
        if ds.merge(a, b):
            queue.append((a, b))
    rows = list(_translations(algebra))
    while queue:
        a, b = queue.popleft()
        for moved in rows:
            for fa, fb in zip(moved[:, a].tolist(), moved[:, b].tolist()):
                if ds.merge(fa, fb):
                    queue.append((fa, fb))
    return _from_disjoint_set(ds, n)


def is_congruence(algebra: Algebra, theta: Partition) -> bool:
    if theta.size != algebra.size:
        return False
    reps = np.asarray(theta.reps)
    for moved in _translations(algebra):
        if not np.array_equal(reps[moved], reps[moved[:, reps]]):
            return False
    return True


@dataclass
class CongruenceLattice:
    algebra: Algebra
    elements: list[Partition]
    covers: list[tuple[int, int]]  # (i, j): elements[i] is covered by elements[j]

    def index(self, theta: Partition) -> int:
        try:
            return self.elements.index(theta)
        except ValueError:
            raise NotInLattice(f"{theta} is not a congruence in this lattice") from None

    @property
    def bottom(self) -> Partition:
        return Partition.identity(self.algebra.size)

    @property
    def top(self) -> Partition:
        return Partition.full(self.algebra.size)

    def upper_covers(self, theta: Partition) -> list[Partition]:
        i = self.index(theta)
        return [self.elements[j] for a, j in self.covers if a == i]

    def __len__(self) -> int:
        return len(self.elements)


def all_congruences(algebra: Algebra | Sort) -> CongruenceLattice:
    algebra = _algebra_of(algebra)
    n = algebra.size
    if n > MAX_LATTICE_SIZE:
        raise DomainTooLarge(f"congruence lattice enumeration is limited to {MAX_LATTICE_SIZE} elements")
    principal = {congruence_generated(algebra, [(a, b)]) for a, b in itertools.combinations(range(n), 2)}
    found = {Partition.identity(n)} | principal
    frontier = list(found)
    while frontier:
        nxt = []
        for x in frontier:
            for p in principal:
                j = congruence_generated(algebra, [(a, r) for a, r in enumerate(x.reps)] + [(a, r) for a, r in enumerate(p.reps)])
                if j not in found:
                    found.add(j)
                    nxt.append(j)
        frontier = nxt
    elements = sorted(found, key=lambda t: (-t.n_blocks, t.reps))
    covers = []
    for i, x in enumerate(elements):
        above = [j for j, y in enumerate(elements) if x < y]
        for j in above:
            if not any(elements[k] < elements[j] for k in above if k != j):
                covers.append((i, j))
    return CongruenceLattice(algebra, elements, covers)


def is_subdirectly_irreducible(algebra: Algebra | Sort) -> Verdict:
    """True iff the identity congruence has exactly one upper cover; the witness is the monolith."""
    alg = _algebra_of(algebra)
    if alg.size == 1:
        return Verdict(False, None, "trivial algebra")
    lat = all_congruences(alg)
    atoms = lat.upper_covers(lat.bottom)
    if len(atoms) == 1:
        return Verdict(True, atoms[0])
    return Verdict(False, tuple(atoms), f"{len(atoms)} atoms in the congruence lattice")


def meet_irreducible_cover(theta: Partition, lattice: CongruenceLattice) -> Partition | None:
    ups = lattice.upper_covers(theta)
    return ups[0] if len(ups) == 1 else None


def quotient(algebra: Algebra | Sort, theta: Partition) -> tuple[Algebra, Relation]:
    """The quotient algebra and the graph ``{(a, a/theta)}`` of the quotient map."""
    parent = algebra if isinstance(algebra, Sort) else Sort.base(algebra)
    if theta.size != parent.size or not is_congruence(parent.algebra, theta):
        raise NotACongruence(f"{theta} is not a congruence")
    qsort = Sort.quotient(parent, theta)
    block = qsort.block_of
    graph = Relation(f"G_{qsort.id}", (parent, qsort), [(a, block[a]) for a in range(parent.size)])
    return qsort.algebra, graph
