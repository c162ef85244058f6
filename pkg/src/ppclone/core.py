"""Finite algebras, multi-sorted relations and primitive positive formulas.

Elements of every domain are the integers ``0 .. size-1``.  Sorts remember how
they were built (base algebra, subalgebra, quotient, product or power), which
fixes a canonical dense encoding for derived elements:

* subalgebra element ``i`` is the ``i``-th smallest member of the subset,
* quotient element ``i`` is the ``i``-th block ordered by least member,
* product/power element ``i`` is the lexicographic index of its tuple
  (first coordinate most significant).

Coordinates are 0-based throughout the Python API; formula variables are
conventionally named ``x1 .. xn`` and ``y1 .. yk``.
"""

from __future__ import annotations

import hashlib
import itertools
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Union

import numpy as np

from .errors import (
    ArityMismatch,
    DomainTooLarge,
    ElementOutOfRange,
    MissingTranslation,
    NotACongruence,
    NotInvariant,
    SortMismatch,
    UnknownSymbol,
)

# Largest operation table we are willing to materialise for a derived sort.
MAX_TABLE_ENTRIES = 20_000_000


@dataclass(frozen=True)
class Verdict:
    """A yes/no answer with an optional witness; truthy iff ``holds``."""

    holds: bool
    witness: Any = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.holds


# ---------------------------------------------------------------------------
# operations and algebras


class OperationTable:
    """An ``arity``-ary operation on ``{0..domain_size-1}`` stored as a flat table.

    Entry ``i`` of ``table`` is the value at the ``i``-th argument tuple in
    lexicographic order.
    """

    __slots__ = ("name", "arity", "domain_size", "table", "_digest")

    def __init__(self, name: str, arity: int, domain_size: int, table: Iterable[int]):
        if arity < 0:
            raise ArityMismatch(f"operation {name!r}: negative arity")
        if domain_size < 1:
            raise ElementOutOfRange(f"operation {name!r}: domain size must be positive")
        arr = np.asarray(list(table) if not isinstance(table, np.ndarray) else table, dtype=np.int64).reshape(-1)
        if arr.size != domain_size**arity:
            raise ArityMismatch(
                f"operation {name!r}: expected {domain_size ** arity} table entries, got {arr.size}"
            )
        if arr.size and (arr.min() < 0 or arr.max() >= domain_size):
            raise ElementOutOfRange(f"operation {name!r}: table entry outside 0..{domain_size - 1}")
        arr.setflags(write=False)
        self.name = name
        self.arity = arity
        self.domain_size = domain_size
        self.table = arr
        self._digest = hashlib.sha1(arr.tobytes()).hexdigest()

    @classmethod
    def from_function(cls, name: str, arity: int, domain_size: int, fn) -> "OperationTable":
        rows = itertools.product(range(domain_size), repeat=arity)
        return cls(name, arity, domain_size, [fn(*args) for args in rows])

    def index(self, args: Sequence[int]) -> int:
        idx = 0
        for a in args:
            idx = idx * self.domain_size + a
        return idx

    def __call__(self, *args: int) -> int:
        return eval_operation(self, args)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, OperationTable)
            and (self.name, self.arity, self.domain_size, self._digest)
            == (other.name, other.arity, other.domain_size, other._digest)
        )

    def __hash__(self) -> int:
        return hash((self.name, self.arity, self.domain_size, self._digest))

    def __repr__(self) -> str:
        return f"OperationTable({self.name!r}, arity={self.arity}, domain_size={self.domain_size})"


def eval_operation(op: OperationTable, args: Sequence[int]) -> int:
    if len(args) != op.arity:
        raise ArityMismatch(f"{op.name} expects {op.arity} arguments, got {len(args)}")
    for a in args:
        if not 0 <= a < op.domain_size:
            raise ElementOutOfRange(f"{a} is not an element of a {op.domain_size}-element domain")
    return int(op.table[op.index(args)])


class Algebra:
    """A finite algebra: a domain size plus named operation tables."""

    def __init__(self, name: str, size: int, operations: Sequence[OperationTable]):
        if size < 1:
            raise ElementOutOfRange("algebra domain must be nonempty")
        names = [op.name for op in operations]
        if len(set(names)) != len(names):
            raise ValueError(f"algebra {name!r}: duplicate operation names")
        for op in operations:
            if op.domain_size != size:
                raise ArityMismatch(f"operation {op.name!r} lives on {op.domain_size} elements, not {size}")
        self.name = name
        self.size = size
        self.operations = tuple(operations)

    @property
    def domain(self) -> range:
        return range(self.size)

    @property
    def signature(self) -> tuple[tuple[str, int], ...]:
        return tuple((op.name, op.arity) for op in self.operations)

    def operation(self, name: str) -> OperationTable:
        for op in self.operations:
            if op.name == name:
                return op
        raise KeyError(name)

    @cached_property
    def digest(self) -> str:
        h = hashlib.sha1(f"{self.size}".encode())
        for op in self.operations:
            h.update(f"|{op.name}:{op.arity}:{op._digest}".encode())
        return h.hexdigest()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Algebra) and (self.name, self.digest) == (other.name, other.digest)

    def __hash__(self) -> int:
        return hash((self.name, self.digest))

    def __repr__(self) -> str:
        ops = ", ".join(f"{n}/{a}" for n, a in self.signature)
        return f"Algebra({self.name!r}, size={self.size}, ops=[{ops}])"


# ---------------------------------------------------------------------------
# sorts


def _tabulate(name: str, factors: Sequence["Sort"], tuples: Sequence[Sequence[int]]) -> Algebra:
    """Algebra on ``tuples`` (a lex-sorted subset of the product of ``factors``)."""
    algebras = [f.algebra for f in factors]
    signature = algebras[0].signature
    for alg in algebras[1:]:
        if alg.signature != signature:
            raise SortMismatch("factor algebras have different signatures")
    m = len(tuples)
    sizes = np.array([f.size for f in factors], dtype=np.int64)
    weights = np.ones(len(factors), dtype=np.int64)
    for j in range(len(factors) - 2, -1, -1):
        weights[j] = weights[j + 1] * sizes[j + 1]
    digits = np.asarray(tuples, dtype=np.int64).reshape(m, len(factors))
    codes = digits @ weights
    if m > 1 and np.any(np.diff(codes) <= 0):
        raise ValueError("element tuples must be strictly increasing")
    ops = []
    for k, (op_name, arity) in enumerate(signature):
        if m**arity > MAX_TABLE_ENTRIES:
            raise DomainTooLarge(f"table for {op_name!r} on {m} elements is too large")
        if arity == 0:
            res = np.array([[alg.operations[k].table[0] for alg in algebras]], dtype=np.int64)
        else:
            grid = np.indices((m,) * arity).reshape(arity, -1)
            res = np.empty((grid.shape[1], len(factors)), dtype=np.int64)
            for j, alg in enumerate(algebras):
                s = int(sizes[j])
                flat = np.zeros(grid.shape[1], dtype=np.int64)
                for q in range(arity):
                    flat = flat * s + digits[grid[q], j]
                res[:, j] = alg.operations[k].table[flat]
        out = res @ weights
        pos = np.searchsorted(codes, out)
        pos_c = np.minimum(pos, m - 1)
        bad = codes[pos_c] != out
        if np.any(bad):
            raise NotInvariant(f"{name}: element set is not closed under {op_name!r}")
        ops.append(OperationTable(op_name, arity, m, pos_c))
    return Algebra(name, m, ops)


class Sort:
    """A domain for relation coordinates, with provenance.

    Build instances through :meth:`base`, :meth:`subalgebra`, :meth:`quotient`,
    :meth:`product` and :meth:`power`.
    """

    KINDS = ("base", "sub", "quot", "prod", "pow")

    def __init__(self, kind: str, *, algebra: Algebra | None = None, parents: Sequence["Sort"] = (),
                 data: Any = None, id: str | None = None):
        if kind not in self.KINDS:
            raise ValueError(f"unknown sort kind {kind!r}")
        self.kind = kind
        self.parents = tuple(parents)
        self.data = data
        if kind == "base":
            self.__dict__["algebra"] = algebra
        if kind == "base":
            key = ("base", algebra.name, algebra.digest)
        elif kind in ("sub", "quot", "pow"):
            key = (kind, self.parents[0].key, data)
        else:
            key = ("prod", tuple(p.key for p in self.parents))
        self.key = key
        self._hash = hash(key)
        if id is None:
            id = algebra.name if kind == "base" else f"{kind}_{hashlib.sha1(repr(key).encode()).hexdigest()[:8]}"
        self.id = id

    # constructors -------------------------------------------------------
    @classmethod
    def base(cls, algebra: Algebra, id: str | None = None) -> "Sort":
        return cls("base", algebra=algebra, id=id)

    @classmethod
    def subalgebra(cls, parent: "Sort", subset: Iterable[int], id: str | None = None, check: bool = True) -> "Sort":
        elems = tuple(sorted(set(int(a) for a in subset)))
        if not elems:
            raise ValueError("a subalgebra sort needs a nonempty subset")
        if elems[0] < 0 or elems[-1] >= parent.size:
            raise ElementOutOfRange(f"subset leaves the {parent.size}-element parent sort")
        sort = cls("sub", parents=(parent,), data=elems, id=id)
        if check:
            sort.algebra  # noqa: B018 -- raises NotInvariant if not closed
        return sort

    @classmethod
    def quotient(cls, parent: "Sort", partition: Any, id: str | None = None, check: bool = True) -> "Sort":
        reps = tuple(int(r) for r in getattr(partition, "reps", partition))
        if len(reps) != parent.size:
            raise ValueError("partition size does not match the parent sort")
        sort = cls("quot", parents=(parent,), data=reps, id=id)
        if check:
            sort.algebra  # noqa: B018 -- raises NotACongruence if not compatible
        return sort

    @classmethod
    def product(cls, parents: Sequence["Sort"], id: str | None = None) -> "Sort":
        if not parents:
            raise ValueError("empty product")
        return cls("prod", parents=parents, id=id)

    @classmethod
    def power(cls, parent: "Sort", k: int, id: str | None = None) -> "Sort":
        if k < 1:
            raise ValueError("power exponent must be positive")
        return cls("pow", parents=(parent,), data=int(k), id=id)

    # structure ------------------------------------------------------------
    @cached_property
    def size(self) -> int:
        if self.kind == "base":
            return self.algebra.size
        if self.kind == "sub":
            return len(self.data)
        if self.kind == "quot":
            return len(set(self.data))
        if self.kind == "pow":
            return self.parents[0].size ** self.data
        out = 1
        for p in self.parents:
            out *= p.size
        return out

    @property
    def factors(self) -> tuple["Sort", ...]:
        """Coordinate sorts of a product or power sort."""
        if self.kind == "prod":
            return self.parents
        if self.kind == "pow":
            return (self.parents[0],) * self.data
        raise SortMismatch(f"sort {self.id} is not a product")

    def decode(self, element: int) -> tuple[int, ...]:
        out = []
        for f in reversed(self.factors):
            element, r = divmod(element, f.size)
            out.append(r)
        return tuple(reversed(out))

    def encode(self, parts: Sequence[int]) -> int:
        idx = 0
        for f, a in zip(self.factors, parts):
            idx = idx * f.size + a
        return idx

    @cached_property
    def block_of(self) -> tuple[int, ...]:
        """For quotient sorts: parent element -> block index."""
        reps = sorted(set(self.data))
        index = {r: i for i, r in enumerate(reps)}
        return tuple(index[r] for r in self.data)

    @cached_property
    def block_reps(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.data)))

    @cached_property
    def algebra(self) -> Algebra:
        if self.kind in ("prod", "pow"):
            tuples = list(itertools.product(*(range(f.size) for f in self.factors)))
            return _tabulate(self.id, self.factors, tuples)
        parent = self.parents[0]
        if self.kind == "sub":
            if parent.kind in ("prod", "pow"):
                return _tabulate(self.id, parent.factors, [parent.decode(e) for e in self.data])
            return _tabulate(self.id, [parent], [(e,) for e in self.data])
        # quotient
        palg = parent.algebra
        block = np.asarray(self.block_of, dtype=np.int64)
        rep_of = np.asarray(self.data, dtype=np.int64)
        reps = np.asarray(self.block_reps, dtype=np.int64)
        s = parent.size
        ops = []
        for op in palg.operations:
            if op.arity == 0:
                ops.append(OperationTable(op.name, 0, len(reps), [block[op.table[0]]]))
                continue
            full = block[op.table].reshape((s,) * op.arity)
            canon = full[np.ix_(*([rep_of] * op.arity))]
            if not np.array_equal(full, canon):
                raise NotACongruence(f"partition is not compatible with {op.name!r}")
            ops.append(OperationTable(op.name, op.arity, len(reps), full[np.ix_(*([reps] * op.arity))].reshape(-1)))
        return Algebra(self.id, len(reps), ops)

    def ancestors(self) -> Iterator["Sort"]:
        """All sorts this one is built from, parents before children."""
        seen: list[Sort] = []

        def walk(s: Sort) -> None:
            for p in s.parents:
                walk(p)
            if s not in seen:
                seen.append(s)

        walk(self)
        return iter(seen)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Sort) and self._hash == other._hash and self.key == other.key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Sort({self.id!r}, kind={self.kind}, size={self.size})"


def base_sort(algebra: Algebra) -> Sort:
    return Sort.base(algebra)


# ---------------------------------------------------------------------------
# relations


class Relation:
    """A finite multi-sorted relation with canonically ordered tuples."""

    __slots__ = ("name", "sorts", "tuples", "_set", "__weakref__")

    def __init__(self, name: str, sorts: Sequence[Sort], tuples: Iterable[Sequence[int]], check: bool = True):
        sorts = tuple(sorts)
        if not sorts:
            raise ArityMismatch("relations must have positive arity")
        n = len(sorts)
        tset = {tuple(int(a) for a in t) for t in tuples}
        if check:
            sizes = [s.size for s in sorts]
            for t in tset:
                if len(t) != n:
                    raise ArityMismatch(f"relation {name!r}: tuple {t} has arity {len(t)}, expected {n}")
                for a, s in zip(t, sizes):
                    if not 0 <= a < s:
                        raise ElementOutOfRange(f"relation {name!r}: entry {a} of {t} is outside its sort")
        self.name = name
        self.sorts = sorts
        self.tuples = tuple(sorted(tset))
        self._set = frozenset(tset)

    @classmethod
    def over(cls, sort: Sort, arity: int, tuples: Iterable[Sequence[int]], name: str = "R") -> "Relation":
        return cls(name, (sort,) * arity, tuples)

    @classmethod
    def full(cls, sorts: Sequence[Sort], name: str = "full") -> "Relation":
        return cls(name, sorts, itertools.product(*(range(s.size) for s in sorts)), check=False)

    @property
    def arity(self) -> int:
        return len(self.sorts)

    def space_size(self) -> int:
        out = 1
        for s in self.sorts:
            out *= s.size
        return out

    def is_full(self) -> bool:
        return len(self.tuples) == self.space_size()

    def renamed(self, name: str) -> "Relation":
        out = Relation.__new__(Relation)
        out.name, out.sorts, out.tuples, out._set = name, self.sorts, self.tuples, self._set
        return out

    def with_tuples(self, tuples: Iterable[Sequence[int]], name: str | None = None) -> "Relation":
        return Relation(self.name if name is None else name, self.sorts, tuples)

    def __contains__(self, t: object) -> bool:
        return tuple(t) in self._set  # type: ignore[arg-type]

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.tuples)

    def __len__(self) -> int:
        return len(self.tuples)

    def __le__(self, other: "Relation") -> bool:
        return self.sorts == other.sorts and self._set <= other._set

    def __lt__(self, other: "Relation") -> bool:
        return self.sorts == other.sorts and self._set < other._set

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Relation) and self.sorts == other.sorts and self._set == other._set

    def __hash__(self) -> int:
        return hash((self.sorts, self._set))

    def __repr__(self) -> str:
        return f"Relation({self.name!r}, arity={self.arity}, size={len(self.tuples)})"


# ---------------------------------------------------------------------------
# pp-formulas


@dataclass(frozen=True)
class RelAtom:
    symbol: str
    args: tuple[str, ...]

    def __init__(self, symbol: str, args: Iterable[str]):
        object.__setattr__(self, "symbol", symbol)
        object.__setattr__(self, "args", tuple(args))

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.args


@dataclass(frozen=True)
class EqAtom:
    left: str
    right: str

    arity = 2

    @property
    def variables(self) -> tuple[str, ...]:
        return (self.left, self.right)


Atom = Union[RelAtom, EqAtom]


@dataclass(frozen=True)
class PpFormula:
    """``name(free) := EX bound . atom & atom & ...`` with sorted variables."""

    name: str
    free: tuple[str, ...]
    free_sorts: tuple[Sort, ...]
    bound: tuple[str, ...] = ()
    bound_sorts: tuple[Sort, ...] = ()
    atoms: tuple[Atom, ...] = ()

    def __post_init__(self) -> None:
        for attr in ("free", "free_sorts", "bound", "bound_sorts", "atoms"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        if len(self.free) != len(self.free_sorts) or len(self.bound) != len(self.bound_sorts):
            raise ValueError("every variable needs exactly one sort")
        names = self.free + self.bound
        if len(set(names)) != len(names):
            raise ValueError(f"formula {self.name!r}: variable names must be distinct")
        sorts = self.sort_map
        for atom in self.atoms:
            for v in atom.variables:
                if v not in sorts:
                    raise ValueError(f"formula {self.name!r}: undeclared variable {v!r}")
            if isinstance(atom, EqAtom) and sorts[atom.left] != sorts[atom.right]:
                raise SortMismatch(f"equality {atom.left} = {atom.right} joins different sorts")

    @classmethod
    def build(cls, name: str, free: Sequence[tuple[str, Sort]], bound: Sequence[tuple[str, Sort]] = (),
              atoms: Sequence[Atom] = ()) -> "PpFormula":
        return cls(name, tuple(v for v, _ in free), tuple(s for _, s in free),
                   tuple(v for v, _ in bound), tuple(s for _, s in bound), tuple(atoms))

    @classmethod
    def single_atom(cls, relation: Relation, name: str | None = None, symbol: str | None = None) -> "PpFormula":
        xs = tuple(f"x{i + 1}" for i in range(relation.arity))
        return cls(name or relation.name, xs, relation.sorts, (), (), (RelAtom(symbol or relation.name, xs),))

    @cached_property
    def sort_map(self) -> dict[str, Sort]:
        return dict(zip(self.free + self.bound, self.free_sorts + self.bound_sorts))

    def sort_of(self, var: str) -> Sort:
        return self.sort_map[var]

    @property
    def arity(self) -> int:
        return len(self.free)

    @property
    def symbols(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for a in self.atoms:
            if isinstance(a, RelAtom):
                seen.setdefault(a.symbol)
        return tuple(seen)

    def check(self, basis: Mapping[str, Relation]) -> None:
        """Raise unless every atom matches a registered relation's arity and sorts."""
        sorts = self.sort_map
        for atom in self.atoms:
            if isinstance(atom, EqAtom):
                continue
            if atom.symbol not in basis:
                raise UnknownSymbol(f"unknown relation symbol {atom.symbol!r}")
            rel = basis[atom.symbol]
            if rel.arity != atom.arity:
                raise SortMismatch(f"{atom.symbol} has arity {rel.arity}, used with {atom.arity} arguments")
            for j, v in enumerate(atom.args):
                if sorts[v] != rel.sorts[j]:
                    raise SortMismatch(f"variable {v} has sort {sorts[v].id}, {atom.symbol} expects {rel.sorts[j].id}")

    def renamed(self, name: str) -> "PpFormula":
        return PpFormula(name, self.free, self.free_sorts, self.bound, self.bound_sorts, self.atoms)

    def canonical(self) -> "PpFormula":
        """Rename bound variables to ``y1 .. yk`` in order of first use; drop unused ones."""
        order: dict[str, None] = {}
        bound = set(self.bound)
        for atom in self.atoms:
            for v in atom.variables:
                if v in bound:
                    order.setdefault(v)
        taken = set(self.free)
        mapping: dict[str, str] = {}
        i = 0
        for v in order:
            i += 1
            cand = f"y{i}"
            while cand in taken:
                i += 1
                cand = f"y{i}"
            mapping[v] = cand
            taken.add(cand)
        sm = self.sort_map
        new_atoms = tuple(_rename_atom(a, mapping) for a in self.atoms)
        return PpFormula(self.name, self.free, self.free_sorts, tuple(mapping.values()),
                         tuple(sm[v] for v in mapping), new_atoms)


def _rename_atom(atom: Atom, mapping: Mapping[str, str]) -> Atom:
    if isinstance(atom, EqAtom):
        return EqAtom(mapping.get(atom.left, atom.left), mapping.get(atom.right, atom.right))
    return RelAtom(atom.symbol, (mapping.get(v, v) for v in atom.args))


class BasisRegistry(Mapping[str, Relation]):
    """Named relations usable as atoms, plus every sort they mention."""

    def __init__(self, relations: Iterable[Relation] = (), sorts: Iterable[Sort] = ()):
        self._relations: dict[str, Relation] = {}
        self.sorts: dict[str, Sort] = {}
        for s in sorts:
            self.add_sort(s)
        for r in relations:
            self.add(r)

    def add_sort(self, sort: Sort) -> Sort:
        for s in sort.ancestors():
            have = self.sorts.get(s.id)
            if have is None:
                self.sorts[s.id] = s
            elif have != s:
                raise SortMismatch(f"sort id {s.id!r} already names a different sort")
        return sort

    def add(self, relation: Relation, name: str | None = None) -> Relation:
        if name is not None and name != relation.name:
            relation = relation.renamed(name)
        have = self._relations.get(relation.name)
        if have is not None:
            if have != relation:
                raise ValueError(f"symbol {relation.name!r} is already registered with a different relation")
            return have
        for s in relation.sorts:
            self.add_sort(s)
        self._relations[relation.name] = relation
        return relation

    def fresh_name(self, prefix: str) -> str:
        if prefix not in self._relations:
            return prefix
        i = 2
        while f"{prefix}_{i}" in self._relations:
            i += 1
        return f"{prefix}_{i}"

    def register(self, relation: Relation, prefix: str | None = None) -> Relation:
        """Add ``relation`` under a fresh name derived from ``prefix``; reuse an identical entry."""
        for have in self._relations.values():
            if have == relation and (prefix is None or have.name.startswith(prefix)):
                return have
        return self.add(relation.renamed(self.fresh_name(prefix or relation.name)))

    def update(self, other: "BasisRegistry") -> None:
        for s in other.sorts.values():
            self.add_sort(s)
        for r in other.values():
            self.add(r)

    def copy(self) -> "BasisRegistry":
        out = BasisRegistry()
        out.update(self)
        return out

    def sort(self, sort_id: str) -> Sort:
        try:
            return self.sorts[sort_id]
        except KeyError:
            raise UnknownSymbol(f"unknown sort {sort_id!r}") from None

    def __getitem__(self, name: str) -> Relation:
        try:
            return self._relations[name]
        except KeyError:
            raise UnknownSymbol(f"unknown relation symbol {name!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._relations)

    def __len__(self) -> int:
        return len(self._relations)

    def __repr__(self) -> str:
        return f"BasisRegistry({list(self._relations)})"


@dataclass(frozen=True)
class LengthReport:
    arity: int
    length: int
    atoms: int
    quantifiers: int
    method: str = "formula"

    def lines(self) -> list[str]:
        return [f"arity {self.arity}", f"length {self.length}", f"atoms {self.atoms}",
                f"quantifiers {self.quantifiers}", f"method {self.method}"]


def formula_length(phi: PpFormula, method: str = "formula") -> LengthReport:
    """Quantified variables plus ``1 + arity`` per atom (equalities count as binary)."""
    length = len(phi.bound) + sum(1 + a.arity for a in phi.atoms)
    return LengthReport(len(phi.free), length, len(phi.atoms), len(phi.bound), method)


# ---------------------------------------------------------------------------
# evaluation


class _Csp:
    """Table constraints over integer variables, solved by backtracking with forward checking."""

    def __init__(self, sizes: Sequence[int], constraints: Sequence[tuple[tuple[int, ...], Iterable[tuple[int, ...]]]]):
        self.sizes = list(sizes)
        merged: dict[tuple[int, ...], set[tuple[int, ...]]] = {}
        for scope, allowed in constraints:
            allowed = set(allowed)
            if scope in merged:
                merged[scope] &= allowed
            else:
                merged[scope] = allowed
        self.cons: list[tuple[tuple[int, ...], list[tuple[int, ...]], dict]] = []
        self.by_var: list[list[int]] = [[] for _ in sizes]
        for scope, allowed in merged.items():
            tuples = sorted(allowed)
            index: dict[tuple[int, int], list[tuple[int, ...]]] = {}
            for t in tuples:
                for p, a in enumerate(t):
                    index.setdefault((p, a), []).append(t)
            ci = len(self.cons)
            self.cons.append((scope, tuples, index))
            for v in scope:
                self.by_var[v].append(ci)

    def initial_domains(self, domains: list[set[int]] | None = None) -> list[set[int]] | None:
        doms = [set(range(s)) for s in self.sizes] if domains is None else [set(d) for d in domains]
        changed = True
        while changed:
            changed = False
            for scope, tuples, _ in self.cons:
                live = [t for t in tuples if all(t[p] in doms[v] for p, v in enumerate(scope))]
                for p, v in enumerate(scope):
                    new = {t[p] for t in live}
                    if new != doms[v]:
                        if not new:
                            return None
                        doms[v] = new
                        changed = True
        return doms

    def assign(self, doms: list[set[int]], var: int, val: int) -> list[set[int]] | None:
        doms = list(doms)
        doms[var] = {val}
        for ci in self.by_var[var]:
            scope, _, index = self.cons[ci]
            p0 = scope.index(var)
            live = [t for t in index.get((p0, val), ()) if all(t[p] in doms[v] for p, v in enumerate(scope))]
            if not live:
                return None
            for p, v in enumerate(scope):
                if v != var and len(doms[v]) > 1:
                    new = {t[p] for t in live}
                    if len(new) < len(doms[v]):
                        doms[v] = doms[v] & new
                        if not doms[v]:
                            return None
        return doms

    def exists(self, order: Sequence[int], doms: list[set[int]], i: int = 0) -> bool:
        if i == len(order):
            return True
        v = order[i]
        for a in sorted(doms[v]):
            nd = self.assign(doms, v, a)
            if nd is not None and self.exists(order, nd, i + 1):
                return True
        return False

    def project(self, order: Sequence[int], n_enum: int, doms: list[set[int]]) -> list[tuple[int, ...]]:
        """Assignments of ``order[:n_enum]`` that extend to all of ``order``, in lex order."""
        out: list[tuple[int, ...]] = []
        head = list(order[:n_enum])
        tail = list(order[n_enum:])

        def rec(i: int, d: list[set[int]]) -> None:
            if i == n_enum:
                if self.exists(tail, d):
                    out.append(tuple(next(iter(d[v])) for v in head))
                return
            v = head[i]
            for a in sorted(d[v]):
                nd = self.assign(d, v, a)
                if nd is not None:
                    rec(i + 1, nd)

        rec(0, doms)
        return out


@dataclass
class _Compiled:
    variables: tuple[str, ...]
    sizes: list[int]
    n_free: int
    constraints: list[tuple[tuple[int, ...], set[tuple[int, ...]]]]
    components: list[tuple[list[int], list[int], list[int]]] = field(default_factory=list)


def _compile(phi: PpFormula, basis: Mapping[str, Relation]) -> _Compiled:
    phi.check(basis)
    variables = phi.free + phi.bound
    pos = {v: i for i, v in enumerate(variables)}
    sm = phi.sort_map
    sizes = [sm[v].size for v in variables]
    constraints: list[tuple[tuple[int, ...], set[tuple[int, ...]]]] = []
    for atom in phi.atoms:
        if isinstance(atom, EqAtom):
            a, b = pos[atom.left], pos[atom.right]
            if a != b:
                scope = (min(a, b), max(a, b))
                constraints.append((scope, {(x, x) for x in range(sizes[a])}))
            continue
        rel = basis[atom.symbol]
        idx = [pos[v] for v in atom.args]
        scope = tuple(dict.fromkeys(idx))
        first = [idx.index(v) for v in scope]
        allowed = set()
        for t in rel.tuples:
            if all(t[j] == t[first[scope.index(v)]] for j, v in enumerate(idx)):
                allowed.add(tuple(t[f] for f in first))
        constraints.append((scope, allowed))
    comp = _Compiled(variables, sizes, len(phi.free), constraints)
    # connected components of bound variables
    n_free = len(phi.free)
    parent = list(range(len(variables)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for scope, _ in constraints:
        bvars = [v for v in scope if v >= n_free]
        for v in bvars[1:]:
            parent[find(v)] = find(bvars[0])
    groups: dict[int, list[int]] = {}
    for v in range(n_free, len(variables)):
        groups.setdefault(find(v), []).append(v)
    for members in groups.values():
        mset = set(members)
        cons = [ci for ci, (scope, _) in enumerate(constraints) if any(v in mset for v in scope)]
        iface = sorted({v for ci in cons for v in constraints[ci][0] if v < n_free})
        comp.components.append((members, iface, cons))
    return comp


def _bfs_order(members: list[int], start: list[int], cons: list[tuple[int, ...]]) -> list[int]:
    mset = set(members)
    order: list[int] = []
    seen: set[int] = set()
    frontier = list(start)
    while len(order) < len(members):
        nxt: list[int] = []
        for scope in cons:
            if any(v in seen or v in frontier for v in scope):
                for v in scope:
                    if v in mset and v not in seen:
                        seen.add(v)
                        order.append(v)
                        nxt.append(v)
        if not nxt:
            rest = [v for v in members if v not in seen]
            seen.add(rest[0])
            order.append(rest[0])
            nxt = [rest[0]]
        frontier = nxt
    return order


def _component_projection(comp: _Compiled, members: list[int], iface: list[int], cons: list[int],
                          fixed: Mapping[int, int] | None = None) -> list[tuple[int, ...]]:
    local = iface + members
    lpos = {v: i for i, v in enumerate(local)}
    lcons = [(tuple(lpos[v] for v in comp.constraints[ci][0]), comp.constraints[ci][1]) for ci in cons]
    csp = _Csp([comp.sizes[v] for v in local], lcons)
    doms = [set(range(comp.sizes[v])) for v in local]
    if fixed:
        for v, a in fixed.items():
            if v in lpos:
                doms[lpos[v]] = {a}
    doms = csp.initial_domains(doms)
    if doms is None:
        return []
    order = list(range(len(iface))) + [lpos[v] for v in _bfs_order(members, iface, [comp.constraints[ci][0] for ci in cons])]
    return csp.project(order, len(iface), doms)


def evaluate_pp_formula(phi: PpFormula, basis: Mapping[str, Relation]) -> Relation:
    """The relation defined by ``phi`` over ``basis``.

    Bound variables are split into connected components; each component is
    projected onto the free variables it touches by backtracking search, and
    the projections are then joined over the free variables.
    """
    comp = _compile(phi, basis)
    n = comp.n_free
    free_cons: list[tuple[tuple[int, ...], set[tuple[int, ...]]]] = [
        (scope, allowed) for scope, allowed in comp.constraints if all(v < n for v in scope)
    ]
    for members, iface, cons in comp.components:
        proj = _component_projection(comp, members, iface, cons)
        if not proj:
            return Relation(phi.name, phi.free_sorts, ())
        if iface:
            free_cons.append((tuple(iface), set(proj)))
    csp = _Csp(comp.sizes[:n], free_cons)
    doms = csp.initial_domains()
    if doms is None:
        return Relation(phi.name, phi.free_sorts, ())
    tuples = csp.project(list(range(n)), n, doms)
    return Relation(phi.name, phi.free_sorts, tuples, check=False)


def formula_holds(phi: PpFormula, basis: Mapping[str, Relation], values: Sequence[int]) -> bool:
    """Whether ``values`` (one per free variable) satisfies ``phi``, without materialising it."""
    comp = _compile(phi, basis)
    n = comp.n_free
    if len(values) != n:
        raise ArityMismatch(f"{phi.name} has {n} free variables, got {len(values)} values")
    for a, s in zip(values, comp.sizes):
        if not 0 <= a < s:
            raise ElementOutOfRange(f"{a} is outside its sort")
    fixed = dict(enumerate(int(a) for a in values))
    for scope, allowed in comp.constraints:
        if all(v < n for v in scope) and tuple(fixed[v] for v in scope) not in allowed:
            return False
    for members, iface, cons in comp.components:
        if not _component_projection(comp, members, iface, cons, fixed):
            return False
    return True


def evaluate_naive(phi: PpFormula, basis: Mapping[str, Relation]) -> Relation:
    """Reference evaluation by enumerating every assignment of every variable."""
    phi.check(basis)
    variables = phi.free + phi.bound
    sm = phi.sort_map
    n = len(phi.free)
    out = set()
    for values in itertools.product(*(range(sm[v].size) for v in variables)):
        env = dict(zip(variables, values))
        ok = True
        for atom in phi.atoms:
            if isinstance(atom, EqAtom):
                ok = env[atom.left] == env[atom.right]
            else:
                ok = tuple(env[v] for v in atom.args) in basis[atom.symbol]
            if not ok:
                break
        if ok:
            out.add(values[:n])
    return Relation(phi.name, phi.free_sorts, out)


# ---------------------------------------------------------------------------
# rewriting


def substitute_basis(phi: PpFormula, translations: Mapping[str, PpFormula]) -> PpFormula:
    """Replace every relational atom by a fresh copy of its translation.

    Equality atoms are kept.  The result has length at most
    ``max(|translation|) * |phi|``.
    """
    used = set(phi.free) | set(phi.bound)
    for psi in translations.values():
        used |= set(psi.bound)
    counter = itertools.count(1)

    def fresh() -> str:
        while True:
            cand = f"_v{next(counter)}"
            if cand not in used:
                used.add(cand)
                return cand

    sm = phi.sort_map
    bound = list(zip(phi.bound, phi.bound_sorts))
    atoms: list[Atom] = []
    for atom in phi.atoms:
        if isinstance(atom, EqAtom):
            atoms.append(atom)
            continue
        if atom.symbol not in translations:
            raise MissingTranslation(f"no translation for symbol {atom.symbol!r}")
        psi = translations[atom.symbol]
        if psi.arity != atom.arity:
            raise SortMismatch(f"translation of {atom.symbol} has arity {psi.arity}, atom has {atom.arity}")
        for v, s in zip(atom.args, psi.free_sorts):
            if sm[v] != s:
                raise SortMismatch(f"translation of {atom.symbol} expects sort {s.id} for {v}")
        mapping = dict(zip(psi.free, atom.args))
        for w, s in zip(psi.bound, psi.bound_sorts):
            mapping[w] = fresh()
            bound.append((mapping[w], s))
        atoms.extend(_rename_atom(a, mapping) for a in psi.atoms)
    return PpFormula(phi.name, phi.free, phi.free_sorts, tuple(v for v, _ in bound),
                     tuple(s for _, s in bound), tuple(atoms))


def simplify_equalities(phi: PpFormula) -> PpFormula:
    """Merge variables joined by equality atoms and drop duplicate atoms.

    Free variables are preferred as class representatives; an equality between
    two free variables is kept.  Bound variables left without atoms are dropped.
    """
    variables = phi.free + phi.bound
    parent = {v: v for v in variables}
    rank = {v: i for i, v in enumerate(variables)}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a in phi.atoms:
        if isinstance(a, EqAtom):
            x, y = find(a.left), find(a.right)
            if x != y:
                if rank[y] < rank[x]:
                    x, y = y, x
                parent[y] = x
    free = set(phi.free)
    mapping = {v: find(v) for v in variables}
    atoms: dict[Atom, None] = {}
    for a in phi.atoms:
        if isinstance(a, RelAtom):
            atoms.setdefault(_rename_atom(a, mapping))
    for v in phi.free:
        r = mapping[v]
        if r != v and r in free:
            atoms.setdefault(EqAtom(r, v))
    # a free variable only equal to bound variables is its own representative already
    out = PpFormula(phi.name, phi.free, phi.free_sorts,
                    tuple(v for v in phi.bound if mapping[v] == v),
                    tuple(s for v, s in zip(phi.bound, phi.bound_sorts) if mapping[v] == v),
                    tuple(atoms))
    return out.canonical()


def conjunction(name: str, free: Sequence[tuple[str, Sort]], parts: Sequence[tuple[PpFormula, Sequence[str]]]) -> PpFormula:
    """``name(free) := AND_i part_i(args_i)``, flattened into one prenex formula."""
    translations: dict[str, PpFormula] = {}
    atoms = []
    for i, (psi, args) in enumerate(parts):
        sym = f"__part{i}"
        translations[sym] = psi
        atoms.append(RelAtom(sym, args))
    top = PpFormula.build(name, free, (), atoms)
    return substitute_basis(top, translations)
