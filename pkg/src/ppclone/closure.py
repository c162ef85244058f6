"""Vectorised subalgebra generation inside products of sort algebras.

Tuples are handled as mixed-radix integer codes (first coordinate most
significant, so code order is lexicographic order).  Generation is
semi-naive: each round only evaluates argument selections that use at least
one tuple found in the previous round.
"""

from __future__ import annotations

import bisect
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .core import Relation, Sort
from .errors import ArityMismatch, ElementOutOfRange, SortMismatch

CHUNK = 1 << 18
FIRST_CHUNK = 1 << 10  # chunks grow geometrically so an early stop stays cheap
DENSE_LIMIT = 1 << 24


class Space:
    """The product of finitely many sort domains, with tuple <-> code maps."""

    def __init__(self, sorts: Sequence[Sort]):
        self.sorts = tuple(sorts)
        self.sizes = np.array([s.size for s in self.sorts], dtype=np.int64)
        n = len(self.sorts)
        self.weights = np.ones(n, dtype=np.int64)
        for j in range(n - 2, -1, -1):
            self.weights[j] = self.weights[j + 1] * self.sizes[j + 1]
        total = 1
        for s in self.sizes:
            total *= int(s)
        if total >= 1 << 62:
            raise ElementOutOfRange("tuple space too large for integer codes")
        self.total = total

    @property
    def arity(self) -> int:
        return len(self.sorts)

    def encode(self, digits: np.ndarray) -> np.ndarray:
        return np.asarray(digits, dtype=np.int64).reshape(-1, self.arity) @ self.weights

    def decode(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64).reshape(-1)
        out = np.empty((codes.size, self.arity), dtype=np.int64)
        rest = codes.copy()
        for j in range(self.arity - 1, -1, -1):
            out[:, j] = rest % self.sizes[j]
            rest //= self.sizes[j]
        return out

    def digits_of(self, tuples: Iterable[Sequence[int]]) -> np.ndarray:
        arr = np.asarray(list(tuples), dtype=np.int64).reshape(-1, self.arity)
        if arr.size and (np.any(arr < 0) or np.any(arr >= self.sizes)):
            raise ElementOutOfRange("tuple entry outside its sort")
        return arr


class _Seen:
    """Set of codes; a boolean mask when the space is small enough."""

    def __init__(self, total: int):
        self.mask = np.zeros(total, dtype=bool) if total <= DENSE_LIMIT else None
        self.items: set[int] = set()

    def add(self, codes: np.ndarray) -> None:
        if self.mask is not None:
            self.mask[codes] = True
        else:
            self.items.update(codes.tolist())

    def contains(self, codes: np.ndarray) -> np.ndarray:
        if self.mask is not None:
            return self.mask[codes]
        return np.fromiter((c in self.items for c in codes.tolist()), dtype=bool, count=codes.size)


class Derivation(Sequence):
    """Per-tuple provenance stored blockwise: entry i is None for a seed, else (op name, argument indices)."""

    def __init__(self, seeds: int):
        self._starts = [0]
        self._blocks: list[tuple[str | None, np.ndarray | None]] = [(None, None)]
        self._len = seeds

    def extend(self, op_name: str, args: np.ndarray) -> None:
        self._starts.append(self._len)
        self._blocks.append((op_name, args))
        self._len += args.shape[1]

    def __len__(self) -> int:
        return self._len

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(self._len))]
        if i < 0:
            i += self._len
        if not 0 <= i < self._len:
            raise IndexError(i)
        b = bisect.bisect_right(self._starts, i) - 1
        op, args = self._blocks[b]
        if op is None:
            return None
        return op, tuple(int(a) for a in args[:, i - self._starts[b]])


@dataclass
class ClosureResult:
    space: Space
    digits: np.ndarray  # m x n, in discovery order
    codes: np.ndarray
    # derivation[i] is None for seeds, else (operation name, argument indices)
    derivation: Derivation
    stopped: bool = False

    def tuples(self) -> list[tuple[int, ...]]:
        return [tuple(int(a) for a in row) for row in self.digits]

    def relation(self, name: str = "Sg") -> Relation:
        return Relation(name, self.space.sorts, self.tuples(), check=False)


def _signature(sorts: Sequence[Sort]) -> tuple[tuple[str, int], ...]:
    sig = sorts[0].algebra.signature
    for s in sorts[1:]:
        if s.algebra.signature != sig:
            raise SortMismatch("sorts carry algebras of different signatures")
    return sig


def _groups(sorts: Sequence[Sort]) -> list[tuple[Sort, np.ndarray]]:
    cols: dict[Sort, list[int]] = {}
    for j, s in enumerate(sorts):
        cols.setdefault(s, []).append(j)
    return [(s, np.array(c, dtype=np.int64)) for s, c in cols.items()]


def apply_rows(sorts: Sequence[Sort], op_index: int, digits: np.ndarray, selections: np.ndarray) -> np.ndarray:
    """Apply basic operation ``op_index`` coordinate-wise.

    ``selections`` has shape (arity, m): row indices into ``digits`` for each
    argument position.  Returns the m x n result digits.
    """
    m = selections.shape[1] if selections.ndim == 2 else 1
    n = digits.shape[1]
    out = np.empty((m, n), dtype=np.int64)
    for sort, cols in _groups(sorts):
        op = sort.algebra.operations[op_index]
        if op.arity == 0:
            out[:, cols] = op.table[0]
            continue
        s = sort.size
        flat = np.zeros((m, cols.size), dtype=np.int64)
        for q in range(op.arity):
            flat = flat * s + digits[selections[q]][:, cols]
        out[:, cols] = op.table[flat]
    return out


def close(
    sorts: Sequence[Sort],
    seeds: Iterable[Sequence[int]] | np.ndarray,
    *,
    closed_prefix: int = 0,
    stop: Callable[[np.ndarray], bool] | None = None,
) -> ClosureResult:
    """Generate the subuniverse of ``prod(sorts)`` spanned by ``seeds``.

    The first ``closed_prefix`` seeds are promised to be closed already, which
    skips argument selections drawn only from them.  ``stop`` is called with
    each batch of newly found codes (never with the seeds themselves);
    returning True aborts generation.
    """
    space = Space(sorts)
    sig = _signature(space.sorts)
    digits = seeds if isinstance(seeds, np.ndarray) else space.digits_of(seeds)
    digits = np.asarray(digits, dtype=np.int64).reshape(-1, space.arity)
    codes = space.encode(digits)
    _, first = np.unique(codes, return_index=True)
    keep = np.sort(first)
    if keep.size != codes.size:
        closed_prefix = int(np.searchsorted(keep, closed_prefix))
        digits, codes = digits[keep], codes[keep]
    if digits.size and (np.any(digits < 0) or np.any(digits >= space.sizes)):
        raise ElementOutOfRange("seed entry outside its sort")
    seen = _Seen(space.total)
    seen.add(codes)
    blocks_d = [digits]
    blocks_c = [codes]
    derivation = Derivation(codes.size)
    total = codes.size

    def absorb(res: np.ndarray, op_name: str, args: np.ndarray) -> bool:
        nonlocal total, all_digits, hit
        rc = space.encode(res)
        fresh = ~seen.contains(rc)
        if not fresh.any():
            return False
        rc, res, args = rc[fresh], res[fresh], args[:, fresh]
        _, idx = np.unique(rc, return_index=True)
        idx.sort()
        rc, res, args = rc[idx], res[idx], args[:, idx]
        seen.add(rc)
        blocks_d.append(res)
        blocks_c.append(rc)
        all_digits = np.concatenate([all_digits, res])
        total += rc.size
        derivation.extend(op_name, args)
        if stop is not None and stop(rc):
            hit = True
        return hit or total == space.total  # nothing is left to find once the space is full

    all_digits = digits
    hit = False
    stopped = total == space.total
    for k, (name, arity) in enumerate(sig):
        if stopped or arity != 0:
            continue
        res = apply_rows(space.sorts, k, np.zeros((1, space.arity), dtype=np.int64), np.zeros((0, 1), dtype=np.int64))
        stopped = absorb(res, name, np.zeros((0, 1), dtype=np.int64))
    lo, hi = min(closed_prefix, total), total
    while lo < hi and not stopped:
        base = all_digits
        for k, (name, arity) in enumerate(sig):
            if arity == 0 or stopped:
                continue
            for p in range(arity):
                shape = (lo,) * p + (hi - lo,) + (hi,) * (arity - 1 - p)
                count = int(np.prod(shape, dtype=np.int64)) if shape else 0
                start, step = 0, FIRST_CHUNK
                while start < count:
                    flat = np.arange(start, min(count, start + step), dtype=np.int64)
                    start, step = start + step, min(2 * step, CHUNK)
                    sel = np.array(np.unravel_index(flat, shape), dtype=np.int64)
                    sel[p] += lo
                    res = apply_rows(space.sorts, k, base, sel)
                    if absorb(res, name, sel):
                        stopped = True
                        break
                if stopped:
                    break
            if stopped:
                break
        lo, hi = hi, total
    return ClosureResult(space, all_digits, np.concatenate(blocks_c), derivation, hit)


def sg(sorts: Sequence[Sort], seeds: Iterable[Sequence[int]], name: str = "Sg") -> Relation:
    """Closure of ``seeds`` as a canonical :class:`Relation`."""
    return close(sorts, seeds).relation(name)


def is_closed(R: Relation) -> bool:
    res = close(R.sorts, R.tuples, stop=lambda new: True)
    return not res.stopped


def first_violation(sorts: Sequence[Sort], tuples: Sequence[Sequence[int]], op_index: int):
    """First selection (lexicographic in row indices) whose image leaves ``tuples``.

    Returns ``(rows, image)`` or None.
    """
    space = Space(sorts)
    rows = sorted({tuple(t) for t in tuples})
    if not rows:
        return None
    digits = space.digits_of(rows)
    codes = np.sort(space.encode(digits))
    arity = sorts[0].algebra.operations[op_index].arity
    m = len(rows)
    if arity == 0:
        res = apply_rows(space.sorts, op_index, digits, np.zeros((0, 1), dtype=np.int64))
        rc = space.encode(res)
        pos = np.minimum(np.searchsorted(codes, rc), m - 1)
        return None if codes[pos[0]] == rc[0] else ((), tuple(int(a) for a in res[0]))
    count = m**arity
    for start in range(0, count, CHUNK):
        flat = np.arange(start, min(count, start + CHUNK), dtype=np.int64)
        sel = np.array(np.unravel_index(flat, (m,) * arity), dtype=np.int64)
        res = apply_rows(space.sorts, op_index, digits, sel)
        rc = space.encode(res)
        pos = np.minimum(np.searchsorted(codes, rc), m - 1)
        bad = np.nonzero(codes[pos] != rc)[0]
        if bad.size:
            b = int(bad[0])
            return tuple(rows[int(i)] for i in sel[:, b]), tuple(int(a) for a in res[b])
    return None


def check_tuple_arity(R: Relation, t: Sequence[int]) -> tuple[int, ...]:
    t = tuple(int(a) for a in t)
    if len(t) != R.arity:
        raise ArityMismatch(f"tuple {t} has arity {len(t)}, relation has {R.arity}")
    for a, s in zip(t, R.sorts):
        if not 0 <= a < s.size:
            raise ElementOutOfRange(f"entry {a} of {t} outside its sort")
    return t
