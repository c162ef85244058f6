"""Subpowers: generation, the membership problem with certificates, enumeration."""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .closure import ClosureResult, Space, close
from .core import Algebra, BasisRegistry, PpFormula, Relation, Sort, Verdict, eval_operation, formula_holds
from .errors import ArityMismatch, CertificateConstructionFailed, DomainTooLarge, ElementOutOfRange

MAX_ENUMERATION_SPACE = 22


@dataclass(frozen=True)
class TraceStep:
    """``result = op(args...)`` coordinate-wise; generator steps have ``op=None`` and ``args=(index,)``."""

    op: str | None
    args: tuple[int, ...]
    result: tuple[int, ...]


@dataclass(frozen=True)
class DerivationTrace:
    steps: tuple[TraceStep, ...]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def operations(self) -> int:
        return sum(1 for s in self.steps if s.op is not None)

    def lines(self) -> list[str]:
        out = []
        for i, s in enumerate(self.steps):
            head = "gen" if s.op is None else s.op
            out.append(f"{i} {head} {' '.join(map(str, s.args))} -> {' '.join(map(str, s.result))}".replace("  ", " "))
        return out


@dataclass(frozen=True)
class SeparationCertificate:
    formula: PpFormula
    basis: BasisRegistry


class DerivationIndex:
    """One producing step for every tuple of a generated subpower."""

    def __init__(self, result: ClosureResult, generator_positions: Sequence[int]):
        self._result = result
        self._gen_pos = list(generator_positions)  # closure seed i -> index in the generator list
        self._lookup = {tuple(int(a) for a in row): i for i, row in enumerate(result.digits)}

    def __contains__(self, t: object) -> bool:
        return tuple(t) in self._lookup  # type: ignore[arg-type]

    def step(self, t: Sequence[int]):
        i = self._lookup[tuple(t)]
        d = self._result.derivation[i]
        if d is None:
            return ("gen", self._gen_pos[i])
        op, args = d
        return (op, tuple(tuple(int(a) for a in self._result.digits[j]) for j in args))

    def trace(self, target: Sequence[int]) -> DerivationTrace:
        """A trace ending in ``target`` that uses only the steps it needs."""
        root = self._lookup[tuple(target)]
        needed: set[int] = set()
        stack = [root]
        while stack:
            i = stack.pop()
            if i in needed:
                continue
            needed.add(i)
            d = self._result.derivation[i]
            if d is not None:
                stack.extend(d[1])
        order = sorted(needed)
        pos = {i: k for k, i in enumerate(order)}
        steps = []
        for i in order:
            row = tuple(int(a) for a in self._result.digits[i])
            d = self._result.derivation[i]
            if d is None:
                steps.append(TraceStep(None, (self._gen_pos[i],), row))
            else:
                steps.append(TraceStep(d[0], tuple(pos[j] for j in d[1]), row))
        # arguments always precede results, so the target comes last
        return DerivationTrace(tuple(steps))


def _check_tuples(algebra: Algebra, n: int, tuples: Iterable[Sequence[int]]) -> list[tuple[int, ...]]:
    out = []
    for t in tuples:
        t = tuple(int(a) for a in t)
        if len(t) != n:
            raise ArityMismatch(f"tuple {t} does not have length {n}")
        if any(not 0 <= a < algebra.size for a in t):
            raise ElementOutOfRange(f"tuple {t} leaves the domain of {algebra.name}")
        out.append(t)
    return out


def generate(algebra: Algebra, n: int, generators: Iterable[Sequence[int]]) -> tuple[Relation, DerivationIndex]:
    """``Sg`` of ``generators`` inside ``algebra ** n`` plus a derivation index."""
    gens = _check_tuples(algebra, n, generators)
    sort = Sort.base(algebra)
    first: dict[tuple[int, ...], int] = {}
    for i, g in enumerate(gens):
        first.setdefault(g, i)
    seeds = list(first)
    res = close((sort,) * n, np.asarray(seeds, dtype=np.int64).reshape(-1, n))
    index = DerivationIndex(res, [first[g] for g in seeds])
    return res.relation("Sg"), index


def smp(algebra: Algebra, target: Sequence[int], generators: Iterable[Sequence[int]],
        gamma: BasisRegistry | None = None) -> Verdict:
    """Decide ``target in Sg(generators)``.

    Yes carries a :class:`DerivationTrace`; No carries a verified
    :class:`SeparationCertificate` built from a pp-definition of the generated
    subpower (over ``{R_Lin, C_a}`` when it is affine over a prime field).  When ``gamma`` is given the certificate basis is ``gamma``
    extended by the relations the definition uses.
    """
    target = tuple(int(a) for a in target)
    n = len(target)
    gens = _check_tuples(algebra, n, generators)
    _check_tuples(algebra, n, [target])
    R, index = generate(algebra, n, gens)
    if target in R:
        trace = index.trace(target)
        return Verdict(True, trace, f"derived in {trace.operations} operation steps")
    from .ppdef import certificate_definition  # local import: ppdef builds on this module

    result = certificate_definition(R, algebra)
    basis = result.basis
    if gamma is not None:
        basis = gamma.copy()
        basis.update(result.basis)
    cert = SeparationCertificate(result.formula.renamed("Sep"), basis)
    check = verify_separation_certificate(cert, gens, target)
    if not check:
        raise CertificateConstructionFailed(f"separating formula failed verification: {check.detail}")
    return Verdict(False, cert, f"separated by a formula of {len(result.formula.atoms)} atoms")


def verify_membership_certificate(algebra: Algebra, generators: Sequence[Sequence[int]], target: Sequence[int],
                                  trace: DerivationTrace) -> Verdict:
    """Replay ``trace``; the witness on failure is the offending step index."""
    gens = [tuple(g) for g in generators]
    target = tuple(target)
    ops = {op.name: op for op in algebra.operations}
    done: list[tuple[int, ...]] = []
    for i, s in enumerate(trace.steps):
        if len(s.result) != len(target):
            return Verdict(False, i, f"step {i} has the wrong arity")
        if s.op is None:
            if len(s.args) != 1 or not 0 <= s.args[0] < len(gens) or gens[s.args[0]] != tuple(s.result):
                return Verdict(False, i, f"step {i} does not name its generator")
        else:
            op = ops.get(s.op)
            if op is None or len(s.args) != op.arity or any(not 0 <= a < i for a in s.args):
                return Verdict(False, i, f"step {i} refers to an unknown operation or a later step")
            try:
                value = tuple(eval_operation(op, [done[a][j] for a in s.args]) for j in range(len(target)))
            except (ElementOutOfRange, ArityMismatch):
                return Verdict(False, i, f"step {i} cannot be evaluated")
            if value != tuple(s.result):
                return Verdict(False, i, f"step {i} computes {value}, trace claims {tuple(s.result)}")
        done.append(tuple(s.result))
    if not done or done[-1] != target:
        return Verdict(False, len(done), "trace does not end in the target")
    return Verdict(True)


def verify_separation_certificate(cert: SeparationCertificate, generators: Sequence[Sequence[int]],
                                  target: Sequence[int]) -> Verdict:
    """The formula must hold on every generator and fail on the target."""
    phi, basis = cert.formula, cert.basis
    for g in generators:
        if not formula_holds(phi, basis, tuple(g)):
            return Verdict(False, tuple(g), f"formula fails on generator {tuple(g)}")
    if formula_holds(phi, basis, tuple(target)):
        return Verdict(False, tuple(target), "formula also holds on the target")
    return Verdict(True)


def enumerate_subpowers(algebra: Algebra, n: int) -> list[Relation]:
    """Every subuniverse of ``algebra ** n`` (the empty set included when it is closed)."""
    space_size = algebra.size**n
    if space_size > MAX_ENUMERATION_SPACE:
        raise DomainTooLarge(f"{algebra.size}^{n} = {space_size} tuples exceeds the enumeration guard")
    sorts = (Sort.base(algebra),) * n
    space = Space(sorts)
    bottom = close(sorts, np.zeros((0, n), dtype=np.int64))
    start = frozenset(bottom.codes.tolist())
    found = {start}
    queue = deque([start])
    while queue:
        S = queue.popleft()
        base = space.decode(np.array(sorted(S), dtype=np.int64))
        for code in range(space.total):
            if code in S:
                continue
            seeds = np.concatenate([base, space.decode([code])])
            T = frozenset(close(sorts, seeds, closed_prefix=len(S)).codes.tolist())
            if T not in found:
                found.add(T)
                queue.append(T)
    rels = []
    for S in sorted(found, key=lambda s: (len(s), sorted(s))):
        rows = space.decode(np.array(sorted(S), dtype=np.int64))
        rels.append(Relation(f"S{len(rels)}", sorts, [tuple(int(a) for a in r) for r in rows], check=False))
    return rels


def count_subpowers(algebra: Algebra, n: int) -> int:
    return len(enumerate_subpowers(algebra, n))
