from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from oracles import table_fn
from ppclone.congruences import (
    Partition,
    all_congruences,
    congruence_generated,
    is_congruence,
    is_subdirectly_irreducible,
    meet_irreducible_cover,
    quotient,
)
from ppclone.core import Algebra, OperationTable, Sort
from ppclone.errors import NotACongruence
from ppclone.fixtures import affine_algebra, dual_discriminator, median_chain, trivial_algebra


def all_partitions(n):
    """Restricted growth strings."""
    def rec(prefix, top):
        if len(prefix) == n:
            yield Partition.from_labels(prefix)
            return
        for lab in range(top + 2):
            yield from rec(prefix + [lab], max(top, lab))
    yield from rec([0], 0) if n else iter([Partition(())])


def brute_is_congruence(alg, theta):
    for op in alg.operations:
        f = table_fn(op)
        for args in itertools.product(range(alg.size), repeat=op.arity):
            for i in range(op.arity):
                for b in range(alg.size):
                    if theta.reps[b] == theta.reps[args[i]]:
                        moved = args[:i] + (b,) + args[i + 1:]
                        if theta.reps[f[args]] != theta.reps[f[moved]]:
                            return False
    return True


def brute_lattice(alg):
    return {p for p in all_partitions(alg.size) if brute_is_congruence(alg, p)}


def finer(a, b):
    return all(b.reps[x] == b.reps[a.reps[x]] for x in range(a.size))


def test_generated_from_nothing(z4):
    assert congruence_generated(z4, []) == Partition.identity(4)


def test_z4_generated(z4):
    assert sorted(congruence_generated(z4, [(0, 2)]).blocks()) == [(0, 2), (1, 3)]
    assert congruence_generated(z4, [(0, 1)]) == Partition.full(4)


@pytest.mark.parametrize("alg", [affine_algebra(2), affine_algebra(3), affine_algebra(4), affine_algebra(5),
                                 median_chain(3), median_chain(4), dual_discriminator(3), trivial_algebra()],
                         ids=lambda a: a.name)
def test_lattice_matches_partition_oracle(alg):
    assert set(all_congruences(alg).elements) == brute_lattice(alg)


def test_prime_affine_is_simple():
    for p in (2, 3, 5):
        assert len(all_congruences(affine_algebra(p)).elements) == 2


def test_z4_chain(z4):
    L = all_congruences(z4)
    assert len(L.elements) == 3
    mid = Partition.from_blocks(4, [(0, 2), (1, 3)])
    assert L.upper_covers(L.bottom) == [mid]
    assert L.upper_covers(mid) == [L.top]


class TestSubdirectIrreducible:
    def test_two_element(self, z2, maj):
        for alg in (z2, maj):
            v = is_subdirectly_irreducible(alg)
            assert v and v.witness == Partition.full(2)

    def test_z4(self, z4):
        v = is_subdirectly_irreducible(z4)
        assert v and sorted(v.witness.blocks()) == [(0, 2), (1, 3)]

    def test_product_not_si(self, z2):
        assert not is_subdirectly_irreducible(Sort.power(Sort.base(z2), 2))

    def test_one_element_not_si(self):
        assert not is_subdirectly_irreducible(trivial_algebra())


class TestQuotient:
    def test_identity(self, z4):
        Q, graph = quotient(z4, Partition.identity(4))
        assert Q.size == 4 and all(a == b for a, b in graph.tuples)

    def test_full(self, z4):
        Q, _ = quotient(z4, Partition.full(4))
        assert Q.size == 1

    def test_z4_mod_2(self, z4, z2):
        Q, graph = quotient(z4, Partition.from_blocks(4, [(0, 2), (1, 3)]))
        assert Q.size == 2
        assert tuple(Q.operations[0].table) == tuple(z2.operations[0].table)
        assert set(graph.tuples) == {(0, 0), (1, 1), (2, 0), (3, 1)}

    def test_rejects_non_congruence(self, z4):
        with pytest.raises(NotACongruence):
            quotient(z4, Partition.from_blocks(4, [(0, 1)]))


class TestMeetIrreducibleCover:
    def test_top(self, z4):
        L = all_congruences(z4)
        assert meet_irreducible_cover(L.top, L) is None

    def test_z4_bottom(self, z4):
        L = all_congruences(z4)
        assert sorted(meet_irreducible_cover(L.bottom, L).blocks()) == [(0, 2), (1, 3)]

    def test_product_bottom(self, z2):
        L = all_congruences(Sort.power(Sort.base(z2), 2))
        assert meet_irreducible_cover(L.bottom, L) is None


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=9, max_size=9),
       st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), max_size=3))
def test_generated_is_least_congruence(table, pairs):
    alg = Algebra("A", 3, [OperationTable("f", 2, 3, table)])
    theta = congruence_generated(alg, pairs)
    assert is_congruence(alg, theta) and brute_is_congruence(alg, theta)
    assert all(theta.reps[a] == theta.reps[b] for a, b in pairs)
    for other in brute_lattice(alg):
        if all(other.reps[a] == other.reps[b] for a, b in pairs):
            assert finer(theta, other)
