from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from oracles import table_fn
from ppclone.core import Algebra, BasisRegistry, OperationTable, Relation, Sort
from ppclone.errors import BudgetExhausted
from ppclone.fixtures import affine_algebra, linear_basis, two_sat_language
from ppclone.polymorphisms import (
    IdentityScheme,
    edge_parameter_from_basic_operations,
    find_term,
    is_compatible,
    satisfies_identity_scheme,
)


def brute_compatible(op, R):
    f = table_fn(op)
    S = set(R.tuples)
    return all(tuple(f[c] for c in zip(*rows)) in S for rows in itertools.product(R.tuples, repeat=op.arity))


def first_projection(n=2):
    return OperationTable.from_function("p1", 3, n, lambda x, y, z: x)


class TestCompatibility:
    def test_majority_preserves_2sat(self, maj, s2):
        op = maj.operations[0]
        assert all(is_compatible(op, R) for R in two_sat_language(s2).values())

    def test_affine_preserves_linear_basis(self, z2, s2):
        op = z2.operations[0]
        assert all(is_compatible(op, R) for R in linear_basis(s2).values())

    def test_affine_breaks_clause(self, z2, s2):
        R00 = two_sat_language(s2)["R_00"]
        v = is_compatible(z2.operations[0], R00)
        assert not v
        rows, image = v.witness
        assert rows == ((0, 1), (1, 0), (1, 1)) and image == (0, 0)

    def test_projection_preserves_everything(self, s2):
        assert is_compatible(first_projection(), Relation("C_0", (s2,), [(0,)]))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=8, max_size=8),
           st.sets(st.tuples(st.integers(0, 1), st.integers(0, 1)), max_size=4))
    def test_matches_brute_force(self, table, tuples):
        op = OperationTable("f", 3, 2, table)
        s = Sort.base(Algebra("B", 2, [op]))
        R = Relation("R", (s, s), tuples)
        assert bool(is_compatible(op, R)) == brute_compatible(op, R)


class TestIdentities:
    def test_maltsev(self, z2):
        assert satisfies_identity_scheme(z2.operations[0], IdentityScheme.maltsev())

    def test_permuted_maltsev_is_2_edge(self, z2):
        m = table_fn(z2.operations[0])
        e = OperationTable.from_function("e", 3, 2, lambda x1, x2, x3: m[(x2, x1, x3)])
        assert satisfies_identity_scheme(e, IdentityScheme.edge(2))

    def test_projection_not_2_edge(self):
        v = satisfies_identity_scheme(first_projection(), IdentityScheme.edge(2))
        assert not v

    def test_edge_scheme_shape(self):
        for k in range(2, 6):
            s = IdentityScheme.edge(k)
            assert s.arity == k + 1 and len(s.rows) == k

    def test_parse(self):
        assert IdentityScheme.parse("edge:3").arity == 4
        assert IdentityScheme.parse("nu:4").arity == 4
        assert IdentityScheme.parse("majority").arity == 3

    def test_edge_parameter_of_fixtures(self, z2, maj):
        assert edge_parameter_from_basic_operations(z2) == 2
        assert edge_parameter_from_basic_operations(maj) == 2


class TestFindTerm:
    def test_unique_boolean_majority(self, s2):
        op = find_term(two_sat_language(s2), IdentityScheme.majority())
        assert tuple(op.table) == (0, 0, 0, 1, 0, 1, 1, 1)

    def test_no_majority_for_linear_basis(self, s2):
        gamma = linear_basis(s2)
        assert find_term(gamma, IdentityScheme.majority()) is None
        # exhaustive oracle over all 2^8 ternary Boolean tables
        scheme = IdentityScheme.majority()
        for table in itertools.product(range(2), repeat=8):
            op = OperationTable("t", 3, 2, table)
            assert not (satisfies_identity_scheme(op, scheme) and all(brute_compatible(op, R) for R in gamma.values()))

    def test_one_element_domain(self):
        s = Sort.base(Algebra("T", 1, []))
        gamma = BasisRegistry([Relation("U", (s,), [(0,)])])
        for scheme in (IdentityScheme.maltsev(), IdentityScheme.edge(3), IdentityScheme.nu(4)):
            assert tuple(find_term(gamma, scheme).table) == (0,) * 1

    def test_found_terms_satisfy_requirements(self, s2):
        gamma = linear_basis(s2)
        for scheme in (IdentityScheme.maltsev(), IdentityScheme.edge(2), IdentityScheme.edge(3)):
            op = find_term(gamma, scheme)
            assert op is not None
            assert satisfies_identity_scheme(op, scheme)
            assert all(brute_compatible(op, R) for R in gamma.values())

    def test_budget(self, s3):
        gamma = BasisRegistry([Relation("N", (s3, s3), [(0, 1), (1, 2), (2, 0)])])
        with pytest.raises(BudgetExhausted):
            find_term(gamma, IdentityScheme.nu(5), budget=3)
