from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import affine_span, formula_set, join_evaluate
from ppclone.congruences import Partition
from ppclone.core import EqAtom, Relation, RelAtom, Sort, formula_length
from ppclone.errors import NotAffine, NotAPowerSort, PreconditionFailed, UnrelatedSorts
from ppclone.fixtures import affine_algebra, constant, dual_discriminator, median_chain, parity_relation, r_lin
from ppclone.ppdef import (
    DefinitionResult,
    affine_definition,
    affine_equations,
    baker_pixley,
    chain_decompose,
    chain_preconditions,
    composite_definition,
    diagonal_lift,
    flatten,
    hs_transport,
    power_definition,
    power_transport,
    reduce_critical,
    short_pp_definition,
    verify_definition,
)
from ppclone.subpowers import enumerate_subpowers


def assert_defines(result: DefinitionResult, R: Relation):
    phi = result.formula
    space = np.prod([float(s.size) for s in phi.free_sorts + phi.bound_sorts])
    if space <= 2e5:
        assert formula_set(phi, result.basis) == set(R.tuples)
    else:
        assert join_evaluate(phi, result.basis) == set(R.tuples)


def drop_atom(result: DefinitionResult, i: int = 0) -> DefinitionResult:
    phi = result.formula
    atoms = phi.atoms[:i] + phi.atoms[i + 1:]
    smaller = type(phi)(phi.name, phi.free, phi.free_sorts, phi.bound, phi.bound_sorts, atoms)
    return DefinitionResult(smaller, result.basis, formula_length(smaller), result.method)


class TestBakerPixley:
    def test_low_arity_single_atom(self, maj):
        s = Sort.base(maj)
        R = Relation("R", (s, s), [(0, 1), (1, 1)])
        assert len(baker_pixley(R, 2).formula.atoms) == 1

    def test_all_majority_closed_ternary(self, maj):
        for R in enumerate_subpowers(maj, 3):
            if len(R) == 0:
                continue
            res = baker_pixley(R, 2)
            assert len(res.formula.atoms) == 6
            assert_defines(res, R)

    def test_four_ary_bound(self, maj4_subpowers):
        for R in maj4_subpowers:
            if len(R):
                res = baker_pixley(R, 2)
                assert len(res.formula.atoms) <= 4 + 6 and res.report.length <= 4 * 2 + 6 * 3

    def test_three_element_majority(self):
        s = Sort.base(dual_discriminator(3))
        R = Relation("R", (s,) * 3, [(0, 0, 0), (1, 1, 2), (2, 2, 1), (0, 1, 1)])
        from ppclone.closure import sg

        R = sg(R.sorts, R.tuples, name="R")
        assert_defines(baker_pixley(R, 2), R)


class TestAffine:
    def test_odd_parity_chain(self, s2):
        R = parity_relation(s2, 3, b=1, name="Odd3")
        res = affine_definition(R)
        assert (res.report.length, res.report.atoms, res.report.quantifiers) == (12, 3, 2)
        assert set(res.formula.symbols) == {"R_Lin", "C_1"}
        assert_defines(res, R)

    def test_constant(self, s2):
        res = affine_definition(Relation("Z", (s2,), [(0,)]))
        assert [a.symbol for a in res.formula.atoms] == ["C_0"] and not res.formula.bound

    def test_z3_pair(self, s3):
        R = Relation("P", (s3, s3), [(a, b) for a in range(3) for b in range(3) if (a + b) % 3 == 0])
        res = affine_definition(R)
        assert_defines(res, R)

    def test_not_affine(self, s2):
        with pytest.raises(NotAffine):
            affine_definition(Relation("R", (s2, s2), [(0, 0), (0, 1), (1, 0)]))

    def test_translate_is_least_tuple(self, s3):
        R = Relation("R", (s3,) * 2, affine_span(3, 2, [(1, 2), (2, 1)]))
        for coeffs, b in affine_equations(R, 3):
            assert sum(c * t for c, t in zip(coeffs, R.tuples[0])) % 3 == b

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from([2, 3, 5]), st.integers(1, 5), st.data())
    def test_random_subspaces(self, p, n, data):
        if p ** n > 3200:
            n = 3
        gens = data.draw(st.lists(st.tuples(*[st.integers(0, p - 1)] * n), min_size=1, max_size=4))
        s = Sort.base(affine_algebra(p))
        R = Relation("R", (s,) * n, affine_span(p, n, gens))
        res = affine_definition(R)
        assert_defines(res, R)
        assert res.report.quantifiers <= n * (n - 1) + 1


class TestPowerTransport:
    def test_diagonal_constant(self, s2):
        P = Sort.power(s2, 2)
        Q = diagonal_lift(constant(s2, 0), P)
        assert Q.tuples == ((P.encode((0, 0)),),)

    def test_identity_exponent(self, s2):
        R = r_lin(s2)
        flat, glue = power_transport(R, 1)
        assert flat.tuples == R.tuples

    def test_round_trip(self, s2):
        P = Sort.power(s2, 2)
        rng = np.random.default_rng(3)
        for _ in range(10):
            size = int(rng.integers(1, 8))
            tuples = {tuple(int(a) for a in rng.integers(0, 4, 2)) for _ in range(size)}
            R = Relation("W", (P, P), tuples)
            flat, glue = power_transport(R, 2)
            assert flat.arity == 4
            assert_defines(glue, R)

    def test_power_definition(self, s2):
        P = Sort.power(s2, 2)
        R = Relation("W", (P, P), [(P.encode((a, b)), P.encode((c, d)))
                                    for a, b, c, d in itertools.product(range(2), repeat=4) if (a + b + c + d) % 2 == 0])
        res = power_definition(R, lambda F: affine_definition(F))
        assert_defines(res, R)

    def test_not_power(self, s2):
        with pytest.raises(NotAPowerSort):
            flatten(r_lin(s2))


class TestHsTransport:
    def test_base_sorts_identity(self, s2):
        R = r_lin(s2)
        pre, glue = hs_transport(R)
        assert pre.tuples == R.tuples
        assert_defines(glue, R)

    def test_quotient_preimage(self, z4):
        b = Sort.base(z4)
        q = Sort.quotient(b, Partition.from_blocks(4, [(0, 2), (1, 3)]))
        pre, glue = hs_transport(Relation("U", (q,), [(0,)]))
        assert pre.tuples == ((0,), (2,))
        assert_defines(glue, Relation("U", (q,), [(0,)]))

    def test_mixed_sorts(self):
        med = median_chain(3)
        b = Sort.base(med)
        sub = Sort.subalgebra(b, [0, 1])
        quot = Sort.quotient(b, Partition.from_blocks(3, [(0, 1), (2,)]))
        R = Relation("M", (sub, quot, b), [(0, 0, 0), (1, 0, 1), (1, 1, 2), (0, 0, 1)])
        pre, glue = hs_transport(R)
        assert pre.sorts == (b, b, b)
        assert_defines(glue, R)

    def test_identity_glue(self, s2):
        flat, glue = power_transport(r_lin(s2), 1)
        assert sum(isinstance(a, EqAtom) for a in glue.formula.atoms) <= 3

    def test_products_rejected(self, s2, s3):
        prod = Sort.product([s2, s3])
        with pytest.raises(UnrelatedSorts):
            hs_transport(Relation("X", (prod,), [(0,)]))


class TestReduceCritical:
    def test_already_reduced(self, s2):
        R = r_lin(s2)
        red, glue = reduce_critical(R)
        assert red.tuples == R.tuples

    def test_z4_mod2(self, z4):
        b = Sort.base(z4)
        R = Relation("M", (b, b), [(x, y) for x in range(4) for y in range(4) if (x - y) % 2 == 0])
        red, glue = reduce_critical(R)
        assert red.sorts[0].size == 2 and red.tuples == ((0, 0), (1, 1))
        assert_defines(glue, R)


class TestChain:
    def test_base_case(self, s2):
        res = chain_decompose(r_lin(s2))
        assert len(res.formula.atoms) == 1

    def test_parity4_z2(self, s2):
        R = parity_relation(s2, 4)
        res = chain_decompose(R)
        assert (res.report.atoms, res.report.quantifiers) == (2, 1)
        Q = res.basis[res.formula.atoms[0].symbol]
        assert Q.sorts[2].size == 2 and len(Q) == 4
        assert_defines(res, R)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_parity_z3(self, s3, n):
        R = parity_relation(s3, n)
        res = chain_decompose(R)
        assert (res.report.atoms, res.report.quantifiers) == (n - 2, n - 3)
        assert_defines(res, R)

    def test_preconditions(self, s2):
        R = Relation("R", (s2, s2, s2, s2), [(0, 0, 0, 0), (1, 1, 1, 1)])
        v = chain_preconditions(R)
        assert not v
        with pytest.raises(PreconditionFailed):
            chain_decompose(R)


class TestPipeline:
    def test_low_arity(self, s3):
        res = short_pp_definition(parity_relation(s3, 3))
        assert len(res.formula.atoms) == 1

    def test_auto_parity4(self, s2):
        res = short_pp_definition(parity_relation(s2, 4))
        assert res.method == "chain" and res.report.length == 9

    def test_auto_majority(self, maj4_subpowers):
        for R in maj4_subpowers:
            if len(R):
                res = short_pp_definition(R)
                assert res.method == "baker_pixley"

    def test_empty_relation(self, s2):
        res = short_pp_definition(Relation("E", (s2,) * 4, []))
        assert formula_set(res.formula, res.basis) == set()

    @settings(max_examples=25, deadline=None)
    @given(st.integers(4, 5), st.data())
    def test_composite_random_z3(self, s3, n, data):
        gens = data.draw(st.lists(st.tuples(*[st.integers(0, 2)] * n), min_size=1, max_size=3))
        R = Relation("R", (s3,) * n, affine_span(3, n, gens))
        res = composite_definition(R)
        assert verify_definition(res, R)

    def test_composite_z2_subspaces(self, z2):
        for R in enumerate_subpowers(z2, 4):
            res = composite_definition(R)
            assert verify_definition(res, R)


class TestVerify:
    def test_detects_dropped_atom(self, s2):
        R = parity_relation(s2, 3, b=1)
        res = affine_definition(R)
        v = verify_definition(drop_atom(res, len(res.formula.atoms) - 1), R)
        assert not v and "extra" in v.detail
