from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_formula
from ppclone.congruences import Partition
from ppclone.core import Relation, Sort
from ppclone.errors import InvariantViolation, ParseError
from ppclone.fixtures import affine_algebra, linear_basis, parity_relation
from ppclone.formats import (
    parse_algebra,
    parse_document,
    parse_formula,
    serialize_algebra,
    serialize_basis,
    serialize_document,
    serialize_formula,
)
from ppclone.ppdef import chain_decompose

Odd3 = "def Odd3(x1,x2,x3) := EX y1 y2 . R_Lin(x1,x2,y1) & R_Lin(y1,x3,y2) & C_1(y2)\n"


def test_algebra_file(data_dir):
    A = parse_algebra((data_dir / "z2.alg").read_text())
    assert A.size == 2 and len(A.operations) == 1 and len(A.operations[0].table) == 8


def test_algebra_round_trip(z4):
    text = serialize_algebra(z4)
    assert serialize_algebra(parse_algebra(text)) == text


def test_entry_out_of_range(data_dir):
    text = (data_dir / "z2.alg").read_text() + "relation R 2 over Z2 Z2\n0 1\n1 2\nend\n"
    with pytest.raises(InvariantViolation) as info:
        parse_document(text)
    assert (info.value.line, info.value.column) == (8, 3)


def test_formula_error_location(s2):
    with pytest.raises(ParseError) as info:
        parse_formula("def F(x1) := C_0(x1", linear_basis(s2))
    assert info.value.line == 1 and info.value.column is not None


def test_odd_parity_chain_round_trip(s2):
    basis = linear_basis(s2)
    phi = parse_formula(Odd3, basis)
    assert serialize_formula(phi, basis) == Odd3


def test_document_round_trip_with_derived_sorts(z4):
    b = Sort.base(z4)
    q = Sort.quotient(b, Partition.from_blocks(4, [(0, 2), (1, 3)]))
    sub = Sort.subalgebra(b, [0, 2])
    P = Sort.power(q, 2)
    rels = [Relation("A", (q, sub), [(0, 0), (1, 1)]), Relation("B", (P,), [(3,)])]
    text = serialize_document(rels, [])
    doc = parse_document(text)
    assert serialize_document(list(doc.relations.values()), []) == text
    assert doc.relation("A").tuples == ((0, 0), (1, 1))


def test_chain_basis_round_trip(s2):
    res = chain_decompose(parity_relation(s2, 4))
    btext = serialize_basis(res.basis)
    ftext = serialize_formula(res.formula, res.basis)
    doc = parse_document(btext)
    phi = parse_formula(ftext, doc.relations, doc.sorts)
    assert serialize_formula(phi, doc.relations) == ftext
    assert serialize_basis(doc.relations) == btext


def test_empty_conjunction(s2):
    reg = linear_basis(s2)
    text = f"def T(x1:{s2.id},x2:{s2.id}) := true\n"
    phi = parse_formula(text, reg, {s2.id: s2})
    assert phi.atoms == () and serialize_formula(phi, reg) == text


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_formula_round_trip(s3, seed):
    basis = linear_basis(s3)
    phi = random_formula(np.random.default_rng(seed), basis, s3)
    text = serialize_formula(phi, basis)
    back = parse_formula(text, basis, {s3.id: s3})
    assert serialize_formula(back, basis) == text
    assert back.free == phi.free and back.atoms == phi.atoms
