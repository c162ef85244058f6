"""Short primitive-positive definitions of subpowers of finite algebras."""

from __future__ import annotations

from .analysis import (
    critical_decomposition,
    has_parallelogram_property,
    is_invariant,
    is_reduced,
    is_subdirect,
    linkedness_congruence,
    parallelogram_closure,
    projection,
    signature,
)
from .closure import close, sg
from .congruences import (
    Partition,
    all_congruences,
    congruence_generated,
    is_congruence,
    is_subdirectly_irreducible,
)
from .core import (
    Algebra,
    BasisRegistry,
    EqAtom,
    LengthReport,
    OperationTable,
    PpFormula,
    Relation,
    RelAtom,
    Sort,
    Verdict,
    evaluate_naive,
    evaluate_pp_formula,
    formula_holds,
    formula_length,
)
from .errors import PpCloneError
from .estimators import PpDefiner, SubpowerClosure
from .formats import parse_document, parse_formula, serialize_basis, serialize_document, serialize_formula
from .polymorphisms import IdentityScheme, find_term, is_compatible
from .ppdef import (
    DefinitionResult,
    affine_definition,
    baker_pixley,
    chain_decompose,
    composite_definition,
    reduce_critical,
    short_pp_definition,
    verify_definition,
)
from .subpowers import (
    count_subpowers,
    enumerate_subpowers,
    generate,
    smp,
    verify_membership_certificate,
    verify_separation_certificate,
)

__version__ = "0.1.0"

__all__ = [
    "Algebra", "BasisRegistry", "DefinitionResult", "EqAtom", "IdentityScheme", "LengthReport",
    "OperationTable", "Partition", "PpCloneError", "PpDefiner", "PpFormula", "RelAtom", "Relation",
    "Sort", "SubpowerClosure", "Verdict", "affine_definition", "all_congruences", "baker_pixley",
    "chain_decompose", "close", "composite_definition", "congruence_generated", "count_subpowers",
    "critical_decomposition", "enumerate_subpowers", "evaluate_naive", "evaluate_pp_formula",
    "find_term", "formula_holds", "formula_length", "generate", "has_parallelogram_property",
    "is_compatible", "is_congruence", "is_invariant", "is_reduced", "is_subdirect",
    "is_subdirectly_irreducible", "linkedness_congruence", "parallelogram_closure", "parse_document",
    "parse_formula", "projection", "reduce_critical", "serialize_basis", "serialize_document",
    "serialize_formula", "sg", "short_pp_definition", "signature", "smp", "verify_definition",
    "verify_membership_certificate", "verify_separation_certificate",
]
