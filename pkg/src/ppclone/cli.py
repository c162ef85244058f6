"""Command-line interface: ``ppclone <subcommand> ...``.

Exit status is 0 for success (or a Yes answer), 1 for a No answer from a
decision command, and 2 for any error.  Reports are ``key value`` lines.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from collections.abc import Sequence
from pathlib import Path

from . import analysis, congruences, polymorphisms, ppdef, subpowers
from .closure import sg
from .core import BasisRegistry, Relation, evaluate_pp_formula
from .errors import BudgetExhausted, PpCloneError
from .formats import (
    Document,
    parse_document,
    parse_formula,
    serialize_basis,
    serialize_formula,
    serialize_relation,
)


class _Fail(Exception):
    """A user-facing error reported on stderr with exit status 2."""


def _load(paths: Sequence[str], doc: Document | None = None) -> Document:
    doc = doc if doc is not None else Document()
    for p in paths:
        try:
            text = Path(p).read_text()
        except OSError as exc:
            raise _Fail(f"cannot read {p}: {exc.strerror}") from None
        try:
            parse_document(text, doc)
        except PpCloneError as exc:
            raise _Fail(f"{p}: {exc}") from None
    return doc


def _relation(doc: Document, name: str | None) -> Relation:
    if name is None:
        if len(doc.relations) != 1:
            raise _Fail(f"pass --relation; the input defines {len(doc.relations)} relations")
        return next(iter(doc.relations.values()))
    if name not in doc.relations:
        raise _Fail(f"no relation named {name!r}")
    return doc.relations[name]


def _tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(a) for a in text.replace(",", " ").split())
    except ValueError:
        raise _Fail(f"cannot read tuple {text!r}") from None


def _write(path: str | None, text: str, out) -> None:
    if path is None or path == "-":
        out.write(text)
    else:
        Path(path).write_text(text)


def _yn(flag: bool) -> str:
    return "yes" if flag else "no"


# ---------------------------------------------------------------------------
# subcommands


def cmd_check_polymorphism(args, out) -> int:
    doc = _load(args.files)
    alg = doc.algebra(args.algebra)
    ops = [alg.operation(args.op)] if args.op else list(alg.operations)
    rels = [_relation(doc, n) for n in args.relation] if args.relation else list(doc.relations.values())
    ok = True
    for op in ops:
        for R in rels:
            v = polymorphisms.is_compatible(op, R)
            out.write(f"compatible {op.name} {R.name} {_yn(v.holds)}\n")
            if not v:
                ok = False
                rows, image = v.witness
                out.write(f"witness {' | '.join(' '.join(map(str, r)) for r in rows)} -> {' '.join(map(str, image))}\n")
    out.write(f"polymorphism {_yn(ok)}\n")
    return 0 if ok else 1


def cmd_find_term(args, out) -> int:
    doc = _load(args.files)
    gamma = BasisRegistry([_relation(doc, n) for n in args.relation]) if args.relation else doc.relations
    scheme = polymorphisms.IdentityScheme.parse(args.scheme)
    size = None
    if not len(gamma):
        size = doc.algebra().size
    op = polymorphisms.find_term(gamma, scheme, budget=args.budget, domain_size=size)
    if op is None:
        out.write(f"scheme {scheme}\nfound no\n")
        return 1
    out.write(f"scheme {scheme}\nfound yes\narity {op.arity}\n")
    out.write("table " + " ".join(str(int(v)) for v in op.table) + "\n")
    return 0


def cmd_congruences(args, out) -> int:
    doc = _load(args.files)
    alg = doc.algebra(args.algebra)
    lattice = congruences.all_congruences(alg)
    out.write(f"algebra {alg.name}\ncongruences {len(lattice.elements)}\n")
    for i, theta in enumerate(lattice.elements):
        out.write(f"theta {i} {theta}\n")
    si = congruences.is_subdirectly_irreducible(alg)
    out.write(f"subdirectly_irreducible {_yn(si.holds)}\n")
    if si.holds:
        out.write(f"monolith {si.witness}\n")
    return 0


def cmd_analyze(args, out) -> int:
    doc = _load(args.files)
    R = _relation(doc, args.relation)
    out.write(f"relation {R.name}\narity {R.arity}\ntuples {len(R)}\n")
    out.write(f"invariant {_yn(analysis.is_invariant(R))}\n")
    pp = analysis.has_parallelogram_property(R)
    out.write(f"parallelogram {_yn(pp.holds)}\n")
    out.write(f"signature_size {len(analysis.signature(R))}\n")
    out.write(f"subdirect {_yn(analysis.is_subdirect(R))}\n")
    dummies = analysis.dummy_coordinates(R)
    out.write(f"dummies {' '.join(str(i + 1) for i in dummies) or '-'}\n")
    if analysis.is_invariant(R):
        rep = analysis.cover_and_keys(R)
        out.write(f"critical {_yn(rep.is_critical)}\n")
        out.write(f"key_tuples {len(rep.key_tuples)}\n")
    if pp.holds and len(R):
        for size in range(1, min(args.cap, R.arity - 1) + 1):
            for I in itertools.combinations(range(R.arity), size):
                theta = analysis.linkedness_congruence(R, I, check_pp=False)
                out.write(f"linkedness {','.join(str(i + 1) for i in I)} {theta}\n")
    return 0


def cmd_closure(args, out) -> int:
    doc = _load(args.files)
    R = _relation(doc, args.relation)
    S = sg(R.sorts, R.tuples, name=args.name or f"{R.name}_closure")
    _write(args.out, serialize_relation(S), out)
    if args.out not in (None, "-"):
        out.write(f"tuples {len(S)}\n")
    return 0


def cmd_smp(args, out) -> int:
    doc = _load(args.files)
    alg = doc.algebra(args.algebra)
    gens = _relation(doc, args.relation)
    target = _tuple(args.target)
    verdict = subpowers.smp(alg, target, gens.tuples)
    out.write(f"member {_yn(verdict.holds)}\n")
    if verdict.holds:
        trace = verdict.witness
        out.write(f"steps {len(trace)}\noperations {trace.operations}\n")
        if args.certificate_out:
            _write(args.certificate_out, "".join(f"{line}\n" for line in trace.lines()), out)
        return 0
    cert = verdict.witness
    out.write(f"atoms {len(cert.formula.atoms)}\n")
    if args.certificate_out:
        _write(args.certificate_out, serialize_formula(cert.formula, cert.basis), out)
        basis_out = args.basis_out or f"{args.certificate_out}.basis"
        _write(basis_out, serialize_basis(cert.basis), out)
    return 1


def cmd_count_subpowers(args, out) -> int:
    doc = _load(args.files)
    alg = doc.algebra(args.algebra)
    out.write(f"algebra {alg.name}\narity {args.arity}\nsubpowers {subpowers.count_subpowers(alg, args.arity)}\n")
    return 0


def cmd_ppdef(args, out) -> int:
    doc = _load(args.files)
    R = _relation(doc, args.relation)
    result = ppdef.short_pp_definition(R, k=args.k, method=args.method)
    _write(args.out, serialize_formula(result.formula, result.basis), out)
    basis_out = args.basis_out or (f"{args.out}.basis" if args.out not in (None, "-") else None)
    if basis_out:
        _write(basis_out, serialize_basis(result.basis), out)
    for line in result.report.lines():
        out.write(line + "\n")
    for note in result.notes:
        out.write(f"note {note}\n")
    return 0


def cmd_verify(args, out) -> int:
    *basis_files, relation_file = args.basis_and_relation
    if not basis_files:
        raise _Fail("verify needs FORMULA BASIS... RELATION")
    doc = _load(basis_files)
    basis = doc.relations.copy()
    rel_doc = _load([relation_file], Document(dict(doc.algebras), dict(doc.sorts), BasisRegistry(sorts=doc.sorts.values())))
    R = _relation(rel_doc, args.relation)
    try:
        phi = parse_formula(Path(args.formula).read_text(), basis)
    except OSError as exc:
        raise _Fail(f"cannot read {args.formula}: {exc.strerror}") from None
    got = evaluate_pp_formula(phi, basis)
    result = ppdef.DefinitionResult(phi, basis, ppdef.formula_length(phi), "verify")
    v = ppdef.verify_definition(result, R)
    out.write(f"verified {_yn(v.holds)}\n")
    if not v:
        out.write(f"detail {v.detail}\n")
    out.write(f"tuples {len(got)}\n")
    return 0 if v else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppclone", description="Polymorphisms, subpowers and short pp-definitions.")
    sub = p.add_subparsers(dest="command", required=True)

    def files(sp):
        sp.add_argument("files", nargs="+", help="algebra / sort / relation files, read in order")

    sp = sub.add_parser("check-polymorphism", help="check basic operations against relations")
    files(sp)
    sp.add_argument("--algebra")
    sp.add_argument("--op", help="only this operation")
    sp.add_argument("--relation", action="append", help="only these relations (repeatable)")
    sp.set_defaults(func=cmd_check_polymorphism)

    sp = sub.add_parser("find-term", help="search a polymorphism satisfying an identity scheme")
    files(sp)
    sp.add_argument("--scheme", required=True, help="edge:K | maltsev | nu:K | majority")
    sp.add_argument("--relation", action="append")
    sp.add_argument("--budget", type=int, default=None, help="node budget (default: $PPCLONE_BUDGET or 1e8)")
    sp.set_defaults(func=cmd_find_term)

    sp = sub.add_parser("congruences", help="congruence lattice and subdirect irreducibility")
    files(sp)
    sp.add_argument("--algebra")
    sp.set_defaults(func=cmd_congruences)

    sp = sub.add_parser("analyze", help="structural report for a relation")
    files(sp)
    sp.add_argument("--relation")
    sp.add_argument("--cap", type=int, default=2, help="largest |I| for linkedness congruences")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("closure", help="subpower generated by the tuples of a relation")
    files(sp)
    sp.add_argument("--relation")
    sp.add_argument("--name")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_closure)

    sp = sub.add_parser("smp", help="subpower membership with certificates")
    files(sp)
    sp.add_argument("--algebra")
    sp.add_argument("--relation", help="relation whose tuples are the generators")
    sp.add_argument("--target", required=True, help='target tuple, e.g. "1 0 0"')
    sp.add_argument("--certificate-out", help="trace (Yes) or separating formula (No)")
    sp.add_argument("--basis-out", help="basis of a No certificate (default: <certificate-out>.basis)")
    sp.set_defaults(func=cmd_smp)

    sp = sub.add_parser("count-subpowers", help="number of subuniverses of A^n")
    files(sp)
    sp.add_argument("--algebra")
    sp.add_argument("--arity", type=int, required=True)
    sp.set_defaults(func=cmd_count_subpowers)

    sp = sub.add_parser("ppdef", help="short pp-definition of a relation")
    files(sp)
    sp.add_argument("--relation")
    sp.add_argument("--method", default="auto", help="auto | baker-pixley | affine:P | chain | composite")
    sp.add_argument("--k", type=int, default=None, help="edge parameter")
    sp.add_argument("--out", help="formula file (default: stdout)")
    sp.add_argument("--basis-out", help="basis file (default: <out>.basis)")
    sp.set_defaults(func=cmd_ppdef)

    sp = sub.add_parser("verify", help="check that a formula defines a relation")
    sp.add_argument("formula")
    sp.add_argument("basis_and_relation", nargs="+", metavar="BASIS... RELATION")
    sp.add_argument("--relation", help="relation name inside the RELATION file")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return args.func(args, out)
    except _Fail as exc:
        err.write(f"error: {exc}\n")
    except BudgetExhausted as exc:
        err.write(f"error: {exc}\n")
    except (PpCloneError, ValueError, KeyError) as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
    return 2


def run_command(argv: Sequence[str]) -> tuple[int, str, str]:
    """Run one subcommand in-process; returns (exit code, stdout text, stderr text)."""
    import io

    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


if __name__ == "__main__":
    sys.exit(main())
