"""Line-oriented text formats for algebras, sorts, relations and pp-formulas.

Algebra block::

    algebra Z2
    domain 2
    op m 3
    0 1 1 0 1 0 0 1
    end

Derived sorts are single lines ``sort <id> sub <parent> <elements...>``,
``sort <id> quot <parent> <representative of each element...>``,
``sort <id> prod <factor...>`` or ``sort <id> pow <parent> <k>``.

Relation block::

    relation R_Lin 3 over Z2 Z2 Z2
    0 0 0
    ...
    end

Formula line::

    def Odd3(x1,x2,x3) := EX y1 y2 . R_Lin(x1,x2,y1) & R_Lin(y1,x3,y2) & C_1(y2)

A variable whose sort cannot be read off the atoms carries an annotation
``x:sortid``; the empty conjunction is written ``true``.  Blank lines and
lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .core import Algebra, BasisRegistry, EqAtom, OperationTable, PpFormula, RelAtom, Relation, Sort
from .errors import InvariantViolation, ParseError, PpCloneError

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass
class Document:
    """Everything read from one or more text files, in order of appearance."""

    algebras: dict[str, Algebra] = field(default_factory=dict)
    sorts: dict[str, Sort] = field(default_factory=dict)
    relations: BasisRegistry = field(default_factory=BasisRegistry)

    def relation(self, name: str) -> Relation:
        return self.relations[name]

    def algebra(self, name: str | None = None) -> Algebra:
        if name is None:
            if len(self.algebras) != 1:
                raise PpCloneError(f"expected exactly one algebra, found {len(self.algebras)}")
            return next(iter(self.algebras.values()))
        try:
            return self.algebras[name]
        except KeyError:
            raise PpCloneError(f"unknown algebra {name!r}") from None


def _lines(text: str) -> list[tuple[int, str]]:
    out = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            out.append((no, line))
    return out


def _col(raw_line: str, token: str) -> int:
    return raw_line.find(token) + 1 if token in raw_line else 1


def _int(token: str, line: int, raw: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got {token!r}", line, _col(raw, token)) from None


def _name(token: str, line: int, raw: str) -> str:
    if not _NAME.match(token):
        raise ParseError(f"invalid name {token!r}", line, _col(raw, token))
    return token


def parse_document(text: str, into: Document | None = None) -> Document:
    """Parse algebra blocks, sort lines and relation blocks; sort ids resolve against ``into`` too."""
    doc = into if into is not None else Document()
    for s in doc.relations.sorts.values():
        doc.sorts.setdefault(s.id, s)
    lines = _lines(text)
    i = 0

    def need(k: int) -> tuple[int, str]:
        if k >= len(lines):
            last = lines[-1][0] if lines else 1
            raise ParseError("unexpected end of input (missing 'end')", last, 1)
        return lines[k]

    def sort_ref(token: str, no: int, raw: str) -> Sort:
        try:
            return doc.sorts[token]
        except KeyError:
            raise ParseError(f"unknown sort {token!r}", no, _col(raw, token)) from None

    while i < len(lines):
        no, raw = lines[i]
        words = raw.split()
        head = words[0]
        if head == "algebra":
            if len(words) != 2:
                raise ParseError("expected 'algebra <name>'", no, 1)
            name = _name(words[1], no, raw)
            i += 1
            no2, raw2 = need(i)
            w2 = raw2.split()
            if len(w2) != 2 or w2[0] != "domain":
                raise ParseError("expected 'domain <size>'", no2, 1)
            size = _int(w2[1], no2, raw2)
            if size < 1:
                raise InvariantViolation("domain size must be positive", no2, _col(raw2, w2[1]))
            i += 1
            ops = []
            while True:
                no3, raw3 = need(i)
                w3 = raw3.split()
                if w3 == ["end"]:
                    i += 1
                    break
                if w3[0] != "op" or len(w3) != 3:
                    raise ParseError("expected 'op <name> <arity>' or 'end'", no3, 1)
                opname = _name(w3[1], no3, raw3)
                arity = _int(w3[2], no3, raw3)
                i += 1
                no4, raw4 = need(i)
                vals = [_int(t, no4, raw4) for t in raw4.split()]
                if len(vals) != size**arity:
                    raise ParseError(f"operation {opname} needs {size ** arity} entries, got {len(vals)}", no4, 1)
                for t in raw4.split():
                    if not 0 <= int(t) < size:
                        raise InvariantViolation(f"table entry {t} outside domain of size {size}", no4, _col(raw4, t))
                ops.append(OperationTable(opname, arity, size, vals))
                i += 1
            try:
                alg = Algebra(name, size, ops)
            except ValueError as exc:
                raise InvariantViolation(str(exc), no, 1) from None
            doc.algebras[name] = alg
            _bind(doc, Sort.base(alg), no, raw)
            continue
        if head == "sort":
            if len(words) < 4:
                raise ParseError("expected 'sort <id> <kind> ...'", no, 1)
            sid = _name(words[1], no, raw)
            kind = words[2]
            try:
                if kind == "sub":
                    parent = sort_ref(words[3], no, raw)
                    sort = Sort.subalgebra(parent, [_int(t, no, raw) for t in words[4:]], id=sid)
                elif kind == "quot":
                    parent = sort_ref(words[3], no, raw)
                    sort = Sort.quotient(parent, [_int(t, no, raw) for t in words[4:]], id=sid)
                elif kind == "prod":
                    sort = Sort.product([sort_ref(t, no, raw) for t in words[3:]], id=sid)
                elif kind == "pow":
                    if len(words) != 5:
                        raise ParseError("expected 'sort <id> pow <parent> <k>'", no, 1)
                    sort = Sort.power(sort_ref(words[3], no, raw), _int(words[4], no, raw), id=sid)
                else:
                    raise ParseError(f"unknown sort kind {kind!r}", no, _col(raw, kind))
            except ParseError:
                raise
            except (ValueError, PpCloneError) as exc:
                raise InvariantViolation(str(exc), no, 1) from None
            _bind(doc, sort, no, raw)
            i += 1
            continue
        if head == "relation":
            if len(words) < 4 or words[3] != "over":
                raise ParseError("expected 'relation <name> <arity> over <sortid> ...'", no, 1)
            name = _name(words[1], no, raw)
            arity = _int(words[2], no, raw)
            sorts = [sort_ref(t, no, raw) for t in words[4:]]
            if len(sorts) != arity:
                raise ParseError(f"relation {name} has arity {arity} but lists {len(sorts)} sorts", no, 1)
            i += 1
            tuples = []
            while True:
                no2, raw2 = need(i)
                i += 1
                if raw2 == "end":
                    break
                toks = raw2.split()
                if len(toks) != arity:
                    raise ParseError(f"expected {arity} entries, got {len(toks)}", no2, 1)
                t = []
                for tok, s in zip(toks, sorts):
                    a = _int(tok, no2, raw2)
                    if not 0 <= a < s.size:
                        raise InvariantViolation(f"entry {a} outside sort {s.id} of size {s.size}", no2, _col(raw2, tok))
                    t.append(a)
                tuples.append(tuple(t))
            try:
                doc.relations.add(Relation(name, sorts, tuples))
            except (ValueError, PpCloneError) as exc:
                raise InvariantViolation(str(exc), no, 1) from None
            continue
        raise ParseError(f"unexpected line starting with {head!r}", no, 1)
    return doc


def _bind(doc: Document, sort: Sort, no: int, raw: str) -> None:
    have = doc.sorts.get(sort.id)
    if have is not None and have != sort:
        raise InvariantViolation(f"sort id {sort.id!r} is already bound to a different sort", no, 1)
    doc.sorts[sort.id] = sort
    doc.relations.add_sort(sort)


def parse_algebra(text: str) -> Algebra:
    return parse_document(text).algebra()


def parse_relations(text: str, sorts: Mapping[str, Sort] | BasisRegistry) -> list[Relation]:
    """Relations of ``text``; sort ids resolve against ``sorts`` (a mapping or a registry)."""
    doc = Document()
    table = sorts.sorts if isinstance(sorts, BasisRegistry) else sorts
    for s in table.values():
        _bind(doc, s, 0, "")
    before = set(doc.relations)
    parse_document(text, doc)
    return [doc.relations[n] for n in doc.relations if n not in before]


# ---------------------------------------------------------------------------
# serializers


def serialize_algebra(algebra: Algebra) -> str:
    out = [f"algebra {algebra.name}", f"domain {algebra.size}"]
    for op in algebra.operations:
        out.append(f"op {op.name} {op.arity}")
        out.append(" ".join(str(int(v)) for v in op.table))
    out.append("end")
    return "\n".join(out) + "\n"


def serialize_sort(sort: Sort) -> str:
    if sort.kind == "base":
        raise ValueError("base sorts are written as algebra blocks")
    if sort.kind in ("sub", "quot"):
        body = " ".join(map(str, sort.data))
        return f"sort {sort.id} {sort.kind} {sort.parents[0].id} {body}\n"
    if sort.kind == "pow":
        return f"sort {sort.id} pow {sort.parents[0].id} {sort.data}\n"
    return f"sort {sort.id} prod {' '.join(p.id for p in sort.parents)}\n"


def serialize_relation(R: Relation) -> str:
    out = [f"relation {R.name} {R.arity} over {' '.join(s.id for s in R.sorts)}"]
    out += [" ".join(map(str, t)) for t in R.tuples]
    out.append("end")
    return "\n".join(out) + "\n"


def _sort_closure(sorts: Iterable[Sort]) -> list[Sort]:
    seen: dict[Sort, None] = {}
    for s in sorts:
        for a in s.ancestors():
            seen.setdefault(a)
    return list(seen)


def serialize_document(relations: Iterable[Relation], extra_sorts: Iterable[Sort] = ()) -> str:
    """Self-contained text: algebra blocks, derived sort lines, then relations sorted by name."""
    rels = sorted(relations, key=lambda r: r.name)
    sorts = _sort_closure(list(extra_sorts) + [s for r in rels for s in r.sorts])
    parts = []
    for s in sorts:
        if s.kind == "base":
            parts.append(serialize_algebra(s.algebra))
    for s in sorts:
        if s.kind != "base":
            parts.append(serialize_sort(s))
    parts += [serialize_relation(r) for r in rels]
    return "".join(parts)


def serialize_basis(basis: BasisRegistry) -> str:
    return serialize_document(basis.values(), basis.sorts.values())


def _inferred_sorts(phi: PpFormula, basis: Mapping[str, Relation] | None) -> dict[str, Sort]:
    """Sorts that a reader can recover from relation atoms and equalities."""
    known: dict[str, Sort] = {}
    if basis is not None:
        for atom in phi.atoms:
            if isinstance(atom, RelAtom) and atom.symbol in basis:
                for v, s in zip(atom.args, basis[atom.symbol].sorts):
                    known.setdefault(v, s)
    changed = True
    eqs = [a for a in phi.atoms if isinstance(a, EqAtom)]
    while changed:
        changed = False
        for e in eqs:
            for u, v in ((e.left, e.right), (e.right, e.left)):
                if u in known and v not in known:
                    known[v] = known[u]
                    changed = True
    return known


def serialize_formula(phi: PpFormula, basis: Mapping[str, Relation] | None = None) -> str:
    """Canonical one-line form; variables whose sort is not implied by the atoms get ``:sortid``."""
    known = _inferred_sorts(phi, basis)
    sorts = phi.sort_map

    def var(v: str) -> str:
        return v if v in known else f"{v}:{sorts[v].id}"

    head = f"def {phi.name}({','.join(var(v) for v in phi.free)}) := "
    if phi.bound:
        head += "EX " + " ".join(var(v) for v in phi.bound) + " . "
    if not phi.atoms:
        body = "true"
    else:
        body = " & ".join(f"{a.left} = {a.right}" if isinstance(a, EqAtom) else f"{a.symbol}({','.join(a.args)})"
                          for a in phi.atoms)
    return head + body + "\n"


_TOKEN = re.compile(r"\s*(?:(:=)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def _tokenize(line: str, no: int) -> list[tuple[str, int]]:
    out = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None or m.end() == pos:
            break
        tok = m.group(1) or m.group(2) or m.group(3)
        if tok is None:
            break
        out.append((tok, m.start(m.lastindex) + 1))
        pos = m.end()
    return out


def parse_formula(text: str, registry: BasisRegistry | Mapping[str, Relation],
                  sorts: Mapping[str, Sort] | None = None) -> PpFormula:
    """Parse one ``def`` line; atom symbols and sort annotations resolve against ``registry``."""
    lines = _lines(text)
    if len(lines) != 1:
        raise ParseError(f"expected one formula line, found {len(lines)}", lines[1][0] if len(lines) > 1 else 1, 1)
    no, raw = lines[0]
    toks = _tokenize(raw, no)
    sort_table: dict[str, Sort] = dict(sorts or {})
    if isinstance(registry, BasisRegistry):
        sort_table = {**registry.sorts, **sort_table}
    k = 0

    def peek() -> str | None:
        return toks[k][0] if k < len(toks) else None

    def take(expected: str | None = None, what: str = "token") -> str:
        nonlocal k
        if k >= len(toks):
            raise ParseError(f"unexpected end of formula, expected {expected or what}", no, len(raw) + 1)
        tok, col = toks[k]
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, got {tok!r}", no, col)
        if expected is None and not _NAME.match(tok):
            raise ParseError(f"expected {what}, got {tok!r}", no, col)
        k += 1
        return tok

    def col() -> int:
        return toks[k][1] if k < len(toks) else len(raw) + 1

    annotations: dict[str, tuple[Sort, int]] = {}

    def variable() -> str:
        c = col()
        v = take(what="variable")
        if peek() == ":":
            take(":")
            c2 = col()
            sid = take(what="sort id")
            if sid not in sort_table:
                raise ParseError(f"unknown sort {sid!r}", no, c2)
            annotations[v] = (sort_table[sid], c)
        return v

    take("def")
    name = take(what="formula name")
    take("(")
    free: list[str] = []
    if peek() != ")":
        free.append(variable())
        while peek() == ",":
            take(",")
            free.append(variable())
    take(")")
    take(":=")
    bound: list[str] = []
    if peek() == "EX":
        take("EX")
        while peek() != ".":
            if peek() is None:
                raise ParseError("expected '.' after the quantified variables", no, col())
            bound.append(variable())
        take(".")
    atoms: list = []
    positions: list[int] = []
    if peek() == "true":
        take("true")
    else:
        while True:
            c = col()
            first = take(what="atom")
            if peek() == "(":
                take("(")
                args: list[str] = []
                if peek() != ")":
                    args.append(take(what="variable"))
                    while peek() == ",":
                        take(",")
                        args.append(take(what="variable"))
                take(")")
                atoms.append(RelAtom(first, args))
            elif peek() == "=":
                take("=")
                atoms.append(EqAtom(first, take(what="variable")))
            else:
                raise ParseError(f"expected '(' or '=' after {first!r}", no, col())
            positions.append(c)
            if peek() is None:
                break
            take("&")
    if k != len(toks):
        raise ParseError(f"unexpected trailing {toks[k][0]!r}", no, toks[k][1])

    declared = free + bound
    for atom, c in zip(atoms, positions):
        for v in atom.variables:
            if v not in declared:
                raise InvariantViolation(f"variable {v!r} is not declared", no, c)
        if isinstance(atom, RelAtom):
            if atom.symbol not in registry:
                raise InvariantViolation(f"unknown relation symbol {atom.symbol!r}", no, c)
            if registry[atom.symbol].arity != len(atom.args):
                raise InvariantViolation(f"{atom.symbol} has arity {registry[atom.symbol].arity}", no, c)
    known: dict[str, Sort] = {}
    for atom, c in zip(atoms, positions):
        if isinstance(atom, RelAtom):
            for v, s in zip(atom.args, registry[atom.symbol].sorts):
                if known.setdefault(v, s) != s:
                    raise InvariantViolation(f"variable {v!r} is used at sorts {known[v].id} and {s.id}", no, c)
    for v, (s, c) in annotations.items():
        if known.setdefault(v, s) != s:
            raise InvariantViolation(f"annotation of {v!r} contradicts its use at sort {known[v].id}", no, c)
    eqs = [(a, c) for a, c in zip(atoms, positions) if isinstance(a, EqAtom)]
    changed = True
    while changed:
        changed = False
        for e, c in eqs:
            lu, ru = known.get(e.left), known.get(e.right)
            if lu is not None and ru is not None and lu != ru:
                raise InvariantViolation(f"equality {e.left} = {e.right} joins different sorts", no, c)
            if lu is not None and ru is None:
                known[e.right] = lu
                changed = True
            elif ru is not None and lu is None:
                known[e.left] = ru
                changed = True
    for v in declared:
        if v not in known:
            raise ParseError(f"cannot infer the sort of {v!r}; annotate it as {v}:<sortid>", no, _col(raw, v))
    try:
        return PpFormula(name, tuple(free), tuple(known[v] for v in free), tuple(bound),
                         tuple(known[v] for v in bound), tuple(atoms))
    except (ValueError, PpCloneError) as exc:
        raise InvariantViolation(str(exc), no, 1) from None


# ---------------------------------------------------------------------------
# derivation traces


def serialize_trace(lines: Sequence[str]) -> str:
    return "".join(f"{line}\n" for line in lines)
