"""Concrete syntax: quad documents, rule files, and operation logs.

Quad documents are a line-based N-Quads subset (no datatypes or language
tags).  The fourth element of a statement is the assignment's name; a
three-element statement gets a deterministic fresh name derived from the
document content and line number.  Blank nodes never survive parsing: they
are replaced by deterministic skolem IRIs, also derived from the document
content.  Serialisation is canonical, so equal families produce
byte-identical documents.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    Iri,
    Literal,
    NGFamily,
    Term,
    Triple,
    content_digest,
    iri,
    literal,
    skolem_iri,
    term_key,
)
from .reason import NamedPattern, Rule, RuleError, TriplePattern, Var


class ParseError(Exception):
    """Malformed input; carries the 1-based line (and column when known)."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class SerializationError(ValueError):
    """The family cannot be written in the concrete syntax."""


_IRI_ESCAPES = {c: f"\\u{ord(c):04X}" for c in '<>"{}|^`\\ '}
_LITERAL_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def format_term(t: Term) -> str:
    """N-Quads form of a term: ``<iri>`` or ``"literal"``."""
    if isinstance(t, Iri):
        out = []
        for c in t.lexical:
            if c in _IRI_ESCAPES or ord(c) < 0x20:
                out.append(f"\\u{ord(c):04X}")
            else:
                out.append(c)
        return f"<{''.join(out)}>"
    out = []
    for c in t.lexical:
        esc = _LITERAL_ESCAPES.get(c)
        if esc is not None:
            out.append(esc)
        elif ord(c) < 0x20:
            out.append(f"\\u{ord(c):04X}")
        else:
            out.append(c)
    return f'"{"".join(out)}"'


_ECHARS = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


class _Scanner:
    """Single-line token scanner shared by the quad and rule grammars."""

    def __init__(self, text: str, lineno: int):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.lineno, self.pos + 1)

    def skip_ws(self) -> None:
        text = self.text
        n = len(text)
        while self.pos < n and text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, token: str) -> None:
        self.skip_ws()
        if not self.text.startswith(token, self.pos):
            raise self.error(f"expected {token!r}")
        self.pos += len(token)

    def _unescape(self, raw: str, what: str) -> str:
        if "\\" not in raw:
            return raw
        out = []
        i = 0
        n = len(raw)
        while i < n:
            c = raw[i]
            if c != "\\":
                out.append(c)
                i += 1
                continue
            if i + 1 >= n:
                raise self.error(f"dangling escape in {what}")
            e = raw[i + 1]
            if e in _ECHARS:
                out.append(_ECHARS[e])
                i += 2
            elif e == "u" or e == "U":
                width = 4 if e == "u" else 8
                hexdigits = raw[i + 2 : i + 2 + width]
                if len(hexdigits) < width:
                    raise self.error(f"truncated \\{e} escape in {what}")
                try:
                    out.append(chr(int(hexdigits, 16)))
                except ValueError:
                    raise self.error(f"bad \\{e} escape in {what}") from None
                i += 2 + width
            else:
                raise self.error(f"unknown escape \\{e} in {what}")
        return "".join(out)

    def scan_iri(self) -> str:
        self.expect("<")
        end = self.text.find(">", self.pos)
        if end < 0:
            raise self.error("unterminated IRI")
        raw = self.text[self.pos : end]
        self.pos = end + 1
        return self._unescape(raw, "IRI")

    def scan_literal(self) -> str:
        self.expect('"')
        text = self.text
        i = self.pos
        n = len(text)
        while i < n:
            c = text[i]
            if c == "\\":
                i += 2
                continue
            if c == '"':
                raw = text[self.pos : i]
                self.pos = i + 1
                return self._unescape(raw, "literal")
            i += 1
        raise self.error("unterminated literal")

    def scan_blank_label(self) -> str:
        self.expect("_:")
        text = self.text
        i = self.pos
        n = len(text)
        while i < n and (text[i].isalnum() or text[i] in "_-."):
            i += 1
        if i == self.pos:
            raise self.error("empty blank node label")
        label = text[self.pos : i]
        self.pos = i
        return label


def _is_comment_or_blank(line: str) -> bool:
    stripped = line.lstrip()
    return not stripped or stripped.startswith("#")


@dataclass(frozen=True)
class _RawTerm:
    kind: str  # "iri" | "literal" | "blank"
    text: str


def _scan_statement_term(sc: _Scanner) -> _RawTerm:
    c = sc.peek()
    if c == "<":
        return _RawTerm("iri", sc.scan_iri())
    if c == '"':
        return _RawTerm("literal", sc.scan_literal())
    if c == "_":
        return _RawTerm("blank", sc.scan_blank_label())
    raise sc.error("expected an IRI, literal, or blank node")


def parse_quads(data: bytes | str) -> NGFamily:
    """Parse a quad document into a family.

    Statements are ``<s> <p> <o> <name> .`` or ``<s> <p> <o> .``; the
    three-element form is named ``urn:stmt:<digest>:<line>``.  ``#`` lines
    are comments.  Repeating a name with the same triple is tolerated;
    repeating it with a different triple is an error.
    """
    if isinstance(data, str):
        raw = data.encode("utf-8")
        text = data
    else:
        raw = data
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"not valid UTF-8: {e}") from None
    digest = content_digest(raw)

    def resolve(rt: _RawTerm) -> Term:
        if rt.kind == "iri":
            return iri(rt.text)
        if rt.kind == "blank":
            return skolem_iri(digest, rt.text)
        return literal(rt.text)

    amap: dict[Iri, Triple] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if _is_comment_or_blank(line):
            continue
        sc = _Scanner(line, lineno)
        parts = [_scan_statement_term(sc)]
        while sc.peek() != ".":
            if sc.at_end():
                raise sc.error("expected '.' at end of statement")
            parts.append(_scan_statement_term(sc))
            if len(parts) > 4:
                raise sc.error("too many terms in statement (expected 3 or 4)")
        sc.expect(".")
        if not sc.at_end():
            raise sc.error("trailing content after '.'")
        if len(parts) < 3:
            raise sc.error("too few terms in statement (expected 3 or 4)")

        s_raw, p_raw, o_raw = parts[0], parts[1], parts[2]
        if s_raw.kind == "literal":
            raise ParseError("literal in subject position", lineno)
        if p_raw.kind != "iri":
            raise ParseError(f"{p_raw.kind} in predicate position", lineno)
        if len(parts) == 4:
            g_raw = parts[3]
            if g_raw.kind == "literal":
                raise ParseError("literal in graph position", lineno)
            name = resolve(g_raw)
        else:
            name = iri(f"urn:stmt:{digest}:{lineno}")
        t = Triple(resolve(s_raw), resolve(p_raw), resolve(o_raw))
        old = amap.get(name)
        if old is not None and old != t:
            raise ParseError(f"duplicate name {name.lexical!r} with a different triple", lineno)
        amap[name] = t
    return NGFamily._wrap(amap)


def serialize_quads(n: NGFamily, levels=None) -> bytes:
    """Canonical quad document: assignments sorted by name, one per line,
    optionally preceded by a level-annotation comment.

    Families with literal subjects have no representation in this syntax
    and are rejected.
    """
    lines = []
    if levels is not None and len(levels) > 0:
        annotated = sorted(levels.items(), key=lambda kv: term_key(kv[0]))
        rendered = "; ".join(
            f"{t.lexical if isinstance(t, Iri) else format_term(t)}={lvl}" for t, lvl in annotated
        )
        lines.append(f"# levels: {rendered}")
    for name, t in sorted(n.items(), key=lambda kv: kv[0].lexical):
        if isinstance(t.s, Literal):
            raise SerializationError(
                f"assignment {name.lexical!r} has a literal subject; not representable"
            )
        lines.append(f"{format_term(t.s)} {format_term(t.p)} {format_term(t.o)} {format_term(name)} .")
    if not lines:
        return b""
    return ("\n".join(lines) + "\n").encode("utf-8")


def _scan_rule_term(sc: _Scanner) -> Term | Var:
    c = sc.peek()
    if c == "?":
        sc.expect("?")
        text = sc.text
        i = sc.pos
        while i < len(text) and (text[i].isalnum() or text[i] == "_"):
            i += 1
        if i == sc.pos:
            raise sc.error("empty variable name")
        name = text[sc.pos : i]
        sc.pos = i
        return Var(name)
    if c == "<":
        return iri(sc.scan_iri())
    if c == '"':
        return literal(sc.scan_literal())
    if c == "!":
        raise sc.error("negated atoms are not supported (monotonic rules only)")
    raise sc.error("expected a ?variable, <iri>, or \"literal\"")


def _scan_atom(sc: _Scanner, head: bool):
    if sc.peek() == "!":
        raise sc.error("negated atoms are not supported (monotonic rules only)")
    named = False
    sc.skip_ws()
    if sc.text.startswith("named", sc.pos):
        named = True
        sc.pos += len("named")
    sc.expect("(")
    terms = [_scan_rule_term(sc)]
    while sc.peek() == ",":
        sc.expect(",")
        terms.append(_scan_rule_term(sc))
    sc.expect(")")
    if named:
        if head:
            raise sc.error("rule head must be a plain triple pattern")
        if len(terms) != 4:
            raise sc.error("named(...) takes exactly 4 terms")
        return NamedPattern(*terms)
    if len(terms) != 3:
        raise sc.error("triple atom takes exactly 3 terms")
    return TriplePattern(*terms)


def parse_rules(data: bytes | str) -> list[Rule]:
    """Parse a rules file: one ``atom, atom, ... => atom`` per line.

    Atoms are ``(t, t, t)`` matching derived triples or ``named(g, s, p, o)``
    matching explicit assignments; terms are ``?var``, ``<iri>`` or
    ``"literal"``.  Head variables must occur in the body.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"not valid UTF-8: {e}") from None
    else:
        text = data
    rules: list[Rule] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if _is_comment_or_blank(line):
            continue
        arrow = line.find("=>")
        if arrow < 0:
            raise ParseError("expected '=>' between body and head", lineno)
        body_sc = _Scanner(line[:arrow], lineno)
        body = []
        while True:
            body.append(_scan_atom(body_sc, head=False))
            if body_sc.at_end():
                break
            body_sc.expect(",")
        head_sc = _Scanner(line[arrow + 2 :], lineno)
        head_sc.lineno = lineno
        head = _scan_atom(head_sc, head=True)
        if not head_sc.at_end():
            raise head_sc.error("trailing content after rule head")
        try:
            rules.append(Rule(body=tuple(body), head=head))
        except RuleError as e:
            raise ParseError(str(e), lineno) from None
    return rules


@dataclass(frozen=True)
class InsertOp:
    name: Iri
    triple: Triple


@dataclass(frozen=True)
class DeleteOp:
    name: Iri


def parse_ops(data: bytes | str) -> list[InsertOp | DeleteOp]:
    """Parse an operations log.

    One operation per line: ``+ <name> <s> <p> <o> .`` inserts and
    ``- <name> .`` deletes; ``#`` lines are comments.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"not valid UTF-8: {e}") from None
    else:
        text = data
    ops: list[InsertOp | DeleteOp] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if _is_comment_or_blank(line):
            continue
        sc = _Scanner(line, lineno)
        kind = sc.peek()
        if kind not in "+-":
            raise sc.error("expected '+' or '-'")
        sc.expect(kind)
        name = iri(sc.scan_iri())
        if kind == "+":
            terms = []
            for position in ("subject", "predicate", "object"):
                c = sc.peek()
                if c == "<":
                    terms.append(iri(sc.scan_iri()))
                elif c == '"':
                    if position != "object":
                        raise sc.error(f"literal in {position} position")
                    terms.append(literal(sc.scan_literal()))
                else:
                    raise sc.error(f"expected {position} term")
            op: InsertOp | DeleteOp = InsertOp(name, Triple(*terms))
        else:
            op = DeleteOp(name)
        sc.expect(".")
        if not sc.at_end():
            raise sc.error("trailing content after '.'")
        ops.append(op)
    return ops
