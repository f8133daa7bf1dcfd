"""Core data model for families of named graphs.

An NG family is a finite partial map from names (IRIs) to triples.  Naming
a triple is what turns the name into meta-information about that triple,
so everything downstream (merging, reasoning, coherence checking) is built
on this one structure.

Families are immutable and always kept in canonical form: their vocabulary
is implicit, i.e. exactly the set of terms occurring in some assignment.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Iterator, Mapping, NamedTuple


class Term:
    """An IRI or a literal.  Equality compares (kind, lexical form).

    IRIs and literals are disjoint: ``Iri("a") != Literal("a")``.  Lexical
    forms are opaque unicode strings; no IRI normalisation or literal
    datatype structure is applied.
    """

    __slots__ = ("lexical", "_hash")

    def __init__(self, lexical: str):
        if type(self) is Term:
            raise TypeError("instantiate Iri or Literal, not Term")
        if not isinstance(lexical, str):
            raise TypeError(f"lexical form must be str, got {type(lexical).__name__}")
        self.lexical = lexical
        self._hash = hash((type(self), lexical))

    def __eq__(self, other):
        if self is other:
            return True
        return type(other) is type(self) and other.lexical == self.lexical

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"{type(self).__name__}({self.lexical!r})"

    @property
    def is_iri(self) -> bool:
        return type(self) is Iri


class Iri(Term):
    __slots__ = ()


class Literal(Term):
    __slots__ = ()


# Factory constructors deduplicate terms so that equal terms are usually the
# same object (cheap equality, shared memory).  Direct construction is still
# allowed; equality is by value either way.
_IRIS: dict[str, Iri] = {}
_LITERALS: dict[str, Literal] = {}


def iri(lexical: str) -> Iri:
    """Interned IRI constructor."""
    t = _IRIS.get(lexical)
    if t is None:
        t = _IRIS[lexical] = Iri(lexical)
    return t


def literal(lexical: str) -> Literal:
    """Interned literal constructor."""
    t = _LITERALS.get(lexical)
    if t is None:
        t = _LITERALS[lexical] = Literal(lexical)
    return t


def term_key(t: Term) -> tuple[int, str]:
    """Deterministic sort key: IRIs before literals, then lexical."""
    return (0 if type(t) is Iri else 1, t.lexical)


class Triple(NamedTuple):
    """One labelled statement: subject, predicate, object."""

    s: Term
    p: Iri
    o: Term


def _check_triple(t) -> Triple:
    if not isinstance(t, Triple):
        t = Triple(*t)
    if not isinstance(t.s, Term) or not isinstance(t.o, Term):
        raise TypeError("subject and object must be Terms")
    if not isinstance(t.p, Iri):
        raise TypeError("predicate must be an IRI")
    return t


class NGFamily:
    """A finite partial map from names (IRIs) to triples.

    Each name maps to at most one triple; the empty map is a valid family.
    Subjects and objects may be IRIs or literals, predicates and names are
    always IRIs.  Instances are immutable and safe to share across threads.
    """

    __slots__ = ("_assignments",)

    def __init__(self, assignments: Mapping[Iri, Triple] | Iterable[tuple[Iri, Triple]] = ()):
        amap: dict[Iri, Triple] = {}
        items = assignments.items() if isinstance(assignments, Mapping) else assignments
        for name, t in items:
            if not isinstance(name, Iri):
                raise TypeError(f"name must be an IRI, got {name!r}")
            t = _check_triple(t)
            old = amap.get(name)
            if old is not None and old != t:
                raise ValueError(f"name {name.lexical!r} assigned to two different triples")
            amap[name] = t
        self._assignments = amap

    @classmethod
    def _wrap(cls, amap: dict[Iri, Triple]) -> "NGFamily":
        # Internal fast path: caller guarantees a valid assignment map that
        # will never be mutated afterwards.
        fam = object.__new__(cls)
        fam._assignments = amap
        return fam

    def get(self, name: Iri) -> Triple | None:
        return self._assignments.get(name)

    def __getitem__(self, name: Iri) -> Triple:
        return self._assignments[name]

    def __contains__(self, name) -> bool:
        return name in self._assignments

    def __len__(self) -> int:
        return len(self._assignments)

    def __iter__(self) -> Iterator[Iri]:
        return iter(self._assignments)

    def items(self):
        return self._assignments.items()

    def triples(self) -> Iterator[Triple]:
        return iter(self._assignments.values())

    def __eq__(self, other):
        if not isinstance(other, NGFamily):
            return NotImplemented
        return self._assignments == other._assignments

    __hash__ = None  # mutable-sized mapping semantics; compare with equiv()/==

    def __repr__(self):
        if not self._assignments:
            return "NGFamily()"
        parts = ", ".join(
            f"{name.lexical}->({t.s.lexical},{t.p.lexical},{t.o.lexical})"
            for name, t in sorted(self._assignments.items(), key=lambda kv: kv[0].lexical)
        )
        return f"NGFamily({{{parts}}})"


#: The empty family.
EMPTY = NGFamily()


def atomic(name: Iri, s: Term, p: Iri, o: Term) -> NGFamily:
    """The family defined only at ``name``, mapping it to ``(s, p, o)``."""
    if not isinstance(name, Iri):
        raise TypeError("name must be an IRI")
    return NGFamily._wrap({name: _check_triple(Triple(s, p, o))})


def support(n: NGFamily) -> frozenset[Iri]:
    """The set of names on which the family is defined."""
    return frozenset(n._assignments)


def vocabulary(n: NGFamily) -> frozenset[Term]:
    """All terms occurring in the family, as names or inside triples."""
    vocab: set[Term] = set(n._assignments)
    for t in n._assignments.values():
        vocab.add(t.s)
        vocab.add(t.p)
        vocab.add(t.o)
    return frozenset(vocab)


def conflict_set(n1: NGFamily, n2: NGFamily) -> frozenset[Iri]:
    """Names assigned to different triples by the two families."""
    a, b = n1._assignments, n2._assignments
    if len(b) < len(a):
        a, b = b, a
    return frozenset(u for u, t in a.items() if u in b and b[u] != t)


def extends(n: NGFamily, n2: NGFamily) -> bool:
    """True iff every assignment of ``n`` appears identically in ``n2``."""
    a, b = n._assignments, n2._assignments
    if len(a) > len(b):
        return False
    return all(b.get(u) == t for u, t in a.items())


def equiv(n: NGFamily, n2: NGFamily) -> bool:
    """True iff the families extend each other."""
    return n._assignments == n2._assignments


def canonicalize(n: NGFamily) -> NGFamily:
    """The minimal representative of the family's equivalence class.

    Families here carry no explicit vocabulary beyond their assignments, so
    every family is already canonical and this is the identity.
    """
    return n


class RenamingError(ValueError):
    """A renaming is not injective or breaks a position constraint."""


class RenamingMap:
    """An injective map over terms, acting as the identity outside its
    explicit entries."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[Term, Term] | Iterable[tuple[Term, Term]] = ()):
        ents = dict(entries.items() if isinstance(entries, Mapping) else entries)
        seen: set[Term] = set()
        for src, dst in ents.items():
            if not isinstance(src, Term) or not isinstance(dst, Term):
                raise TypeError("renaming entries must map Term to Term")
            if dst in seen:
                raise RenamingError(f"two terms renamed to {dst!r}")
            seen.add(dst)
        self._entries = ents

    def __call__(self, t: Term) -> Term:
        return self._entries.get(t, t)

    def items(self):
        return self._entries.items()

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other):
        if not isinstance(other, RenamingMap):
            return NotImplemented
        return self._entries == other._entries

    __hash__ = None

    def inverse(self) -> "RenamingMap":
        return RenamingMap({dst: src for src, dst in self._entries.items()})

    def __repr__(self):
        parts = ", ".join(f"{k.lexical}->{v.lexical}" for k, v in self._entries.items())
        return f"RenamingMap({{{parts}}})"


def rename(n: NGFamily, sigma: RenamingMap) -> NGFamily:
    """Apply a renaming to every position of the family.

    The renaming must be injective on the family's vocabulary and must keep
    names and predicates IRIs.
    """
    vocab = vocabulary(n)
    images: set[Term] = set()
    for t in vocab:
        img = sigma(t)
        if img in images:
            raise RenamingError(f"renaming is not injective on the vocabulary at {img!r}")
        images.add(img)
    out: dict[Iri, Triple] = {}
    for name, t in n._assignments.items():
        new_name = sigma(name)
        if not isinstance(new_name, Iri):
            raise RenamingError(f"name {name.lexical!r} renamed to a literal")
        new_p = sigma(t.p)
        if not isinstance(new_p, Iri):
            raise RenamingError(f"predicate {t.p.lexical!r} renamed to a literal")
        out[new_name] = Triple(sigma(t.s), new_p, sigma(t.o))
    return NGFamily._wrap(out)


def content_digest(data: bytes) -> str:
    """Short deterministic digest of raw file content, used to mint names."""
    return hashlib.sha256(data).hexdigest()[:16]


def skolem_iri(digest: str, label: str) -> Iri:
    """The IRI replacing blank node ``_:label`` in a document with the given
    content digest.  Deterministic per document content."""
    return iri(f"urn:skolem:{digest}:{label}")
