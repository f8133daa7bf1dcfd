"""Forward-chaining rule reasoners over NG families.

A reasoner here is any function transforming families.  This module gives
the rule-based kind a concrete engine: bodies match either derived triples
or explicit name assignments, heads derive new triples, and ``apply``
computes the least fixed point (semi-naive, so only new facts re-join each
round).  On top of that sit change tracking (``diff`` / ``with_tracking``)
and the provenance inference reconstructing which reasoner used which.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .algebra import rename_join
from .model import Iri, Literal, NGFamily, Term, Triple, iri, term_key
from .stratify import check_batch

# Built-in vocabulary.  These are the plain IRIs the rule displays use.
PREDICATE = iri("predicate")
TRANSITIVE = iri("transitive")
REFLEXIVE = iri("reflexive")
SYMMETRIC = iri("symmetric")
REVERSE = iri("reverse")
NEW = iri("new")
UPD = iri("upd")
DEL = iri("del")
USES = iri("uses")


class RuleError(ValueError):
    """A rule violates the well-formedness constraints."""


@dataclass(frozen=True)
class Var:
    """A rule variable, written ``?name`` in the concrete syntax."""

    name: str

    def __repr__(self):
        return f"?{self.name}"


Pattern = Term | Var


@dataclass(frozen=True)
class TriplePattern:
    """Matches triples of the derived set (explicit or inferred)."""

    s: Pattern
    p: Pattern
    o: Pattern


@dataclass(frozen=True)
class NamedPattern:
    """Matches explicit assignments ``g -> (s, p, o)`` only."""

    g: Pattern
    s: Pattern
    p: Pattern
    o: Pattern


@dataclass(frozen=True)
class DomainPattern:
    """Binds a variable to every term occurring in the input family.

    Used to keep otherwise unguarded derivations (reflexive closure) inside
    a finite domain.
    """

    v: Var


Atom = TriplePattern | NamedPattern | DomainPattern


def _pattern_vars(atom: Atom) -> Iterable[Var]:
    if isinstance(atom, DomainPattern):
        yield atom.v
        return
    parts = (atom.g, atom.s, atom.p, atom.o) if isinstance(atom, NamedPattern) else (atom.s, atom.p, atom.o)
    for part in parts:
        if isinstance(part, Var):
            yield part


@dataclass(frozen=True)
class Rule:
    """``body => head``.  Monotonic fragment only: no negated atoms, and
    every head variable must occur in the body (so fixed points stay
    finite)."""

    body: tuple[Atom, ...]
    head: TriplePattern

    def __post_init__(self):
        if not isinstance(self.head, TriplePattern):
            raise RuleError("rule head must be a triple pattern")
        bound = set()
        for atom in self.body:
            bound.update(_pattern_vars(atom))
        for v in _pattern_vars(self.head):
            if v not in bound:
                raise RuleError(f"unbound head variable ?{v.name}")


@dataclass(frozen=True)
class ReasonerId:
    """IRI naming a reasoner, so that its activity can itself be cited."""

    iri: Iri


def _reasoner_iri(reasoner: "ReasonerId | Iri") -> Iri:
    return reasoner.iri if isinstance(reasoner, ReasonerId) else reasoner


@dataclass(frozen=True)
class DeltaReport:
    """Names created, updated and deleted by one reasoner run."""

    created: frozenset[Iri]
    updated: frozenset[Iri]
    deleted: frozenset[Iri]


def diff(n: NGFamily, n2: NGFamily) -> DeltaReport:
    """Compare two families as before/after of a reasoner run."""
    a, b = n._assignments, n2._assignments
    created = frozenset(u for u in b if u not in a)
    deleted = frozenset(u for u in a if u not in b)
    updated = frozenset(u for u, t in a.items() if u in b and b[u] != t)
    return DeltaReport(created, updated, deleted)


def builtin_closure_rules() -> list[Rule]:
    """The built-in closure rule set: transitive, reflexive (bounded to the
    active vocabulary), symmetric and reverse predicates, plus the axiom
    that ``reverse`` is itself symmetric."""
    a, b, c, d, rb = Var("a"), Var("b"), Var("c"), Var("d"), Var("rb")
    return [
        Rule(
            body=(
                TriplePattern(a, b, c),
                TriplePattern(c, b, d),
                TriplePattern(b, PREDICATE, TRANSITIVE),
            ),
            head=TriplePattern(a, b, d),
        ),
        Rule(
            body=(TriplePattern(b, PREDICATE, REFLEXIVE), DomainPattern(a)),
            head=TriplePattern(a, b, a),
        ),
        Rule(
            body=(TriplePattern(b, PREDICATE, SYMMETRIC), TriplePattern(a, b, c)),
            head=TriplePattern(c, b, a),
        ),
        Rule(
            body=(TriplePattern(b, REVERSE, rb), TriplePattern(a, b, c)),
            head=TriplePattern(c, rb, a),
        ),
        Rule(body=(), head=TriplePattern(REVERSE, PREDICATE, SYMMETRIC)),
    ]


class _FactIndex:
    """Triple set with the lookup shapes the joins need."""

    __slots__ = ("all", "by_p", "by_sp", "by_op")

    def __init__(self):
        self.all: set[Triple] = set()
        self.by_p: dict = {}
        self.by_sp: dict = {}
        self.by_op: dict = {}

    def add(self, t: Triple) -> None:
        self.all.add(t)
        self.by_p.setdefault(t.p, []).append(t)
        self.by_sp.setdefault((t.s, t.p), []).append(t)
        self.by_op.setdefault((t.o, t.p), []).append(t)

    def candidates(self, s, p, o):
        if p is not None:
            if s is not None:
                return self.by_sp.get((s, p), ())
            if o is not None:
                return self.by_op.get((o, p), ())
            return self.by_p.get(p, ())
        return self.all


def _resolve(part: Pattern, subst: dict):
    if isinstance(part, Var):
        return subst.get(part)
    return part


def _match_triple(pattern: TriplePattern, t: Triple, subst: dict) -> dict | None:
    out = subst
    for part, value in ((pattern.s, t.s), (pattern.p, t.p), (pattern.o, t.o)):
        if isinstance(part, Var):
            bound = out.get(part)
            if bound is None:
                if out is subst:
                    out = dict(subst)
                out[part] = value
            elif bound != value:
                return None
        elif part != value:
            return None
    return out


def _eval_atoms(atoms, i, facts: _FactIndex, amap, domain, subst, out_substs):
    """Extend ``subst`` over atoms[i:], appending complete matches."""
    if i == len(atoms):
        out_substs.append(subst)
        return
    atom = atoms[i]
    if isinstance(atom, TriplePattern):
        s = _resolve(atom.s, subst)
        p = _resolve(atom.p, subst)
        o = _resolve(atom.o, subst)
        for t in facts.candidates(s, p, o):
            ext = _match_triple(atom, t, subst)
            if ext is not None:
                _eval_atoms(atoms, i + 1, facts, amap, domain, ext, out_substs)
    elif isinstance(atom, NamedPattern):
        g = _resolve(atom.g, subst)
        inner = TriplePattern(atom.s, atom.p, atom.o)
        if g is not None:
            t = amap.get(g)
            if t is not None:
                ext = _match_triple(inner, t, subst)
                if ext is not None:
                    _eval_atoms(atoms, i + 1, facts, amap, domain, ext, out_substs)
        else:
            for name, t in amap.items():
                ext = _match_triple(inner, t, subst)
                if ext is not None:
                    ext = dict(ext)
                    ext[atom.g] = name
                    _eval_atoms(atoms, i + 1, facts, amap, domain, ext, out_substs)
    else:  # DomainPattern
        bound = subst.get(atom.v)
        if bound is not None:
            if bound in domain:
                _eval_atoms(atoms, i + 1, facts, amap, domain, subst, out_substs)
        else:
            for term in domain:
                ext = dict(subst)
                ext[atom.v] = term
                _eval_atoms(atoms, i + 1, facts, amap, domain, ext, out_substs)


def _instantiate(head: TriplePattern, subst: dict) -> Triple:
    s = _resolve(head.s, subst)
    p = _resolve(head.p, subst)
    o = _resolve(head.o, subst)
    if not isinstance(p, Iri):
        raise RuleError(f"derived predicate is not an IRI: {p!r}")
    return Triple(s, p, o)


def derived_set(rules: Sequence[Rule], n: NGFamily) -> set[Triple]:
    """The least triple set containing the family's triples and closed
    under the rules (semi-naive evaluation)."""
    amap = n._assignments
    # Active vocabulary: insertion-ordered with O(1) membership.
    domain: dict[Term, None] = {}
    for name, t in amap.items():
        domain[name] = None
        domain[t.s] = None
        domain[t.p] = None
        domain[t.o] = None

    facts = _FactIndex()
    for t in amap.values():
        if t not in facts.all:
            facts.add(t)

    static_rules = [r for r in rules if not any(isinstance(a, TriplePattern) for a in r.body)]
    dynamic_rules = [
        (r, [i for i, a in enumerate(r.body) if isinstance(a, TriplePattern)])
        for r in rules
        if any(isinstance(a, TriplePattern) for a in r.body)
    ]

    delta: list[Triple] = list(facts.all)
    for rule in static_rules:
        matches: list[dict] = []
        _eval_atoms(rule.body, 0, facts, amap, domain, {}, matches)
        for subst in matches:
            t = _instantiate(rule.head, subst)
            if t not in facts.all:
                facts.add(t)
                delta.append(t)

    while delta:
        new: list[Triple] = []
        new_set: set[Triple] = set()
        for rule, derived_positions in dynamic_rules:
            for pos in derived_positions:
                # Require the distinguished atom to match a last-round fact;
                # remaining atoms run over the full set.
                atom = rule.body[pos]
                rest = rule.body[:pos] + rule.body[pos + 1 :]
                for t in delta:
                    seed = _match_triple(atom, t, {})
                    if seed is None:
                        continue
                    matches = []
                    _eval_atoms(rest, 0, facts, amap, domain, seed, matches)
                    for subst in matches:
                        derived = _instantiate(rule.head, subst)
                        if derived not in facts.all and derived not in new_set:
                            new_set.add(derived)
                            new.append(derived)
        for t in new:
            facts.add(t)
        delta = new
    return facts.all


def _rules_fingerprint(rules: Sequence[Rule]) -> str:
    return hashlib.sha256(repr(list(rules)).encode()).hexdigest()[:16]


def _fresh_assignment_name(namespace: str, t: Triple, occupied) -> Iri:
    digest = hashlib.sha256(
        "\x00".join(
            f"{'L' if isinstance(part, Literal) else 'I'}{part.lexical}" for part in t
        ).encode()
    ).hexdigest()
    width = 16
    while True:
        candidate = iri(f"urn:derived:{namespace}:{digest[:width]}")
        if candidate not in occupied:
            return candidate
        width += 4  # only reachable on an engineered digest-prefix collision


def apply(rules: Sequence[Rule], n: NGFamily, reasoner: ReasonerId | Iri | None = None) -> NGFamily:
    """Extend the family with one fresh-named assignment per derived triple
    not already present as some assignment's triple.

    Monotone: the result extends the input.  Fresh names are deterministic
    (content-addressed under the reasoner's IRI, or under a fingerprint of
    the rule set), so re-running adds nothing.
    """
    for r in rules:
        if not isinstance(r, Rule):
            raise RuleError(f"not a rule: {r!r}")
    derived = derived_set(rules, n)
    existing = set(n._assignments.values())
    fresh = sorted(derived - existing, key=lambda t: tuple(term_key(part) for part in t))
    if not fresh:
        return n
    if reasoner is not None:
        namespace = hashlib.sha256(_reasoner_iri(reasoner).lexical.encode()).hexdigest()[:16]
    else:
        namespace = _rules_fingerprint(rules)
    out = dict(n._assignments)
    for t in fresh:
        out[_fresh_assignment_name(namespace, t, out)] = t
    return NGFamily._wrap(out)


Reasoner = Callable[[NGFamily], NGFamily]


def with_tracking(reasoner_id: ReasonerId | Iri, gamma: Reasoner, n: NGFamily) -> NGFamily:
    """Run ``gamma`` and record its changes in the output itself.

    Every created, updated or deleted name ``x`` yields a fresh-named tag
    assignment ``(reasoner, new|upd|del, x)``; tags are combined with the
    output through the renaming merge, so nothing is ever lost to a name
    clash.
    """
    gid = _reasoner_iri(reasoner_id)
    out = gamma(n)
    delta = diff(n, out)
    namespace = hashlib.sha256(gid.lexical.encode()).hexdigest()[:16]
    tags: dict[Iri, Triple] = {}
    for kind, names in ((NEW, delta.created), (UPD, delta.updated), (DEL, delta.deleted)):
        for x in sorted(names, key=term_key):
            t = Triple(gid, kind, x)
            tags[_fresh_assignment_name(namespace, t, tags)] = t
    if not tags:
        return out
    merged, _, _ = rename_join(out, NGFamily._wrap(tags))
    return merged


def _uses_rules() -> tuple[Rule, ...]:
    g, y, d, z = Var("g"), Var("y"), Var("d"), Var("z")
    return tuple(
        Rule(
            body=(TriplePattern(g, NEW, y), NamedPattern(y, d, q, z)),
            head=TriplePattern(g, USES, d),
        )
        for q in (NEW, UPD)
    )


_USES_RULES = _uses_rules()


def infer_uses(n: NGFamily) -> NGFamily:
    """Derive ``(gamma, uses, delta)`` whenever ``gamma`` tagged as new an
    assignment that is itself one of ``delta``'s new/upd tags."""
    return apply(_USES_RULES, n)


def check_well_behaved(
    reasoner_id: ReasonerId | Iri,
    gamma: Reasoner,
    samples: Iterable[NGFamily],
) -> bool:
    """Empirically check that a reasoner preserves well-stratification on
    the given (well-stratified) samples.  Per-input evidence, not a proof."""
    for sample in samples:
        if not check_batch(sample).ok:
            raise ValueError("sample family is not well-stratified")
        if not check_batch(gamma(sample)).ok:
            return False
    return True
