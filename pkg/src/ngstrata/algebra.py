"""The merge algebra over NG families.

``meet`` always exists; the plain ``join`` of two families is partial (it
fails on names assigned to different triples).  Four total surrogates
resolve such conflicts instead of failing:

* ``override_left``   - keep the left operand's assignment,
* ``override_right``  - keep the right one,
* ``drop_conflicting``- discard both conflicting assignments,
* ``rename_join``     - keep both under fresh names.

All operators agree with ``join`` whenever the conflict set is empty.
Everything here is a pure function over immutable values.
"""

from __future__ import annotations

from enum import Enum
from typing import Iterable

from .model import (
    Iri,
    NGFamily,
    RenamingMap,
    Triple,
    conflict_set,
    iri,
    rename,
    vocabulary,
)


class ConflictPolicy(Enum):
    """How a total merge resolves names assigned to different triples."""

    KEEP_LEFT = "left"
    KEEP_RIGHT = "right"
    DROP_BOTH = "drop"
    RENAME_BOTH = "rename"


class ConflictError(Exception):
    """A plain join failed; carries the offending names."""

    def __init__(self, conflicts: Iterable[Iri]):
        self.conflicts = frozenset(conflicts)
        names = ", ".join(sorted(t.lexical for t in self.conflicts))
        super().__init__(f"conflicting assignments for: {names}")


def meet(families: Iterable[NGFamily]) -> NGFamily:
    """The intersection of a non-empty collection of families.

    Defined at ``u`` iff every family maps ``u`` to the same triple; the
    result is extended by every operand.
    """
    fams = list(families)
    if not fams:
        raise ValueError("meet of an empty collection is undefined")
    first, rest = fams[0], fams[1:]
    out: dict[Iri, Triple] = {}
    for u, t in first.items():
        if all(m.get(u) == t for m in rest):
            out[u] = t
    return NGFamily._wrap(out)


def join(n1: NGFamily, n2: NGFamily) -> NGFamily:
    """Union of assignments; raises ConflictError if any name disagrees."""
    conflicts = conflict_set(n1, n2)
    if conflicts:
        raise ConflictError(conflicts)
    out = dict(n1._assignments)
    out.update(n2._assignments)
    return NGFamily._wrap(out)


def override_left(n1: NGFamily, n2: NGFamily) -> NGFamily:
    """Total merge keeping ``n1``'s assignment wherever both are defined."""
    out = dict(n2._assignments)
    out.update(n1._assignments)
    return NGFamily._wrap(out)


def override_right(n1: NGFamily, n2: NGFamily) -> NGFamily:
    """Mirror of ``override_left``: the right operand wins conflicts."""
    return override_left(n2, n1)


def drop_conflicting(n1: NGFamily, n2: NGFamily) -> NGFamily:
    """Total merge dropping every name the operands disagree on."""
    conflicts = conflict_set(n1, n2)
    out = {u: t for u, t in n1.items() if u not in conflicts}
    for u, t in n2.items():
        if u not in conflicts:
            out[u] = t
    return NGFamily._wrap(out)


def _fresh_name(base: Iri, operand: int, occupied: set) -> Iri:
    # base#~1 / base#~2; grow the separator until the IRI is unused.
    k = 1
    while True:
        candidate = iri(f"{base.lexical}#{'~' * k}{operand}")
        if candidate not in occupied:
            return candidate
        k += 1


def rename_join(n1: NGFamily, n2: NGFamily) -> tuple[NGFamily, RenamingMap, RenamingMap]:
    """Total merge keeping both sides of every conflict under fresh names.

    Returns the merged family together with the two renamings applied to the
    operands.  Renaming a conflicting name in all positions can make further
    shared names disagree (their identical triples mention the renamed name),
    so the set of renamed names is closed under that effect before the final
    conflict-free join.  With an empty conflict set both renamings are the
    identity and the result equals ``join(n1, n2)``.
    """
    to_rename = set(conflict_set(n1, n2))
    if not to_rename:
        return join(n1, n2), RenamingMap(), RenamingMap()

    shared = [u for u in n1 if u in n2]
    while True:
        grew = False
        for u in shared:
            if u in to_rename:
                continue
            t = n1[u]  # equal to n2[u]: u is shared and not conflicting
            if t.s in to_rename or t.p in to_rename or t.o in to_rename:
                to_rename.add(u)
                grew = True
        if not grew:
            break

    occupied = set(vocabulary(n1)) | set(vocabulary(n2))
    s1: dict = {}
    s2: dict = {}
    for u in sorted(to_rename, key=lambda x: x.lexical):
        f1 = _fresh_name(u, 1, occupied)
        occupied.add(f1)
        f2 = _fresh_name(u, 2, occupied)
        occupied.add(f2)
        s1[u] = f1
        s2[u] = f2
    sigma1 = RenamingMap(s1)
    sigma2 = RenamingMap(s2)
    return join(rename(n1, sigma1), rename(n2, sigma2)), sigma1, sigma2


def merge(n1: NGFamily, n2: NGFamily, policy: ConflictPolicy) -> NGFamily:
    """Binary total merge under the given conflict policy."""
    if policy is ConflictPolicy.KEEP_LEFT:
        return override_left(n1, n2)
    if policy is ConflictPolicy.KEEP_RIGHT:
        return override_right(n1, n2)
    if policy is ConflictPolicy.DROP_BOTH:
        return drop_conflicting(n1, n2)
    if policy is ConflictPolicy.RENAME_BOTH:
        return rename_join(n1, n2)[0]
    raise ValueError(f"unknown policy: {policy!r}")


def merge_all(families: Iterable[NGFamily], policy: ConflictPolicy) -> NGFamily:
    """Left-associated fold of the binary merge over a non-empty sequence."""
    fams = list(families)
    if not fams:
        raise ValueError("merge of an empty collection is undefined")
    acc = fams[0]
    for nxt in fams[1:]:
        acc = merge(acc, nxt, policy)
    return acc
