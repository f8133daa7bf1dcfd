"""Well-stratification checking.

A family is well-stratified when following name references can never loop:
meta-information sits strictly above the information it describes.  For a
finite family that is exactly acyclicity of its dependency graph, and this
module offers three equivalent ways to establish it, each with its own
cost profile:

* ``check_batch`` - one linear-time depth-first pass (read-only, batch);
* ``infer_levels`` / ``verify_levels`` - natural-number levels, inferred as
  the minimal solution of the per-assignment dominance constraints, usable
  as persisted annotations;
* ``StratifiedStore`` - an insert-by-insert checker that keeps an exact
  dyadic-rational order over all occurring terms and answers each
  insertion with a handful of map operations.

The three formulations accept exactly the same families.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from operator import attrgetter
from typing import Iterator

from sortedcontainers import SortedList

from .model import Iri, NGFamily, Term, Triple, _check_triple

_lex = attrgetter("lexical")

#: Finest representable dyadic denominator exponent.  A midpoint that would
#: need a finer value triggers an automatic re-pack of the order map.
EXPONENT_CAP = 512
_ONE = 1 << EXPONENT_CAP


def format_cycle(cycle: list[Iri]) -> str:
    """Render a cycle as ``x -> y -> x`` (first name repeated at the end)."""
    names = [u.lexical for u in cycle]
    return " -> ".join(names + [names[0]])


class CycleError(Exception):
    """The family is not well-stratified; carries one offending cycle."""

    def __init__(self, cycle: list[Iri]):
        self.cycle = list(cycle)
        super().__init__("cycle: " + format_cycle(self.cycle))


class DuplicateNameError(ValueError):
    """Insertion under a name that is already assigned."""


class UnknownNameError(KeyError):
    """Removal of a name that is not assigned."""


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a batch check.

    ``cycle`` is present iff ``ok`` is false; consecutive names (and last
    back to first) are edges of the dependency graph.  ``visits`` counts
    node visits of the underlying traversal (two per visited name).
    """

    ok: bool
    cycle: list[Iri] | None = None
    visits: int = 0


@dataclass(frozen=True)
class DependencyGraph:
    """Directed graph over the support: ``x -> y`` when ``y`` is assigned
    and occurs in ``x``'s triple.  Out-degree is at most three."""

    nodes: frozenset[Iri]
    edges: frozenset[tuple[Iri, Iri]]


def dependency_graph(n: NGFamily) -> DependencyGraph:
    amap = n._assignments
    edges = set()
    for x, t in amap.items():
        for d in (t.s, t.p, t.o):
            if d in amap:
                edges.add((x, d))
    return DependencyGraph(frozenset(amap), frozenset(edges))


def _sorted_succs(amap, name) -> list[Iri]:
    t = amap[name]
    out = {d for d in t if d in amap}
    if len(out) > 1:
        return sorted(out, key=_lex)
    return list(out)


def check_batch(n: NGFamily) -> CheckReport:
    """Single-pass acyclicity check of the dependency graph.

    Depth-first with deterministic branching (names sorted lexicographically
    at each branch); the first cycle found is reported.  Time is linear in
    the number of assignments, each name being visited exactly twice.
    """
    return _check_batch_map(n._assignments)


def _succs3(amap, name) -> list:
    # In-support successors of one name, deduplicated and in lexicographic
    # order; at most three, so ordering is a couple of comparisons.
    s, p, o = amap[name]
    out = []
    if s in amap:
        out.append(s)
    if p != s and p in amap:
        out.append(p)
    if o != s and o != p and o in amap:
        out.append(o)
    if len(out) == 2:
        if out[0].lexical > out[1].lexical:
            out.reverse()
    elif len(out) == 3:
        out.sort(key=_lex)
    return out


def _check_batch_map(amap) -> CheckReport:
    GRAY, BLACK = 1, 2
    color: dict[Iri, int] = {}
    visits = 0
    for root in sorted(amap, key=_lex):
        if root in color:
            continue
        color[root] = GRAY
        visits += 1
        stack = [root]  # the gray path
        rows = [_succs3(amap, root)]
        ptrs = [0]  # per-frame index of the next successor to try
        while stack:
            row = rows[-1]
            k = ptrs[-1]
            advanced = False
            while k < len(row):
                nxt = row[k]
                k += 1
                c = color.get(nxt)
                if c == GRAY:
                    return CheckReport(False, stack[stack.index(nxt):], visits)
                if c is None:
                    ptrs[-1] = k
                    color[nxt] = GRAY
                    visits += 1
                    stack.append(nxt)
                    rows.append(_succs3(amap, nxt))
                    ptrs.append(0)
                    advanced = True
                    break
            if not advanced:
                color[stack[-1]] = BLACK
                visits += 1
                stack.pop()
                rows.pop()
                ptrs.pop()
    return CheckReport(True, None, visits)


class LevelAssignment(Mapping):
    """Map from every occurring term to a natural-number level.

    Valid assignments place each name strictly above all three terms of its
    triple; the minimal one equals longest-path depth in the dependency
    graph.
    """

    __slots__ = ("_levels",)

    def __init__(self, levels: Mapping[Term, int]):
        self._levels = dict(levels)

    def __getitem__(self, term: Term) -> int:
        return self._levels[term]

    def __iter__(self) -> Iterator[Term]:
        return iter(self._levels)

    def __len__(self) -> int:
        return len(self._levels)

    def __repr__(self):
        parts = ", ".join(
            f"{t.lexical}: {v}" for t, v in sorted(self._levels.items(), key=lambda kv: _lex(kv[0]))
        )
        return f"LevelAssignment({{{parts}}})"


def _infer_levels_map(amap) -> dict[Term, int]:
    """Minimal levels for a raw assignment map; raises CycleError."""
    levels: dict[Term, int] = {}
    for t in amap.values():
        for d in t:
            if d not in amap:
                levels[d] = 0
    gray: set[Iri] = set()
    for root in sorted(amap, key=_lex):
        if root in levels:
            continue
        gray.add(root)
        path = [root]
        iters = [iter(_sorted_succs(amap, root))]
        while iters:
            node = path[-1]
            advanced = False
            for nxt in iters[-1]:
                if nxt in gray:
                    raise CycleError(path[path.index(nxt):])
                if nxt not in levels:
                    gray.add(nxt)
                    path.append(nxt)
                    iters.append(iter(_sorted_succs(amap, nxt)))
                    advanced = True
                    break
            if not advanced:
                t = amap[node]
                levels[node] = 1 + max(levels[t.s], levels[t.p], levels[t.o])
                gray.discard(node)
                path.pop()
                iters.pop()
    return levels


def infer_levels(n: NGFamily) -> LevelAssignment:
    """Minimal valid level assignment; raises CycleError when none exists."""
    return LevelAssignment(_infer_levels_map(n._assignments))


def verify_levels(n: NGFamily, levels: Mapping[Term, int]) -> bool:
    """True iff ``levels`` is defined on every occurring term and each name
    sits strictly above all three terms of its triple.  Any valid
    assignment is accepted, minimal or not."""
    get = levels.get
    for name, t in n._assignments.items():
        lx = get(name)
        if lx is None:
            return False
        for d in (t.s, t.p, t.o):
            ld = get(d)
            if ld is None or lx <= ld:
                return False
    return True


class OrderMap:
    """Exact dyadic order over the terms occurring in a tracked family.

    Values are dyadic rationals in ``[0, 1)``, held as integer numerators at
    the fixed denominator ``2**EXPONENT_CAP``: comparisons and midpoints are
    plain (unbounded) integer arithmetic, and a midpoint needing a finer
    denominator surfaces as an odd numerator sum.  An ordered index over the
    distinct numerators answers successor queries; ``ops`` counts its
    queries and updates.
    """

    __slots__ = ("_keys", "_counts", "_index", "ops")

    def __init__(self):
        self._keys: dict[Term, int] = {}
        self._counts: dict[int, int] = {}
        self._index: SortedList = SortedList()
        self.ops = 0

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, term) -> bool:
        return term in self._keys

    def terms(self):
        return self._keys.keys()

    def value_of(self, term: Term) -> Fraction | None:
        """The stored value as an exact fraction, or None if undefined."""
        k = self._keys.get(term)
        return None if k is None else Fraction(k, _ONE)

    def numerator_exponent(self, term: Term) -> tuple[int, int] | None:
        """The stored value as a reduced ``(numerator, exponent)`` pair with
        value = numerator / 2**exponent."""
        k = self._keys.get(term)
        if k is None:
            return None
        if k == 0:
            return (0, 0)
        tz = (k & -k).bit_length() - 1
        return (k >> tz, EXPONENT_CAP - tz)

    def items(self) -> Iterator[tuple[Term, Fraction]]:
        for t, k in self._keys.items():
            yield t, Fraction(k, _ONE)

    def succ_key(self, k: int) -> int:
        """Least stored numerator strictly above ``k``, or the numerator of
        1 when none is."""
        self.ops += 1
        i = self._index.bisect_right(k)
        return self._index[i] if i < len(self._index) else _ONE

    def set_key(self, term: Term, k: int) -> None:
        old = self._keys.get(term)
        if old == k:
            return
        if old is not None:
            self._release(old)
        self._keys[term] = k
        c = self._counts.get(k, 0)
        if c == 0:
            self._index.add(k)
            self.ops += 1
        self._counts[k] = c + 1

    def _release(self, k: int) -> None:
        c = self._counts[k] - 1
        if c == 0:
            del self._counts[k]
            self._index.remove(k)
            self.ops += 1
        else:
            self._counts[k] = c

    def load(self, keys: dict[Term, int]) -> None:
        """Replace the whole map in one go (bulk re-pack)."""
        self._keys = dict(keys)
        counts: dict[int, int] = {}
        for k in self._keys.values():
            counts[k] = counts.get(k, 0) + 1
        self._counts = counts
        self._index = SortedList(counts)
        self.ops += len(counts)


@dataclass(frozen=True)
class InsertOutcome:
    """Result of one insertion attempt.

    ``case`` is one of ``fresh`` (name never seen), ``dominates`` (existing
    value already above all components), ``promoted`` (value raised past an
    equal component), ``repaired`` (order re-packed around a spurious
    conflict) or ``rejected``.  A rejection carries the cycle the insertion
    would have created.  ``index_ops`` counts ordered-index operations on
    the decision fast path; ``repair_ops`` counts the ones spent re-packing.
    """

    accepted: bool
    case: str
    cycle: list[Iri] | None = None
    index_ops: int = 0
    repair_ops: int = 0


class StratifiedStore:
    """Single-writer store whose family is well-stratified at all times.

    ``try_insert`` decides each insertion without re-scanning the family:
    the order map certifies acyclicity, so an attempt is rejected exactly
    when adding the assignment would create a reference cycle.  Updates are
    delete-then-insert pairs.  Deletions are constant-time but may leave
    stale order entries behind; ``rebuild`` re-packs from the family alone.
    Readers may share snapshots (``family``); writers need exclusive access.
    """

    __slots__ = ("_assignments", "_order", "_deletions", "_rebuilds")

    def __init__(self):
        self._assignments: dict[Iri, Triple] = {}
        self._order = OrderMap()
        self._deletions = 0
        self._rebuilds = 0

    @property
    def family(self) -> NGFamily:
        """Immutable snapshot of the stored family (copies the map)."""
        return NGFamily._wrap(dict(self._assignments))

    @property
    def order(self) -> OrderMap:
        return self._order

    @property
    def deletions_since_rebuild(self) -> int:
        return self._deletions

    @property
    def rebuilds(self) -> int:
        return self._rebuilds

    def __len__(self) -> int:
        return len(self._assignments)

    def __contains__(self, name) -> bool:
        return name in self._assignments

    def support(self) -> frozenset[Iri]:
        return frozenset(self._assignments)

    def try_insert(self, name: Iri, triple: Triple | tuple) -> InsertOutcome:
        """Insert ``name -> triple`` unless that would break stratification.

        The name must not be assigned yet.  On acceptance any component
        still missing from the order map is assigned the value 0; on
        rejection the store is unchanged.
        """
        if not isinstance(name, Iri):
            raise TypeError("name must be an IRI")
        triple = _check_triple(triple)
        if name in self._assignments:
            raise DuplicateNameError(f"name already assigned: {name.lexical!r}")

        comps: list[Term] = []
        for d in triple:
            if d not in comps:
                comps.append(d)
        if name in comps:
            # A self-referencing assignment is a one-node cycle.
            return InsertOutcome(False, "rejected", cycle=[name])

        om = self._order
        ops0 = om.ops
        repair_ops = 0
        case = None
        for _attempt in range(3):
            keys = om._keys
            ykey = 0
            for d in comps:
                k = keys.get(d, 0)
                if k > ykey:
                    ykey = k
            nkey = keys.get(name)
            if nkey is not None and nkey < ykey:
                # Some component sits above the name in the cached order.
                # That is a real cycle only if a component actually reaches
                # the name through the dependency graph.
                cycle = self._path_from_components(comps, name, nkey)
                if cycle is not None:
                    return InsertOutcome(
                        False, "rejected", cycle=cycle, index_ops=om.ops - ops0 - repair_ops
                    )
                # Spurious order conflict: the graph stays acyclic, only the
                # cached total order is too coarse.  Re-pack it with the new
                # assignment included.
                before = om.ops
                self._rebuild_with(name, triple)
                repair_ops += om.ops - before
                return InsertOutcome(
                    True, "repaired", index_ops=om.ops - ops0 - repair_ops, repair_ops=repair_ops
                )
            if nkey is not None and nkey > ykey:
                case = "dominates"
                break
            # Name unmapped, or mapped exactly at the highest component:
            # place it halfway between ykey and the next stored value.
            z = om.succ_key(ykey)
            total = ykey + z
            if total & 1:
                # Midpoint would exceed the exponent cap; re-pack and retry.
                before = om.ops
                self.rebuild()
                repair_ops += om.ops - before
                continue
            case = "fresh" if nkey is None else "promoted"
            om.set_key(name, total >> 1)
            break
        else:
            raise RuntimeError("order re-pack failed to make room for a midpoint")

        self._assignments[name] = triple
        for d in comps:
            if d not in om._keys:
                om.set_key(d, 0)
        return InsertOutcome(True, case, index_ops=om.ops - ops0 - repair_ops, repair_ops=repair_ops)

    def _path_from_components(self, comps, target, floor) -> list[Iri] | None:
        """A dependency path from one of ``comps`` to ``target``, as the
        would-be cycle ``[target, comp, ..., last]``, or None.

        Any such path descends through strictly decreasing order values, so
        the search never expands below ``floor`` (the target's value).
        """
        amap = self._assignments
        keys = self._order._keys
        pred: dict[Term, Term | None] = {}
        queue: deque[Term] = deque()
        for d in comps:
            if keys.get(d, 0) >= floor and d not in pred:
                pred[d] = None
                queue.append(d)
        while queue:
            w = queue.popleft()
            t = amap.get(w)
            if t is None:
                continue
            for d in t:
                if d == target:
                    path = [w]
                    cur = w
                    while pred[cur] is not None:
                        cur = pred[cur]
                        path.append(cur)
                    path.reverse()
                    return [target, *path]
                if d not in pred and keys.get(d, 0) >= floor:
                    pred[d] = w
                    queue.append(d)
        return None

    def remove(self, name: Iri) -> None:
        """Delete an assignment.  Removing data never breaks stratification;
        order entries are kept (constant time) and may go stale."""
        if name not in self._assignments:
            raise UnknownNameError(name.lexical)
        del self._assignments[name]
        self._deletions += 1

    def rebuild(self) -> None:
        """Re-derive the order map from the stored family alone: stale
        entries are dropped and values re-packed to small exponents.  Never
        fails, since the stored family is well-stratified by invariant."""
        levels = _infer_levels_map(self._assignments)
        self._load_levels(levels)

    def _rebuild_with(self, name: Iri, triple: Triple) -> None:
        self._assignments[name] = triple
        try:
            levels = _infer_levels_map(self._assignments)
        except CycleError:  # pragma: no cover - caller established acyclicity
            del self._assignments[name]
            raise
        self._load_levels(levels)

    def _load_levels(self, levels: dict[Term, int]) -> None:
        if levels:
            shift = EXPONENT_CAP - max(levels.values()).bit_length()
            self._order.load({t: lvl << shift for t, lvl in levels.items()})
        else:
            self._order.load({})
        self._deletions = 0
        self._rebuilds += 1


def order_init(n: NGFamily) -> StratifiedStore:
    """Build a store by inserting all assignments in topological order
    (components before the names that mention them); raises CycleError iff
    the family is not well-stratified."""
    amap = n._assignments
    levels = _infer_levels_map(amap)
    store = StratifiedStore()
    for name in sorted(amap, key=lambda u: (levels[u], u.lexical)):
        outcome = store.try_insert(name, amap[name])
        assert outcome.accepted, f"replay rejected {name.lexical!r}"
    return store
