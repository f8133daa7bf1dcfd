"""Shared builders and random generators for the test suite."""

from __future__ import annotations

import random

from ngstrata import Iri, Literal, NGFamily, Triple


def T(text: str):
    """Term shorthand: a leading double quote makes a literal."""
    if text.startswith('"'):
        return Literal(text.strip('"'))
    return Iri(text)


def fam(mapping: dict) -> NGFamily:
    """Build a family from ``{"name": ("s", "p", "o")}`` shorthand."""
    return NGFamily(
        {Iri(name): Triple(T(s), Iri(p), T(o)) for name, (s, p, o) in mapping.items()}
    )


def random_family(
    rng: random.Random,
    max_names: int = 8,
    n_leaves: int = 4,
    literal_subjects: bool = False,
) -> NGFamily:
    """An arbitrary family over a small pool; may contain reference cycles."""
    names = [Iri(f"n{i}") for i in range(max_names)]
    iri_pool = names + [Iri(f"t{i}") for i in range(n_leaves)]
    objects = iri_pool + [Literal("v1"), Literal("v2")]
    subjects = objects if literal_subjects else iri_pool
    amap = {}
    for u in rng.sample(names, rng.randrange(0, max_names + 1)):
        amap[u] = Triple(rng.choice(subjects), rng.choice(iri_pool), rng.choice(objects))
    return NGFamily(amap)


def random_wellstratified(
    rng: random.Random,
    n_names: int = 10,
    n_leaves: int = 5,
    p_meta: float = 0.6,
    prefix: str = "n",
    literal_objects: bool = True,
) -> NGFamily:
    """A well-stratified family: triples only mention earlier names or leaves."""
    leaf_iris = [Iri(f"t{i}") for i in range(n_leaves)]
    leaves = leaf_iris + ([Literal("v1"), Literal("v2")] if literal_objects else [])
    amap = {}
    created: list[Iri] = []

    def pick(iri_only: bool = False):
        if created and rng.random() < p_meta:
            return rng.choice(created)
        return rng.choice(leaf_iris if iri_only else leaves)

    for i in range(n_names):
        u = Iri(f"{prefix}{i}")
        amap[u] = Triple(pick(iri_only=True), pick(iri_only=True), pick())
        created.append(u)
    return NGFamily(amap)


def all_triples(terms) -> list[Triple]:
    """Every triple over a pool of IRI terms."""
    return [Triple(s, p, o) for s in terms for p in terms for o in terms]


def slot_values(terms) -> list:
    """Every value one name slot can take: unassigned, or any triple."""
    return [None] + all_triples(terms)


def slot_family(name: Iri, value) -> NGFamily:
    """Single-slot family: empty when the value is None."""
    return NGFamily({} if value is None else {name: value})
