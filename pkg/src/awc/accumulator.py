"""Bilinear accumulators over sets of document identifiers.

The crawler, who holds the trapdoor, computes accumulation values as one
scalar product followed by a single exponentiation.  Witnesses are built by
the server from the public power ladder only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .algebra import P, inv, multi_bezout, poly_from_roots
from .errors import AccumulatorError
from .pairing import G1Point, G2Point, PublicParams, SecretKey, commit_g1, commit_g2, scalar


@dataclass(frozen=True)
class AccumulationTable:
    """Accumulation value per term for one epoch."""

    entries: Mapping[str, G1Point] = field(default_factory=dict)
    epoch: int = 0

    def __getitem__(self, term: str) -> G1Point:
        return self.entries[term]

    def __contains__(self, term: str) -> bool:
        return term in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def _trapdoor_factor(x: int, sk: SecretKey) -> int:
    f = (sk.s + x) % P
    if f == 0:
        raise AccumulatorError("element equals -s mod p; the accumulator would collapse")
    return f


def trapdoor_exponent(elements: Iterable[int], sk: SecretKey) -> int:
    """prod (s + x) mod p."""
    e = 1
    for x in elements:
        if x % P == 0:
            raise AccumulatorError("document identifiers must be nonzero")
        e = e * _trapdoor_factor(x, sk) % P
    return e


def accumulate(elements: Iterable[int], sk: SecretKey, pp: PublicParams) -> G1Point:
    """T = g^{prod_{x in S}(s + x)} using the trapdoor (crawler only)."""
    elements = list(elements)
    if len(elements) > pp.n:
        raise AccumulatorError(f"set of size {len(elements)} exceeds degree bound {pp.n}")
    e = trapdoor_exponent(elements, sk)
    if e == 1:
        return pp.g
    return pp.g * scalar(e)


def accumulate_public(elements: Sequence[int], pp: PublicParams) -> G1Point:
    """Same value as :func:`accumulate`, computed from the power ladder."""
    return commit_g1(poly_from_roots(elements), pp)


def residual(superset: Sequence[int], subset: Sequence[int]) -> list[int]:
    """Elements of ``superset`` not in ``subset``; raises if not contained."""
    sup = set(superset)
    sub = set(subset)
    if not sub <= sup:
        raise AccumulatorError("claimed subset is not contained in the set")
    return [x for x in superset if x not in sub]


def subset_witness(superset: Sequence[int], subset: Sequence[int], pp: PublicParams) -> G1Point:
    """W = g^{P(s)} with P the characteristic polynomial of ``superset - subset``."""
    return commit_g1(poly_from_roots(residual(superset, subset)), pp)


def completeness_witnesses_from_polys(polys: Sequence[Sequence[int]], pp: PublicParams) -> list[G2Point]:
    """F_j = g_hat^{q_j(s)} for Bezout cofactors with sum q_j P_j = 1."""
    return [commit_g2(q, pp) for q in multi_bezout(polys)]


def completeness_witnesses(residual_sets: Sequence[Sequence[int]], pp: PublicParams) -> list[G2Point]:
    """Witnesses that the residual sets have an empty common intersection.

    Raises NotCoprimeError if they share an element.
    """
    return completeness_witnesses_from_polys([poly_from_roots(r) for r in residual_sets], pp)


def update_add(acc: G1Point, x: int, sk: SecretKey) -> G1Point:
    return acc * scalar(_trapdoor_factor(x, sk))


def update_remove(acc: G1Point, x: int, sk: SecretKey) -> G1Point:
    return acc * scalar(inv(_trapdoor_factor(x, sk)))


def update_batch(acc: G1Point, added: Iterable[int], removed: Iterable[int], sk: SecretKey) -> G1Point:
    """Apply several additions and removals with one exponentiation."""
    e = trapdoor_exponent(added, sk)
    r = trapdoor_exponent(removed, sk)
    if r != 1:
        e = e * inv(r) % P
    if e == 1:
        return acc
    return acc * scalar(e)
