"""Type-3 pairing on BLS12-381, trapdoor power ladders and polynomial commitments.

Accumulation values and subset witnesses live in G1; completeness witnesses
and the client's commitment to the intersection polynomial live in G2.  The
group arithmetic itself is provided by ``py_arkworks_bls12381``.

Point encodings are the standard compressed forms: 48 bytes for G1 and 96
bytes for G2 (big-endian x coordinate, the three top bits of the first byte
carrying the compression, infinity and sign flags).
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives import serialization
from py_arkworks_bls12381 import GT, G1Point, G2Point, Scalar

from .algebra import P
from .errors import DegreeError, FormatError

GROUP_ID = b"BLS12-381"
G1_BYTES = 48
G2_BYTES = 96
SCALAR_BYTES = 32

__all__ = [
    "G1Point", "G2Point", "GT", "SecretKey", "PublicParams", "keygen",
    "commit_g1", "commit_g2", "pair", "multi_pair", "scalar",
]


def scalar(x: int) -> Scalar:
    return Scalar.from_le_bytes((x % P).to_bytes(SCALAR_BYTES, "little"))


def g1() -> G1Point:
    return G1Point()


def g2() -> G2Point:
    return G2Point()


def g1_to_bytes(pt: G1Point) -> bytes:
    return bytes(pt.to_compressed_bytes())


def g2_to_bytes(pt: G2Point) -> bytes:
    return bytes(pt.to_compressed_bytes())


def g1_from_bytes(data: bytes) -> G1Point:
    if len(data) != G1_BYTES:
        raise FormatError(f"G1 encoding must be {G1_BYTES} bytes, got {len(data)}")
    try:
        pt = G1Point.from_compressed_bytes(list(data))
    except ValueError as exc:
        raise FormatError(f"invalid G1 point: {exc}") from None
    # the decoder ignores junk bits in some encodings (notably the identity)
    if bytes(pt.to_compressed_bytes()) != bytes(data):
        raise FormatError("non-canonical G1 encoding")
    return pt


def g2_from_bytes(data: bytes) -> G2Point:
    if len(data) != G2_BYTES:
        raise FormatError(f"G2 encoding must be {G2_BYTES} bytes, got {len(data)}")
    try:
        pt = G2Point.from_compressed_bytes(list(data))
    except ValueError as exc:
        raise FormatError(f"invalid G2 point: {exc}") from None
    # the decoder ignores junk bits in some encodings (notably the identity)
    if bytes(pt.to_compressed_bytes()) != bytes(data):
        raise FormatError("non-canonical G2 encoding")
    return pt


def pair(a: G1Point, b: G2Point) -> GT:
    return GT.pairing(a, b)


def multi_pair(g1s: Sequence[G1Point], g2s: Sequence[G2Point]) -> GT:
    """Product of e(g1s[i], g2s[i]) with a single final exponentiation."""
    return GT.multi_pairing(list(g1s), list(g2s))


def gt_pow(x: GT, k: int) -> GT:
    """Square-and-multiply exponentiation in the target group."""
    k %= P
    result = GT.one()
    base = x
    while k:
        if k & 1:
            result = result * base
        base = base * base
        k >>= 1
    return result


def _msm(points, coeffs, identity):
    if len(coeffs) == 1:
        return points[0] * scalar(coeffs[0])
    return type(identity).multiexp_unchecked(
        list(points[: len(coeffs)]), [scalar(c) for c in coeffs]
    )


@dataclass(frozen=True)
class SecretKey:
    """Crawler-only trapdoor ``s`` and the digest signing key."""

    s: int
    sig_key: Ed25519PrivateKey = field(repr=False)

    def __post_init__(self):
        if not 0 < self.s < P:
            raise ValueError("trapdoor must lie in Z_p^*")

    def sig_key_bytes(self) -> bytes:
        return self.sig_key.private_bytes(
            serialization.Encoding.Raw,
            serialization.PrivateFormat.Raw,
            serialization.NoEncryption(),
        )

    def __repr__(self):
        return "SecretKey(<redacted>)"


def _ladder_link(nxt: bytes, p1: G1Point, p2: G2Point) -> bytes:
    h = hashlib.sha256(b"AWC-ladder")
    h.update(nxt)
    h.update(g1_to_bytes(p1))
    h.update(g2_to_bytes(p2))
    return h.digest()


LADDER_END = bytes(32)


@dataclass(frozen=True, eq=False)
class PublicParams:
    """Published group description and trapdoor power ladders.

    ``n`` is the degree bound the crawler committed to.  A client copy may be
    truncated to fewer powers; ``ladder_tail`` then carries the hash-chain
    link of the dropped suffix so the fingerprint is unchanged.
    """

    n: int
    powers_g1: tuple
    powers_g2: tuple
    verify_key: bytes
    ladder_tail: bytes = LADDER_END
    group: bytes = GROUP_ID

    @property
    def available_degree(self) -> int:
        return len(self.powers_g1) - 1

    @property
    def is_truncated(self) -> bool:
        return self.available_degree < self.n

    @property
    def g(self) -> G1Point:
        return self.powers_g1[0]

    @property
    def g_hat(self) -> G2Point:
        return self.powers_g2[0]

    @cached_property
    def base_pairing(self) -> GT:
        return pair(self.g, self.g_hat)

    @cached_property
    def ladder_head(self) -> bytes:
        link = self.ladder_tail
        for p1, p2 in zip(reversed(self.powers_g1), reversed(self.powers_g2)):
            link = _ladder_link(link, p1, p2)
        return link

    @cached_property
    def fingerprint(self) -> bytes:
        h = hashlib.sha256(b"AWCP")
        h.update(len(self.group).to_bytes(1, "big") + self.group)
        h.update(self.n.to_bytes(8, "big"))
        h.update(self.verify_key)
        h.update(self.ladder_head)
        return h.digest()

    def verifying_key(self) -> Ed25519PublicKey:
        return Ed25519PublicKey.from_public_bytes(self.verify_key)

    def truncated(self, k: int) -> "PublicParams":
        """Client copy holding only the first ``k + 1`` powers of each ladder."""
        if k >= self.available_degree:
            return self
        if k < 1:
            raise ValueError("a client ladder needs at least g^s")
        link = self.ladder_tail
        for p1, p2 in zip(reversed(self.powers_g1[k + 1:]), reversed(self.powers_g2[k + 1:])):
            link = _ladder_link(link, p1, p2)
        return PublicParams(
            n=self.n,
            powers_g1=self.powers_g1[: k + 1],
            powers_g2=self.powers_g2[: k + 1],
            verify_key=self.verify_key,
            ladder_tail=link,
            group=self.group,
        )

    def check_ladder(self, indices: Sequence[int] | None = None) -> bool:
        """Spot-check e(g^{s^k}, g_hat) = e(g, g_hat^{s^k}) at the given indices."""
        if indices is None:
            indices = range(self.available_degree + 1)
        neg_g = -self.g
        for k in indices:
            if multi_pair([self.powers_g1[k], neg_g], [self.g_hat, self.powers_g2[k]]) != GT.one():
                return False
        return True


def _random_scalar(rng) -> int:
    if rng is None:
        return secrets.randbelow(P - 1) + 1
    return rng.randrange(1, P)


def keygen(n: int, rng=None) -> tuple[SecretKey, PublicParams]:
    """Pick a trapdoor and signing key and publish n+1 powers in both groups.

    ``rng`` may be a ``random.Random`` for reproducible tests; by default the
    ``secrets`` module is used.
    """
    if n < 1:
        raise ValueError("degree bound must be at least 1")
    s = _random_scalar(rng)
    if rng is None:
        seed = secrets.token_bytes(32)
    else:
        seed = rng.getrandbits(256).to_bytes(32, "big")
    sig_key = Ed25519PrivateKey.from_private_bytes(seed)

    base1, base2 = g1(), g2()
    powers_g1 = [base1]
    powers_g2 = [base2]
    e = 1
    for _ in range(n):
        e = e * s % P
        k = scalar(e)
        powers_g1.append(base1 * k)
        powers_g2.append(base2 * k)

    vk = sig_key.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )
    sk = SecretKey(s=s, sig_key=sig_key)
    pp = PublicParams(n=n, powers_g1=tuple(powers_g1), powers_g2=tuple(powers_g2), verify_key=vk)
    return sk, pp


def commit_g1(poly: Sequence[int], pp: PublicParams) -> G1Point:
    """g^{poly(s)} from the public ladder, without the trapdoor."""
    if len(poly) - 1 > pp.available_degree:
        raise DegreeError(
            f"degree {len(poly) - 1} exceeds available powers ({pp.available_degree})"
        )
    return _msm(pp.powers_g1, poly, G1Point.identity())


def commit_g2(poly: Sequence[int], pp: PublicParams) -> G2Point:
    """g_hat^{poly(s)} from the public ladder, without the trapdoor."""
    if len(poly) - 1 > pp.available_degree:
        raise DegreeError(
            f"degree {len(poly) - 1} exceeds available powers ({pp.available_degree})"
        )
    return _msm(pp.powers_g2, poly, G2Point.identity())
