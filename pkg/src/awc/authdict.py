"""Merkle tree over (term, accumulation value) leaves with signed digests.

Leaves are sorted by term, so adjacent leaves also prove that a term is
absent from the dictionary.  Leaf hashes are
``SHA256(0x00 || utf8(term) || acc)`` where ``acc`` is the 48-byte G1
encoding; internal nodes are ``SHA256(0x01 || left || right)``.  The last
node of an odd-sized level is paired with itself.  The published root is
``SHA256(0x02 || leaf_count (8 bytes BE) || top)`` so that the leaf count a
proof claims is committed as well.
"""

from __future__ import annotations

import hashlib
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from cryptography.exceptions import InvalidSignature

from .errors import DuplicateTermError, TermAbsentError, TermPresentError
from .pairing import G1_BYTES, PublicParams, SecretKey

LEAF_TAG = b"\x00"
NODE_TAG = b"\x01"
ROOT_TAG = b"\x02"
HASH_BYTES = 32


def leaf_hash(term: str, value: bytes) -> bytes:
    return hashlib.sha256(LEAF_TAG + term.encode("utf-8") + value).digest()


def node_hash(left: bytes, right: bytes) -> bytes:
    return hashlib.sha256(NODE_TAG + left + right).digest()


def bound_root(leaf_count: int, top: bytes) -> bytes:
    return hashlib.sha256(ROOT_TAG + leaf_count.to_bytes(8, "big") + top).digest()


def tree_height(leaf_count: int) -> int:
    """Number of sibling hashes on every path, ceil(log2(leaf_count))."""
    return (leaf_count - 1).bit_length()


def _parent_level(level: Sequence[bytes]) -> list[bytes]:
    out = []
    for i in range(0, len(level), 2):
        left = level[i]
        right = level[i + 1] if i + 1 < len(level) else left
        out.append(node_hash(left, right))
    return out


@dataclass(frozen=True, eq=False)
class MerkleTree:
    terms: tuple
    values: tuple
    levels: tuple  # levels[0] are leaf hashes, levels[-1] == (root,)

    @property
    def top(self) -> bytes:
        return self.levels[-1][0]

    @property
    def root(self) -> bytes:
        return bound_root(len(self.terms), self.top)

    @property
    def height(self) -> int:
        return len(self.levels) - 1

    def __len__(self) -> int:
        return len(self.terms)

    def index_of(self, term: str) -> int:
        i = bisect_left(self.terms, term)
        if i == len(self.terms) or self.terms[i] != term:
            raise TermAbsentError(term)
        return i

    def __contains__(self, term: str) -> bool:
        i = bisect_left(self.terms, term)
        return i < len(self.terms) and self.terms[i] == term

    def value(self, term: str) -> bytes:
        return self.values[self.index_of(term)]


@dataclass(frozen=True)
class MerkleProof:
    term: str
    value: bytes
    index: int
    leaf_count: int
    siblings: tuple


@dataclass(frozen=True)
class AbsenceProof:
    """Membership proofs of the leaves bracketing an absent term."""

    term: str
    left: MerkleProof | None
    right: MerkleProof | None


def _levels_from_leaves(leaves: list[bytes]) -> tuple:
    levels = [leaves]
    while len(levels[-1]) > 1:
        levels.append(_parent_level(levels[-1]))
    return tuple(levels)


def build(entries: Iterable[tuple[str, bytes]]) -> MerkleTree:
    """Build a tree from (term, serialized accumulation value) pairs."""
    items = sorted(entries, key=lambda kv: kv[0])
    if not items:
        raise ValueError("a Merkle tree needs at least one leaf")
    for (a, _), (b, _) in zip(items, items[1:]):
        if a == b:
            raise DuplicateTermError(a)
    for _, v in items:
        if len(v) != G1_BYTES:
            raise ValueError("leaf values must be serialized G1 points")
    terms = tuple(t for t, _ in items)
    values = tuple(v for _, v in items)
    leaves = [leaf_hash(t, v) for t, v in items]
    return MerkleTree(terms, values, _levels_from_leaves(leaves))


def _path(tree: MerkleTree, index: int) -> tuple:
    sibs = []
    pos = index
    for level in tree.levels[:-1]:
        sib = pos ^ 1
        sibs.append(level[sib] if sib < len(level) else level[pos])
        pos //= 2
    return tuple(sibs)


def prove_membership(tree: MerkleTree, term: str) -> MerkleProof:
    i = tree.index_of(term)
    return MerkleProof(term, tree.values[i], i, len(tree), _path(tree, i))


def prove_absence(tree: MerkleTree, term: str) -> AbsenceProof:
    i = bisect_left(tree.terms, term)
    if i < len(tree) and tree.terms[i] == term:
        raise TermPresentError(term)
    left = right = None
    if i > 0:
        left = MerkleProof(tree.terms[i - 1], tree.values[i - 1], i - 1, len(tree), _path(tree, i - 1))
    if i < len(tree):
        right = MerkleProof(tree.terms[i], tree.values[i], i, len(tree), _path(tree, i))
    return AbsenceProof(term, left, right)


def verify_path(proof: MerkleProof, root: bytes) -> bool:
    """Recompute the root from a membership proof.

    The path shape is fixed by ``index`` and ``leaf_count``: where a node is
    the unpaired last node of its level, the sibling must be the node itself.
    """
    count = proof.leaf_count
    pos = proof.index
    if count < 1 or not 0 <= pos < count:
        return False
    if len(proof.siblings) != tree_height(count):
        return False
    if len(proof.value) != G1_BYTES:
        return False
    node = leaf_hash(proof.term, proof.value)
    for sib in proof.siblings:
        if len(sib) != HASH_BYTES:
            return False
        if pos % 2 == 0:
            if pos == count - 1 and sib != node:
                return False
            node = node_hash(node, sib)
        else:
            node = node_hash(sib, node)
        pos //= 2
        count = (count + 1) // 2
    return bound_root(proof.leaf_count, node) == root


def verify_absence(proof: AbsenceProof, term: str, root: bytes) -> bool:
    if proof.term != term:
        return False
    left, right = proof.left, proof.right
    if left is None and right is None:
        return False
    if left is not None and not (verify_path(left, root) and left.term < term):
        return False
    if right is not None and not (verify_path(right, root) and term < right.term):
        return False
    if left is not None and right is not None:
        return right.leaf_count == left.leaf_count and right.index == left.index + 1
    if right is not None:
        return right.index == 0
    return left.index == left.leaf_count - 1


def update_leaves(tree: MerkleTree, changes: Mapping[str, bytes]) -> MerkleTree:
    """New tree with the given existing terms rebound to new values.

    Only the root-ward paths of the changed leaves are rehashed.
    """
    if not changes:
        return tree
    values = list(tree.values)
    levels = [list(level) for level in tree.levels]
    dirty = set()
    for term, value in changes.items():
        if len(value) != G1_BYTES:
            raise ValueError("leaf values must be serialized G1 points")
        i = tree.index_of(term)
        values[i] = value
        levels[0][i] = leaf_hash(term, value)
        dirty.add(i)
    for depth in range(1, len(levels)):
        below = levels[depth - 1]
        parents = {i // 2 for i in dirty}
        for j in parents:
            left = below[2 * j]
            right = below[2 * j + 1] if 2 * j + 1 < len(below) else left
            levels[depth][j] = node_hash(left, right)
        dirty = parents
    return MerkleTree(tree.terms, tuple(values), tuple(levels))


def update_leaf(tree: MerkleTree, term: str, value: bytes) -> MerkleTree:
    return update_leaves(tree, {term: value})


@dataclass(frozen=True)
class Digest:
    """Signed (root, epoch) pair bound to a parameter fingerprint."""

    root: bytes
    epoch: int
    fingerprint: bytes
    signature: bytes

    def message(self) -> bytes:
        return digest_message(self.root, self.epoch, self.fingerprint)


def digest_message(root: bytes, epoch: int, fingerprint: bytes) -> bytes:
    return b"AWCD" + root + epoch.to_bytes(8, "big") + fingerprint


def sign_digest(root: bytes, epoch: int, sk: SecretKey, pp: PublicParams) -> Digest:
    if len(root) != HASH_BYTES:
        raise ValueError("root must be a 32-byte hash")
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    sig = sk.sig_key.sign(digest_message(root, epoch, pp.fingerprint))
    return Digest(root, epoch, pp.fingerprint, sig)


def verify_digest(digest: Digest, pp: PublicParams) -> bool:
    """Signature check under the published key, plus the parameter binding."""
    if digest.fingerprint != pp.fingerprint:
        return False
    try:
        pp.verifying_key().verify(digest.signature, digest.message())
    except InvalidSignature:
        return False
    return True
