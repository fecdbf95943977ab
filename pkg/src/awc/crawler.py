"""Trusted crawler: key generation, authenticated index setup and epoch updates."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import authdict
from .accumulator import AccumulationTable, accumulate, update_batch
from .authdict import Digest, MerkleTree, sign_digest
from .errors import CapacityError, CorpusError
from .index import (
    DEFAULT_MIN_DF,
    DEFAULT_STOPWORDS,
    Document,
    IndexDelta,
    InvertedIndex,
    UpdateBatch,
    apply_delta,
    build_inverted_index,
    diff,
    ingest,
)
from .pairing import G1Point, PublicParams, SecretKey, g1_to_bytes, keygen

log = logging.getLogger(__name__)


@dataclass
class ServerBundle:
    """Everything the untrusted server needs: index, accumulation values and tree."""

    index: InvertedIndex
    table: AccumulationTable
    tree: MerkleTree

    @property
    def epoch(self) -> int:
        return self.table.epoch


@dataclass(frozen=True)
class BundleDelta:
    """Changes shipped to the server for one epoch step."""

    prev_epoch: int
    epoch: int
    index_delta: IndexDelta
    values: Mapping[str, G1Point] = field(default_factory=dict)  # term -> new T; absent = dropped

    @property
    def t_prime(self) -> int:
        return self.index_delta.t_prime

    @property
    def n_prime(self) -> int:
        return self.index_delta.n_prime


def required_degree(index: InvertedIndex) -> int:
    """max(m, longest inverted list): the smallest admissible ladder length."""
    return max(len(index.postings), index.max_list_length(), 1)


def default_degree(index: InvertedIndex, headroom: int = 2) -> int:
    need = required_degree(index)
    if headroom <= 1:
        return need
    return 1 << (headroom * need - 1).bit_length()


def _tree_from_table(entries: Mapping[str, G1Point]) -> MerkleTree:
    return authdict.build((t, g1_to_bytes(v)) for t, v in entries.items())


def check_bundle(bundle: ServerBundle, sk: SecretKey, pp: PublicParams) -> bool:
    """Trapdoor audit: every accumulation value and leaf matches the postings."""
    if set(bundle.table.entries) != set(bundle.index.postings):
        return False
    for term, ids in bundle.index.postings.items():
        if bundle.table[term] != accumulate(ids, sk, pp):
            return False
    return bundle.tree.root == _tree_from_table(bundle.table.entries).root


def apply_bundle_delta(bundle: ServerBundle, delta: BundleDelta) -> ServerBundle:
    """Server side: a new snapshot with ``delta`` applied; ``bundle`` is left untouched."""
    if delta.prev_epoch != bundle.epoch:
        raise ValueError(f"delta is for epoch {delta.prev_epoch}, bundle is at {bundle.epoch}")
    index = bundle.index.copy()
    apply_delta(index, delta.index_delta)
    entries = dict(bundle.table.entries)
    dictionary_changed = False
    for term in delta.index_delta.terms:
        if term in delta.values:
            dictionary_changed |= term not in entries
            entries[term] = delta.values[term]
        elif term in entries:
            del entries[term]
            dictionary_changed = True
    table = AccumulationTable(entries, delta.epoch)
    if dictionary_changed:
        tree = _tree_from_table(entries)
    else:
        tree = authdict.update_leaves(
            bundle.tree, {t: g1_to_bytes(v) for t, v in delta.values.items()}
        )
    return ServerBundle(index, table, tree)


class Crawler:
    """Holds the trapdoor and the authoritative copy of the authenticated index.

    The crawler is the single writer: ``apply_update`` mutates its index in
    place and returns the delta for the server plus the newly signed digest.
    """

    def __init__(
        self,
        sk: SecretKey,
        pp: PublicParams,
        bundle: ServerBundle,
        digest: Digest,
        stopwords: Iterable[str] = DEFAULT_STOPWORDS,
    ):
        self.sk = sk
        self.pp = pp
        self.bundle = bundle
        self.digest = digest
        self.stopwords = frozenset(stopwords)

    @property
    def epoch(self) -> int:
        return self.bundle.epoch

    def apply_update(self, batch: UpdateBatch) -> tuple[BundleDelta, Digest]:
        """Advance one epoch; an empty batch is a freshness heartbeat."""
        index = self.bundle.index
        delta = diff(index, batch, self.stopwords)

        new_m = len(index.postings)
        for term, d in delta.terms.items():
            old = len(index.postings.get(term, ()))
            size = old + len(d.adds) - len(d.removes)
            if size > self.pp.n:
                raise CapacityError(
                    f"inverted list of {term!r} would grow to {size} > n={self.pp.n}"
                )
            if old == 0 and size > 0:
                new_m += 1
            elif old > 0 and size == 0:
                new_m -= 1
        if new_m > self.pp.n:
            raise CapacityError(f"dictionary would grow to {new_m} terms > n={self.pp.n}")

        entries = dict(self.bundle.table.entries)
        values = {}
        for term, d in delta.terms.items():
            old = len(index.postings.get(term, ()))
            if old + len(d.adds) - len(d.removes) == 0:
                entries.pop(term, None)
                continue
            if term in entries:
                values[term] = update_batch(entries[term], d.adds, d.removes, self.sk)
            else:
                values[term] = accumulate(d.adds, self.sk, self.pp)
            entries[term] = values[term]

        dictionary_changed = len(entries) != len(self.bundle.table.entries) or any(
            t not in self.bundle.table.entries for t in values
        )
        if dictionary_changed:
            tree = _tree_from_table(entries)
        else:
            tree = authdict.update_leaves(
                self.bundle.tree, {t: g1_to_bytes(v) for t, v in values.items()}
            )

        apply_delta(index, delta)
        prev = self.epoch
        epoch = prev + 1
        self.bundle = ServerBundle(index, AccumulationTable(entries, epoch), tree)
        self.digest = sign_digest(tree.root, epoch, self.sk, self.pp)
        log.info("epoch %d: t'=%d n'=%d", epoch, delta.t_prime, delta.n_prime)
        return BundleDelta(prev, epoch, delta, values), self.digest

    def server_bundle(self) -> ServerBundle:
        """Independent copy of the bundle for hand-off to a server."""
        b = self.bundle
        return ServerBundle(b.index.copy(), b.table, b.tree)


def setup_index(
    index: InvertedIndex,
    n: int | None = None,
    headroom: int = 2,
    rng=None,
    keys: tuple[SecretKey, PublicParams] | None = None,
    stopwords: Iterable[str] = DEFAULT_STOPWORDS,
) -> Crawler:
    """Authenticate an already built inverted index (epoch 0).

    ``keys`` reuses an existing trapdoor and parameters; otherwise a fresh
    pair is generated with degree bound ``n`` (or the default sizing).
    """
    if not index.postings:
        raise CorpusError("corpus is empty after filtering")
    need = required_degree(index)
    if keys is not None:
        sk, pp = keys
        if pp.n < need:
            raise CapacityError(f"parameters support n={pp.n}, index needs {need}")
    else:
        if n is not None and n < need:
            raise CapacityError(f"n={n} is below max(m, max|S_i|)={need}")
        sk, pp = keygen(n if n is not None else default_degree(index, headroom), rng)

    entries = {t: accumulate(ids, sk, pp) for t, ids in index.postings.items()}
    tree = _tree_from_table(entries)
    bundle = ServerBundle(index, AccumulationTable(entries, 0), tree)
    digest = sign_digest(tree.root, 0, sk, pp)
    return Crawler(sk, pp, bundle, digest, stopwords)


def setup(
    source: str | Sequence[Document],
    n: int | None = None,
    headroom: int = 2,
    rng=None,
    keys: tuple[SecretKey, PublicParams] | None = None,
    stopwords: Iterable[str] = DEFAULT_STOPWORDS,
    min_df: int = DEFAULT_MIN_DF,
    max_depth: int = 1,
    max_pages: int = 100,
) -> Crawler:
    """Ingest a corpus (path or documents), index it and authenticate it."""
    docs = ingest(source, max_depth=max_depth, max_pages=max_pages) if isinstance(source, str) else list(source)
    index = build_inverted_index(docs, stopwords, min_df)
    return setup_index(index, n=n, headroom=headroom, rng=rng, keys=keys, stopwords=stopwords)
