"""Untrusted server: conjunctive query answering and proof construction."""

from __future__ import annotations

import logging
import os
import socketserver
import struct
import threading
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .accumulator import residual
from .algebra import multi_bezout, poly_from_roots
from .authdict import AbsenceProof, MerkleProof, prove_absence, prove_membership
from .crawler import BundleDelta, ServerBundle, apply_bundle_delta
from .errors import AWCError, FormatError
from .index import DEFAULT_STOPWORDS, normalize_query
from .pairing import G1Point, G2Point, PublicParams, commit_g1, commit_g2

log = logging.getLogger(__name__)

DEFAULT_MAX_TERMS = 16

STATUS_OK = 0
STATUS_MALFORMED = 1
STATUS_UNKNOWN_EPOCH = 2
STATUS_TOO_MANY_TERMS = 3
STATUS_INTERNAL = 4


@dataclass(frozen=True)
class Query:
    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a query needs at least one term")
        if len(set(self.terms)) != len(self.terms):
            raise ValueError("query terms must be distinct")

    @classmethod
    def parse(cls, query: str | Sequence[str], stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> "Query":
        return cls(tuple(normalize_query(query, stopwords)))

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class Proof:
    """Four-part proof for one query answer.

    ``accumulations`` holds one entry per query term: a Merkle membership
    proof carrying the accumulation value, or an absence proof for a term
    outside the dictionary.  Subset and completeness witnesses are present
    only when every term is known.
    """

    epoch: int
    coefficients: list
    accumulations: tuple
    subset_witnesses: tuple = ()
    completeness_witnesses: tuple = ()


@dataclass(frozen=True)
class Response:
    status: int
    epoch: int
    answer: list = field(default_factory=list)
    proof: Proof | None = None
    message: str = ""


def _gallop_intersect(small: Sequence[int], large: Sequence[int]) -> list[int]:
    out = []
    n = len(large)
    lo = 0
    for x in small:
        bound = 1
        while lo + bound < n and large[lo + bound] < x:
            bound *= 2
        i = bisect_left(large, x, lo, min(lo + bound + 1, n))
        if i < n and large[i] == x:
            out.append(x)
        lo = i
        if lo >= n:
            break
    return out


def intersect(lists: Sequence[Sequence[int]]) -> list[int]:
    """Intersection of strictly sorted lists, shortest list first."""
    if not lists:
        return []
    ordered = sorted(lists, key=len)
    result = list(ordered[0])
    for other in ordered[1:]:
        if not result:
            break
        result = _gallop_intersect(result, other)
    return result


def answer(bundle: ServerBundle, query: Query) -> list[int]:
    postings = bundle.index.postings
    if any(t not in postings for t in query.terms):
        return []
    return intersect([postings[t] for t in query.terms])


def _map(fn, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def prove(
    bundle: ServerBundle,
    pp: PublicParams,
    query: Query,
    result: Sequence[int] | None = None,
    workers: int = 1,
) -> Proof:
    """Build the proof that ``result`` is exactly the answer to ``query``.

    Raises NotCoprimeError if ``result`` misses a common element (the claimed
    intersection is not maximal) and DegreeError if a witness polynomial
    outgrows the parameters.
    """
    if result is None:
        result = answer(bundle, query)
    tree = bundle.tree
    known = [t in tree for t in query.terms]
    part_b = tuple(
        prove_membership(tree, t) if k else prove_absence(tree, t)
        for t, k in zip(query.terms, known)
    )
    if not all(known):
        if result:
            raise AWCError("a query with an unknown term has an empty answer")
        return Proof(bundle.epoch, [1], part_b)

    part_a = poly_from_roots(result)
    postings = bundle.index.postings
    polys = [poly_from_roots(residual(postings[t], result)) for t in query.terms]
    subset = _map(lambda p: commit_g1(p, pp), polys, workers)
    cofactors = multi_bezout(polys)
    complete = _map(lambda q: commit_g2(q, pp), cofactors, workers)
    return Proof(bundle.epoch, part_a, part_b, tuple(subset), tuple(complete))


class Server:
    """Serves queries from an immutable snapshot that deltas replace atomically."""

    def __init__(
        self,
        bundle: ServerBundle,
        pp: PublicParams,
        max_terms: int = DEFAULT_MAX_TERMS,
        stopwords: Iterable[str] = DEFAULT_STOPWORDS,
        workers: int | None = None,
    ):
        self._bundle = bundle
        self.pp = pp
        self.max_terms = max_terms
        self.stopwords = frozenset(stopwords)
        self.workers = workers if workers is not None else min(4, os.cpu_count() or 1)
        self._swap_lock = threading.Lock()

    @property
    def bundle(self) -> ServerBundle:
        return self._bundle

    @property
    def epoch(self) -> int:
        return self._bundle.epoch

    def apply_delta(self, delta: BundleDelta) -> None:
        with self._swap_lock:
            self._bundle = apply_bundle_delta(self._bundle, delta)

    def handle(self, terms: Sequence[str], epoch: int = 0) -> Response:
        snapshot = self._bundle  # one snapshot for the whole request
        if epoch and epoch != snapshot.epoch:
            return Response(STATUS_UNKNOWN_EPOCH, snapshot.epoch, message=f"epoch {epoch} not served")
        if len(terms) > self.max_terms:
            return Response(STATUS_TOO_MANY_TERMS, snapshot.epoch, message=f"more than {self.max_terms} terms")
        try:
            query = Query.parse(list(terms), self.stopwords)
        except ValueError as exc:
            return Response(STATUS_MALFORMED, snapshot.epoch, message=str(exc))
        if len(query) > self.max_terms:
            return Response(STATUS_TOO_MANY_TERMS, snapshot.epoch, message=f"more than {self.max_terms} terms")
        try:
            result = answer(snapshot, query)
            proof = prove(snapshot, self.pp, query, result, workers=self.workers)
        except AWCError as exc:
            log.exception("proof construction failed")
            return Response(STATUS_INTERNAL, snapshot.epoch, message=str(exc))
        return Response(STATUS_OK, snapshot.epoch, result, proof)

    def handle_bytes(self, data: bytes) -> bytes:
        from .protocol import decode_request, encode_response

        try:
            epoch, terms = decode_request(data)
        except FormatError as exc:
            return encode_response(Response(STATUS_MALFORMED, self.epoch, message=str(exc)))
        return encode_response(self.handle(terms, epoch))


def _read_exact(sock_file, n: int) -> bytes:
    data = sock_file.read(n)
    if len(data) != n:
        raise EOFError
    return data


MAX_FRAME = 64 << 20


def read_frame(sock_file) -> bytes:
    (length,) = struct.unpack(">I", _read_exact(sock_file, 4))
    if length > MAX_FRAME:
        raise FormatError("frame too large")
    return _read_exact(sock_file, length)


def write_frame(sock_file, payload: bytes) -> None:
    sock_file.write(struct.pack(">I", len(payload)) + payload)
    sock_file.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        while True:
            try:
                frame = read_frame(self.rfile)
            except (EOFError, ConnectionError):
                return
            except FormatError:
                return
            write_frame(self.wfile, self.server.awc_server.handle_bytes(frame))


class _TCPServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True


def serve(server: Server, host: str = "127.0.0.1", port: int = 0) -> socketserver.ThreadingTCPServer:
    """Bind a threaded TCP listener; call ``serve_forever()`` on the result.

    Each connection carries length-prefixed frames (4-byte big-endian length)
    holding one request or response.
    """
    tcp = _TCPServer((host, port), _Handler)
    tcp.awc_server = server
    return tcp


def request(host: str, port: int, terms: Sequence[str], epoch: int = 0, timeout: float = 30.0) -> bytes:
    """Client helper: send one query and return the raw response body."""
    import socket

    from .protocol import encode_request

    with socket.create_connection((host, port), timeout=timeout) as sock:
        f = sock.makefile("rwb")
        write_frame(f, encode_request(terms, epoch))
        return read_frame(f)
