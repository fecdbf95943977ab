"""Binary file and wire formats.

Conventions: integers are big-endian, variable-length fields carry a 4-byte
length prefix, field elements are 32-byte big-endian and must be canonical
(< P), G1/G2 points use their 48/96-byte compressed encodings.

Sectioned files (params ``AWCP``, bundle and delta ``AWCB``, keystore
``AWCK``)::

    magic(4) version(1) section_count(2)
    { tag(4) length(4) payload sha256(payload)(32) } * section_count

Fixed-layout records (digest ``AWCD``, request ``AWCQ``, response ``AWCR``)
end with a SHA-256 over all preceding bytes.  No format accepts trailing
bytes, and an unknown version is rejected before anything else is parsed.
"""

from __future__ import annotations

import hashlib
import os
import struct
from typing import Iterable, Sequence

from .accumulator import AccumulationTable
from .algebra import P
from .authdict import AbsenceProof, Digest, MerkleProof
from .crawler import BundleDelta, ServerBundle, _tree_from_table
from .errors import ChecksumMismatch, FormatError, TruncatedFile, VersionUnsupported
from .index import IndexDelta, InvertedIndex, TermDelta
from .pairing import (
    G1_BYTES,
    G2_BYTES,
    PublicParams,
    SecretKey,
    g1_from_bytes,
    g1_to_bytes,
    g2_from_bytes,
    g2_to_bytes,
)
from .prover import Proof, Response

VERSION = 1

MAGIC_PARAMS = b"AWCP"
MAGIC_BUNDLE = b"AWCB"
MAGIC_DIGEST = b"AWCD"
MAGIC_RESPONSE = b"AWCR"
MAGIC_REQUEST = b"AWCQ"
MAGIC_KEYSTORE = b"AWCK"


class Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def raw(self, b: bytes) -> "Writer":
        self.parts.append(bytes(b))
        return self

    def u8(self, x: int):
        return self.raw(struct.pack(">B", x))

    def u16(self, x: int):
        return self.raw(struct.pack(">H", x))

    def u32(self, x: int):
        return self.raw(struct.pack(">I", x))

    def u64(self, x: int):
        return self.raw(struct.pack(">Q", x))

    def blob(self, b: bytes):
        return self.u32(len(b)).raw(b)

    def text(self, s: str):
        return self.blob(s.encode("utf-8"))

    def scalar(self, x: int):
        if not 0 <= x < P:
            raise ValueError("field element out of range")
        return self.raw(x.to_bytes(32, "big"))

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def raw(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise TruncatedFile(f"need {n} bytes at offset {self.pos}, have {len(self.data) - self.pos}")
        out = bytes(self.data[self.pos : self.pos + n])
        self.pos += n
        return out

    def u8(self) -> int:
        return self.raw(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.raw(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.raw(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.raw(8))[0]

    def blob(self) -> bytes:
        return self.raw(self.u32())

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"invalid UTF-8: {exc}") from None

    def scalar(self) -> int:
        x = int.from_bytes(self.raw(32), "big")
        if x >= P:
            raise FormatError("non-canonical field element")
        return x

    def count(self, width: int, item_size: int = 1) -> int:
        n = self.u32() if width == 4 else self.u16()
        if n * item_size > self.remaining():
            raise TruncatedFile(f"count {n} exceeds remaining data")
        return n

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def done(self) -> None:
        if self.remaining():
            raise FormatError(f"{self.remaining()} trailing bytes")


def _check_header(r: Reader, magic: bytes) -> None:
    got = r.raw(4)
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}")
    version = r.u8()
    if version != VERSION:
        raise VersionUnsupported(f"version {version} is not supported (reader is v{VERSION})")


def write_sections(magic: bytes, sections: Sequence[tuple[bytes, bytes]]) -> bytes:
    w = Writer().raw(magic).u8(VERSION).u16(len(sections))
    for tag, payload in sections:
        assert len(tag) == 4
        w.raw(tag).u32(len(payload)).raw(payload).raw(hashlib.sha256(payload).digest())
    return w.getvalue()


def read_sections(data: bytes, magic: bytes) -> dict[bytes, bytes]:
    r = Reader(data)
    _check_header(r, magic)
    out = {}
    for _ in range(r.u16()):
        tag = r.raw(4)
        payload = r.blob()
        if hashlib.sha256(payload).digest() != r.raw(32):
            raise ChecksumMismatch(f"section {tag!r} checksum mismatch")
        if tag in out:
            raise FormatError(f"duplicate section {tag!r}")
        out[tag] = payload
    r.done()
    return out


def _need(sections: dict, *tags: bytes) -> list[bytes]:
    missing = [t for t in tags if t not in sections]
    if missing:
        raise FormatError(f"missing sections {missing}")
    return [sections[t] for t in tags]


def _seal(body: bytes) -> bytes:
    return body + hashlib.sha256(body).digest()


def _unseal(data: bytes, magic: bytes) -> Reader:
    r = Reader(data)
    _check_header(r, magic)
    if len(data) < 5 + 32:
        raise TruncatedFile("record shorter than its checksum")
    if hashlib.sha256(data[:-32]).digest() != data[-32:]:
        raise ChecksumMismatch(f"{magic.decode()} record checksum mismatch")
    return Reader(data[:-32])


# --- params -----------------------------------------------------------------


def encode_params(pp: PublicParams, max_degree: int | None = None) -> bytes:
    """Serialize parameters, optionally truncated to ``max_degree + 1`` powers."""
    if max_degree is not None:
        pp = pp.truncated(max_degree)
    head = (
        Writer()
        .u8(len(pp.group)).raw(pp.group)
        .u64(pp.n)
        .u64(pp.available_degree)
        .raw(pp.verify_key)
        .raw(pp.ladder_tail)
        .getvalue()
    )
    g1s = b"".join(g1_to_bytes(x) for x in pp.powers_g1)
    g2s = b"".join(g2_to_bytes(x) for x in pp.powers_g2)
    return write_sections(MAGIC_PARAMS, [(b"HEAD", head), (b"PWG1", g1s), (b"PWG2", g2s)])


def decode_params(data: bytes) -> PublicParams:
    head, g1s, g2s = _need(read_sections(data, MAGIC_PARAMS), b"HEAD", b"PWG1", b"PWG2")
    r = Reader(head)
    group = r.raw(r.u8())
    n = r.u64()
    k = r.u64()
    vk = r.raw(32)
    tail = r.raw(32)
    r.done()
    if k > n or len(g1s) != (k + 1) * G1_BYTES or len(g2s) != (k + 1) * G2_BYTES:
        raise FormatError("power ladder length does not match the header")
    p1 = tuple(g1_from_bytes(g1s[i : i + G1_BYTES]) for i in range(0, len(g1s), G1_BYTES))
    p2 = tuple(g2_from_bytes(g2s[i : i + G2_BYTES]) for i in range(0, len(g2s), G2_BYTES))
    if k == n and tail != bytes(32):
        raise FormatError("full ladder with a non-empty tail link")
    return PublicParams(n=n, powers_g1=p1, powers_g2=p2, verify_key=vk, ladder_tail=tail, group=group)


# --- keystore ---------------------------------------------------------------


def encode_keystore(sk: SecretKey, pp: PublicParams) -> bytes:
    body = Writer().scalar(sk.s).raw(sk.sig_key_bytes()).raw(pp.fingerprint).getvalue()
    return write_sections(MAGIC_KEYSTORE, [(b"KEYS", body)])


def decode_keystore(data: bytes) -> tuple[SecretKey, bytes]:
    """Returns the secret key and the fingerprint of the parameters it belongs to."""
    from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

    (body,) = _need(read_sections(data, MAGIC_KEYSTORE), b"KEYS")
    r = Reader(body)
    s = r.scalar()
    seed = r.raw(32)
    fp = r.raw(32)
    r.done()
    if s == 0:
        raise FormatError("zero trapdoor")
    return SecretKey(s, Ed25519PrivateKey.from_private_bytes(seed)), fp


# --- digest -----------------------------------------------------------------


def encode_digest(d: Digest) -> bytes:
    body = (
        Writer()
        .raw(MAGIC_DIGEST).u8(VERSION)
        .raw(d.root).u64(d.epoch).raw(d.fingerprint)
        .blob(d.signature)
        .getvalue()
    )
    return _seal(body)


def decode_digest(data: bytes) -> Digest:
    r = _unseal(data, MAGIC_DIGEST)
    _check_header(r, MAGIC_DIGEST)
    root = r.raw(32)
    epoch = r.u64()
    fp = r.raw(32)
    sig = r.blob()
    r.done()
    return Digest(root, epoch, fp, sig)


# --- proofs -----------------------------------------------------------------


def _write_merkle(w: Writer, mp: MerkleProof) -> None:
    w.text(mp.term).raw(mp.value).u32(mp.index).u32(mp.leaf_count).u8(len(mp.siblings))
    for s in mp.siblings:
        w.raw(s)


def _read_merkle(r: Reader) -> MerkleProof:
    term = r.text()
    value = r.raw(G1_BYTES)
    index = r.u32()
    leaf_count = r.u32()
    sibs = tuple(r.raw(32) for _ in range(r.u8()))
    return MerkleProof(term, value, index, leaf_count, sibs)


def encode_proof(proof: Proof) -> bytes:
    w = Writer().u64(proof.epoch)
    w.u32(len(proof.coefficients))
    for c in proof.coefficients:
        w.scalar(c)
    w.u16(len(proof.accumulations))
    for entry in proof.accumulations:
        if isinstance(entry, MerkleProof):
            w.u8(0)
            _write_merkle(w, entry)
        else:
            w.u8(1).text(entry.term)
            w.u8((entry.left is not None) | (entry.right is not None) << 1)
            for side in (entry.left, entry.right):
                if side is not None:
                    _write_merkle(w, side)
    w.u16(len(proof.subset_witnesses))
    for x in proof.subset_witnesses:
        w.raw(g1_to_bytes(x))
    w.u16(len(proof.completeness_witnesses))
    for x in proof.completeness_witnesses:
        w.raw(g2_to_bytes(x))
    return w.getvalue()


def _read_proof(r: Reader) -> Proof:
    epoch = r.u64()
    coeffs = [r.scalar() for _ in range(r.count(4, 32))]
    entries = []
    for _ in range(r.u16()):
        kind = r.u8()
        if kind == 0:
            entries.append(_read_merkle(r))
        elif kind == 1:
            term = r.text()
            flags = r.u8()
            if flags & ~3:
                raise FormatError("bad absence flags")
            left = _read_merkle(r) if flags & 1 else None
            right = _read_merkle(r) if flags & 2 else None
            entries.append(AbsenceProof(term, left, right))
        else:
            raise FormatError(f"unknown accumulation entry kind {kind}")
    subset = tuple(g1_from_bytes(r.raw(G1_BYTES)) for _ in range(r.u16()))
    complete = tuple(g2_from_bytes(r.raw(G2_BYTES)) for _ in range(r.u16()))
    return Proof(epoch, coeffs, tuple(entries), subset, complete)


def decode_proof(data: bytes) -> Proof:
    r = Reader(data)
    proof = _read_proof(r)
    r.done()
    return proof


# --- request / response -------------------------------------------------------


def encode_request(terms: Sequence[str], epoch: int = 0) -> bytes:
    w = Writer().raw(MAGIC_REQUEST).u8(VERSION).u64(epoch).u16(len(terms))
    for t in terms:
        w.text(t)
    return _seal(w.getvalue())


def decode_request(data: bytes) -> tuple[int, list[str]]:
    r = _unseal(data, MAGIC_REQUEST)
    _check_header(r, MAGIC_REQUEST)
    epoch = r.u64()
    terms = [r.text() for _ in range(r.u16())]
    r.done()
    return epoch, terms


def encode_response(resp: Response) -> bytes:
    w = Writer().raw(MAGIC_RESPONSE).u8(VERSION).u8(resp.status).u64(resp.epoch)
    w.u32(len(resp.answer))
    for x in resp.answer:
        w.scalar(x)
    w.blob(encode_proof(resp.proof) if resp.proof is not None else b"")
    w.text(resp.message)
    return _seal(w.getvalue())


def decode_response(data: bytes) -> Response:
    r = _unseal(data, MAGIC_RESPONSE)
    _check_header(r, MAGIC_RESPONSE)
    status = r.u8()
    epoch = r.u64()
    answer = [r.scalar() for _ in range(r.count(4, 32))]
    body = r.blob()
    message = r.text()
    r.done()
    proof = decode_proof(body) if body else None
    return Response(status, epoch, answer, proof, message)


# --- bundle -----------------------------------------------------------------


def _write_ids(w: Writer, ids: Iterable[int]) -> None:
    ids = list(ids)
    w.u32(len(ids))
    for x in ids:
        w.scalar(x)


def _read_ids(r: Reader) -> list[int]:
    return [r.scalar() for _ in range(r.count(4, 32))]


def _encode_index(index: InvertedIndex, epoch: int) -> bytes:
    w = Writer().u64(epoch)
    vocab = sorted(set(index.postings).union(*index.doc_terms.values()) if index.doc_terms else index.postings)
    pos = {t: i for i, t in enumerate(vocab)}
    w.u32(len(vocab))
    for t in vocab:
        w.text(t)
    terms = sorted(index.postings)
    w.u32(len(terms))
    for t in terms:
        w.u32(pos[t])
        _write_ids(w, index.postings[t])
    docs = sorted(index.registry)
    w.u32(len(docs))
    for d in docs:
        w.scalar(d).text(index.registry[d])
        ts = sorted(pos[t] for t in index.doc_terms.get(d, ()))
        w.u32(len(ts))
        for i in ts:
            w.u32(i)
    return w.getvalue()


def _decode_index(payload: bytes) -> tuple[int, InvertedIndex]:
    r = Reader(payload)
    epoch = r.u64()
    vocab = [r.text() for _ in range(r.count(4, 4))]

    def term_at(i):
        if i >= len(vocab):
            raise FormatError("term index out of range")
        return vocab[i]

    postings = {}
    for _ in range(r.count(4, 8)):
        t = term_at(r.u32())
        postings[t] = _read_ids(r)
    registry, doc_terms = {}, {}
    for _ in range(r.count(4, 36)):
        d = r.scalar()
        registry[d] = r.text()
        doc_terms[d] = frozenset(term_at(r.u32()) for _ in range(r.count(4, 4)))
    r.done()
    index = InvertedIndex(postings, registry, doc_terms)
    try:
        index.check()
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    return epoch, index


def _encode_table(table: AccumulationTable) -> bytes:
    w = Writer().u64(table.epoch).u32(len(table.entries))
    for t in sorted(table.entries):
        w.text(t).raw(g1_to_bytes(table.entries[t]))
    return w.getvalue()


def _decode_table(payload: bytes) -> AccumulationTable:
    r = Reader(payload)
    epoch = r.u64()
    entries = {}
    for _ in range(r.count(4, 4 + G1_BYTES)):
        t = r.text()
        entries[t] = g1_from_bytes(r.raw(G1_BYTES))
    r.done()
    return AccumulationTable(entries, epoch)


def encode_bundle(bundle: ServerBundle) -> bytes:
    tree = Writer().u64(bundle.epoch).u32(len(bundle.tree)).raw(bundle.tree.root).getvalue()
    return write_sections(
        MAGIC_BUNDLE,
        [
            (b"INDX", _encode_index(bundle.index, bundle.epoch)),
            (b"ACCT", _encode_table(bundle.table)),
            (b"TREE", tree),
        ],
    )


def decode_bundle(data: bytes) -> ServerBundle:
    indx, acct, tree = _need(read_sections(data, MAGIC_BUNDLE), b"INDX", b"ACCT", b"TREE")
    epoch, index = _decode_index(indx)
    table = _decode_table(acct)
    r = Reader(tree)
    tree_epoch = r.u64()
    leaves = r.u32()
    root = r.raw(32)
    r.done()
    if not epoch == table.epoch == tree_epoch:
        raise FormatError("section epochs disagree")
    if set(table.entries) != set(index.postings):
        raise FormatError("accumulation table and dictionary disagree")
    rebuilt = _tree_from_table(table.entries)
    if len(rebuilt) != leaves or rebuilt.root != root:
        raise FormatError("Merkle root does not match the accumulation table")
    return ServerBundle(index, table, rebuilt)


def encode_delta(delta: BundleDelta) -> bytes:
    head = Writer().u64(delta.prev_epoch).u64(delta.epoch).getvalue()
    w = Writer().u32(len(delta.index_delta.terms))
    for t in sorted(delta.index_delta.terms):
        d = delta.index_delta.terms[t]
        w.text(t)
        _write_ids(w, d.adds)
        _write_ids(w, d.removes)
        if t in delta.values:
            w.u8(1).raw(g1_to_bytes(delta.values[t]))
        else:
            w.u8(0)
    docs = Writer().u32(len(delta.index_delta.added_docs))
    for did in sorted(delta.index_delta.added_docs):
        source, terms = delta.index_delta.added_docs[did]
        docs.scalar(did).text(source).u32(len(terms))
        for t in sorted(terms):
            docs.text(t)
    _write_ids(docs, sorted(delta.index_delta.removed_docs))
    return write_sections(
        MAGIC_BUNDLE, [(b"DHDR", head), (b"DTRM", w.getvalue()), (b"DDOC", docs.getvalue())]
    )


def decode_delta(data: bytes) -> BundleDelta:
    head, trm, doc = _need(read_sections(data, MAGIC_BUNDLE), b"DHDR", b"DTRM", b"DDOC")
    r = Reader(head)
    prev, epoch = r.u64(), r.u64()
    r.done()
    r = Reader(trm)
    terms, values = {}, {}
    for _ in range(r.count(4, 13)):
        t = r.text()
        adds = tuple(_read_ids(r))
        rems = tuple(_read_ids(r))
        flag = r.u8()
        if flag == 1:
            values[t] = g1_from_bytes(r.raw(G1_BYTES))
        elif flag != 0:
            raise FormatError("bad value flag")
        terms[t] = TermDelta(adds, rems)
    r.done()
    r = Reader(doc)
    added = {}
    for _ in range(r.count(4, 40)):
        did = r.scalar()
        source = r.text()
        added[did] = (source, frozenset(r.text() for _ in range(r.count(4, 4))))
    removed = frozenset(_read_ids(r))
    r.done()
    return BundleDelta(prev, epoch, IndexDelta(terms, added, removed), values)


# --- files ------------------------------------------------------------------


def write_file(path: str | os.PathLike, data: bytes, private: bool = False) -> None:
    """Write atomically; ``private`` files are created with mode 0600."""
    tmp = f"{os.fspath(path)}.tmp"
    flags = os.O_WRONLY | os.O_CREAT | os.O_TRUNC
    fd = os.open(tmp, flags, 0o600 if private else 0o644)
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    if private:
        os.chmod(tmp, 0o600)
    os.replace(tmp, path)


def read_file(path: str | os.PathLike) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


save_params = lambda path, pp, max_degree=None: write_file(path, encode_params(pp, max_degree))  # noqa: E731
load_params = lambda path: decode_params(read_file(path))  # noqa: E731
save_bundle = lambda path, bundle: write_file(path, encode_bundle(bundle))  # noqa: E731
load_bundle = lambda path: decode_bundle(read_file(path))  # noqa: E731
save_digest = lambda path, d: write_file(path, encode_digest(d))  # noqa: E731
load_digest = lambda path: decode_digest(read_file(path))  # noqa: E731
save_response = lambda path, resp: write_file(path, encode_response(resp))  # noqa: E731
load_response = lambda path: decode_response(read_file(path))  # noqa: E731
save_delta = lambda path, delta: write_file(path, encode_delta(delta))  # noqa: E731
load_delta = lambda path: decode_delta(read_file(path))  # noqa: E731


def save_keystore(path, sk: SecretKey, pp: PublicParams) -> None:
    write_file(path, encode_keystore(sk, pp), private=True)


def load_keystore(path) -> tuple[SecretKey, bytes]:
    return decode_keystore(read_file(path))
