"""Corpus ingestion, tokenization and the inverted index.

Documents are content-addressed: ``doc_id = hash_to_field(canonical content)``
where canonical content is the extracted visible text followed by the
outgoing link URLs.  Markup changes that leave text and links alone keep the
identifier stable.
"""

from __future__ import annotations

import logging
import os
import re
import unicodedata
import urllib.parse
import urllib.request
from bisect import bisect_left, insort
from collections import deque
from dataclasses import dataclass, field
from html.parser import HTMLParser
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .algebra import hash_to_field
from .errors import CorpusError, UnknownDocumentError

log = logging.getLogger(__name__)

DEFAULT_MIN_DF = 2
_TOKEN_RE = re.compile(r"[^\W_]+")
_HTML_SUFFIXES = (".html", ".htm", ".xhtml")


def _fold(text: str) -> str:
    return unicodedata.normalize("NFC", text).lower()


def load_stopwords(path: str | os.PathLike | None = None) -> frozenset:
    """Read a one-word-per-line list; ``None`` loads the bundled English list."""
    if path is None:
        text = resources.files("awc").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = (line.strip() for line in text.splitlines())
    return frozenset(_fold(w) for w in words if w and not w.startswith("#"))


DEFAULT_STOPWORDS = load_stopwords()


class _Extractor(HTMLParser):
    _SKIP = {"script", "style", "head", "title", "noscript"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.text: list[str] = []
        self.links: list[str] = []
        self._skip = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip += 1
        if tag == "a":
            for name, value in attrs:
                if name == "href" and value:
                    self.links.append(value.strip())

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip:
            self._skip -= 1

    def handle_data(self, data):
        if not self._skip:
            self.text.append(data)


def extract_html(markup: str) -> tuple[str, list[str]]:
    """Visible text (whitespace-collapsed) and href targets of an HTML page."""
    parser = _Extractor()
    parser.feed(markup)
    parser.close()
    text = " ".join(" ".join(parser.text).split())
    return text, parser.links


@dataclass(frozen=True)
class Document:
    source: str
    text: str
    links: tuple = ()

    @property
    def content(self) -> bytes:
        body = unicodedata.normalize("NFC", self.text)
        if self.links:
            body += "\n" + "\n".join(self.links)
        return body.encode("utf-8")

    @property
    def doc_id(self) -> int:
        return hash_to_field(self.content)


def document_from_bytes(source: str, raw: bytes, html: bool | None = None) -> Document:
    text = raw.decode("utf-8", errors="replace")
    if html is None:
        html = source.lower().endswith(_HTML_SUFFIXES)
    if html:
        body, links = extract_html(text)
        return Document(source, body, tuple(links))
    return Document(source, text)


def _ingest_directory(root: str) -> list[Document]:
    docs = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if not d.startswith("."))
        for name in sorted(filenames):
            if name.startswith("."):
                continue
            path = os.path.join(dirpath, name)
            rel = os.path.relpath(path, root).replace(os.sep, "/")
            try:
                with open(path, "rb") as fh:
                    raw = fh.read()
            except OSError as exc:
                raise CorpusError(f"unreadable source {path}: {exc}") from exc
            docs.append(document_from_bytes(rel, raw))
    return docs


def fetch(urls: Sequence[str], max_depth: int = 1, max_pages: int = 100, timeout: float = 10.0):
    """Breadth-first fetch following same-host links.

    Returns ``(documents, truncated)``; ``truncated`` is set when the page
    budget stopped the crawl before the frontier was exhausted.
    """
    docs = []
    seen = set()
    queue = deque((u, 0) for u in urls)
    truncated = False
    while queue:
        url, depth = queue.popleft()
        url = urllib.parse.urldefrag(url)[0]
        if url in seen:
            continue
        if len(docs) >= max_pages:
            truncated = True
            break
        seen.add(url)
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                raw = resp.read()
                ctype = resp.headers.get("Content-Type", "")
        except OSError as exc:
            log.warning("fetch failed for %s: %s", url, exc)
            continue
        doc = document_from_bytes(url, raw, html="html" in ctype or None)
        docs.append(doc)
        if depth >= max_depth:
            continue
        host = urllib.parse.urlsplit(url).netloc
        for link in doc.links:
            target = urllib.parse.urljoin(url, link)
            parts = urllib.parse.urlsplit(target)
            if parts.scheme in ("http", "https") and parts.netloc == host:
                queue.append((target, depth + 1))
    return docs, truncated


def ingest(source: str, max_depth: int = 1, max_pages: int = 100) -> list[Document]:
    """Load documents from a directory, or from a file listing one URL per line.

    Output is ordered by source id.  Documents whose canonical content
    collides with an earlier one are dropped.
    """
    if os.path.isdir(source):
        docs = _ingest_directory(source)
    else:
        try:
            with open(source, encoding="utf-8") as fh:
                urls = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        except OSError as exc:
            raise CorpusError(f"unreadable source {source}: {exc}") from exc
        docs, truncated = fetch(urls, max_depth=max_depth, max_pages=max_pages)
        if truncated:
            log.warning("fetch limit of %d pages reached; crawl truncated", max_pages)
    docs.sort(key=lambda d: d.source)
    unique, seen = [], set()
    for d in docs:
        if d.doc_id in seen:
            log.warning("duplicate content in %s, skipped", d.source)
            continue
        seen.add(d.doc_id)
        unique.append(d)
    return unique


def tokenize(document: Document | str, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> frozenset:
    """Lowercased, NFC-normalized alphanumeric tokens minus stopwords."""
    text = document.text if isinstance(document, Document) else document
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else frozenset(stopwords)
    return frozenset(t for t in _TOKEN_RE.findall(_fold(text)) if t not in stop)


def normalize_query(query: str | Sequence[str], stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> list[str]:
    """Query terms normalized like document tokens, in first-seen order, deduplicated."""
    if isinstance(query, str):
        query = [query]
    stop = frozenset(stopwords)
    out: list[str] = []
    for chunk in query:
        for tok in _TOKEN_RE.findall(_fold(chunk)):
            if tok not in stop and tok not in out:
                out.append(tok)
    return out


@dataclass
class InvertedIndex:
    """Term -> strictly sorted doc ids, with the document registry.

    ``doc_terms`` keeps every document's full token set, including terms the
    build-time frequency filter dropped, so updates can compute exact
    postings for terms that enter the dictionary later.
    """

    postings: dict = field(default_factory=dict)
    registry: dict = field(default_factory=dict)
    doc_terms: dict = field(default_factory=dict)

    @property
    def dictionary(self) -> list[str]:
        return sorted(self.postings)

    def __len__(self) -> int:
        return len(self.postings)

    def posting(self, term: str) -> list[int]:
        return self.postings.get(term, [])

    def max_list_length(self) -> int:
        return max((len(v) for v in self.postings.values()), default=0)

    def copy(self) -> "InvertedIndex":
        return InvertedIndex(
            {t: list(v) for t, v in self.postings.items()},
            dict(self.registry),
            dict(self.doc_terms),
        )

    @classmethod
    def from_postings(cls, postings: Mapping[str, Iterable[int]], registry: Mapping[int, str] | None = None):
        """Index over explicit postings, e.g. synthetic corpora or hand-built tables."""
        plist = {t: sorted(set(ids)) for t, ids in postings.items()}
        doc_terms: dict[int, set] = {}
        for t, ids in plist.items():
            for d in ids:
                doc_terms.setdefault(d, set()).add(t)
        reg = dict(registry) if registry else {d: str(d) for d in doc_terms}
        return cls(plist, reg, {d: frozenset(ts) for d, ts in doc_terms.items()})

    def check(self) -> None:
        for t, ids in self.postings.items():
            if not ids:
                raise ValueError(f"empty posting list for {t!r}")
            if any(a >= b for a, b in zip(ids, ids[1:])):
                raise ValueError(f"posting list for {t!r} is not strictly sorted")
            missing = [d for d in ids if d not in self.registry]
            if missing:
                raise ValueError(f"posting for {t!r} references unregistered docs")


def build_inverted_index(
    documents: Iterable[Document],
    stopwords: Iterable[str] = DEFAULT_STOPWORDS,
    min_df: int = DEFAULT_MIN_DF,
) -> InvertedIndex:
    """Inverted index over ``documents``; terms in fewer than ``min_df`` documents are dropped."""
    stop = frozenset(stopwords)
    registry: dict[int, str] = {}
    doc_terms: dict[int, frozenset] = {}
    raw: dict[str, list[int]] = {}
    for doc in documents:
        did = doc.doc_id
        if did in registry:
            continue
        terms = tokenize(doc, stop)
        registry[did] = doc.source
        doc_terms[did] = terms
        for t in terms:
            raw.setdefault(t, []).append(did)
    postings = {t: sorted(ids) for t, ids in sorted(raw.items()) if len(ids) >= min_df}
    return InvertedIndex(postings, registry, doc_terms)


@dataclass(frozen=True)
class TermDelta:
    adds: tuple = ()
    removes: tuple = ()


@dataclass(frozen=True)
class UpdateBatch:
    """Documents to add and identifiers to remove.

    A modified page is a removal of its old identifier plus an addition of
    the new content.
    """

    added: tuple = ()
    removed: tuple = ()


@dataclass(frozen=True)
class IndexDelta:
    terms: Mapping[str, TermDelta]
    added_docs: Mapping[int, tuple]  # doc_id -> (source, frozenset of terms)
    removed_docs: frozenset

    @property
    def t_prime(self) -> int:
        return len(self.terms)

    @property
    def n_prime(self) -> int:
        return len(self.added_docs) + len(self.removed_docs)


def diff(
    index: InvertedIndex,
    batch: UpdateBatch,
    stopwords: Iterable[str] = DEFAULT_STOPWORDS,
) -> IndexDelta:
    """Per-term additions and removals that turn ``index`` into the updated corpus.

    Terms that are new to the dictionary get their complete posting list as
    additions, including older documents that contain them.
    """
    stop = frozenset(stopwords)
    removed = set()
    for did in batch.removed:
        if did not in index.registry:
            raise UnknownDocumentError(did)
        removed.add(did)
    added: dict[int, tuple] = {}
    for doc in batch.added:
        did = doc.doc_id
        if did in added:
            continue
        added[did] = (doc.source, tokenize(doc, stop))
    # remove-then-add of identical content is a no-op
    for did in list(added):
        if did in removed:
            removed.discard(did)
            del added[did]
        elif did in index.registry:
            log.info("document %s already indexed; skipped", added[did][0])
            del added[did]

    adds: dict[str, set] = {}
    rems: dict[str, set] = {}
    for did in removed:
        for t in index.doc_terms.get(did, ()):
            if t in index.postings:
                rems.setdefault(t, set()).add(did)
    new_terms = set()
    for did, (_, terms) in added.items():
        for t in terms:
            adds.setdefault(t, set()).add(did)
            if t not in index.postings:
                new_terms.add(t)
    if new_terms:
        # older documents holding a term the build-time filter had dropped
        for did, terms in index.doc_terms.items():
            if did in removed:
                continue
            for t in terms & new_terms:
                adds[t].add(did)

    deltas = {}
    for t in sorted(set(adds) | set(rems)):
        deltas[t] = TermDelta(tuple(sorted(adds.get(t, ()))), tuple(sorted(rems.get(t, ()))))
    return IndexDelta(deltas, added, frozenset(removed))


def apply_delta(index: InvertedIndex, delta: IndexDelta) -> None:
    """Apply ``delta`` to ``index`` in place; emptied terms leave the dictionary."""
    for t, d in delta.terms.items():
        plist = index.postings.setdefault(t, [])
        for x in d.removes:
            i = bisect_left(plist, x)
            if i < len(plist) and plist[i] == x:
                del plist[i]
        for x in d.adds:
            i = bisect_left(plist, x)
            if i == len(plist) or plist[i] != x:
                insort(plist, x)
        if not plist:
            del index.postings[t]
    for did in delta.removed_docs:
        index.registry.pop(did, None)
        index.doc_terms.pop(did, None)
    for did, (source, terms) in delta.added_docs.items():
        index.registry[did] = source
        index.doc_terms[did] = frozenset(terms)
