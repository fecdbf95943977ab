"""Verifiable conjunctive keyword search over an authenticated inverted index.

Three roles share this package: the trusted crawler (``awc.crawler``) builds
accumulation values for every inverted list and signs a Merkle digest, the
untrusted server (``awc.prover``) answers conjunctive queries with proofs,
and the client (``awc.verifier``) checks answers against the digest.
"""

from .crawler import Crawler, ServerBundle, setup, setup_index
from .errors import AWCError
from .index import Document, InvertedIndex, UpdateBatch, build_inverted_index
from .pairing import PublicParams, SecretKey, keygen
from .prover import Proof, Query, Server, answer, prove
from .verifier import FreshnessPolicy, Verdict, verify

__version__ = "0.1.0"

__all__ = [
    "AWCError",
    "Crawler",
    "Document",
    "FreshnessPolicy",
    "InvertedIndex",
    "Proof",
    "PublicParams",
    "Query",
    "SecretKey",
    "Server",
    "ServerBundle",
    "UpdateBatch",
    "Verdict",
    "answer",
    "build_inverted_index",
    "keygen",
    "prove",
    "setup",
    "setup_index",
    "verify",
]
