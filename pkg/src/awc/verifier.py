"""Client-side verification of query answers against the signed digest.

Checks run in a fixed order and stop at the first failure: structural
decoding, digest signature, freshness, then the coefficient check (A),
Merkle paths (B), subset pairings (C) and the completeness pairing (D).
"""

from __future__ import annotations

import json
import secrets
import time
from dataclasses import dataclass
from typing import Sequence

from .algebra import P, poly_eval
from .authdict import AbsenceProof, Digest, MerkleProof, verify_absence, verify_digest, verify_path
from .errors import DegreeError, FormatError
from .pairing import GT, G1Point, G2Point, PublicParams, commit_g2, g1_from_bytes, multi_pair
from .prover import Proof, Query

MALFORMED = "malformed"
DIGEST = "B-digest"
STALE = "epoch-stale"
COEFFICIENTS = "A-coefficients"
MERKLE = "B-merkle"
SUBSET = "C-subset"
COMPLETENESS = "D-completeness"


@dataclass(frozen=True)
class FreshnessPolicy:
    """Which digest epochs the client accepts.

    ``latest`` (learned out of band) demands that exact epoch; otherwise
    any epoch at or above ``min_epoch`` is accepted.
    """

    min_epoch: int = 0
    latest: int | None = None

    @classmethod
    def accept_any(cls):
        return cls()

    @classmethod
    def require_min(cls, epoch: int):
        return cls(min_epoch=epoch)

    @classmethod
    def require_latest(cls, epoch: int):
        return cls(min_epoch=epoch, latest=epoch)

    def admits(self, epoch: int) -> bool:
        if self.latest is not None and epoch != self.latest:
            return False
        return epoch >= self.min_epoch


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    failed_check: str | None = None
    term_index: int | None = None
    detail: str = ""

    @classmethod
    def accept(cls):
        return cls(True)

    @classmethod
    def reject(cls, check: str, detail: str = "", term_index: int | None = None):
        return cls(False, check, term_index, detail)

    @property
    def check_name(self) -> str | None:
        if self.failed_check == SUBSET and self.term_index is not None:
            return f"{SUBSET}({self.term_index})"
        return self.failed_check

    def to_json(self) -> str:
        return json.dumps(
            {"accepted": self.accepted, "failed_check": self.check_name, "detail": self.detail},
            sort_keys=True,
        )

    def __bool__(self):
        return self.accepted


class VerificationSession:
    """Per-verification state: a fresh challenge kappa drawn from ``secrets``."""

    def __init__(self, digest: Digest, pp: PublicParams):
        self.digest = digest
        self.pp = pp
        self.kappa = secrets.randbelow(P - 1) + 1


def verify_coefficients(coefficients: Sequence[int], result: Sequence[int], kappa: int) -> bool:
    """sum b_k kappa^k == prod (kappa + x) over the answer."""
    if len(coefficients) != len(result) + 1:
        return False
    expected = 1
    for x in result:
        expected = expected * (kappa + x) % P
    return poly_eval(coefficients, kappa) == expected


def verify_accumulations(accumulations: Sequence, digest: Digest, query: Query) -> bool:
    """Every entry names its query term and chains to the signed root."""
    if len(accumulations) != len(query.terms):
        return False
    for term, entry in zip(query.terms, accumulations):
        if isinstance(entry, MerkleProof):
            if entry.term != term or not verify_path(entry, digest.root):
                return False
        elif isinstance(entry, AbsenceProof):
            if not verify_absence(entry, term, digest.root):
                return False
        else:
            return False
    return True


def _subset_failures(
    commitment: G2Point, accs: Sequence[G1Point], witnesses: Sequence[G1Point], pp: PublicParams
) -> list[int]:
    one = GT.one()
    g_hat = pp.g_hat
    return [
        j
        for j, (acc, w) in enumerate(zip(accs, witnesses))
        if multi_pair([w, -acc], [commitment, g_hat]) != one
    ]


def verify_subset(coefficients: Sequence[int], accs: Sequence[G1Point], witnesses: Sequence[G1Point], pp: PublicParams) -> bool:
    """e(W_j, g_hat^{A(s)}) == e(T_j, g_hat) for every j.

    The G2 commitment to the answer polynomial is computed here, once.
    """
    commitment = commit_g2(coefficients, pp)
    return not _subset_failures(commitment, accs, witnesses, pp)


def verify_completeness(subset_witnesses: Sequence[G1Point], completeness_witnesses: Sequence[G2Point], pp: PublicParams) -> bool:
    """prod_j e(W_j, F_j) == e(g, g_hat)."""
    if len(subset_witnesses) != len(completeness_witnesses) or not subset_witnesses:
        return False
    return multi_pair(subset_witnesses, completeness_witnesses) == pp.base_pairing


def _structure(query: Query, result: Sequence[int], proof: Proof) -> str | None:
    if not isinstance(proof, Proof):
        return "proof has the wrong type"
    if any(not isinstance(x, int) or not 0 < x < P for x in result):
        return "answer element outside Z_p^*"
    if any(a >= b for a, b in zip(result, result[1:])):
        return "answer is not strictly increasing"
    if any(not isinstance(c, int) or not 0 <= c < P for c in proof.coefficients):
        return "non-canonical coefficient"
    t = len(query.terms)
    if len(proof.accumulations) != t:
        return "part B does not cover the query terms"
    absent = any(isinstance(e, AbsenceProof) for e in proof.accumulations)
    if absent:
        if result or proof.subset_witnesses or proof.completeness_witnesses:
            return "unknown term with a non-empty answer or witnesses"
    elif len(proof.subset_witnesses) != t or len(proof.completeness_witnesses) != t:
        return "parts C and D must cover every query term"
    return None


def verify(
    query: Query,
    result: Sequence[int],
    proof: Proof,
    digest: Digest,
    pp: PublicParams,
    policy: FreshnessPolicy = FreshnessPolicy(),
    timings: dict | None = None,
) -> Verdict:
    """Accept ``result`` for ``query`` only if every check passes.

    When ``timings`` is given it receives ``merkle`` and ``pairing`` wall
    times in seconds (digest/Merkle work versus algebraic checks).
    """
    t0 = time.perf_counter()
    problem = _structure(query, result, proof)
    if problem:
        return Verdict.reject(MALFORMED, problem)
    accs = []
    try:
        for entry in proof.accumulations:
            if isinstance(entry, MerkleProof):
                accs.append(g1_from_bytes(entry.value))
    except FormatError as exc:
        return Verdict.reject(MALFORMED, str(exc))

    if not verify_digest(digest, pp):
        return Verdict.reject(DIGEST, "digest signature or parameter binding invalid")
    if not policy.admits(digest.epoch):
        return Verdict.reject(STALE, f"digest epoch {digest.epoch} fails the freshness policy")
    if proof.epoch != digest.epoch:
        return Verdict.reject(STALE, f"proof epoch {proof.epoch} != digest epoch {digest.epoch}")
    t_merkle = time.perf_counter() - t0

    t1 = time.perf_counter()
    session = VerificationSession(digest, pp)
    if not verify_coefficients(proof.coefficients, result, session.kappa):
        return Verdict.reject(COEFFICIENTS, "answer polynomial mismatch at the random challenge")
    t_pairing = time.perf_counter() - t1

    t2 = time.perf_counter()
    if not verify_accumulations(proof.accumulations, digest, query):
        return Verdict.reject(MERKLE, "accumulation value does not chain to the signed root")
    t_merkle += time.perf_counter() - t2

    t3 = time.perf_counter()
    if accs and len(accs) == len(query.terms):
        try:
            commitment = commit_g2(proof.coefficients, pp)
        except DegreeError as exc:
            return Verdict.reject(MALFORMED, str(exc))
        failures = _subset_failures(commitment, accs, proof.subset_witnesses, pp)
        if failures:
            return Verdict.reject(SUBSET, "subset pairing check failed", term_index=failures[0])
        if not verify_completeness(proof.subset_witnesses, proof.completeness_witnesses, pp):
            return Verdict.reject(COMPLETENESS, "completeness pairing check failed")
    t_pairing += time.perf_counter() - t3
    if timings is not None:
        timings["merkle"] = t_merkle
        timings["pairing"] = t_pairing
    return Verdict.accept()


def verify_response_bytes(
    query: Query,
    data: bytes,
    digest: Digest,
    pp: PublicParams,
    policy: FreshnessPolicy = FreshnessPolicy(),
) -> Verdict:
    """Decode a serialized response and verify it; decoding errors reject as malformed."""
    from .prover import STATUS_OK
    from .protocol import decode_response

    try:
        resp = decode_response(data)
    except FormatError as exc:
        return Verdict.reject(MALFORMED, str(exc))
    if resp.status != STATUS_OK or resp.proof is None:
        return Verdict.reject(MALFORMED, f"server status {resp.status}: {resp.message}")
    if resp.epoch != resp.proof.epoch:
        return Verdict.reject(MALFORMED, "response and proof epochs differ")
    return verify(query, resp.answer, resp.proof, digest, pp, policy)
