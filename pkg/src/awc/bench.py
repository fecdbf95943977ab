"""Synthetic corpora with planted intersections and the measurement harness.

Each query uses two dedicated terms whose posting lists are drawn so that
their intersection has exactly the planted size.  Background terms fill the
dictionary to a realistic size and serve as update targets.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import random
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .algebra import hash_to_field
from .crawler import Crawler, required_degree, setup_index
from .index import Document, InvertedIndex, UpdateBatch
from .pairing import keygen
from .prover import Query, answer, prove
from .protocol import encode_proof
from .verifier import FreshnessPolicy, verify

log = logging.getLogger(__name__)

HEADER = ["query_id", "t", "N", "delta", "prove_ms", "verify_merkle_ms", "verify_pairing_ms", "proof_bytes"]
UPDATE_HEADER = ["batch_id", "kind", "t_prime", "n_prime", "update_ms"]


@dataclass
class SyntheticSpec:
    """Corpus shape and the query families to plant.

    Lengths are per-list; every family entry becomes one two-term query.
    ``frequent_rare`` holds total set sizes N: each yields a frequent-frequent
    pair (N/2, N/2) and a frequent-rare pair split by ``rare_ratio``.
    """

    n_docs: int = 10_000
    n_terms: int = 1_000
    background_max_len: int = 200
    rare_ratio: int = 10
    seed: int = 1
    runs: int = 5
    # prove time versus N at fixed delta
    n_lengths: tuple = (500, 1000, 2000, 4000)
    n_delta: int = 100
    # prove/verify time and proof size versus delta at fixed list length
    delta_length: int = 2000
    deltas: tuple = (10, 20, 40, 80, 160, 320)
    # verify time versus N at fixed delta
    verify_delta: int = 80
    verify_lengths: tuple = (200, 2000)
    frequent_rare: tuple = (2200,)
    frequent_rare_delta: int = 50
    # update batches touching t' background terms
    t_primes: tuple = (10, 100, 1000)

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        raw = json.loads(text)
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown spec fields: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()})

    def pairs(self) -> list[tuple[str, int, int, int]]:
        """(family, len_a, len_b, delta) for every planted query."""
        out = [("prove_vs_n", L, L, self.n_delta) for L in self.n_lengths]
        out += [("vs_delta", self.delta_length, self.delta_length, d) for d in self.deltas]
        out += [("verify_vs_n", L, L, self.verify_delta) for L in self.verify_lengths]
        for n in self.frequent_rare:
            out.append(("frequent_frequent", n // 2, n - n // 2, self.frequent_rare_delta))
            rare = max(n // (self.rare_ratio + 1), self.frequent_rare_delta)
            out.append(("frequent_rare", n - rare, rare, self.frequent_rare_delta))
        return out

    def check(self) -> None:
        for family, a, b, d in self.pairs():
            if not 0 <= d <= min(a, b):
                raise ValueError(f"{family}: delta={d} exceeds the list lengths {a}, {b}")
            if a + b - d > self.n_docs:
                raise ValueError(f"{family}: lists of {a} and {b} need {a + b - d} docs > {self.n_docs}")
        if max(self.t_primes, default=0) > self.n_terms:
            raise ValueError("t' cannot exceed the number of background terms")
        if self.runs < 1:
            raise ValueError("runs must be positive")


@dataclass(frozen=True)
class PlantedQuery:
    query_id: str
    family: str
    terms: tuple
    delta: int


@dataclass
class SyntheticCorpus:
    index: InvertedIndex
    queries: list
    background: list
    doc_ids: list


@dataclass
class MeasurementRow:
    query_id: str
    t: int
    N: int
    delta: int
    prove_ms: float
    verify_merkle_ms: float
    verify_pairing_ms: float
    proof_bytes: int

    @property
    def verify_ms(self) -> float:
        return self.verify_merkle_ms + self.verify_pairing_ms


@dataclass
class UpdateRow:
    batch_id: str
    kind: str
    t_prime: int
    n_prime: int
    update_ms: float


@dataclass
class SuiteResult:
    rows: dict = field(default_factory=dict)  # family -> [MeasurementRow]
    updates: list = field(default_factory=list)


def synthetic_doc_id(seed: int, i: int) -> int:
    return hash_to_field(f"synthetic:{seed}:{i}".encode())


def term_name(i: int) -> str:
    return f"w{i:05d}"


def generate(spec: SyntheticSpec, seed: int | None = None) -> SyntheticCorpus:
    """Deterministic corpus and query set for ``spec``.

    For a pair (a, b, delta): delta shared documents, then a - delta and
    b - delta documents drawn from the rest with no overlap, so the
    intersection is exactly the planted one.
    """
    spec.check()
    seed = spec.seed if seed is None else seed
    rng = random.Random(seed)
    ids = [synthetic_doc_id(seed, i) for i in range(spec.n_docs)]
    postings: dict[str, list[int]] = {}

    background = [term_name(i) for i in range(spec.n_terms)]
    for t in background:
        k = min(spec.n_docs, max(1, int(rng.paretovariate(1.2))), spec.background_max_len)
        postings[t] = rng.sample(ids, k)

    queries = []
    for qi, (family, la, lb, delta) in enumerate(spec.pairs()):
        picked = rng.sample(ids, la + lb - delta)
        common = picked[:delta]
        a = common + picked[delta:la]
        b = common + picked[la:]
        ta, tb = f"q{qi:03d}a", f"q{qi:03d}b"
        postings[ta], postings[tb] = a, b
        queries.append(PlantedQuery(f"{family}-{qi:03d}", family, (ta, tb), delta))

    registry = {d: f"synthetic/{i}" for i, d in enumerate(ids)}
    index = InvertedIndex.from_postings(postings, registry)
    return SyntheticCorpus(index, queries, background, ids)


def _median_ms(samples: Sequence[float]) -> float:
    return statistics.median(samples) * 1000.0


def measure_query(crawler: Crawler, q: PlantedQuery, runs: int, workers: int = 1) -> MeasurementRow:
    bundle, pp, digest = crawler.bundle, crawler.pp, crawler.digest
    query = Query(q.terms)
    result = answer(bundle, query)
    if len(result) != q.delta:
        raise AssertionError(f"{q.query_id}: planted delta {q.delta}, found {len(result)}")

    prove_times = []
    proof = None
    for _ in range(runs):
        t0 = time.perf_counter()
        proof = prove(bundle, pp, query, result, workers=workers)
        prove_times.append(time.perf_counter() - t0)

    merkle, pairing = [], []
    for _ in range(runs):
        timings: dict = {}
        verdict = verify(query, result, proof, digest, pp, FreshnessPolicy(), timings)
        if not verdict:
            raise AssertionError(f"{q.query_id}: honest proof rejected at {verdict.check_name}")
        merkle.append(timings["merkle"])
        pairing.append(timings["pairing"])

    n_total = sum(len(bundle.index.postings[t]) for t in q.terms)
    return MeasurementRow(
        q.query_id,
        len(q.terms),
        n_total,
        q.delta,
        _median_ms(prove_times),
        _median_ms(merkle),
        _median_ms(pairing),
        len(encode_proof(proof)),
    )


def measure_updates(
    crawler: Crawler, t_primes: Sequence[int], terms: Sequence[str], runs: int, tag: str = "u"
) -> list[UpdateRow]:
    """Add then remove one document touching t' existing terms, ``runs`` times each.

    The add/remove pair leaves postings, accumulation values and root as they
    were, so repeated runs measure the same batch.
    """
    rows = []
    for t_prime in t_primes:
        text = " ".join(terms[:t_prime])
        adds, removes = [], []
        n_prime = 0
        for r in range(runs):
            doc = Document(f"update/{tag}/{t_prime}/{r}", text)
            t0 = time.perf_counter()
            delta, _ = crawler.apply_update(UpdateBatch(added=(doc,)))
            adds.append(time.perf_counter() - t0)
            n_prime = delta.n_prime
            if delta.t_prime != t_prime:
                raise AssertionError(f"batch touched {delta.t_prime} terms, expected {t_prime}")
            t0 = time.perf_counter()
            crawler.apply_update(UpdateBatch(removed=(doc.doc_id,)))
            removes.append(time.perf_counter() - t0)
        rows.append(UpdateRow(f"{tag}-add-{t_prime}", "add", t_prime, n_prime, _median_ms(adds)))
        rows.append(UpdateRow(f"{tag}-remove-{t_prime}", "remove", t_prime, n_prime, _median_ms(removes)))
    return rows


def setup_corpus(corpus: SyntheticCorpus, seed: int = 1, margin: int = 8) -> Crawler:
    """Authenticate the corpus with a degree bound just above what it needs."""
    n = required_degree(corpus.index) + margin
    keys = keygen(n, random.Random(seed))
    return setup_index(corpus.index, keys=keys)


def run_suite(
    corpus: SyntheticCorpus,
    queries: Sequence[PlantedQuery],
    out_dir: str | None = None,
    spec: SyntheticSpec | None = None,
    crawler: Crawler | None = None,
    workers: int = 1,
) -> SuiteResult:
    """Measure every query, then the update batches, and write the CSVs."""
    spec = spec or SyntheticSpec()
    if crawler is None:
        crawler = setup_corpus(corpus, spec.seed)
    result = SuiteResult()
    for q in queries:
        row = measure_query(crawler, q, spec.runs, workers)
        log.info("%s N=%d delta=%d prove=%.1fms", q.query_id, row.N, row.delta, row.prove_ms)
        result.rows.setdefault(q.family, []).append(row)
    if spec.t_primes:
        result.updates = measure_updates(crawler, spec.t_primes, corpus.background, spec.runs)
    if out_dir is not None:
        write_csvs(result, out_dir)
    return result


FIGURES = {
    "prove_vs_n.csv": ("prove_vs_n", "frequent_frequent", "frequent_rare"),
    "prove_vs_delta.csv": ("vs_delta",),
    "verify_vs_delta.csv": ("vs_delta",),
    "verify_vs_n.csv": ("verify_vs_n",),
    "proof_size_vs_delta.csv": ("vs_delta",),
}


def write_csvs(result: SuiteResult, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, families in FIGURES.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HEADER)
            for fam in families:
                for row in result.rows.get(fam, []):
                    w.writerow(_format(asdict(row), HEADER))
        written.append(path)
    path = os.path.join(out_dir, "update_vs_tprime.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(UPDATE_HEADER)
        for row in result.updates:
            w.writerow(_format(asdict(row), UPDATE_HEADER))
    written.append(path)
    return written


def _format(row: dict, header: Sequence[str]) -> list:
    return [f"{row[k]:.3f}" if isinstance(row[k], float) else row[k] for k in header]


def affine_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares (intercept, slope, max absolute residual)."""
    slope, intercept = statistics.linear_regression(xs, ys)
    resid = max(abs(y - (intercept + slope * x)) for x, y in zip(xs, ys))
    return intercept, slope, resid
