import random
import threading

import pytest

from awc.algebra import P
from awc.authdict import AbsenceProof, MerkleProof
from awc.crawler import setup_index
from awc.errors import NotCoprimeError
from awc.index import Document, InvertedIndex, UpdateBatch, build_inverted_index
from awc.pairing import g1, g2, scalar
from awc.protocol import decode_response, encode_proof, encode_request
from awc.prover import (
    STATUS_MALFORMED,
    STATUS_OK,
    STATUS_TOO_MANY_TERMS,
    STATUS_UNKNOWN_EPOCH,
    Query,
    Server,
    _gallop_intersect,
    answer,
    intersect,
    prove,
    request,
    serve,
)
from awc.verifier import verify, verify_response_bytes

from oracle import brute_intersection


def test_table1_golden_proof(table1):
    sk, pp, bundle = table1.sk, table1.pp, table1.bundle
    q = Query(("hard", "disk", "memory"))
    result = answer(bundle, q)
    assert result == [1, 7]
    proof = prove(bundle, pp, q, result)
    assert proof.coefficients == [7, 8, 1]
    s = sk.s
    residual_exps = [
        (s + 3) * (s + 5) * (s + 8) * (s + 9),  # hard
        (s + 2) * (s + 4) * (s + 5) * (s + 6),  # disk
        (s + 4),  # memory
    ]
    assert list(proof.subset_witnesses) == [g1() * scalar(e % P) for e in residual_exps]
    disk = proof.accumulations[1]
    assert isinstance(disk, MerkleProof) and disk.term == "disk" and len(disk.siblings) == 3
    # completeness: sum q_j(s) P_j(s) = 1 is what F_j encode
    assert verify(q, result, proof, table1.digest, pp)


def test_query_validation():
    with pytest.raises(ValueError):
        Query(())
    with pytest.raises(ValueError):
        Query(("a", "a"))
    assert Query.parse("Hard the disk HARD").terms == ("hard", "disk")


@pytest.mark.parametrize("seed", range(20))
def test_intersect_matches_brute_force(seed):
    rng = random.Random(seed)
    universe = range(1, rng.choice([20, 200, 5000]))
    lists = [sorted(rng.sample(universe, rng.randint(0, min(300, len(universe) - 1)))) for _ in range(rng.randint(1, 4))]
    postings = {str(i): l for i, l in enumerate(lists)}
    assert intersect(lists) == brute_intersection(postings, list(postings))


def test_gallop_skewed():
    large = list(range(0, 100_000, 3))
    small = [3, 4, 300, 99_999, 100_002]
    assert _gallop_intersect(small, large) == [3, 300, 99_999]
    assert intersect([]) == []


def test_single_term_query(table1):
    q = Query(("mouse",))
    result = answer(table1.bundle, q)
    assert result == [2, 5]
    proof = prove(table1.bundle, table1.pp, q, result)
    assert proof.completeness_witnesses == (table1.pp.g_hat,)
    assert verify(q, result, proof, table1.digest, table1.pp)


def test_empty_answer(table1):
    q = Query(("mouse", "computer"))
    assert answer(table1.bundle, q) == []
    proof = prove(table1.bundle, table1.pp, q)
    assert proof.coefficients == [1]
    assert verify(q, [], proof, table1.digest, table1.pp)


def test_unknown_term_absence(table1):
    q = Query(("disk", "network"))
    proof = prove(table1.bundle, table1.pp, q)
    assert isinstance(proof.accumulations[0], MerkleProof)
    assert isinstance(proof.accumulations[1], AbsenceProof)
    assert proof.subset_witnesses == () and proof.completeness_witnesses == ()
    assert verify(q, [], proof, table1.digest, table1.pp)


def test_non_maximal_answer_is_internal_error(table1):
    q = Query(("hard", "disk"))
    with pytest.raises(NotCoprimeError):
        prove(table1.bundle, table1.pp, q, [1])


def test_proof_size_affine_in_delta(keys64):
    rng = random.Random(1)
    ids = rng.sample(range(1, 10**9), 200)
    sizes = []
    for delta in (0, 5, 10, 20):
        a = ids[:30]
        b = ids[:delta] + ids[100:130 - delta]
        crawler = setup_index(InvertedIndex.from_postings({"a": a, "b": b}), keys=keys64)
        q = Query(("a", "b"))
        sizes.append(len(encode_proof(prove(crawler.bundle, crawler.pp, q))))
    steps = {(sizes[i + 1] - sizes[i]) / d for i, d in enumerate((5, 5, 10))}
    assert steps == {32.0}


def test_parallel_workers_same_proof(keys64):
    rng = random.Random(2)
    ids = rng.sample(range(1, 10**9), 60)
    index = InvertedIndex.from_postings({"a": ids[:40], "b": ids[20:60], "c": ids[10:50]})
    crawler = setup_index(index, keys=keys64)
    q = Query(("a", "b", "c"))
    assert prove(crawler.bundle, crawler.pp, q, workers=1) == prove(crawler.bundle, crawler.pp, q, workers=3)


def test_server_statuses(table1):
    server = Server(table1.bundle, table1.pp, max_terms=3, workers=1)
    ok = server.handle(["hard", "disk", "memory"])
    assert ok.status == STATUS_OK and ok.answer == [1, 7]
    assert server.handle(["hard"], epoch=5).status == STATUS_UNKNOWN_EPOCH
    assert server.handle(["a", "b", "c", "d"]).status == STATUS_TOO_MANY_TERMS
    assert server.handle(["the"]).status == STATUS_MALFORMED
    assert server.handle(["Hard", "hard", "DISK"]).answer == [1, 5, 7]


def test_handle_bytes_malformed(table1):
    server = Server(table1.bundle, table1.pp)
    resp = decode_response(server.handle_bytes(b"junk"))
    assert resp.status == STATUS_MALFORMED and resp.proof is None


def test_handle_bytes_round_trip(table1):
    server = Server(table1.bundle, table1.pp)
    data = server.handle_bytes(encode_request(["hard", "disk", "memory"]))
    q = Query(("hard", "disk", "memory"))
    assert verify_response_bytes(q, data, table1.digest, table1.pp)


def test_serve_loopback(table1):
    server = Server(table1.bundle, table1.pp)
    tcp = serve(server, "127.0.0.1", 0)
    t = threading.Thread(target=tcp.serve_forever, daemon=True)
    t.start()
    try:
        host, port = tcp.server_address[:2]
        data = request(host, port, ["hard", "disk", "memory"])
        q = Query(("hard", "disk", "memory"))
        assert verify_response_bytes(q, data, table1.digest, table1.pp)
        bad = decode_response(request(host, port, ["hard"], epoch=9))
        assert bad.status == STATUS_UNKNOWN_EPOCH
    finally:
        tcp.shutdown()
        tcp.server_close()


def test_snapshot_swap_under_load(keys64):
    """Concurrent queries during delta application always see one consistent epoch."""
    rng = random.Random(4)
    vocab = [f"w{i}" for i in range(8)]
    docs = [Document(str(i), " ".join(rng.sample(vocab, 4))) for i in range(30)]
    crawler = setup_index(build_inverted_index(docs, min_df=1), keys=keys64)
    server = Server(crawler.server_bundle(), crawler.pp, workers=1)
    digests = {0: crawler.digest}
    deltas = []
    for i in range(6):
        delta, d = crawler.apply_update(UpdateBatch(added=(Document(f"n{i}", " ".join(rng.sample(vocab, 3))),)))
        deltas.append(delta)
        digests[d.epoch] = d

    failures = []
    stop = threading.Event()

    def client():
        q = Query(("w1", "w2"))
        while not stop.is_set():
            resp = server.handle(list(q.terms))
            v = verify(q, resp.answer, resp.proof, digests[resp.epoch], crawler.pp)
            if not v:
                failures.append((resp.epoch, v.check_name))

    threads = [threading.Thread(target=client) for _ in range(3)]
    for t in threads:
        t.start()
    for delta in deltas:
        server.apply_delta(delta)
    stop.set()
    for t in threads:
        t.join()
    assert failures == []
    assert server.epoch == 6
