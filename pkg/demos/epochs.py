"""Crawler updates, server deltas and stale-answer detection.

The crawler re-indexes a small corpus twice.  The server only ever sees the
deltas.  A client holding the newest digest rejects answers computed
against an older snapshot.

    python demos/epochs.py
"""

import random

from awc import Document, FreshnessPolicy, Query, Server, UpdateBatch, build_inverted_index, setup_index
from awc.pairing import keygen
from awc.verifier import verify

DOCS = [
    Document("a.txt", "solid state disk with fast memory"),
    Document("b.txt", "hard disk and memory upgrade"),
    Document("c.txt", "memory leak in the disk driver"),
]


def ask(server, digest, pp, terms, policy=FreshnessPolicy()):
    q = Query(tuple(terms))
    resp = server.handle(list(terms))
    v = verify(q, resp.answer, resp.proof, digest, pp, policy)
    return resp, v


def main():
    crawler = setup_index(build_inverted_index(DOCS, min_df=1), keys=keygen(16, random.Random(1)))
    server = Server(crawler.server_bundle(), crawler.pp)
    pp = crawler.pp

    resp, v = ask(server, crawler.digest, pp, ["disk", "memory"])
    print(f"epoch {resp.epoch}: disk AND memory -> {len(resp.answer)} docs, {v.to_json()}")
    stale = resp

    batch = UpdateBatch(added=(Document("d.txt", "disk memory benchmark"),), removed=(DOCS[2].doc_id,))
    delta, digest = crawler.apply_update(batch)
    print(f"crawler: epoch {digest.epoch}, t'={delta.t_prime} terms touched, n'={delta.n_prime} documents")

    # the client already knows about epoch 1; the server has not caught up
    q = Query(("disk", "memory"))
    v = verify(q, stale.answer, stale.proof, digest, pp)
    print(f"old answer against the new digest: {v.to_json()}")

    server.apply_delta(delta)
    resp, v = ask(server, digest, pp, ["disk", "memory"], FreshnessPolicy.require_latest(digest.epoch))
    print(f"epoch {resp.epoch}: disk AND memory -> {len(resp.answer)} docs, {v.to_json()}")

    _, digest = crawler.apply_update(UpdateBatch())
    print(f"heartbeat: epoch {digest.epoch}, root unchanged: {digest.root == crawler.bundle.tree.root}")


if __name__ == "__main__":
    main()
