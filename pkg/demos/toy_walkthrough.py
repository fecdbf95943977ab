"""Walk through one verified query on the nine-document toy corpus.

Run from the repository root::

    python demos/toy_walkthrough.py
"""

import random
from dataclasses import replace

from awc import InvertedIndex, Query, answer, prove, setup_index, verify
from awc.pairing import keygen
from awc.protocol import encode_proof

POSTINGS = {
    "computer": [6, 8, 9],
    "disk": [1, 2, 4, 5, 6, 7],
    "hard": [1, 3, 5, 7, 8, 9],
    "memory": [1, 4, 7],
    "mouse": [2, 5],
    "port": [3, 5, 9],
    "ram": [5, 6, 7],
    "system": [1, 7],
}


def main():
    # fixed seed so the printout is reproducible; real setups use the OS RNG
    crawler = setup_index(InvertedIndex.from_postings(POSTINGS), keys=keygen(8, random.Random(8)))
    print(f"crawler: {len(POSTINGS)} terms, n={crawler.pp.n}, root={crawler.digest.root.hex()[:16]}...")

    q = Query(("hard", "disk", "memory"))
    result = answer(crawler.bundle, q)
    proof = prove(crawler.bundle, crawler.pp, q, result)
    print(f"server: {' AND '.join(q.terms)} -> {result}")
    print(f"  answer polynomial coefficients: {proof.coefficients}")
    disk = proof.accumulations[1]
    print(f"  disk leaf #{disk.index} with {len(disk.siblings)} sibling hashes")
    print(f"  proof size: {len(encode_proof(proof))} bytes")

    v = verify(q, result, proof, crawler.digest, crawler.pp)
    print(f"client: {v.to_json()}")

    # the server drops document 7 and fixes up the coefficients to match
    forged = replace(proof, coefficients=[1, 1])
    v = verify(q, [1], forged, crawler.digest, crawler.pp)
    print(f"client, answer [1]: {v.to_json()}")


if __name__ == "__main__":
    main()
