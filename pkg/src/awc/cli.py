"""``awc`` command line: one verb per role.

Exit codes: 0 success/accept, 1 reject, 2 usage, 3 I/O or bad file, 4 internal.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import protocol
from .crawler import Crawler, setup
from .errors import AWCError, CapacityError, CorpusError, FormatError, UnknownDocumentError
from .index import DEFAULT_STOPWORDS, UpdateBatch, ingest, load_stopwords

log = logging.getLogger("awc")

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INTERNAL = 4

PARAMS = "params.awcp"
CLIENT_PARAMS = "client-params.awcp"
BUNDLE = "bundle.awcb"
DIGEST = "digest.awcd"
KEYSTORE = "keystore.awck"


class UsageError(Exception):
    pass


def _opt(args, name, default=None):
    """Command-line value, else the verb's config section, else top-level config."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    cfg = args.config_data
    section = cfg.get(args.verb, {})
    if isinstance(section, dict) and name in section:
        return section[name]
    return cfg.get(name, default)


def _stopwords(args):
    path = _opt(args, "stopwords")
    return load_stopwords(path) if path else DEFAULT_STOPWORDS


def _state_paths(d: str) -> dict:
    return {k: os.path.join(d, v) for k, v in
            dict(params=PARAMS, client=CLIENT_PARAMS, bundle=BUNDLE, digest=DIGEST, keystore=KEYSTORE).items()}


def _load_crawler(state: str, stopwords) -> Crawler:
    p = _state_paths(state)
    pp = protocol.load_params(p["params"])
    sk, fp = protocol.load_keystore(p["keystore"])
    if fp != pp.fingerprint:
        raise FormatError("keystore belongs to different parameters")
    bundle = protocol.load_bundle(p["bundle"])
    digest = protocol.load_digest(p["digest"])
    if digest.epoch != bundle.epoch or digest.root != bundle.tree.root:
        raise FormatError("digest does not match the stored bundle")
    return Crawler(sk, pp, bundle, digest, stopwords)


def _save_state(state: str, crawler: Crawler) -> None:
    p = _state_paths(state)
    protocol.save_bundle(p["bundle"], crawler.bundle)
    protocol.save_digest(p["digest"], crawler.digest)


def cmd_crawl(args) -> int:
    import random

    rng = random.Random(args.seed) if args.seed is not None else None
    crawler = setup(
        args.input,
        n=_opt(args, "n"),
        headroom=_opt(args, "headroom", 2),
        rng=rng,
        stopwords=_stopwords(args),
        min_df=_opt(args, "min_df", 2),
        max_depth=_opt(args, "max_depth", 1),
        max_pages=_opt(args, "max_pages", 100),
    )
    os.makedirs(args.out, exist_ok=True)
    p = _state_paths(args.out)
    protocol.save_params(p["params"], crawler.pp)
    k = _opt(args, "client_degree")
    protocol.save_params(p["client"], crawler.pp, k)
    protocol.save_keystore(p["keystore"], crawler.sk, crawler.pp)
    _save_state(args.out, crawler)
    idx = crawler.bundle.index
    print(json.dumps({"docs": len(idx.registry), "terms": len(idx.postings), "n": crawler.pp.n,
                      "epoch": crawler.epoch, "root": crawler.digest.root.hex()}))
    return EXIT_OK


def cmd_update(args) -> int:
    crawler = _load_crawler(args.state, _stopwords(args))
    added = []
    for src in args.add or []:
        added.extend(ingest(src))
    removed = tuple(int(x, 0) for x in args.remove or [])
    delta, digest = crawler.apply_update(UpdateBatch(added=tuple(added), removed=removed))
    _save_state(args.state, crawler)
    if args.delta_out:
        protocol.save_delta(args.delta_out, delta)
    print(json.dumps({"epoch": digest.epoch, "t_prime": delta.t_prime, "n_prime": delta.n_prime,
                      "root": digest.root.hex()}))
    return EXIT_OK


def cmd_publish_digest(args) -> int:
    crawler = _load_crawler(args.state, _stopwords(args))
    if args.heartbeat:
        crawler.apply_update(UpdateBatch())
        _save_state(args.state, crawler)
    if args.out:
        protocol.save_digest(args.out, crawler.digest)
    print(json.dumps({"epoch": crawler.digest.epoch, "root": crawler.digest.root.hex()}))
    return EXIT_OK


def _server(args):
    from .prover import Server

    bundle = protocol.load_bundle(args.bundle)
    pp = protocol.load_params(args.params)
    if args.delta:
        from .crawler import apply_bundle_delta

        for path in args.delta:
            bundle = apply_bundle_delta(bundle, protocol.load_delta(path))
    return Server(bundle, pp, max_terms=_opt(args, "max_terms", 16), stopwords=_stopwords(args),
                  workers=_opt(args, "workers"))


def cmd_serve(args) -> int:
    from .prover import serve

    tcp = serve(_server(args), args.host, args.port)
    host, port = tcp.server_address[:2]
    print(json.dumps({"listening": f"{host}:{port}"}), flush=True)
    try:
        tcp.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        tcp.server_close()
    return EXIT_OK


def _finish_response(data: bytes, out: str) -> int:
    from .prover import STATUS_INTERNAL, STATUS_OK

    protocol.write_file(out, data)
    resp = protocol.decode_response(data)
    print(json.dumps({"status": resp.status, "epoch": resp.epoch, "answer": len(resp.answer),
                      "message": resp.message}))
    if resp.status == STATUS_OK:
        return EXIT_OK
    return EXIT_INTERNAL if resp.status == STATUS_INTERNAL else EXIT_REJECT


def cmd_prove(args) -> int:
    server = _server(args)
    terms = args.query.split()
    return _finish_response(protocol.encode_response(server.handle(terms, args.epoch)), args.out)


def cmd_query(args) -> int:
    from .prover import request

    return _finish_response(request(args.host, args.port, args.query.split(), args.epoch), args.out)


def cmd_verify(args) -> int:
    from .prover import Query
    from .verifier import FreshnessPolicy, verify_response_bytes

    pp = protocol.load_params(args.params)
    digest = protocol.load_digest(args.digest)
    data = protocol.read_file(args.response)
    if args.latest_epoch is not None:
        policy = FreshnessPolicy.require_latest(args.latest_epoch)
    else:
        policy = FreshnessPolicy.require_min(args.min_epoch or 0)
    try:
        query = Query.parse(args.query, _stopwords(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    verdict = verify_response_bytes(query, data, digest, pp, policy)
    print(verdict.to_json())
    return EXIT_OK if verdict.accepted else EXIT_REJECT


def cmd_bench(args) -> int:
    from .bench import SyntheticSpec, generate, run_suite

    spec = SyntheticSpec()
    if args.spec:
        with open(args.spec) as fh:
            spec = SyntheticSpec.from_json(fh.read())
    corpus = generate(spec)
    result = run_suite(corpus, corpus.queries, args.out, spec, workers=_opt(args, "workers", 1))
    print(json.dumps({"out": args.out, "queries": sum(len(v) for v in result.rows.values()),
                      "updates": len(result.updates)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="awc", description="Verifiable conjunctive keyword search.")
    parser.add_argument("--config", help="JSON file with option defaults (top level or per verb)")
    parser.add_argument("--log-level", default="WARNING", help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="verb", metavar="VERB")

    p = sub.add_parser("crawl", help="ingest a corpus and publish parameters, bundle and digest")
    p.add_argument("--input", required=True, help="directory or URL-list file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, help="degree bound (default: sized from the corpus)")
    p.add_argument("--headroom", type=int)
    p.add_argument("--min-df", type=int, dest="min_df")
    p.add_argument("--max-depth", type=int, dest="max_depth")
    p.add_argument("--max-pages", type=int, dest="max_pages")
    p.add_argument("--client-degree", type=int, dest="client_degree",
                   help="truncate client-params.awcp to this many powers")
    p.add_argument("--stopwords")
    p.add_argument("--seed", type=int, help="deterministic keys (testing only)")
    p.set_defaults(func=cmd_crawl)

    p = sub.add_parser("update", help="apply a document batch and sign the next epoch")
    p.add_argument("--state", required=True, help="directory written by crawl")
    p.add_argument("--add", nargs="*", help="directories or URL-list files to add")
    p.add_argument("--remove", nargs="*", help="document ids to remove (hex with 0x or decimal)")
    p.add_argument("--delta-out", dest="delta_out", help="write the server delta here")
    p.add_argument("--stopwords")
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("publish-digest", help="export the current digest, optionally after a heartbeat")
    p.add_argument("--state", required=True)
    p.add_argument("--out")
    p.add_argument("--heartbeat", action="store_true", help="advance the epoch with an empty batch")
    p.add_argument("--stopwords")
    p.set_defaults(func=cmd_publish_digest)

    for name, func, helptext in (("serve", cmd_serve, "answer queries over TCP"),
                                 ("prove", cmd_prove, "answer one query into a response file")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--bundle", required=True)
        p.add_argument("--params", required=True)
        p.add_argument("--delta", nargs="*", help="deltas to apply on load, in order")
        p.add_argument("--max-terms", type=int, dest="max_terms")
        p.add_argument("--workers", type=int)
        p.add_argument("--stopwords")
        if name == "serve":
            p.add_argument("--host", default="127.0.0.1")
            p.add_argument("--port", type=int, default=7400)
        else:
            p.add_argument("--query", required=True)
            p.add_argument("--epoch", type=int, default=0)
            p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("query", help="fetch a response from a running server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7400)
    p.add_argument("--query", required=True)
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("verify", help="check a response against the signed digest")
    p.add_argument("--digest", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--min-epoch", type=int, dest="min_epoch")
    p.add_argument("--latest-epoch", type=int, dest="latest_epoch")
    p.add_argument("--stopwords")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="synthetic measurements into CSV files")
    p.add_argument("--spec", help="JSON synthetic spec (default: desk-scale)")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if not args.verb:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.config_data = {}
        if args.config:
            with open(args.config) as fh:
                args.config_data = json.load(fh)
            if not isinstance(args.config_data, dict):
                raise UsageError("config must be a JSON object")
        return args.func(args)
    except (UsageError, ValueError, CapacityError, CorpusError, UnknownDocumentError) as exc:
        print(f"awc {args.verb}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"awc {args.verb}: {exc}", file=sys.stderr)
        return EXIT_IO
    except AWCError as exc:
        print(f"awc {args.verb}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.exception("unexpected failure")
        print(f"awc {args.verb}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
