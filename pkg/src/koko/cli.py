"""Command-line interface: index, query, explain, verify, bench.

Exit codes: 0 success, 1 verification mismatch, 2 malformed input
(corpus or index files), 3 query or resource errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .aggregate import ResultRow
from .bench import generate_span_suite, generate_tree_suite, run_benchmark
from .corpus import Corpus, load_corpus
from .engine import run_query
from .errors import KokoError, KokoInputError, KokoQueryError
from .gsp import estimate_cost
from .indexes import build_indexes, corpus_fingerprint, load_bundle, save_bundle
from .normalize import normalize
from .oracle import oracle_evaluate
from .parser import parse_query
from .resources import Resources, WordVectors, load_clause_file, load_expansion_table

EXIT_OK = 0
EXIT_VERIFY_MISMATCH = 1
EXIT_INPUT_ERROR = 2
EXIT_QUERY_ERROR = 3


def _add_resource_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--expansions", metavar="FILE", help="static descriptor expansion table (TSV)")
    p.add_argument("--vectors", metavar="FILE", help="plain-text word vectors file")
    p.add_argument("--topk", type=int, help="neighbours per content word for expansion")
    p.add_argument(
        "--dict", action="append", default=[], metavar="NAME=FILE",
        help="named dictionary, one entry per line (repeatable)",
    )
    p.add_argument(
        "--decomposer", metavar="KIND",
        help="sentence decomposer: identity | clauses | file:PATH (default identity)",
    )


def _load_resources(args: argparse.Namespace) -> Resources:
    manifest: dict = {}
    env_path = os.environ.get("KOKO_RESOURCES")
    if env_path:
        try:
            with open(env_path, "r", encoding="utf-8") as f:
                manifest = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise KokoQueryError(f"cannot read KOKO_RESOURCES manifest {env_path}: {exc}")
    res = Resources()
    expansions = getattr(args, "expansions", None) or manifest.get("expansions")
    vectors = getattr(args, "vectors", None) or manifest.get("vectors")
    if expansions and vectors:
        raise KokoQueryError("--expansions and --vectors both configure descriptor expansion; pick one")
    if expansions:
        res.expansion_table = load_expansion_table(expansions)
    if vectors:
        res.vectors = WordVectors(vectors)
    topk = getattr(args, "topk", None)
    res.topk = topk if topk is not None else manifest.get("topk", 3)
    for name, path in manifest.get("dicts", {}).items():
        res.dictionaries.load(name, path)
    for entry in getattr(args, "dict", []):
        name, sep, path = entry.partition("=")
        if not sep:
            raise KokoQueryError(f"--dict expects NAME=FILE, got {entry!r}")
        res.dictionaries.load(name, path)
    decomposer = getattr(args, "decomposer", None) or manifest.get("decomposer", "identity")
    if decomposer.startswith("file:"):
        res.decomposer = "file"
        res.clause_file = load_clause_file(decomposer[5:])
    elif decomposer in ("identity", "clauses"):
        res.decomposer = decomposer
    else:
        raise KokoQueryError(f"unknown decomposer {decomposer!r}")
    return res


def _load_corpus_and_bundle(args: argparse.Namespace):
    docs = load_corpus(args.corpus)
    corpus = Corpus(docs)
    if getattr(args, "index", None):
        bundle = load_bundle(args.index, expected_fingerprint=corpus_fingerprint(docs))
    else:
        bundle = build_indexes(docs)
    return corpus, bundle


def _read_query(path: str):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_query(f.read())
    except OSError as exc:
        raise KokoQueryError(f"cannot read query file: {exc}")


def cmd_index(args: argparse.Namespace) -> int:
    docs = load_corpus(args.corpus)
    bundle = build_indexes(docs)
    save_bundle(bundle, args.out)
    counts = bundle.counts()
    if counts["sentences"] == 0:
        print("warning: corpus is empty; wrote an empty index", file=sys.stderr)
    tokens = max(1, counts["tokens"])
    print(f"sentences      {counts['sentences']}")
    print(f"tokens         {counts['tokens']}")
    print(f"distinct words {counts['words']}")
    print(f"entities       {counts['entities']}")
    print(f"pl nodes       {counts['pl_nodes']}  ({1 - counts['pl_nodes'] / tokens:.1%} reduction)")
    print(f"pos nodes      {counts['pos_nodes']}  ({1 - counts['pos_nodes'] / tokens:.1%} reduction)")
    return EXIT_OK


def _emit_rows(rows: list[ResultRow], fmt: str) -> None:
    if fmt == "tsv":
        names: list[str] = []
        for r in rows:
            names = list(r.values)
            break
        print("\t".join(["sid"] + names))
        for r in rows:
            print("\t".join([str(r.sid)] + [r.values[n] for n in names]))
        return
    for r in rows:
        print(json.dumps(r.to_json(), ensure_ascii=False, sort_keys=True))


def cmd_query(args: argparse.Namespace) -> int:
    query = _read_query(args.query)
    resources = _load_resources(args)
    corpus, bundle = _load_corpus_and_bundle(args)
    run = run_query(
        query, corpus, bundle, resources=resources,
        use_gsp=not args.no_gsp, jobs=args.jobs,
    )
    _emit_rows(run.rows, args.format)
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    query = _read_query(args.query)
    resources = _load_resources(args)
    corpus, bundle = _load_corpus_and_bundle(args)
    n = normalize(query)
    if args.stage == "normalize":
        print(n.describe(), end="")
        return EXIT_OK
    run = run_query(query, corpus, bundle, resources=resources, keep_failed=True)
    if args.stage == "dpli":
        print(run.table.describe(), end="")
        return EXIT_OK
    if args.stage == "gsp":
        for sid in run.candidate_sids:
            t = len(corpus.sentence(sid))
            plan = run.plans.get(sid)
            costs = {
                name: estimate_cost(name, sid, run.table, t)
                for name in n.variables
                if n.var(name).kind not in ("subtree", "composite")
            }
            skips = sorted(plan.skipped) if plan else []
            print(f"sid {sid}: costs {costs} skip {skips}")
        print(f"loop iterations: {run.stats.loop_iterations}")
        print(f"tuples: {run.stats.tuples}")
        return EXIT_OK
    if args.stage == "satisfy":
        if not args.value:
            raise KokoQueryError("--stage satisfy needs --value <candidate>")
        shown = False
        for r in run.rows:
            for var, score in r.scores.items():
                if score.value == args.value:
                    print(f"satisfying {var}:")
                    print(score.describe(), end="")
                    shown = True
                    break
            if shown:
                break
        if not shown:
            print(f"no evidence recorded for value {args.value!r}")
        return EXIT_OK
    raise KokoQueryError(f"unknown explain stage {args.stage!r}")


def cmd_verify(args: argparse.Namespace) -> int:
    query = _read_query(args.query)
    resources = _load_resources(args)
    corpus, bundle = _load_corpus_and_bundle(args)
    engine_rows = run_query(
        query, corpus, bundle, resources=resources, keep_failed=True
    ).rows
    oracle_rows = oracle_evaluate(query, corpus, resources=resources, keep_failed=True)
    a = [r.key() for r in engine_rows]
    b = [r.key() for r in oracle_rows]
    if a == b:
        print(f"ok: engine and oracle agree on {len(a)} rows")
        return EXIT_OK
    sa, sb = sorted(a), sorted(b)
    for x, y in zip(sa, sb):
        if x != y:
            print(f"mismatch:\n  engine {x}\n  oracle {y}")
            break
    else:
        longer, shorter = (sa, sb) if len(sa) > len(sb) else (sb, sa)
        which = "engine" if len(sa) > len(sb) else "oracle"
        print(f"mismatch: {which} has an extra row {longer[len(shorter)]}")
    return EXIT_VERIFY_MISMATCH


def cmd_bench(args: argparse.Namespace) -> int:
    docs = load_corpus(args.corpus)
    corpus = Corpus(docs)
    bundle = build_indexes(docs)
    if args.suite == "tree":
        suite = generate_tree_suite(args.seed, corpus)
    elif args.suite == "span":
        suite = generate_span_suite(args.seed, corpus)
    else:
        raise KokoQueryError(f"unknown suite {args.suite!r}; expected tree or span")
    if args.limit:
        suite.queries = suite.queries[: args.limit]
    t0 = time.time()
    reports = run_benchmark(
        suite, corpus, bundle, with_oracle=not args.no_oracle
    )
    payload = {
        "suite": suite.name,
        "seed": suite.seed,
        "composition": suite.composition,
        "corpus": {"sentences": len(corpus), "tokens": corpus.token_count},
        "wall_seconds": time.time() - t0,
        "queries": [r.to_json() for r in reports],
    }
    with open(args.report, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    ok = sum(1 for r in reports if r.complete and r.final_effectiveness == 1.0)
    print(f"{len(reports)} queries; complete+exact on {ok}; report written to {args.report}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="koko", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and persist the index bundle")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="run a query and stream results")
    p.add_argument("--query", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--index", help="previously built index directory")
    p.add_argument("--format", choices=["jsonl", "tsv"], default="jsonl")
    p.add_argument("--no-gsp", action="store_true", help="disable skip plans")
    p.add_argument("--jobs", type=int, default=1)
    _add_resource_flags(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("explain", help="print per-stage artifacts")
    p.add_argument("--query", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--index")
    p.add_argument("--stage", required=True, choices=["normalize", "dpli", "gsp", "satisfy"])
    p.add_argument("--value", help="candidate value for --stage satisfy")
    _add_resource_flags(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("verify", help="diff engine results against the oracle")
    p.add_argument("--query", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--index")
    _add_resource_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="generate and run a benchmark suite")
    p.add_argument("--suite", required=True, choices=["tree", "span"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corpus", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--limit", type=int, default=0, help="run only the first N queries")
    p.add_argument("--no-oracle", action="store_true", help="skip oracle comparison")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KokoInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except KokoQueryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUERY_ERROR
    except KokoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUERY_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
