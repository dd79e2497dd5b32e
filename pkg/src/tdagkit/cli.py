"""Command line entry point: ``tdagkit <command> ...``.

Exit codes: 0 ok, 1 internal error, 2 bad input or config, 3 remote or I/O failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .canon import CanonError, canonical_label
from .cluster import cluster, dropped_json, filter_indices, report_csv, report_json
from .config import ConfigError, load_config
from .ledger import LedgerError, write_ledger
from .pipeline import StageError, run_pipeline, stderr_progress
from .rpc import RpcClient, RpcError, fetch
from .script import ScriptMatcher, default_matcher, load_rules
from .synth import GeneratorSpec, SpecError, generate, top10_spec
from .tdag import Forest, read_forest

log = logging.getLogger("tdagkit")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_REMOTE = 0, 1, 2, 3
_INPUT_ERRORS = (ConfigError, SpecError, LedgerError, CanonError, ValueError, KeyError)


def _code_for(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return _code_for(exc.cause)
    if isinstance(exc, (RpcError, OSError)):
        return EXIT_REMOTE
    if isinstance(exc, _INPUT_ERRORS):
        return EXIT_INPUT
    return EXIT_INTERNAL


def cmd_synth(args: argparse.Namespace) -> int:
    if args.spec:
        spec = GeneratorSpec.load(args.spec)
    else:
        spec = top10_spec()
    if args.seed is not None:
        spec.seed = args.seed
    ledger = generate(spec)
    write_ledger(ledger, args.out)
    print(f"wrote {len(ledger.blocks)} blocks, {ledger.tx_count} transactions to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_fetch(args: argparse.Namespace) -> int:
    client = RpcClient.from_env(args.node_url)
    progress = stderr_progress()
    try:
        n = fetch(client, args.from_height, args.to_height, args.out, lambda d, t: progress("fetch", d, t))
    except RpcError as exc:
        print(f"error: {exc}; last good height: {exc.last_good_height}", file=sys.stderr)
        return EXIT_REMOTE
    print(f"fetched {n} blocks into {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.threads is not None:
        cfg.threads = args.threads
    result = run_pipeline(cfg, stderr_progress())
    if args.stdout:
        sys.stdout.write(report_csv(result.reports))
    print(
        f"{result.stats['classes']} classes over {result.stats['components']} components "
        f"-> {cfg.output_dir}",
        file=sys.stderr,
    )
    return EXIT_OK


def _load_dump(path: str) -> tuple[Forest, list]:
    forest, records = read_forest(path)
    ids = [rec.get("component_id", i) for i, rec in enumerate(records)]
    return forest, ids


def cmd_label(args: argparse.Namespace) -> int:
    forest, ids = _load_dump(args.forest)
    out = sys.stdout if args.out is None else open(args.out, "w", encoding="utf-8")
    try:
        for cid, comp in zip(ids, forest):
            out.write(json.dumps({"component_id": cid, "label": canonical_label(comp)}) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_cluster(args: argparse.Namespace) -> int:
    forest, ids = _load_dump(args.forest)
    dropped: dict[str, int] = {}
    if args.filter or args.filter_rules:
        matcher = ScriptMatcher(load_rules(args.filter_rules)) if args.filter_rules else default_matcher()
        kept, dropped = filter_indices(forest, matcher)
        forest = Forest([forest.components[i] for i in kept])
        ids = [ids[i] for i in kept]
    reports = cluster(forest, ids=ids, threads=args.threads)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "classes.csv").write_text(report_csv(reports), encoding="utf-8")
        (out / "classes.json").write_text(report_json(reports), encoding="utf-8")
        (out / "dropped.json").write_text(dropped_json(dropped), encoding="utf-8")
    if args.stdout or not args.out_dir:
        sys.stdout.write(report_csv(reports))
    return EXIT_OK


def cmd_oracle_check(args: argparse.Namespace) -> int:
    from .oracle import brute_force_isomorphic, count_rooted_trees, rooted_trees_by_parent_arrays

    ok = True
    for n in range(1, args.max_n + 1):
        trees = list(rooted_trees_by_parent_arrays(n))
        labels = [canonical_label(t) for t in trees]
        classes = len(set(labels))
        expected = count_rooted_trees(n)
        disagreements = 0
        if n <= args.brute_limit:
            for i, j in itertools.combinations(range(len(trees)), 2):
                if (labels[i] == labels[j]) != brute_force_isomorphic(trees[i], trees[j]):
                    disagreements += 1
        good = classes == expected and disagreements == 0
        ok &= good
        print(
            f"n={n} trees={len(trees)} classes={classes} expected={expected} "
            f"disagreements={disagreements} {'PASS' if good else 'FAIL'}"
        )
    return EXIT_OK if ok else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdagkit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic ledger with planted shapes")
    s.add_argument("--spec", help="generator spec JSON (default: built-in top-10 fixture)")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    f = sub.add_parser("fetch", help="stream blocks from a node's JSON-RPC into a ledger file")
    f.add_argument("--node-url", help="defaults to $NODE_RPC_URL")
    f.add_argument("--from", dest="from_height", type=int, required=True)
    f.add_argument("--to", dest="to_height", type=int, required=True)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fetch)

    r = sub.add_parser("run", help="run the full pipeline from a config file")
    r.add_argument("config")
    r.add_argument("--threads", type=int)
    r.add_argument("--stdout", action="store_true", help="also print classes CSV")
    r.set_defaults(func=cmd_run)

    lab = sub.add_parser("label", help="canonical label per component of a forest dump")
    lab.add_argument("forest")
    lab.add_argument("--out")
    lab.set_defaults(func=cmd_label)

    c = sub.add_parser("cluster", help="class report for a forest dump")
    c.add_argument("forest")
    c.add_argument("--filter", action="store_true", help="apply the default root-script filters")
    c.add_argument("--filter-rules", help="JSON rules file replacing the defaults")
    c.add_argument("--out-dir")
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--stdout", action="store_true")
    c.set_defaults(func=cmd_cluster)

    o = sub.add_parser("oracle-check", help="check labels against rooted-tree enumeration")
    o.add_argument("max_n", type=int)
    o.add_argument("--brute-limit", type=int, default=7, help="largest n for all-pairs brute force")
    o.set_defaults(func=cmd_oracle_check)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except Exception as exc:
        code = _code_for(exc)
        print(f"error: {exc}", file=sys.stderr)
        if code == EXIT_INTERNAL:
            log.debug("internal error", exc_info=True)
        return code


if __name__ == "__main__":
    sys.exit(main())
