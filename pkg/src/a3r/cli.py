"""Command-line surface binding the package into reproducible experiments.

Subcommands::

    normalize   L2-normalize an embedding file in place of its rows
    fixtures    write the seeded synthetic datasets used by tests and demos
    augment     fill missing record attributes via an embedding provider
    search      baseline cosine top-K run over a gallery
    rerank      full ranking run with method none | krnn | a3r
    eval        mAP@K of a run file against qrels (or label-derived qrels)
    report      rank-movement comparison of two run files
    pipeline    optional augment -> rerank -> eval -> movement, one out dir

Exit codes: 0 success, 1 validation/config error (including usage errors),
2 I/O or format error.  All numeric output is printed with 9 significant
digits and every output file ends with a trailing newline.  Outputs are
byte-identical for identical inputs and flags, independent of ``--workers``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager

from .augment import (
    SubprocessProvider,
    augment_manifest,
    load_fixture_provider,
    load_vocabulary,
)
from .config import METHODS, RerankConfig, load_config
from .errors import A3RError, ConfigError, ValidationError
from .evaluation import (
    load_qrels,
    mean_ap_at_k,
    qrels_from_labels,
    rank_movement,
)
from .fixtures import write_fixture_set
from .pipeline import run_batch
from .similarity import format_sig9, read_run, top_k_search, write_run
from .store import (
    _atomic_write_bytes,
    l2_normalize,
    load_embeddings,
    load_manifest,
    save_embeddings,
    save_manifest,
)

log = logging.getLogger("a3r")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _configure_logging() -> None:
    name = os.environ.get("A3R_LOG", "warn").strip().lower()
    if name not in _LOG_LEVELS:
        raise ConfigError(
            f"A3R_LOG must be one of {sorted(_LOG_LEVELS)}, got {name!r}"
        )
    logging.basicConfig(
        level=_LOG_LEVELS[name],
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors here (exit 1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _round9(x: float) -> float:
    """Round to 9 significant digits so JSON output matches printed output."""
    return float(format_sig9(x))


def _write_text(path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# ---------------------------------------------------------------- flags


def _add_retrieval_inputs(p, queries: bool = True, gallery: bool = True) -> None:
    if queries:
        p.add_argument("--query-emb", required=True, help="query embedding file")
        p.add_argument("--query-manifest", required=True, help="query manifest JSONL")
    if gallery:
        p.add_argument("--gallery-emb", required=True, help="gallery embedding file")
        p.add_argument("--gallery-manifest", required=True, help="gallery manifest JSONL")


def _add_rerank_flags(p) -> None:
    p.add_argument("--method", choices=METHODS, default=None,
                   help="ranking method (default a3r)")
    p.add_argument("--pool", type=int, default=None,
                   help="re-ranking shortlist size M; 0 = full gallery")
    p.add_argument("--k1", type=int, default=None, help="reciprocal neighborhood size")
    p.add_argument("--k2", type=int, default=None, help="local expansion size")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="blend weight of the original cosine distance")
    p.add_argument("--clamp", action=argparse.BooleanOptionalAction, default=None,
                   help="clamp negative query-candidate similarities to zero")
    p.add_argument("--config", default=None,
                   help="JSON config file; explicit flags override its entries")
    p.add_argument("--workers", type=int, default=1,
                   help="query worker threads (output bytes are unaffected)")


def _add_provider_flags(p, vocab_required: bool) -> None:
    p.add_argument("--vocab", required=vocab_required,
                   help="attribute vocabulary JSON ({slots, values})")
    p.add_argument("--provider-fixture", default=None,
                   help="fixture provider base path (<base>.emb + <base>.jsonl)")
    p.add_argument("--provider-cmd", default=None,
                   help="subprocess embedding provider command (JSONL over stdio)")
    p.add_argument("--joint", action="store_true",
                   help="score all combinations of missing slots jointly "
                        "instead of greedily per slot")


def _add_qrels_flags(p) -> None:
    p.add_argument("--qrels", default=None, help="qrels JSONL file")
    p.add_argument("--by-label", action="store_true",
                   help="derive qrels by label equality between the query "
                        "and gallery manifests")


def _effective_config(args) -> RerankConfig:
    cfg = load_config(args.config) if args.config else RerankConfig()
    cfg = cfg.override(
        method=args.method,
        pool=args.pool,
        k1=args.k1,
        k2=args.k2,
        lam=args.lam,
        clamp_nonnegative=args.clamp,
    )
    cfg.validate()
    return cfg


@contextmanager
def _provider(args):
    if args.provider_fixture and args.provider_cmd:
        raise ConfigError("use exactly one of --provider-fixture / --provider-cmd")
    if args.provider_fixture:
        yield load_fixture_provider(args.provider_fixture)
    elif args.provider_cmd:
        with SubprocessProvider(args.provider_cmd) as provider:
            yield provider
    else:
        raise ConfigError(
            "an embedding provider is required: --provider-fixture or --provider-cmd"
        )


def _load_qrels_args(args, query_manifest=None, gallery_manifest=None):
    if args.qrels and args.by_label:
        raise ConfigError("use exactly one of --qrels / --by-label")
    if args.qrels:
        return load_qrels(args.qrels)
    if not args.by_label:
        raise ConfigError("relevance judgments required: --qrels or --by-label")
    if query_manifest is None:
        query_manifest = load_manifest(args.query_manifest)
    if gallery_manifest is None:
        gallery_manifest = load_manifest(args.gallery_manifest)
    return qrels_from_labels(query_manifest, gallery_manifest)


# ---------------------------------------------------------------- subcommands


def cmd_normalize(args) -> int:
    src = args.gallery_emb or args.query_emb
    if not src or (args.gallery_emb and args.query_emb):
        raise ConfigError("pass exactly one of --gallery-emb / --query-emb")
    m = load_embeddings(src)
    save_embeddings(l2_normalize(m), args.out)
    print(f"normalized {m.rows} x {m.dim} -> {args.out}")
    return 0


def cmd_fixtures(args) -> int:
    paths = write_fixture_set(args.out, args.seed)
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")
    return 0


def cmd_augment(args) -> int:
    manifest = load_manifest(args.gallery_manifest)
    images = load_embeddings(args.gallery_emb)
    vocab = load_vocabulary(args.vocab)
    with _provider(args) as provider:
        augmented = augment_manifest(manifest, vocab, images, provider, joint=args.joint)
    changed = sum(1 for a, b in zip(manifest, augmented) if a != b)
    save_manifest(augmented, args.out)
    print(f"augmented {changed} of {len(manifest)} records -> {args.out}")
    return 0


def cmd_search(args) -> int:
    queries = load_embeddings(args.query_emb)
    query_manifest = load_manifest(args.query_manifest)
    gallery = load_embeddings(args.gallery_emb)
    gallery_manifest = load_manifest(args.gallery_manifest)
    if queries.rows != len(query_manifest):
        raise ValidationError(
            f"query manifest has {len(query_manifest)} records "
            f"but embeddings have {queries.rows} rows"
        )
    runs = [
        top_k_search(queries.row(i), gallery, args.k, gallery_manifest,
                     query_id=query_manifest[i].id)
        for i in range(queries.rows)
    ]
    write_run(runs, args.out)
    print(f"wrote {len(runs)} rankings (top-{args.k}) -> {args.out}")
    return 0


def cmd_rerank(args) -> int:
    queries = load_embeddings(args.query_emb)
    query_manifest = load_manifest(args.query_manifest)
    gallery = load_embeddings(args.gallery_emb)
    gallery_manifest = load_manifest(args.gallery_manifest)
    cfg = _effective_config(args)
    runs = run_batch(queries, query_manifest, gallery, gallery_manifest, cfg,
                     workers=args.workers)
    write_run(runs, args.out)
    print(f"wrote {len(runs)} rankings (method={cfg.method}) -> {args.out}")
    return 0


def _eval_payload(runs, qrels, k: int, strict: bool, per_query: bool) -> dict:
    report = mean_ap_at_k(runs, qrels, k, strict_denominator=strict)
    payload = report.to_json()
    payload["map_at_k"] = _round9(payload["map_at_k"])
    for row in payload["per_query"]:
        row["ap"] = _round9(row["ap"])
    if not per_query:
        del payload["per_query"]
    payload["config"] = {"k": k, "strict_denominator": strict}
    return payload


def cmd_eval(args) -> int:
    runs = read_run(args.run)
    qrels = _load_qrels_args(args)
    payload = _eval_payload(runs, qrels, args.k, args.strict_recall, args.per_query)
    text = _dump_json(payload)
    sys.stdout.write(text)
    if args.out:
        _write_text(args.out, text)
    return 0


def _movement_payload(before_runs, after_runs, qrels) -> dict:
    before_by_id = {r.query_id: r for r in before_runs}
    after_by_id = {r.query_id: r for r in after_runs}
    if set(before_by_id) != set(after_by_id):
        diff = sorted(set(before_by_id).symmetric_difference(after_by_id))[:5]
        raise ValidationError(f"run files cover different query sets (e.g. {diff})")
    if len(before_by_id) != len(before_runs) or len(after_by_id) != len(after_runs):
        raise ValidationError("duplicate query id in a run file")
    movements = []
    for run in before_runs:
        rel = qrels.for_query(run.query_id) if run.query_id in qrels else frozenset()
        movements.append(rank_movement(run, after_by_id[run.query_id], rel))
    return {
        "promoted": sum(m.promoted for m in movements),
        "demoted": sum(m.demoted for m in movements),
        "unchanged": sum(m.unchanged for m in movements),
        "queries": [m.to_json() for m in movements],
    }


def _movement_table(payload: dict) -> str:
    rows = [("query", "id", "before", "after", "delta")]
    for q in payload["queries"]:
        for mv in q["moves"]:
            rows.append((q["query_id"], mv["id"], str(mv["before"]),
                         str(mv["after"]), f"{mv['delta']:+d}"))
    widths = [max(len(r[c]) for r in rows) for c in range(5)]
    lines = [
        "  ".join(val.ljust(w) if c < 2 else val.rjust(w)
                  for c, (val, w) in enumerate(zip(row, widths)))
        for row in rows
    ]
    lines.append(
        f"promoted {payload['promoted']}  demoted {payload['demoted']}  "
        f"unchanged {payload['unchanged']}"
    )
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    before_runs = read_run(args.before)
    after_runs = read_run(args.after)
    qrels = _load_qrels_args(args)
    payload = _movement_payload(before_runs, after_runs, qrels)
    table = _movement_table(payload)
    if args.out:
        _write_text(args.out, _dump_json(payload))
        sys.stdout.write(table)
    else:
        sys.stdout.write(_dump_json(payload))
        sys.stdout.write(table)
    return 0


def cmd_pipeline(args) -> int:
    queries = load_embeddings(args.query_emb)
    query_manifest = load_manifest(args.query_manifest)
    gallery = load_embeddings(args.gallery_emb)
    gallery_manifest = load_manifest(args.gallery_manifest)
    qrels = _load_qrels_args(args, query_manifest, gallery_manifest)
    cfg = _effective_config(args)
    os.makedirs(args.out, exist_ok=True)
    outputs = []

    if args.vocab:
        # dataset-enrichment stage: fill missing gallery attributes against
        # the gallery's own image embeddings; retrieval below still runs on
        # the precomputed matrices
        vocab = load_vocabulary(args.vocab)
        with _provider(args) as provider:
            augmented = augment_manifest(gallery_manifest, vocab, gallery, provider,
                                         joint=args.joint)
        path = os.path.join(args.out, "gallery_augmented.jsonl")
        save_manifest(augmented, path)
        outputs.append(path)
        log.info("augmented gallery manifest -> %s", path)

    baseline_runs = run_batch(queries, query_manifest, gallery, gallery_manifest,
                              cfg.override(method="none"), workers=args.workers)
    if cfg.method == "none":
        chosen_runs = baseline_runs
    else:
        chosen_runs = run_batch(queries, query_manifest, gallery, gallery_manifest,
                                cfg, workers=args.workers)

    run_path = os.path.join(args.out, "run.jsonl")
    baseline_path = os.path.join(args.out, "baseline.jsonl")
    write_run(chosen_runs, run_path)
    write_run(baseline_runs, baseline_path)
    outputs += [run_path, baseline_path]

    config_echo = cfg.to_json()
    config_echo["k"] = args.k
    config_echo["strict_denominator"] = args.strict_recall

    eval_payload = _eval_payload(chosen_runs, qrels, args.k, args.strict_recall,
                                 per_query=True)
    eval_payload["config"] = config_echo
    eval_path = os.path.join(args.out, "eval.json")
    _write_text(eval_path, _dump_json(eval_payload))
    outputs.append(eval_path)

    movement = _movement_payload(baseline_runs, chosen_runs, qrels)
    movement["config"] = config_echo
    movement_path = os.path.join(args.out, "movement.json")
    _write_text(movement_path, _dump_json(movement))
    table_path = os.path.join(args.out, "movement.txt")
    _write_text(table_path, _movement_table(movement))
    outputs += [movement_path, table_path]

    print(f"method={cfg.method} pool={cfg.pool} k1={cfg.k1} k2={cfg.k2} "
          f"lambda={format_sig9(cfg.lam)} clamp={cfg.clamp_nonnegative}")
    print(f"mAP@{args.k} = {format_sig9(eval_payload['map_at_k'])} "
          f"(scored {eval_payload['scored_queries']}, "
          f"skipped {eval_payload['skipped_queries']})")
    print(f"movement vs none: promoted {movement['promoted']} "
          f"demoted {movement['demoted']} unchanged {movement['unchanged']}")
    for path in outputs:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="a3r", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")

    p = sub.add_parser("normalize", help="L2-normalize an embedding file")
    p.add_argument("--gallery-emb", default=None)
    p.add_argument("--query-emb", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("fixtures", help="write the seeded synthetic datasets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("augment", help="fill missing record attributes")
    _add_retrieval_inputs(p, queries=False)
    _add_provider_flags(p, vocab_required=True)
    p.add_argument("--out", required=True, help="augmented manifest path")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("search", help="baseline cosine top-K run")
    _add_retrieval_inputs(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", required=True, help="run file path (JSON lines)")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("rerank", help="full ranking run (none | krnn | a3r)")
    _add_retrieval_inputs(p)
    _add_rerank_flags(p)
    p.add_argument("--out", required=True, help="run file path (JSON lines)")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("eval", help="mAP@K of a run file")
    p.add_argument("--run", required=True, help="run file (JSON lines)")
    p.add_argument("--k", type=int, default=10)
    _add_qrels_flags(p)
    p.add_argument("--query-manifest", default=None, help="for --by-label")
    p.add_argument("--gallery-manifest", default=None, help="for --by-label")
    p.add_argument("--per-query", action="store_true",
                   help="include per-query AP values in the report")
    p.add_argument("--strict-recall", action="store_true",
                   help="use |relevant| instead of min(|relevant|, K) in the "
                        "recall denominator")
    p.add_argument("--out", default=None, help="also write the report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="rank-movement comparison of two runs")
    p.add_argument("--before", required=True, help="baseline run file")
    p.add_argument("--after", required=True, help="comparison run file")
    _add_qrels_flags(p)
    p.add_argument("--query-manifest", default=None, help="for --by-label")
    p.add_argument("--gallery-manifest", default=None, help="for --by-label")
    p.add_argument("--out", default=None, help="write the JSON summary here")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline",
                       help="augment (optional) -> rerank -> eval -> movement")
    _add_retrieval_inputs(p)
    _add_provider_flags(p, vocab_required=False)
    _add_rerank_flags(p)
    p.add_argument("--k", type=int, default=10)
    _add_qrels_flags(p)
    p.add_argument("--strict-recall", action="store_true",
                   help="use |relevant| instead of min(|relevant|, K) in the "
                        "recall denominator")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    try:
        _configure_logging()
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except A3RError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
