"""Command-line driver: build-index, dump-corpus, search, evaluate, sweep, compare."""

from __future__ import annotations

import argparse
import io
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from . import index as index_io
from .embed import load_vectors
from .evaluation import (
    ap_difference_table,
    evaluate_run,
    paired_t_test,
    parse_qrels,
    parse_run,
    write_difference_csv,
    write_per_query_csv,
)
from .experiment import (
    SEARCH_METHODS,
    ExperimentConfig,
    grid_points,
    parse_grid_axis,
    read_config_file,
    run_search,
)
from .lm import format_run
from .qe import config_params, read_expansions, write_expansions
from .textpipe import analyze_document, parse_topics, parse_trec_docs

log = logging.getLogger("embqe")


class CommandError(Exception):
    pass


def cmd_build_index(args) -> int:
    with open(args.corpus, "rb") as f:
        raw = parse_trec_docs(f)
    idx = index_io.build_index(analyze_document(d) for d in raw)
    index_io.save(idx, args.out)
    print(f"{idx.num_docs} docs, {idx.total_tokens} tokens, {idx.vocabulary_size} terms -> {args.out}")
    return 0


def cmd_dump_corpus(args) -> int:
    idx = index_io.load(args.index)
    with open(args.out, "w", encoding="utf-8") as out:
        for i in range(idx.num_docs):
            out.write(" ".join(idx.doc_tokens(i)) + "\n")
    print(
        f"wrote {idx.num_docs} lines to {args.out}; suggested word2vec settings: "
        "-cbow 1 -size 200 -window 5 -negative 5 -min-count 3"
    )
    return 0


# search flags, mapped onto ExperimentConfig fields
_SEARCH_FLAGS = (
    ("--index", "index_path", str),
    ("--vectors", "vectors_path", str),
    ("--topics", "topics_path", str),
    ("--qrels", "qrels_path", str),
    ("--method", "method", str),
    ("--lambda", "lam", float),
    ("--K", "K", int),
    ("--alpha", "alpha", float),
    ("--fb-docs", "fb_docs", int),
    ("--n-per-unit", "n_per_unit", int),
    ("--n-initial", "n_initial", int),
    ("--prune-k", "prune_k", int),
    ("--l", "l", int),
    ("--k-retrieve", "k_retrieve", int),
    ("--rm3-mix", "rm3_mix", float),
    ("--p-at", "p_at", int),
    ("--run-tag", "run_tag", str),
)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    for flag, dest, typ in _SEARCH_FLAGS:
        kw: dict[str, Any] = {"dest": dest, "type": typ, "default": None}
        if dest == "method":
            kw["choices"] = SEARCH_METHODS
        p.add_argument(flag, **kw)
    p.add_argument("--composition", dest="use_composition", action="store_true", default=None)
    p.add_argument("--no-composition", dest="use_composition", action="store_false")


def _config_from(args) -> ExperimentConfig:
    values: dict[str, Any] = {}
    if args.config:
        values.update(read_config_file(args.config))
    for _, dest, _ in _SEARCH_FLAGS:
        if getattr(args, dest) is not None:
            values[dest] = getattr(args, dest)
    if args.use_composition is not None:
        values["use_composition"] = args.use_composition
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def _require(cfg: ExperimentConfig, *names: str) -> None:
    missing = [n for n in names if not getattr(cfg, n)]
    if missing:
        raise CommandError("missing required setting(s): " + ", ".join(missing))


def _load_inputs(cfg: ExperimentConfig, methods: Sequence[str] = ()):
    _require(cfg, "index_path", "topics_path")
    idx = index_io.load(cfg.index_path)
    with open(cfg.topics_path, "rb") as f:
        topics = parse_topics(f)
    store = None
    if {cfg.method, *methods} & {"pre", "post", "incremental"}:
        _require(cfg, "vectors_path")
        with open(cfg.vectors_path, encoding="utf-8") as f:
            store = load_vectors(f)
    return idx, topics, store


def _expansion_params(cfg: ExperimentConfig) -> dict[str, Any]:
    params: dict[str, Any] = {"lambda": cfg.lam}
    if cfg.method in ("pre", "post", "incremental"):
        params.update(config_params(cfg.expansion()))
        del params["method"]
    elif cfg.method == "rm3":
        params.update(K=cfg.K, fb_docs=cfg.fb_docs, rm3_mix=cfg.rm3_mix)
    return params


def cmd_search(args) -> int:
    cfg = _config_from(args)
    idx, topics, store = _load_inputs(cfg)
    models = None
    if args.load_expansions:
        with open(args.load_expansions, encoding="utf-8") as f:
            models = read_expansions(f)
    runs, expansions = run_search(cfg, idx, topics, store, models)
    text = format_run(runs, cfg.run_tag)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.expansions:
        with open(args.expansions, "w", encoding="utf-8") as f:
            write_expansions(expansions, cfg.method, _expansion_params(cfg), f)
    fallbacks = sum(1 for e in expansions if e.note and e.note not in ("alpha=1", "loaded"))
    log.info("searched %d topics (%d unexpanded fallbacks)", len(topics), fallbacks)
    return 0


def _read_run(path: str):
    with open(path, encoding="utf-8") as f:
        return parse_run(f)


def _read_qrels(path: str):
    with open(path, encoding="utf-8") as f:
        return parse_qrels(f)


def cmd_evaluate(args) -> int:
    report = evaluate_run(_read_run(args.run), _read_qrels(args.qrels), args.k)
    print(f"queries\t{len(report.per_query)}")
    print(f"map\t{report.map:.4f}")
    print(f"gmap\t{report.gmap:.4f}")
    print(f"P@{args.k}\t{report.p_at_k_mean:.4f}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as f:
            write_per_query_csv(report, f)
    return 0


def sweep_table(cfg: ExperimentConfig, axes, idx, topics, store, qrels) -> list[dict[str, Any]]:
    """Evaluate every grid point; rows sorted by MAP (grid order breaks ties)."""
    points = grid_points(axes)
    if not points:
        raise CommandError("empty grid")
    rows = []
    for point in points:
        point_cfg = cfg.replace(**point)
        runs, _ = run_search(point_cfg, idx, topics, store)
        report = evaluate_run({r.query_id: r for r in runs}, qrels, point_cfg.p_at)
        rows.append({**point, "map": report.map, "gmap": report.gmap, f"P@{point_cfg.p_at}": report.p_at_k_mean})
    rows.sort(key=lambda r: -r["map"])
    return rows


def format_sweep(rows: list[dict[str, Any]]) -> str:
    cols = list(rows[0])
    out = io.StringIO()
    out.write("\t".join(["best"] + cols) + "\n")
    for i, row in enumerate(rows):
        cells = [f"{row[c]:.4f}" if c in ("map", "gmap") or c.startswith("P@") else str(row[c]) for c in cols]
        out.write("\t".join(["*" if i == 0 else ""] + cells) + "\n")
    return out.getvalue()


def cmd_sweep(args) -> int:
    if not args.grid:
        raise CommandError("empty grid: give at least one --grid name=values")
    axes = [parse_grid_axis(g) for g in args.grid]
    cfg = _config_from(args)
    _require(cfg, "qrels_path")
    for name, values in axes:
        for v in values:
            cfg.replace(**{name: v}).validate()
    grid_methods = [v for name, values in axes if name == "method" for v in values]
    idx, topics, store = _load_inputs(cfg, grid_methods)
    table = format_sweep(sweep_table(cfg, axes, idx, topics, store, _read_qrels(cfg.qrels_path)))
    sys.stdout.write(table)
    if args.out:
        Path(args.out).write_text(table)
    return 0


def cmd_compare(args) -> int:
    qrels = _read_qrels(args.qrels)
    rep_a = evaluate_run(_read_run(args.run_a), qrels, args.k)
    rep_b = evaluate_run(_read_run(args.run_b), qrels, args.k)
    rows = ap_difference_table(rep_a, rep_b)
    common = [q for q, _ in sorted(rows)]
    ap_a = [rep_a.per_query[q].ap for q in common]
    ap_b = [rep_b.per_query[q].ap for q in common]
    alternative = "greater" if args.one_sided else "two-sided"
    sig = paired_t_test(ap_a, ap_b, alternative)
    mean_diff = sum(d for _, d in rows) / len(rows)
    print(f"queries\t{len(common)}")
    print(f"map_a\t{sum(ap_a) / len(ap_a):.4f}\t{args.run_a}")
    print(f"map_b\t{sum(ap_b) / len(ap_b):.4f}\t{args.run_b}")
    print(f"mean_ap_diff\t{mean_diff:.6f}")
    print(f"t\t{sig.t_statistic:.6f}")
    print(f"p\t{sig.p_value:.6f}\t({alternative})")
    verdict = "significant at 95%" if sig.significant_at_95 else "not significant"
    print(f"verdict\t{verdict}" + (f" [{sig.note}]" if sig.note else ""))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as f:
            write_difference_csv(rows, f)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embqe", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="analyze a TREC/JSONL corpus and write an index")
    p.add_argument("corpus")
    p.add_argument("out")
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("dump-corpus", help="write analyzed documents, one per line, for word2vec")
    p.add_argument("index")
    p.add_argument("out")
    p.set_defaults(func=cmd_dump_corpus)

    p = sub.add_parser("search", help="retrieve for all topics and write a TREC run")
    _add_config_flags(p)
    p.add_argument("--out", help="run file (default: stdout)")
    p.add_argument("--expansions", help="write expanded query models as JSONL")
    p.add_argument("--load-expansions", help="re-score with query models from a JSONL file")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="MAP, GMAP and P@k of a run")
    p.add_argument("run")
    p.add_argument("qrels")
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--csv", help="per-query CSV output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="search + evaluate over a parameter grid")
    _add_config_flags(p)
    p.add_argument("--grid", action="append", default=[], help="name=a,b,c or name=start:stop:step")
    p.add_argument("--out", help="also write the result table here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="paired t-test and per-query AP differences of two runs")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("qrels")
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--csv", help="AP-difference CSV output")
    p.add_argument("--one-sided", action="store_true", help="test run_a > run_b")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, CommandError) as exc:
        print(f"embqe {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
