"""Batch command-line interface.

Subcommands mirror the experiment pipeline: index, search, rerank, eval,
experiment (the whole pipeline from one config file) and make-synth
(materialize the bundled synthetic collection).  Exit codes: 0 success,
1 usage error, 2 data error, 3 scorer error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus_io, report
from .errors import (EXIT_DATA, EXIT_OK, EXIT_SCORER, EXIT_USAGE, DataError,
                     ScorerError, XlrankError)
from .eval_metrics import RunMetrics, evaluate_run, write_metrics_json, write_metrics_tsv
from .evidence_fusion import FusionParams, normalize_min_max, read_params
from .inverted_index import (InvertedIndex, build_index, load_snapshot,
                             save_index, search)
from .pipeline import (build_topic_table, candidate_sentences,
                       collect_documents, make_eval_fn, rerank_topics,
                       score_topics_parallel)
from .scorer_gateway import ScoreCache, make_scorer
from .synthdata import write_synthetic_collection
from .text_analysis import Analyzer, load_stopwords
from .tuning_cv import (Grid, assign_folds, cross_validate, default_grid,
                        write_tuning_report)

logger = logging.getLogger(__name__)

CACHE_ENV_VAR = "XLR_CACHE_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_analyzer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lang", default="en", help="document language code")
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--stopwords", help="stopword list file (one term per line)")
    p.add_argument("--token-mode", choices=["auto", "unicode-word", "cjk-bigram"],
                   default="auto")


def _make_analyzer(lang: str, lowercase: bool, stopwords_path: str | None,
                   token_mode: str) -> Analyzer:
    stopwords = load_stopwords(stopwords_path) if stopwords_path else None
    if token_mode == "auto":
        token_mode = "cjk-bigram" if lang == "zh" else "unicode-word"
    return Analyzer(lang=lang, lowercase=lowercase, stopwords=stopwords, mode=token_mode)


def _resolve_cache(cache_dir: str | None) -> ScoreCache | None:
    import os

    path = cache_dir or os.environ.get(CACHE_ENV_VAR)
    return ScoreCache(path) if path else None


def cmd_index(args) -> int:
    analyzer = _make_analyzer(args.lang, not args.no_lowercase,
                              args.stopwords, args.token_mode)
    docs = corpus_io.load_corpus(args.corpus, args.format, default_lang=args.lang)
    index = build_index(docs, analyzer)
    save_index(index, args.out, analyzer=analyzer)
    print(f"indexed {index.n_docs} docs, {len(index.postings)} terms -> {args.out}")
    return EXIT_OK


def cmd_search(args) -> int:
    index, analyzer = load_snapshot(args.index)
    if analyzer is None:
        raise DataError(f"{args.index}: snapshot carries no analyzer config")
    topics = corpus_io.load_topics(args.topics, args.lang_select)
    entries: list[corpus_io.RunEntry] = []
    for topic_id, query in sorted(topics):
        hits = search(index, query, analyzer, args.k)
        entries.extend(
            corpus_io.RunEntry(topic_id, h.doc_id, rank, h.score, args.tag)
            for rank, h in enumerate(hits, start=1))
    corpus_io.write_run(args.out, entries)
    print(f"wrote {len(entries)} entries for {len(topics)} topics -> {args.out}")
    return EXIT_OK


def _candidates_from_run(path: str) -> dict[str, list]:
    from .inverted_index import ScoredDoc

    grouped = corpus_io.run_by_topic(corpus_io.read_run(path))
    return {t: [ScoredDoc(e.doc_id, e.score) for e in entries]
            for t, entries in grouped.items()}


def _candidates_from_index(index: InvertedIndex, analyzer: Analyzer,
                           topics: list[tuple[str, str]], k: int) -> dict[str, list]:
    return {topic_id: search(index, query, analyzer, k) for topic_id, query in topics}


def _score_all_topics(args, topic_candidates, queries, corpus_docs):
    """Shared rerank scoring: split candidate sentences and run the scorer."""
    analyzer = _make_analyzer(args.lang, not args.no_lowercase,
                              args.stopwords, args.token_mode)
    scorer = make_scorer(args.scorer, analyzer, batch_size=args.batch_size)
    cache = _resolve_cache(args.cache_dir)
    topic_sentences = {
        t: candidate_sentences(cands, corpus_docs, max_chars=args.max_sentence_chars)
        for t, cands in sorted(topic_candidates.items())
    }
    work = [(t, queries[t], topic_sentences[t]) for t in sorted(topic_candidates)]
    try:
        scores = score_topics_parallel(scorer, work, cache=cache,
                                       on_error=args.on_scorer_error,
                                       threads=args.threads)
    finally:
        scorer.close()
        if cache is not None:
            cache.close()
    return scores


def cmd_rerank(args) -> int:
    if bool(args.index) == bool(args.run):
        raise DataError("exactly one of --index / --run is required")
    if bool(args.params) == bool(args.grid):
        raise DataError("exactly one of --params / --grid is required")

    queries = dict(corpus_io.load_topics(args.topics, args.lang_select))
    if args.run:
        topic_candidates = _candidates_from_run(args.run)
    else:
        index, idx_analyzer = load_snapshot(args.index)
        if idx_analyzer is None:
            raise DataError(f"{args.index}: snapshot carries no analyzer config")
        topic_candidates = _candidates_from_index(
            index, idx_analyzer, sorted(queries.items()), args.k)
    missing = set(topic_candidates) - set(queries)
    if missing:
        raise DataError(f"topics missing from topic file: {sorted(missing)}")
    if args.normalize_bm25:
        topic_candidates = {t: normalize_min_max(c) for t, c in topic_candidates.items()}

    wanted = {c.doc_id for cands in topic_candidates.values() for c in cands}
    corpus_docs = collect_documents(args.corpus, args.corpus_format, wanted,
                                    default_lang=args.lang)
    scores = _score_all_topics(args, topic_candidates, queries, corpus_docs)

    if args.params:
        params = read_params(args.params)
        entries = rerank_topics(topic_candidates, scores,
                                {t: params for t in topic_candidates}, args.tag)
        corpus_io.write_run(args.out, entries)
        print(f"reranked {len(topic_candidates)} topics -> {args.out}")
        return EXIT_OK

    # Grid mode: tune by cross-validation and emit held-out runs per k.
    if not args.qrels:
        raise DataError("--grid requires --qrels")
    qrels = corpus_io.read_qrels(args.qrels)
    grid = _load_grid(args.grid)
    out_paths = _run_cv(topic_candidates, scores, qrels, grid, args.seed,
                        args.folds, args.tag, Path(args.out),
                        Path(args.tuning_report) if args.tuning_report else None)
    print("wrote " + ", ".join(str(p) for p in out_paths))
    return EXIT_OK


def _load_grid(spec: str) -> Grid:
    if spec == "default":
        return default_grid()
    return Grid.from_dict(json.loads(Path(spec).read_text(encoding="utf-8")))


def _run_cv(topic_candidates, scores, qrels, grid: Grid, seed: int, folds: int,
            tag: str, out_path: Path, report_path: Path | None) -> list[Path]:
    tunable = [t for t in sorted(topic_candidates) if qrels.relevant_count(t) >= 1]
    dropped = sorted(set(topic_candidates) - set(tunable))
    if dropped:
        logger.warning("topics without relevant docs excluded from tuning: %s", dropped)
    if not tunable:
        raise DataError("no topics with relevant judgments to tune on")
    tables = {t: build_topic_table(t, topic_candidates[t], scores[t], qrels)
              for t in tunable}
    eval_fn = make_eval_fn(tables)
    assignment = assign_folds(tunable, n_folds=folds, seed=seed)

    written: list[Path] = []
    cv_results = {}
    for k in sorted(grid.k_values):
        sub_grid = Grid(grid.alpha_values, grid.weight_values, (k,))
        result = cross_validate(assignment, sub_grid, eval_fn)
        cv_results[k] = result
        params_of: dict[str, FusionParams] = {}
        for fold, params in enumerate(result.fold_params):
            for topic_id in assignment.topics_in(fold):
                params_of[topic_id] = params
        entries = rerank_topics({t: topic_candidates[t] for t in tunable},
                                {t: scores[t] for t in tunable},
                                params_of, f"{tag}-{k}s")
        path = _k_suffixed(out_path, k) if len(grid.k_values) > 1 else out_path
        corpus_io.write_run(path, entries)
        written.append(path)
    if report_path is not None:
        write_tuning_report(report_path, cv_results)
        written.append(report_path)
    return written


def _k_suffixed(path: Path, k: int) -> Path:
    return path.with_name(f"{path.stem}_k{k}{path.suffix}")


def cmd_eval(args) -> int:
    entries = corpus_io.read_run(args.run)
    qrels = corpus_io.read_qrels(args.qrels)
    metrics = evaluate_run(entries, qrels)
    write_metrics_tsv(args.out, metrics)
    outputs = [args.out]
    if args.json:
        write_metrics_json(args.json, metrics)
        outputs.append(args.json)
    if args.figures:
        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        label = Path(args.run).stem
        outputs.append(report.metric_summary_figure({label: metrics},
                                                    fig_dir / "metric_summary.png"))
        outputs.append(report.per_topic_ap_figure({label: metrics},
                                                  fig_dir / "per_topic_ap.png"))
    print(f"ap={metrics.mean_ap:.4f} p20={metrics.mean_p20:.4f} "
          f"ndcg20={metrics.mean_ndcg20:.4f} over {len(metrics.topics)} topics")
    print("wrote " + ", ".join(str(p) for p in outputs))
    return EXIT_OK


DEFAULT_EXPERIMENT = {
    "corpus_format": "jsonl",
    "doc_lang": "en",
    "query_lang": "en",
    "analyzer": {"lowercase": True, "mode": "auto", "stopwords": None},
    "k_candidates": 1000,
    "scorer": "builtin:lexical",
    "batch_size": 64,
    "seed": 13,
    "n_folds": 5,
    "max_sentence_chars": 2000,
    "threads": 1,
    "cache_dir": None,
    "on_scorer_error": "fail",
    "normalize_bm25": False,
    "figures": True,
    "tag": "fused",
}


def cmd_experiment(args) -> int:
    config = dict(DEFAULT_EXPERIMENT)
    config.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    for key in ("corpus", "topics", "qrels"):
        if key not in config:
            raise DataError(f"experiment config missing {key!r}")
    if ("params" in config) == ("grid" in config):
        raise DataError("experiment config needs exactly one of 'params' / 'grid'")
    if args.threads is not None:
        config["threads"] = args.threads
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    an_cfg = config["analyzer"]
    analyzer = _make_analyzer(config["doc_lang"], an_cfg.get("lowercase", True),
                              an_cfg.get("stopwords"), an_cfg.get("mode", "auto"))
    index = build_index(
        corpus_io.load_corpus(config["corpus"], config["corpus_format"],
                              default_lang=config["doc_lang"]),
        analyzer)
    queries = dict(corpus_io.load_topics(config["topics"], config["query_lang"]))
    qrels = corpus_io.read_qrels(config["qrels"])

    topic_candidates = _candidates_from_index(
        index, analyzer, sorted(queries.items()), config["k_candidates"])
    bm25_entries = []
    for topic_id in sorted(topic_candidates):
        bm25_entries.extend(
            corpus_io.RunEntry(topic_id, c.doc_id, rank, c.score, "bm25")
            for rank, c in enumerate(topic_candidates[topic_id], start=1))
    bm25_run = out_dir / "bm25.run"
    corpus_io.write_run(bm25_run, bm25_entries)
    bm25_metrics = evaluate_run(bm25_entries, qrels)
    write_metrics_tsv(out_dir / "bm25_eval.tsv", bm25_metrics)
    write_metrics_json(out_dir / "bm25_eval.json", bm25_metrics)

    if config["normalize_bm25"]:
        topic_candidates = {t: normalize_min_max(c) for t, c in topic_candidates.items()}

    wanted = {c.doc_id for cands in topic_candidates.values() for c in cands}
    corpus_docs = collect_documents(config["corpus"], config["corpus_format"], wanted,
                                    default_lang=config["doc_lang"])
    scorer = make_scorer(config["scorer"], analyzer, batch_size=config["batch_size"])
    cache = _resolve_cache(config["cache_dir"])
    topic_sentences = {
        t: candidate_sentences(cands, corpus_docs,
                               max_chars=config["max_sentence_chars"])
        for t, cands in sorted(topic_candidates.items())
    }
    work = [(t, queries[t], topic_sentences[t]) for t in sorted(topic_candidates)]
    try:
        scores = score_topics_parallel(scorer, work, cache=cache,
                                       on_error=config["on_scorer_error"],
                                       threads=config["threads"])
    finally:
        scorer.close()
        if cache is not None:
            cache.close()

    metrics_by_label: dict[str, RunMetrics] = {"bm25": bm25_metrics}
    summary: dict = {"config": config, "runs": {"bm25": _metric_summary(bm25_metrics)}}
    tables = None
    if "params" in config:
        params = FusionParams.from_dict(config["params"])
        entries = rerank_topics(topic_candidates, scores,
                                {t: params for t in topic_candidates}, config["tag"])
        run_path = out_dir / "reranked.run"
        corpus_io.write_run(run_path, entries)
        metrics = evaluate_run(entries, qrels)
        write_metrics_tsv(out_dir / "reranked_eval.tsv", metrics)
        write_metrics_json(out_dir / "reranked_eval.json", metrics)
        metrics_by_label[config["tag"]] = metrics
        summary["runs"][config["tag"]] = _metric_summary(metrics)
    else:
        grid = (default_grid() if config["grid"] == "default"
                else Grid.from_dict(config["grid"]))
        tunable = [t for t in sorted(topic_candidates) if qrels.relevant_count(t) >= 1]
        if not tunable:
            raise DataError("no topics with relevant judgments to tune on")
        tables = {t: build_topic_table(t, topic_candidates[t], scores[t], qrels)
                  for t in tunable}
        eval_fn = make_eval_fn(tables)
        assignment = assign_folds(tunable, n_folds=config["n_folds"],
                                  seed=config["seed"])
        cv_results = {}
        for k in sorted(grid.k_values):
            sub_grid = Grid(grid.alpha_values, grid.weight_values, (k,))
            result = cross_validate(assignment, sub_grid, eval_fn)
            cv_results[k] = result
            params_of: dict[str, FusionParams] = {}
            for fold, params in enumerate(result.fold_params):
                for topic_id in assignment.topics_in(fold):
                    params_of[topic_id] = params
            label = f"{k}s"
            entries = rerank_topics({t: topic_candidates[t] for t in tunable},
                                    {t: scores[t] for t in tunable},
                                    params_of, f"{config['tag']}-{label}")
            run_path = out_dir / f"reranked_k{k}.run"
            corpus_io.write_run(run_path, entries)
            metrics = evaluate_run(entries, qrels)
            write_metrics_tsv(out_dir / f"reranked_k{k}_eval.tsv", metrics)
            write_metrics_json(out_dir / f"reranked_k{k}_eval.json", metrics)
            metrics_by_label[label] = metrics
            summary["runs"][label] = _metric_summary(metrics)
        write_tuning_report(out_dir / "tuning_report.json", cv_results)

    if config["figures"]:
        fig_dir = out_dir / "figures"
        fig_dir.mkdir(exist_ok=True)
        report.metric_summary_figure(metrics_by_label, fig_dir / "metric_summary.png")
        report.per_topic_ap_figure(metrics_by_label, fig_dir / "per_topic_ap.png")
        if tables:
            report.alpha_sensitivity_figure(
                tables, [round(0.1 * i, 1) for i in range(11)],
                fig_dir / "alpha_sensitivity.png")

    (out_dir / "experiment.json").write_text(
        json.dumps(summary, indent=2, default=str) + "\n", encoding="utf-8")
    for label, m in summary["runs"].items():
        print(f"{label}: ap={m['ap']:.4f} p20={m['p20']:.4f} ndcg20={m['ndcg20']:.4f}")
    return EXIT_OK


def _metric_summary(metrics: RunMetrics) -> dict:
    return {"ap": metrics.mean_ap, "p20": metrics.mean_p20,
            "ndcg20": metrics.mean_ndcg20, "topics": len(metrics.topics)}


def cmd_make_synth(args) -> int:
    paths = write_synthetic_collection(args.out_dir, seed=args.seed)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xlrank", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("index", help="build an index snapshot from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=list(corpus_io.CORPUS_FORMATS), default="jsonl")
    _add_analyzer_flags(p)
    p.add_argument("--out", required=True, help="snapshot path (.json or .json.gz)")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="BM25 retrieval into a run file")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--lang-select", required=True, help="query language variant")
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--tag", default="bm25")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("rerank", help="rerank candidates with sentence evidence")
    p.add_argument("--index", help="index snapshot (implies searching)")
    p.add_argument("--run", help="existing first-stage run file")
    p.add_argument("--k", type=int, default=1000, help="candidates per topic (with --index)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--corpus-format", choices=list(corpus_io.CORPUS_FORMATS),
                   default="jsonl")
    p.add_argument("--topics", required=True)
    p.add_argument("--lang-select", required=True)
    _add_analyzer_flags(p)
    p.add_argument("--scorer", required=True,
                   help="builtin:constant:<v> | builtin:lexical | "
                        "builtin:clairvoyant:<qrels> | http:<url> | stdio:<cmd>")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--params", help="fusion params JSON file")
    p.add_argument("--grid", help="'default' or grid JSON file (enables tuning)")
    p.add_argument("--qrels", help="judgments for tuning (grid mode)")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--tuning-report", help="tuning report JSON path (grid mode)")
    p.add_argument("--max-sentence-chars", type=int, default=2000)
    p.add_argument("--normalize-bm25", action="store_true")
    p.add_argument("--on-scorer-error", choices=["fail", "zero"], default="fail")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--cache-dir", help=f"score cache dir (or ${CACHE_ENV_VAR})")
    p.add_argument("--tag", default="fused")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("eval", help="evaluate a run against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--out", required=True, help="TSV report path")
    p.add_argument("--json", help="JSON report path")
    p.add_argument("--figures", help="directory for report figures")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("make-synth", help="write the bundled synthetic collection")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=13)
    p.set_defaults(func=cmd_make_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ScorerError as exc:
        print(f"xlrank: scorer error: {exc}", file=sys.stderr)
        return EXIT_SCORER
    except (DataError, XlrankError, OSError) as exc:
        print(f"xlrank: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
