"""Command-line interface.

Subcommands: encode, rank, accuracy, score, select, partition-eval. Every
command writes its outputs plus a run manifest (parameters, input digests,
tool version); identical inputs and flags reproduce outputs byte for byte.

Exit status: 0 on success, 1 on validation errors (bad parameter values,
mismatched id sets, empty pools), 2 on I/O and file-format errors.
"""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import FileFormatError
from .gru import WordTable, encode_text, load_gru_weights
from .embeddings import QueryEmbedding, load_matrix, load_queries, write_queries
from .lasso import LassoConfig
from .manifest import build_manifest, write_manifest
from .metrics import METRIC_NAMES, load_cider_stats
from .ranking import (
    DEFAULT_TOP_K,
    load_pool_file,
    load_question_file,
    preprocess_pool,
    rank_lasso,
    rank_metric,
    read_ranked_records,
    write_ranked_records,
)
from .robustness import (
    CATEGORIES,
    DEFAULT_M,
    DEFAULT_T,
    dataset_accuracy,
    evaluate_robustness,
    load_answer_records,
    robustness_score,
)
from .selection import (
    DEFAULT_S1,
    DEFAULT_S2,
    DEFAULT_S3,
    SelectionThresholds,
    apply_selection,
    selection_histogram,
)

PARTITION_FILES = 7


def _emit_manifest(args, command: str, parameters: dict, inputs: dict) -> None:
    manifest_path = args.manifest_out or f"{args.out}.manifest.json"
    write_manifest(build_manifest(command, parameters, inputs, __version__), manifest_path)


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def cmd_encode(args) -> None:
    weights = load_gru_weights(args.weights)
    table = WordTable.load(args.word_table, args.word_table_ids)
    questions = load_question_file(args.questions)
    if not questions:
        raise ValueError("no questions to encode")
    queries = [
        QueryEmbedding(id=q.id, vector=encode_text(weights, table, q.text)) for q in questions
    ]
    write_queries(queries, args.out, args.out_ids)
    _emit_manifest(
        args, "encode", {},
        {
            "weights": args.weights,
            "word_table": args.word_table,
            "word_table_ids": args.word_table_ids,
            "questions": args.questions,
        },
    )


def cmd_rank(args) -> None:
    pool = load_pool_file(args.pool)
    if not pool:
        raise ValueError("candidate pool is empty")
    questions = load_question_file(args.questions)
    if not questions:
        raise ValueError("no questions to rank against")

    inputs = {"pool": args.pool, "questions": args.questions}
    records = []
    if args.method == "lasso":
        for flag in ("matrix", "ids", "queries", "query_ids"):
            if getattr(args, flag) is None:
                raise ValueError(f"--{flag.replace('_', '-')} is required for method lasso")
        matrix = load_matrix(args.matrix, args.ids)
        if list(matrix.ids) != [cand_id for cand_id, _ in pool]:
            raise ValueError("pool ids must match the matrix id sidecar, in order")
        queries = {q.id: q for q in load_queries(args.queries, args.query_ids)}
        missing = [q.id for q in questions if q.id not in queries]
        if missing:
            raise ValueError(f"no query embedding for question ids {missing}")
        config = LassoConfig(l1_penalty=args.l1_penalty, tol=args.tol, max_sweeps=args.max_sweeps)
        for question in questions:
            kept = preprocess_pool(pool, question.text)
            records.append(
                rank_lasso(
                    matrix, queries[question.id], kept, question.text,
                    image_id=question.image_id, config=config, k=args.top_k,
                    normalize=args.normalize_embeddings,
                )
            )
        inputs.update(
            {"matrix": args.matrix, "ids": args.ids,
             "queries": args.queries, "query_ids": args.query_ids}
        )
        write_ranked_records(
            records, args.out, method="lasso",
            l1_penalty=args.l1_penalty, normalize=args.normalize_embeddings,
        )
    else:
        stats = None
        if args.method == "cider":
            if args.cider_stats is None:
                raise ValueError("cider requires corpus stats (--cider-stats)")
            stats = load_cider_stats(args.cider_stats)
            inputs["cider_stats"] = args.cider_stats
        for question in questions:
            kept = preprocess_pool(pool, question.text)
            records.append(
                rank_metric(
                    kept, question.text, args.method, question.id,
                    image_id=question.image_id, k=args.top_k, stats=stats,
                )
            )
        write_ranked_records(records, args.out, method=args.method)

    _emit_manifest(
        args, "rank",
        {
            "method": args.method,
            "lambda": args.l1_penalty,
            "tol": args.tol,
            "max_sweeps": args.max_sweeps,
            "top_k": args.top_k,
            "normalize_embeddings": args.normalize_embeddings,
        },
        inputs,
    )


def _report_payload(report) -> dict:
    return {
        "all": report.all,
        "per_category": {cat: report.per_category[cat] for cat in CATEGORIES if cat in report.per_category},
        "n": report.n,
    }


def cmd_accuracy(args) -> None:
    records = load_answer_records(args.answers)
    if not records:
        raise ValueError(f"{args.answers}: no answer records")
    report = dataset_accuracy(records)
    _write_json(args.out, _report_payload(report))
    print(f"all {report.all:.2f} over {report.n} records")
    _emit_manifest(args, "accuracy", {}, {"answers": args.answers})


def cmd_score(args) -> None:
    clean = load_answer_records(args.clean)
    noisy = load_answer_records(args.noisy)
    if not clean or not noisy:
        raise ValueError("both answer files must be non-empty")
    clean_ids = {r.question_id for r in clean}
    noisy_ids = {r.question_id for r in noisy}
    if clean_ids != noisy_ids:
        missing_noisy = sorted(clean_ids - noisy_ids)[:10]
        missing_clean = sorted(noisy_ids - clean_ids)[:10]
        raise ValueError(
            "question id sets differ; "
            f"missing from noisy: {missing_noisy}; missing from clean: {missing_clean}"
        )
    report, clean_report, noisy_report = evaluate_robustness(clean, noisy, args.t, args.m)
    payload = {
        "acc_vqa": report.acc_vqa,
        "acc_bqd": report.acc_bqd,
        "acc_di": report.acc_di,
        "r_score": report.r_score,
        "t": report.t,
        "m": report.m,
        "per_category": {
            "clean": _report_payload(clean_report)["per_category"],
            "noisy": _report_payload(noisy_report)["per_category"],
        },
        "n": {"clean": clean_report.n, "noisy": noisy_report.n},
    }
    _write_json(args.out, payload)
    print(
        f"acc_vqa {report.acc_vqa:.2f}  acc_bqd {report.acc_bqd:.2f}  "
        f"acc_di {report.acc_di:.2f}  r_score {report.r_score:.2f}"
    )
    _emit_manifest(args, "score", {"t": args.t, "m": args.m},
                   {"clean": args.clean, "noisy": args.noisy})


def cmd_select(args) -> None:
    thresholds = SelectionThresholds(s1=args.s1, s2=args.s2, s3=args.s3)
    records = read_ranked_records(args.ranked)
    if not records:
        raise ValueError(f"{args.ranked}: no ranked records")
    results = [
        apply_selection(record, thresholds, cascade=not args.independent_tests)
        for record in records
    ]
    lines = [
        json.dumps(
            {
                "mq_id": record.mq_id,
                "appended_count": result.appended_count,
                "concatenated_text": result.concatenated_text,
            }
        )
        for record, result in zip(records, results)
    ]
    Path(args.out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    histogram = selection_histogram(result.appended_count for result in results)
    hist_path = args.histogram_out or f"{args.out}.hist.json"
    _write_json(
        hist_path,
        {
            "total": histogram["total"],
            "counts": {str(k): histogram["counts"][k] for k in range(4)},
            "percentages": {str(k): round(histogram["percentages"][k], 2) for k in range(4)},
        },
    )
    for appended in range(4):
        print(
            f"{appended} appended: {histogram['counts'][appended]} "
            f"({histogram['percentages'][appended]:.2f}%)"
        )
    _emit_manifest(
        args, "select",
        {"s1": args.s1, "s2": args.s2, "s3": args.s3,
         "independent_tests": args.independent_tests},
        {"ranked": args.ranked},
    )


def _csv_cell(report, category) -> str:
    if category in report.per_category:
        return f"{report.per_category[category]:.2f}"
    return ""


def cmd_partition_eval(args) -> None:
    if len(args.partitions) != PARTITION_FILES:
        raise ValueError(f"expected {PARTITION_FILES} partition answer files, got {len(args.partitions)}")
    ranked = read_ranked_records(args.ranked)
    mq_ids = {record.mq_id for record in ranked}
    clean = load_answer_records(args.clean)
    if not clean:
        raise ValueError(f"{args.clean}: no answer records")
    clean_ids = {r.question_id for r in clean}
    unknown = sorted(clean_ids - mq_ids)[:10]
    if unknown:
        raise ValueError(f"answer question ids missing from ranked records: {unknown}")
    clean_report = dataset_accuracy(clean)

    labels = ("first", "second", "third", "fourth", "fifth", "sixth", "seventh")
    rows = []
    for label, path in zip(labels, args.partitions):
        records = load_answer_records(path)
        ids = {r.question_id for r in records}
        if ids != clean_ids:
            raise ValueError(f"{path}: question id set differs from the clean answers")
        report = dataset_accuracy(records)
        diff = abs(clean_report.all - report.all)
        rows.append((label, report, diff, robustness_score(diff, args.t, args.m)))

    lines = ["partition,other,number,yes/no,all,acc_di,r_score"]
    for label, report, diff, score in rows:
        lines.append(
            f"{label},{_csv_cell(report, 'other')},{_csv_cell(report, 'number')},"
            f"{_csv_cell(report, 'yes/no')},{report.all:.2f},{diff:.2f},{score:.2f}"
        )
    lines.append(
        f"original,{_csv_cell(clean_report, 'other')},{_csv_cell(clean_report, 'number')},"
        f"{_csv_cell(clean_report, 'yes/no')},{clean_report.all:.2f},,"
    )
    Path(args.out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    _emit_manifest(
        args, "partition-eval", {"t": args.t, "m": args.m},
        {"ranked": args.ranked, "clean": args.clean,
         **{f"partition_{i + 1}": path for i, path in enumerate(args.partitions)}},
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bqrank",
        description="Rank related questions against a main question and score robustness",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    encode = sub.add_parser("encode", help="encode question texts into a QEMB embedding file")
    encode.add_argument("--weights", required=True, help="GRU weights archive")
    encode.add_argument("--word-table", required=True, help="word embedding QEMB file")
    encode.add_argument("--word-table-ids", required=True, help="word table token sidecar")
    encode.add_argument("--questions", required=True, help="JSONL with id/text per line")
    encode.add_argument("--out", required=True, help="output QEMB path")
    encode.add_argument("--out-ids", required=True, help="output id sidecar path")
    encode.add_argument("--manifest-out", default=None)
    encode.set_defaults(func=cmd_encode)

    rank = sub.add_parser("rank", help="rank a candidate pool against main questions")
    rank.add_argument("--method", required=True, choices=("lasso",) + METRIC_NAMES)
    rank.add_argument("--pool", required=True, help="candidate JSONL with id/text per line")
    rank.add_argument("--questions", required=True, help="main question JSONL")
    rank.add_argument("--matrix", default=None, help="candidate QEMB matrix (lasso)")
    rank.add_argument("--ids", default=None, help="candidate id sidecar (lasso)")
    rank.add_argument("--queries", default=None, help="query QEMB file (lasso)")
    rank.add_argument("--query-ids", default=None, help="query id sidecar (lasso)")
    rank.add_argument("--cider-stats", default=None, help="corpus stats JSON (cider)")
    rank.add_argument("--lambda", dest="l1_penalty", type=float, default=1e-6,
                      help="L1 penalty for the lasso path (default 1e-6)")
    rank.add_argument("--tol", type=float, default=LassoConfig().tol)
    rank.add_argument("--max-sweeps", type=int, default=LassoConfig().max_sweeps)
    rank.add_argument("--top-k", type=int, default=DEFAULT_TOP_K)
    rank.add_argument("--normalize-embeddings", action="store_true",
                      help="L2-normalize candidate columns and the query before solving")
    rank.add_argument("--out", required=True)
    rank.add_argument("--manifest-out", default=None)
    rank.set_defaults(func=cmd_rank)

    accuracy = sub.add_parser("accuracy", help="dataset accuracy of one answer file")
    accuracy.add_argument("--answers", required=True)
    accuracy.add_argument("--out", required=True)
    accuracy.add_argument("--manifest-out", default=None)
    accuracy.set_defaults(func=cmd_accuracy)

    score = sub.add_parser("score", help="robustness score between two answer files")
    score.add_argument("--clean", required=True, help="answers to the original questions")
    score.add_argument("--noisy", required=True, help="answers to the altered questions")
    score.add_argument("--t", type=float, default=DEFAULT_T)
    score.add_argument("--m", type=float, default=DEFAULT_M)
    score.add_argument("--out", required=True)
    score.add_argument("--manifest-out", default=None)
    score.set_defaults(func=cmd_score)

    select_cmd = sub.add_parser("select", help="choose how many ranked questions to append")
    select_cmd.add_argument("--ranked", required=True, help="ranked records JSONL")
    select_cmd.add_argument("--s1", type=float, default=DEFAULT_S1)
    select_cmd.add_argument("--s2", type=float, default=DEFAULT_S2)
    select_cmd.add_argument("--s3", type=float, default=DEFAULT_S3)
    select_cmd.add_argument("--independent-tests", action="store_true",
                            help="evaluate the three threshold tests independently instead of cascading")
    select_cmd.add_argument("--out", required=True)
    select_cmd.add_argument("--histogram-out", default=None)
    select_cmd.add_argument("--manifest-out", default=None)
    select_cmd.set_defaults(func=cmd_select)

    pe = sub.add_parser("partition-eval", help="accuracy drop per ranked partition")
    pe.add_argument("--ranked", required=True)
    pe.add_argument("--partitions", required=True, nargs="+",
                    help="7 answer files, one per partition, best ranks first")
    pe.add_argument("--clean", required=True)
    pe.add_argument("--t", type=float, default=DEFAULT_T)
    pe.add_argument("--m", type=float, default=DEFAULT_M)
    pe.add_argument("--out", required=True, help="output CSV path")
    pe.add_argument("--manifest-out", default=None)
    pe.set_defaults(func=cmd_partition_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def app() -> None:
    raise SystemExit(main(sys.argv[1:]))
