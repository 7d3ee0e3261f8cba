"""Command-line surface: eda, clean, train, eval, grid, score, serve.

Exit codes: 0 success, 1 runtime failure, 2 usage errors and missing
files. ``TOXSCORE_MODEL`` overrides ``--model`` for score/serve.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, cleaning, corpus, evaluation, pipeline, server, vectorizer
from .cleaning import CleanMode
from .errors import ToxscoreError
from .models import TrainParams
from .persistence import load_bundle, save_bundle

logger = logging.getLogger(__name__)

_EDA_SCHEMAS = ("class", "multi")
_ALL_SCHEMAS = ("class", "bias", "multi", "ruddit")


def _parse_weights(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("expected 6 comma-separated label weights")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load_corpus(schema: str, data: str, texts: str | None,
                 weights: list[float]) -> corpus.LabeledCorpus:
    if schema == "class":
        return corpus.load_class_dataset(data, weights)
    if schema == "multi":
        return corpus.load_multi_dataset(data, weights)
    if schema == "bias":
        return corpus.load_bias_dataset(data, texts)
    if schema == "ruddit":
        return corpus.load_ruddit_dataset(data)
    raise ValueError(f"unknown schema {schema!r}")


def _params_from(args: argparse.Namespace) -> TrainParams:
    return TrainParams(
        ridge_lambda=args.ridge_lambda,
        svr_epsilon=args.svr_epsilon,
        svr_lambda=args.svr_lambda,
        mlp_hidden=args.mlp_hidden,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        margin=args.margin,
        seed=args.seed,
    )


def _add_param_flags(sub: argparse.ArgumentParser) -> None:
    defaults = TrainParams()
    sub.add_argument("--ridge-lambda", type=float, default=defaults.ridge_lambda)
    sub.add_argument("--svr-epsilon", type=float, default=defaults.svr_epsilon)
    sub.add_argument("--svr-lambda", type=float, default=defaults.svr_lambda)
    sub.add_argument("--mlp-hidden", type=int, default=defaults.mlp_hidden)
    sub.add_argument("--learning-rate", type=float, default=defaults.learning_rate)
    sub.add_argument("--epochs", type=int, default=defaults.epochs)
    sub.add_argument("--batch-size", type=int, default=defaults.batch_size)
    sub.add_argument("--margin", type=float, default=defaults.margin)
    sub.add_argument("--seed", type=int, default=defaults.seed)


def _model_path(args: argparse.Namespace, parser: argparse.ArgumentParser) -> str:
    path = os.environ.get("TOXSCORE_MODEL") or args.model
    if not path:
        parser.error("no model bundle: pass --model or set TOXSCORE_MODEL")
    return path


def cmd_eda(args) -> int:
    loaded = _load_corpus(args.schema, args.data, None, args.weights)
    stats = corpus.corpus_stats(loaded)
    payload = stats.to_json_dict()
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"wrote stats for {len(loaded)} rows to {args.out}")
    return 0


def cmd_clean(args) -> int:
    if args.dump_rules:
        print(cleaning.dump_rules(args.mode))
        return 0
    if not args.in_path or not args.out_path:
        raise ToxscoreError("clean needs --in and --out (or --dump-rules)")
    mode = CleanMode.parse(args.mode if args.mode is not None else 0)
    clean = cleaning.cleaner(mode)
    if args.csv_column:
        with open(args.in_path, "r", encoding="utf-8", newline="") as src:
            reader = csv.reader(src)
            header = next(reader)
            if args.csv_column not in header:
                raise ToxscoreError(f"column {args.csv_column!r} not in {header}")
            col = header.index(args.csv_column)
            rows = [row for row in reader]
        for row in rows:
            row[col] = clean(row[col])
        with open(args.out_path, "w", encoding="utf-8", newline="") as dst:
            writer = csv.writer(dst)
            writer.writerow(header)
            writer.writerows(rows)
        print(f"cleaned column {args.csv_column!r} of {len(rows)} rows")
    else:
        with open(args.in_path, "r", encoding="utf-8") as src:
            lines = src.read().splitlines()
        with open(args.out_path, "w", encoding="utf-8") as dst:
            for line in lines:
                dst.write(clean(line) + "\n")
        print(f"cleaned {len(lines)} lines")
    return 0


def cmd_train(args) -> int:
    loaded = _load_corpus(args.schema, args.data, args.texts, args.weights)
    params = _params_from(args)
    bundle, report = pipeline.train_bundle(
        loaded, args.clean, args.preset, args.model_kind, params,
        limit=args.limit, created_at=args.created_at,
    )
    save_bundle(bundle, args.out)
    print(f"trained {args.model_kind} on {args.schema} "
          f"(clean{int(args.clean)}, {args.preset}): "
          f"{len(bundle.vocabulary)} features, final loss {report.final_loss:.6f}, "
          f"{report.wall_seconds:.1f}s")
    print(f"saved bundle to {args.out}")
    return 0


def cmd_eval(args) -> int:
    bundle = load_bundle(args.bundle)
    pairs = corpus.load_validation_pairs(args.pairs)
    result = evaluation.ranking_accuracy(pipeline.bundle_scorer(bundle), pairs)
    print(f"accuracy {result.accuracy:.4f} on {result.n_pairs} pairs "
          f"({result.n_correct} correct, {result.n_ties} ties)")
    csv_line = f"accuracy,ties,pairs\n{result.accuracy:.6f},{result.n_ties},{result.n_pairs}\n"
    sys.stdout.write(csv_line)
    if args.csv:
        Path(args.csv).write_text(csv_line, encoding="utf-8")
    return 0


def cmd_grid(args) -> int:
    corpora: dict[str, corpus.LabeledCorpus] = {}
    if args.class_data:
        corpora["class"] = corpus.load_class_dataset(args.class_data, args.weights)
    if args.bias_data:
        corpora["bias"] = corpus.load_bias_dataset(args.bias_data, args.bias_texts)
    if args.multi_data:
        corpora["multi"] = corpus.load_multi_dataset(args.multi_data, args.weights)
    if args.ruddit_data:
        corpora["ruddit"] = corpus.load_ruddit_dataset(args.ruddit_data)
    if not corpora:
        raise ToxscoreError("grid needs at least one dataset "
                            "(--class-data/--bias-data/--multi-data/--ruddit-data)")
    pairs = corpus.load_validation_pairs(args.pairs)
    cells = evaluation.run_grid(
        corpora, pairs,
        clean_modes=args.clean,
        presets=args.presets,
        model_kinds=args.models,
        params=_params_from(args),
        limit=args.limit,
        workers=args.workers,
    )
    print(evaluation.format_grid_table(cells))
    table_csv = evaluation.grid_to_csv(cells)
    if args.out_csv:
        Path(args.out_csv).write_text(table_csv, encoding="utf-8")
        print(f"wrote {args.out_csv}")
    else:
        sys.stdout.write(table_csv)
    summary = evaluation.compare_cells(cells)
    if summary.model_ranking:
        ranked = ", ".join(f"{kind}={acc:.4f}" for kind, acc in summary.model_ranking)
        print(f"per-model mean accuracy: {ranked}")
    return 0 if any(cell.ok for cell in cells) else 1


def _band(score: float, low: float, high: float) -> str:
    if score < low:
        return "low"
    if score >= high:
        return "high"
    return "medium"


def cmd_score(args, parser) -> int:
    bundle = load_bundle(_model_path(args, parser))
    for line in sys.stdin:
        text = line.rstrip("\n")
        scored = pipeline.score_text(bundle, text)
        if args.raw:
            print(repr(scored.score), flush=True)
        else:
            print(f"{scored.score:.4f}\t{_band(scored.score, args.low, args.high)}",
                  flush=True)
    return 0


def cmd_serve(args, parser) -> int:
    bundle = load_bundle(_model_path(args, parser))
    httpd = server.make_server(bundle, args.host, args.port)
    print(f"serving model {bundle.version_string} on http://{args.host}:{args.port}",
          flush=True)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toxscore",
        description="Train, evaluate, and serve toxicity scoring models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="warning",
                        choices=("debug", "info", "warning", "error"))
    sub = parser.add_subparsers(dest="command", required=True)

    eda = sub.add_parser("eda", help="emit plot-ready label statistics as JSON")
    eda.add_argument("--schema", required=True, choices=_EDA_SCHEMAS)
    eda.add_argument("--data", required=True)
    eda.add_argument("--out", required=True)
    eda.add_argument("--weights", type=_parse_weights, default=[1.0] * 6)
    eda.set_defaults(func=cmd_eda)

    clean = sub.add_parser("clean", help="clean text with a rule template")
    clean.add_argument("--mode", type=int, choices=(0, 1), default=None)
    clean.add_argument("--in", dest="in_path")
    clean.add_argument("--out", dest="out_path")
    clean.add_argument("--csv-column", help="treat input as CSV and clean this column")
    clean.add_argument("--dump-rules", action="store_true",
                       help="print the versioned rule table and exit")
    clean.set_defaults(func=cmd_clean)

    train = sub.add_parser("train", help="train a model and save a bundle")
    train.add_argument("--schema", required=True, choices=_ALL_SCHEMAS)
    train.add_argument("--data", required=True)
    train.add_argument("--texts", help="id->text CSV for the bias schema")
    train.add_argument("--weights", type=_parse_weights, default=[1.0] * 6)
    train.add_argument("--clean", type=int, choices=(0, 1), default=0)
    train.add_argument("--preset", required=True, choices=sorted(vectorizer.PRESETS))
    train.add_argument("--model-kind", required=True,
                       choices=evaluation.IMPLEMENTED_MODEL_KINDS)
    train.add_argument("--out", required=True)
    train.add_argument("--limit", type=int, help="train on the first N rows only")
    train.add_argument("--created-at",
                       help="fix the bundle timestamp for reproducible files")
    _add_param_flags(train)
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="ranking accuracy of a bundle on judged pairs")
    ev.add_argument("--bundle", required=True)
    ev.add_argument("--pairs", required=True)
    ev.add_argument("--csv", help="also write the machine-readable line here")
    ev.set_defaults(func=cmd_eval)

    grid = sub.add_parser("grid", help="run the dataset x cleaner x features x model grid")
    grid.add_argument("--pairs", required=True)
    grid.add_argument("--class-data")
    grid.add_argument("--bias-data")
    grid.add_argument("--bias-texts")
    grid.add_argument("--multi-data")
    grid.add_argument("--ruddit-data")
    grid.add_argument("--weights", type=_parse_weights, default=[1.0] * 6)
    grid.add_argument("--clean", type=int, nargs="+", choices=(0, 1), default=[0, 1])
    grid.add_argument("--presets", nargs="+", choices=sorted(vectorizer.PRESETS),
                      default=sorted(vectorizer.PRESETS))
    grid.add_argument("--models", nargs="+", choices=evaluation.MODEL_KINDS,
                      default=list(evaluation.IMPLEMENTED_MODEL_KINDS))
    grid.add_argument("--limit", type=int, help="row cap per dataset for desk-scale runs")
    grid.add_argument("--workers", type=int, default=1)
    grid.add_argument("--out-csv")
    _add_param_flags(grid)
    grid.set_defaults(func=cmd_grid)

    score = sub.add_parser("score", help="interactive scoring: one comment per line")
    score.add_argument("--model")
    score.add_argument("--low", type=float, default=0.3, help="band threshold: below is 'low'")
    score.add_argument("--high", type=float, default=0.6, help="band threshold: at/above is 'high'")
    score.add_argument("--raw", action="store_true",
                       help="print full-precision scores without band labels")
    score.set_defaults(func=cmd_score, needs_parser=True)

    serve = sub.add_parser("serve", help="HTTP scoring service")
    serve.add_argument("--model")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve, needs_parser=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "needs_parser", False):
            return args.func(args, parser)
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"toxscore: file not found: {exc.filename or exc}", file=sys.stderr)
        return 2
    except ToxscoreError as exc:
        print(f"toxscore: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"toxscore: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
