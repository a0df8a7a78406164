"""Command-line interface.

Subcommands: ``score``, ``select``, ``run``, ``compare``, ``gen``, ``eval``.
Exit codes: 0 success, 1 usage/config error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError
from .corpus import (
    ParseError,
    parse_conll_file,
    serialize_instances,
    write_conll,
)
from .datagen import generate_drift_corpus, load_generator_config
from .evalmetrics import entity_f1, format_result
from .experiment import (
    ExperimentConfig,
    compare_on_selection,
    load_run_spec,
    run_experiment,
)
from .report import (
    comparison_summary,
    write_comparison,
    write_curve_csv,
    write_curve_svg,
    write_manifest,
    write_selections_csv,
)
from .textproc import StopwordSet
from .trend import TrendScorer, build_table, dump_scores, rank_and_select

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the documented contract is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_trend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=2, help="n-gram order (default 2)")
    parser.add_argument("--k", type=float, default=0.1, help="normalization constant (default 0.1)")
    parser.add_argument("--stopwords", help="stop-word file (default: bundled English list)")
    parser.add_argument(
        "--mode", choices=("raw", "relative"), default="raw", help="frequency mode"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trendner", description=__doc__)
    parser.add_argument("--version", action="version", version=f"trendner {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[], help="trend-score instances of a recent corpus")
    p.add_argument("--past", required=True, help="past corpus (CoNLL)")
    p.add_argument("--recent", required=True, help="recent corpus (CoNLL)")
    _add_trend_flags(p)
    p.add_argument("--out", required=True, help="output CSV (instance_id,year,score)")

    p = sub.add_parser("select", help="rank a pool by trend score and keep the top N")
    p.add_argument("--pool", required=True, help="candidate pool (CoNLL)")
    p.add_argument("--past", required=True, help="past corpus (CoNLL)")
    p.add_argument("-N", dest="batch_size", type=int, required=True, help="batch size")
    p.add_argument("--exclude", help="file of instance ids to skip, one per line")
    _add_trend_flags(p)
    p.add_argument("--out", required=True, help="output CoNLL batch")

    p = sub.add_parser("run", help="run an incremental retraining experiment")
    p.add_argument("--config", required=True, help="flat key = value config file")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("compare", help="train once on equal random vs trend selections")
    p.add_argument("--corpus", required=True, help="temporal corpus (CoNLL)")
    p.add_argument("--size", type=int, default=1000, help="selection size (default 1000)")
    p.add_argument("--eval-year", type=int, help="evaluation year (default: latest)")
    p.add_argument("--seed", type=int, default=1, help="seed for the random selection")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("gen", help="generate a synthetic drifting corpus")
    p.add_argument("--config", required=True, help="generator config file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output CoNLL file")

    p = sub.add_parser("eval", help="entity-level P/R/F1 of predictions vs gold")
    p.add_argument("--gold", required=True, help="gold corpus (CoNLL)")
    p.add_argument("--pred", required=True, help="predictions (CoNLL; year lines optional)")
    return parser


def _load_stopwords(path: str | None) -> StopwordSet:
    return StopwordSet.from_file(path) if path else StopwordSet.default()


def _cmd_score(args) -> int:
    past = parse_conll_file(args.past)
    recent = parse_conll_file(args.recent)
    stopwords = _load_stopwords(args.stopwords)
    scorer = TrendScorer(
        build_table(past.all_instances(), args.n, stopwords, args.mode),
        build_table(recent.all_instances(), args.n, stopwords, args.mode),
        args.k,
    )
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        dump_scores(fh, recent.all_instances(), scorer, stopwords)
    logger.info("wrote %d scores to %s", len(recent), args.out)
    return 0


def _read_id_file(path: str) -> set[int]:
    ids: set[int] = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            ids.add(int(line))
        except ValueError:
            raise ParseError(f"bad instance id {line!r}", lineno) from None
    return ids


def _cmd_select(args) -> int:
    if args.batch_size < 0:
        raise ConfigError(f"-N must be >= 0, got {args.batch_size}")
    pool = parse_conll_file(args.pool)
    past = parse_conll_file(args.past)
    stopwords = _load_stopwords(args.stopwords)
    excluded = _read_id_file(args.exclude) if args.exclude else frozenset()
    scorer = TrendScorer(
        build_table(past.all_instances(), args.n, stopwords, args.mode),
        build_table(pool.all_instances(), args.n, stopwords, args.mode),
        args.k,
    )
    batch = rank_and_select(pool.all_instances(), scorer, args.batch_size, stopwords, excluded)
    Path(args.out).write_text(serialize_instances(batch), encoding="utf-8")
    logger.info("selected %d of %d pool instances", len(batch), len(pool))
    return 0


def _cmd_run(args) -> int:
    spec = load_run_spec(args.config)
    corpus = parse_conll_file(spec.corpus_path)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    curves = []
    for strategy in spec.strategies:
        cfg = replace(spec.config, strategy=strategy)
        logger.info("running scenario %d, strategy %s", cfg.scenario, strategy)
        curve = run_experiment(corpus, cfg)
        curves.append(curve)
        write_curve_csv(out_dir / f"curve_{strategy}.csv", curve)
        write_selections_csv(out_dir / f"selections_{strategy}.csv", curve)
    write_manifest(out_dir / "run_manifest.txt", spec.corpus_path, spec.config, curves)
    title = f"scenario {spec.config.scenario}, N={spec.config.step_size} per step"
    write_curve_svg(out_dir / "curve.svg", curves, title)
    for curve in curves:
        means = " ".join(f"{100 * s.mean_f1:.2f}" for s in curve.steps)
        print(f"{curve.strategy}: mean F1 per step = {means}")
    return 0


def _cmd_compare(args) -> int:
    corpus = parse_conll_file(args.corpus)
    cfg = ExperimentConfig(eval_year=args.eval_year, seeds=(args.seed,))
    report = compare_on_selection(corpus, cfg, args.size)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_comparison(out_dir, report)
    print(comparison_summary(report))
    return 0


def _cmd_gen(args) -> int:
    cfg = load_generator_config(args.config)
    corpus = generate_drift_corpus(cfg, args.seed)
    write_conll(args.out, corpus)
    logger.info("wrote %d instances across %d years to %s", len(corpus), len(cfg.years), args.out)
    return 0


def _cmd_eval(args) -> int:
    gold = parse_conll_file(args.gold)
    pred = parse_conll_file(args.pred, require_year=False)
    gold_insts = gold.all_instances()
    pred_labels = [inst.labels for inst in pred.all_instances()]
    try:
        result = entity_f1(gold_insts, pred_labels)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    print(format_result(result))
    return 0


_COMMANDS = {
    "score": _cmd_score,
    "select": _cmd_select,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "gen": _cmd_gen,
    "eval": _cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ParseError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (OSError, FloatingPointError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
