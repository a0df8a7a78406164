#!/usr/bin/env python3
"""Run the full drift benchmark: both retraining scenarios plus the paired
selection comparison on the bundled synthetic corpus.

Writes curves, selections, manifests, SVG charts, and comparison tables
under --out-dir (default results/). Everything is deterministic, so two
runs produce identical artifacts.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from trendner.corpus import write_conll
from trendner.datagen import BENCHMARK_SEED, benchmark_corpus, benchmark_generator_config
from trendner.evalmetrics import percent
from trendner.experiment import ExperimentConfig, compare_on_selection, run_experiment
from trendner.report import (
    comparison_summary,
    write_comparison,
    write_curve_csv,
    write_curve_svg,
    write_manifest,
    write_selections_csv,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results", help="output directory")
    parser.add_argument("--step-size", type=int, default=100)
    parser.add_argument("--seeds", default="1,2,3,4,5", help="comma-separated seeds")
    parser.add_argument("--compare-size", type=int, default=500)
    args = parser.parse_args(argv)

    seeds = tuple(int(s) for s in args.seeds.split(","))
    out_root = Path(args.out_dir)
    gen_cfg = benchmark_generator_config()

    print(f"generating benchmark corpus (seed {BENCHMARK_SEED}) ...")
    corpus = benchmark_corpus()
    out_root.mkdir(parents=True, exist_ok=True)
    corpus_path = out_root / "benchmark.conll"
    write_conll(corpus_path, corpus)
    print(f"  {len(corpus)} instances over years {gen_cfg.years} -> {corpus_path}")

    base = ExperimentConfig(
        step_size=args.step_size, seeds=seeds, eval_year=gen_cfg.years[-1]
    )
    for scenario in (1, 2):
        out_dir = out_root / f"scenario{scenario}"
        out_dir.mkdir(parents=True, exist_ok=True)
        curves = []
        for strategy in ("trend", "random"):
            cfg = replace(base, scenario=scenario, strategy=strategy)
            started = time.perf_counter()
            curve = run_experiment(corpus, cfg)
            curves.append(curve)
            means = " ".join(percent(s.mean_f1) for s in curve.steps)
            print(
                f"scenario {scenario} {strategy:>6}: mean F1 per step {means} "
                f"({time.perf_counter() - started:.0f}s)"
            )
            write_curve_csv(out_dir / f"curve_{strategy}.csv", curve)
            write_selections_csv(out_dir / f"selections_{strategy}.csv", curve)
        write_manifest(out_dir / "run_manifest.txt", str(corpus_path), base, curves)
        write_curve_svg(
            out_dir / "curve.svg",
            curves,
            f"scenario {scenario}, N={args.step_size} per step",
        )

    cmp_dir = out_root / "comparison"
    cmp_dir.mkdir(parents=True, exist_ok=True)
    report = compare_on_selection(corpus, base, args.compare_size)
    write_comparison(cmp_dir, report)
    print()
    print(comparison_summary(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
