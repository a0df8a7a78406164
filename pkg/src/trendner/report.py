"""Deterministic emission of run artifacts: curve CSVs, selection dumps,
the resolved-config manifest, comparison tables, and an SVG line chart."""

from __future__ import annotations

import csv
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from .corpus import DistributionTable
from .evalmetrics import format_result, percent
from .experiment import ComparisonReport, ExperimentConfig, LearningCurve


def write_curve_csv(path: str | Path, curve: LearningCurve) -> None:
    """One row per (step, seed): ``strategy,step,seed,P,R,F1`` in percent."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["strategy", "step", "seed", "P", "R", "F1"])
        for step in curve.steps:
            for seed, prf in step.per_seed.items():
                writer.writerow(
                    [
                        curve.strategy,
                        step.step,
                        seed,
                        percent(prf.precision),
                        percent(prf.recall),
                        percent(prf.f1),
                    ]
                )


def write_selections_csv(path: str | Path, curve: LearningCurve) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["strategy", "step", "seed", "instance_id"])
        for step in curve.steps:
            for seed, ids in step.selected.items():
                for inst_id in ids:
                    writer.writerow([curve.strategy, step.step, seed, inst_id])


def write_manifest(
    path: str | Path,
    corpus_path: str,
    cfg: ExperimentConfig,
    curves: Sequence[LearningCurve],
) -> None:
    """Full resolved configuration plus per-seed outcomes, as key = value."""
    lines = [f"corpus = {corpus_path}"]
    resolved = asdict(cfg)
    tagger = resolved.pop("tagger")
    resolved.pop("strategy", None)
    lines.append(f"strategies = {','.join(c.strategy for c in curves)}")
    for key in sorted(resolved):
        lines.append(f"{key} = {resolved[key]}")
    for key in sorted(tagger):
        lines.append(f"tagger.{key} = {tagger[key]}")
    for curve in curves:
        means = ",".join(percent(s.mean_f1) for s in curve.steps)
        lines.append(f"mean_f1[{curve.strategy}] = {means}")
        for seed, digest in curve.weight_digests.items():
            lines.append(f"weights_sha256[{curve.strategy},{seed}] = {digest}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_CURVE_COLORS = {"trend": "#d62728", "random": "#1f77b4"}

_WIDTH, _HEIGHT = 640, 420
_LEFT, _RIGHT, _TOP, _BOTTOM = 60, 20, 30, 50


def write_curve_svg(path: str | Path, curves: Sequence[LearningCurve], title: str) -> None:
    """Mean F1 (percent) per step, one polyline per strategy."""
    n_steps = max((len(c.steps) for c in curves), default=0)
    plot_w = _WIDTH - _LEFT - _RIGHT
    plot_h = _HEIGHT - _TOP - _BOTTOM

    def x(step: int) -> float:  # step is 1-based
        if n_steps <= 1:
            return _LEFT + plot_w / 2
        return _LEFT + plot_w * (step - 1) / (n_steps - 1)

    def y(f1_percent: float) -> float:
        return _TOP + plot_h * (1.0 - f1_percent / 100.0)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{title}</text>',
    ]
    for tick in range(0, 101, 20):
        ty = y(tick)
        parts.append(
            f'<line x1="{_LEFT}" y1="{ty:.1f}" x2="{_WIDTH - _RIGHT}" y2="{ty:.1f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_LEFT - 8}" y="{ty + 4:.1f}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{tick}</text>'
        )
    for step in range(1, n_steps + 1):
        tx = x(step)
        parts.append(
            f'<text x="{tx:.1f}" y="{_HEIGHT - _BOTTOM + 18}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{step}</text>'
        )
    parts.append(
        f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{_HEIGHT - _BOTTOM}" '
        f'stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{_LEFT}" y1="{_HEIGHT - _BOTTOM}" x2="{_WIDTH - _RIGHT}" '
        f'y2="{_HEIGHT - _BOTTOM}" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{_WIDTH / 2:.1f}" y="{_HEIGHT - 12}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif">step</text>'
    )
    parts.append(
        f'<text x="16" y="{_TOP + plot_h / 2:.1f}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 16 {_TOP + plot_h / 2:.1f})">'
        f"mean entity F1 (%)</text>"
    )
    for i, curve in enumerate(curves):
        color = _CURVE_COLORS.get(curve.strategy, "#2ca02c")
        points = " ".join(
            f"{x(s.step):.1f},{y(100.0 * s.mean_f1):.1f}" for s in curve.steps
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        for s in curve.steps:
            parts.append(
                f'<circle cx="{x(s.step):.1f}" cy="{y(100.0 * s.mean_f1):.1f}" r="3" '
                f'fill="{color}"/>'
            )
        ly = _TOP + 14 + 16 * i
        parts.append(
            f'<line x1="{_WIDTH - _RIGHT - 110}" y1="{ly - 4}" x2="{_WIDTH - _RIGHT - 86}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{_WIDTH - _RIGHT - 80}" y="{ly}" font-size="12" '
            f'font-family="sans-serif">{curve.strategy}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def _write_distribution_rows(
    writer, label: str, table: DistributionTable
) -> None:
    for etype, spans, tokens in table.rows():
        writer.writerow([label, etype, spans, tokens])


def write_comparison(out_dir: str | Path, report: ComparisonReport) -> None:
    """Table-style comparison artifacts for one paired selection run."""
    out_dir = Path(out_dir)
    with open(out_dir / "comparison.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["strategy", "P", "R", "F1"])
        for strategy in ("random", "trend"):
            overall = report.results[strategy].overall
            writer.writerow(
                [strategy, percent(overall.precision), percent(overall.recall), percent(overall.f1)]
            )
    with open(out_dir / "distribution.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["selection", "entity_type", "entity_level", "token_level"])
        for seed, table in report.random_distributions.items():
            _write_distribution_rows(writer, f"random[seed={seed}]", table)
        _write_distribution_rows(writer, "trend", report.trend_distribution)


def comparison_summary(report: ComparisonReport) -> str:
    lines = [f"paired comparison, {report.sample_size} training instances per strategy", ""]
    for strategy in ("random", "trend"):
        lines.append(f"== {strategy} ==")
        lines.append(format_result(report.results[strategy]))
        lines.append("")
    lines.append("entity distribution (spans / tokens):")
    first_seed = next(iter(report.random_distributions))
    rnd = report.random_distributions[first_seed]
    lines.append(f"  random[seed={first_seed}]: {rnd.total_entities} / {rnd.total_tokens}")
    trd = report.trend_distribution
    lines.append(f"  trend:                     {trd.total_entities} / {trd.total_tokens}")
    return "\n".join(lines)
