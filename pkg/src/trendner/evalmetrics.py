"""Entity-level exact-match scoring (CoNLL-style P/R/F1) with per-type
breakdown.

A predicted span counts as a true positive only when its type, start, and
end all match a gold span; each gold span can be matched at most once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import Instance


@dataclass(frozen=True, order=True)
class EntitySpan:
    type: str
    start: int
    end: int  # inclusive

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"bad span bounds ({self.start}, {self.end})")


@dataclass(frozen=True)
class PRF:
    """Exact-match counts with derived precision/recall/F1 in [0, 1]."""

    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    @property
    def support(self) -> int:
        """Number of gold spans."""
        return self.tp + self.fn

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass
class EvalResult:
    per_type: dict[str, PRF]

    @property
    def overall(self) -> PRF:
        """Micro average: per-type counts summed before deriving P/R/F1."""
        total = PRF()
        for counts in self.per_type.values():
            total = total + counts
        return total


def extract_spans(labels: Sequence[str]) -> list[EntitySpan]:
    """Maximal ``B-X (I-X)*`` runs as (type, start, end) spans.

    Lenient: an ``I-X`` that does not continue a compatible run starts a
    new span. Intended for model predictions; gold data is validated at
    parse time, so repair never triggers on it.
    """
    spans: list[EntitySpan] = []
    cur_type: str | None = None
    cur_start = 0

    def close(end: int):
        nonlocal cur_type
        if cur_type is not None:
            spans.append(EntitySpan(cur_type, cur_start, end))
            cur_type = None

    for i, label in enumerate(labels):
        if label == "O":
            close(i - 1)
        elif label.startswith("B-"):
            close(i - 1)
            cur_type, cur_start = label[2:], i
        elif label.startswith("I-"):
            if label[2:] != cur_type:
                close(i - 1)
                cur_type, cur_start = label[2:], i
        else:
            raise ValueError(f"not a BIO label: {label!r}")
    close(len(labels) - 1)
    return spans


def entity_f1(gold: Sequence[Instance], predictions: Sequence[Sequence[str]]) -> EvalResult:
    """Entity-level exact-match scores of predicted label sequences."""
    if len(gold) != len(predictions):
        raise ValueError(f"{len(gold)} gold instances vs {len(predictions)} predictions")
    counts: dict[str, list[int]] = {}  # type -> [tp, fp, fn]

    def bucket(etype: str) -> list[int]:
        return counts.setdefault(etype, [0, 0, 0])

    for inst, pred in zip(gold, predictions):
        if len(inst.labels) != len(pred):
            raise ValueError(
                f"instance {inst.id}: {len(inst.labels)} labels vs {len(pred)} predicted"
            )
        gold_spans = set(extract_spans(inst.labels))
        pred_spans = set(extract_spans(pred))
        for span in gold_spans & pred_spans:
            bucket(span.type)[0] += 1
        for span in pred_spans - gold_spans:
            bucket(span.type)[1] += 1
        for span in gold_spans - pred_spans:
            bucket(span.type)[2] += 1
    per_type = {t: PRF(*counts[t]) for t in sorted(counts)}
    return EvalResult(per_type)


def percent(value: float) -> str:
    """Fractions rendered as percentages with two decimals, e.g. 58.81."""
    return f"{100.0 * value:.2f}"


def format_result(result: EvalResult) -> str:
    """Per-type table plus the overall micro-averaged row."""
    lines = [f"{'type':<8} {'P':>7} {'R':>7} {'F1':>7} {'support':>8}"]
    rows = list(result.per_type.items()) + [("overall", result.overall)]
    for name, prf in rows:
        lines.append(
            f"{name:<8} {percent(prf.precision):>7} {percent(prf.recall):>7} "
            f"{percent(prf.f1):>7} {prf.support:>8}"
        )
    return "\n".join(lines)
