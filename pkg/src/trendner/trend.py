"""N-gram frequency tables, emerging-trend scoring, and ranked selection.

An n-gram's trend score contrasts its frequency in a recent corpus against
a past corpus:

    score(g) = (f_recent(g) - f_past(g)) / (f_past(g) + k)

with k > 0, so n-grams unseen in the past score f_recent / k, a strong
novelty boost. Instances are scored by summing over their n-gram multiset
and selected greedily by descending score.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import Container, Iterable, Mapping, Sequence, TextIO

from .corpus import Instance
from .textproc import Ngram, extract_ngrams

FREQUENCY_MODES = ("raw", "relative")
DEFAULT_K = 0.1
DEFAULT_NGRAM_ORDER = 2


@dataclass
class NgramTable:
    """Occurrence counts for the order-``n`` n-grams of one corpus slice.

    Stored counts stay integral; ``relative`` mode divides by the total at
    lookup time.
    """

    order: int
    mode: str = "raw"
    counts: Counter[Ngram] = field(default_factory=Counter)
    total_ngrams: int = 0

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"n-gram order must be >= 1, got {self.order}")
        if self.mode not in FREQUENCY_MODES:
            raise ValueError(f"unknown frequency mode {self.mode!r}")

    def add(self, grams: Mapping[Ngram, int]) -> None:
        for gram, count in grams.items():
            if len(gram) != self.order:
                raise ValueError(f"n-gram {gram!r} does not have order {self.order}")
            self.counts[gram] += count
            self.total_ngrams += count

    def merge(self, other: "NgramTable") -> "NgramTable":
        """Associative combine for parallel partial-count construction."""
        if other.order != self.order or other.mode != self.mode:
            raise ValueError("cannot merge tables with different order/mode")
        merged = NgramTable(self.order, self.mode, Counter(self.counts), self.total_ngrams)
        merged.add(other.counts)
        return merged

    def frequency(self, gram: Ngram) -> float:
        """Raw count, or count / total in relative mode; 0 for absent keys."""
        if len(gram) != self.order:
            raise ValueError(f"n-gram {gram!r} does not have order {self.order}")
        count = self.counts.get(gram, 0)
        if self.mode == "relative":
            return count / self.total_ngrams if self.total_ngrams else 0.0
        return float(count)


def build_table(
    instances: Iterable[Instance],
    n: int = DEFAULT_NGRAM_ORDER,
    stopwords: Container[str] = (),
    mode: str = "raw",
) -> NgramTable:
    """Count stop-word-filtered n-grams over instances' normalized tokens."""
    table = NgramTable(n, mode)
    for inst in instances:
        table.add(extract_ngrams(inst.norm_tokens, n, stopwords))
    return table


@dataclass(frozen=True)
class TrendScorer:
    """Immutable pairing of a past and a recent table plus the constant k.

    Instance scores are memoized by instance id; ids are unique corpus-wide
    and the underlying tables never change, so the cache never invalidates.
    """

    past: NgramTable
    recent: NgramTable
    k: float = DEFAULT_K
    _cache: dict[int, float] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.past.order != self.recent.order:
            raise ValueError(
                f"past/recent order mismatch: {self.past.order} vs {self.recent.order}"
            )
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")

    @property
    def order(self) -> int:
        return self.recent.order

    def score_ngram(self, gram: Ngram) -> float:
        f_recent = self.recent.frequency(gram)
        f_past = self.past.frequency(gram)
        return (f_recent - f_past) / (f_past + self.k)

    def score_instance(self, inst: Instance, stopwords: Container[str] = ()) -> float:
        """Sum of per-n-gram trend scores, with multiplicity.

        The scorer must have been built with the same n and stop-word set
        used here. Instances with fewer than n tokens score 0.
        """
        cached = self._cache.get(inst.id)
        if cached is not None:
            return cached
        grams = extract_ngrams(inst.norm_tokens, self.order, stopwords)
        score = sum(count * self.score_ngram(gram) for gram, count in grams.items())
        self._cache[inst.id] = score
        return score


def rank_ids(
    scores: Mapping[int, float],
    batch_size: int,
    excluded: Container[int] = frozenset(),
) -> list[int]:
    """Top ``batch_size`` ids by descending score, ties by ascending id."""
    if batch_size < 0:
        raise ValueError(f"batch size must be >= 0, got {batch_size}")
    ids = [i for i in scores if i not in excluded]
    ids.sort(key=lambda i: (-scores[i], i))
    return ids[:batch_size]


def rank_and_select(
    pool: Sequence[Instance],
    scorer: TrendScorer,
    batch_size: int,
    stopwords: Container[str] = (),
    excluded: Container[int] = frozenset(),
) -> list[Instance]:
    """The ``batch_size`` highest-scoring pool instances not yet excluded.

    Deterministic across runs and platforms: ties break by ascending
    instance id. Returns fewer than requested when the pool runs out.
    """
    by_id = {inst.id: inst for inst in pool}
    scores = {inst.id: scorer.score_instance(inst, stopwords) for inst in pool}
    return [by_id[i] for i in rank_ids(scores, batch_size, excluded)]


def dump_scores(
    out: TextIO,
    instances: Iterable[Instance],
    scorer: TrendScorer,
    stopwords: Container[str] = (),
) -> None:
    """CSV dump ``instance_id,year,score`` with 6-decimal scores."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["instance_id", "year", "score"])
    for inst in instances:
        writer.writerow([inst.id, inst.year, f"{scorer.score_instance(inst, stopwords):.6f}"])
