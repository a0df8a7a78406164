"""CoNLL-format ingestion and serialization, temporal partitioning, and
dataset statistics.

File format: one ``token<TAB or single space>BIO-tag`` pair per line, blank
lines between instances, and ``# year: YYYY`` comment lines that set the
year of every following instance until the next directive.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .textproc import normalize_token

DEFAULT_ENTITY_TYPES = ("PER", "LOC", "ORG")

_YEAR_DIRECTIVE_RE = re.compile(r"^#\s*year:\s*(-?\d+)\s*$")


class ParseError(Exception):
    """Malformed corpus data; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Instance:
    """One sentence/tweet: tokens, gold BIO labels, and a year tag.

    ``norm_tokens`` is the per-token normalized view (lowercased, URLs
    collapsed to ``<URL>``) and always has the same length as
    ``raw_tokens``; casing features are re-derived from ``raw_tokens``.
    """

    id: int
    raw_tokens: tuple[str, ...]
    labels: tuple[str, ...]
    year: int
    norm_tokens: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.norm_tokens:
            object.__setattr__(
                self, "norm_tokens", tuple(normalize_token(t) for t in self.raw_tokens)
            )
        if not (len(self.raw_tokens) == len(self.norm_tokens) == len(self.labels)):
            raise ValueError(
                f"instance {self.id}: tokens/labels length mismatch "
                f"({len(self.raw_tokens)}/{len(self.norm_tokens)}/{len(self.labels)})"
            )

    def __len__(self) -> int:
        return len(self.raw_tokens)


@dataclass
class TemporalCorpus:
    """Instances partitioned by year, with corpus-wide unique ids."""

    partitions: dict[int, list[Instance]]

    def __post_init__(self):
        seen: set[int] = set()
        for insts in self.partitions.values():
            for inst in insts:
                if inst.id in seen:
                    raise ValueError(f"duplicate instance id {inst.id}")
                seen.add(inst.id)

    def years(self) -> list[int]:
        return sorted(self.partitions)

    def all_instances(self) -> list[Instance]:
        out = [inst for insts in self.partitions.values() for inst in insts]
        out.sort(key=lambda inst: inst.id)
        return out

    def __len__(self) -> int:
        return sum(len(v) for v in self.partitions.values())


def valid_tags(entity_types: Sequence[str]) -> frozenset[str]:
    return frozenset({"O"} | {f"{p}{t}" for t in entity_types for p in ("B-", "I-")})


def parse_conll(
    data: str | bytes,
    entity_types: Sequence[str] = DEFAULT_ENTITY_TYPES,
    require_year: bool = True,
) -> TemporalCorpus:
    """Parse CoNLL text into a :class:`TemporalCorpus`.

    Instance ids are file-order ordinals. Gold label sequences must be valid
    BIO; an ``I-X`` that does not continue a ``B-X``/``I-X`` run is rejected
    here (lenient span repair is reserved for model predictions). Instances
    with no preceding ``# year:`` directive are rejected unless
    ``require_year`` is false, in which case they get year 0.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return _parse_lines(data, valid_tags(entity_types), require_year)


def _parse_lines(data: str, tags: frozenset[str], require_year: bool) -> TemporalCorpus:
    partitions: dict[int, list[Instance]] = {}
    cur_tokens: list[str] = []
    cur_labels: list[str] = []
    cur_start = 0
    year: int | None = None
    next_id = 0

    def flush():
        nonlocal next_id, cur_tokens, cur_labels
        if not cur_tokens:
            return
        if year is None:
            if require_year:
                raise ParseError("instance has no year annotation", cur_start)
            inst_year = 0
        else:
            inst_year = year
        inst = Instance(next_id, tuple(cur_tokens), tuple(cur_labels), inst_year)
        partitions.setdefault(inst_year, []).append(inst)
        next_id += 1
        cur_tokens, cur_labels = [], []

    for lineno, line in enumerate(data.splitlines(), 1):
        if not line.strip():
            flush()
            continue
        m = _YEAR_DIRECTIVE_RE.match(line)
        if m:
            if cur_tokens:
                raise ParseError("year directive inside an instance", lineno)
            year = int(m.group(1))
            continue
        sep = "\t" if "\t" in line else " "
        parts = line.split(sep)
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ParseError(f"expected 'token{sep!r}tag', got {line!r}", lineno)
        token, tag = parts
        if tag not in tags:
            raise ParseError(f"unknown tag {tag!r}", lineno)
        if tag.startswith("I-"):
            prev = cur_labels[-1] if cur_labels else None
            if prev not in (f"B-{tag[2:]}", f"I-{tag[2:]}"):
                raise ParseError(f"{tag} does not continue a {tag[2:]} span", lineno)
        if not cur_tokens:
            cur_start = lineno
        cur_tokens.append(token)
        cur_labels.append(tag)
    flush()
    return TemporalCorpus(partitions)


def parse_conll_file(
    path: str | Path,
    entity_types: Sequence[str] = DEFAULT_ENTITY_TYPES,
    require_year: bool = True,
) -> TemporalCorpus:
    return parse_conll(Path(path).read_bytes(), entity_types, require_year)


def serialize_conll(corpus: TemporalCorpus) -> str:
    """Normal-form serialization: instances in id order, tab-separated
    token/tag lines, one ``# year:`` directive per year change, each
    instance followed by a blank line.

    ``parse_conll(serialize_conll(c))`` reproduces ``c`` exactly whenever
    ``c``'s ids are file-order ordinals (as produced by the parser and the
    generator).
    """
    lines: list[str] = []
    prev_year: int | None = None
    for inst in corpus.all_instances():
        if inst.year != prev_year:
            lines.append(f"# year: {inst.year}")
            prev_year = inst.year
        for token, label in zip(inst.raw_tokens, inst.labels):
            lines.append(f"{token}\t{label}")
        lines.append("")
    return "".join(line + "\n" for line in lines)


def write_conll(path: str | Path, corpus: TemporalCorpus) -> None:
    Path(path).write_bytes(serialize_conll(corpus).encode("utf-8"))


def serialize_instances(instances: Iterable[Instance]) -> str:
    """Serialize an arbitrary instance list (e.g. a selected batch)."""
    by_year: dict[int, list[Instance]] = {}
    renumbered = [
        Instance(i, inst.raw_tokens, inst.labels, inst.year)
        for i, inst in enumerate(instances)
    ]
    for inst in renumbered:
        by_year.setdefault(inst.year, []).append(inst)
    return serialize_conll(TemporalCorpus(by_year))


def split_eval(
    corpus: TemporalCorpus, eval_year: int, dev_fraction: float, seed: int
) -> tuple[list[Instance], list[Instance]]:
    """Seeded shuffle of the eval-year partition into (dev, test).

    The first ``floor(dev_fraction * n)`` shuffled instances become dev.
    """
    if eval_year not in corpus.partitions:
        raise ParseError(f"eval year {eval_year} not present in corpus")
    if not 0.0 < dev_fraction < 1.0:
        raise ValueError(f"dev_fraction must be in (0, 1), got {dev_fraction}")
    pool = sorted(corpus.partitions[eval_year], key=lambda inst: inst.id)
    rng = random.Random(seed)
    rng.shuffle(pool)
    n_dev = int(dev_fraction * len(pool))
    return pool[:n_dev], pool[n_dev:]


@dataclass
class DistributionTable:
    """Per-type span counts (entity level) and in-span token counts."""

    entity_counts: dict[str, int] = field(default_factory=dict)
    token_counts: dict[str, int] = field(default_factory=dict)

    @property
    def total_entities(self) -> int:
        return sum(self.entity_counts.values())

    @property
    def total_tokens(self) -> int:
        return sum(self.token_counts.values())

    def rows(self) -> list[tuple[str, int, int]]:
        """(type, entity-level, token-level) rows plus a Total row."""
        out = [(t, self.entity_counts[t], self.token_counts[t]) for t in sorted(self.entity_counts)]
        out.append(("Total", self.total_entities, self.total_tokens))
        return out


def entity_distribution(instances: Iterable[Instance]) -> DistributionTable:
    """Count entity spans and entity tokens per type over gold labels.

    Assumes valid BIO (guaranteed for parsed/generated corpora), so every
    span is announced by exactly one ``B-`` tag.
    """
    entity_counts: dict[str, int] = {}
    token_counts: dict[str, int] = {}
    for inst in instances:
        for label in inst.labels:
            if label == "O":
                continue
            etype = label[2:]
            token_counts[etype] = token_counts.get(etype, 0) + 1
            if label.startswith("B-"):
                entity_counts[etype] = entity_counts.get(etype, 0) + 1
    for etype in token_counts:
        entity_counts.setdefault(etype, 0)
    entity_counts = dict(sorted(entity_counts.items()))
    token_counts = dict(sorted(token_counts.items()))
    return DistributionTable(entity_counts, token_counts)
