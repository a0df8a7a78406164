"""Synthetic drifting-corpus generator.

Produces CoNLL-style NER corpora whose entity and topic vocabularies turn
over year by year: each year a seeded fraction of every surface-form pool
is replaced with freshly coined forms, and mention probability decays with
a form's age, so mentions are bursty (concentrated shortly after a form
emerges) the way real trends are. Recent years therefore share far more
of their *currently hot* vocabulary with the evaluation year than old
ones, which is the signal a recency-aware selection strategy can exploit.

Instances are tweet-like template fillings. Entity slots get BIO tags;
topic phrases, weekday/month words, @mentions, #hashtags, and URLs are
distractors labeled ``O``. Casing is noisy in both directions (entities
are sometimes lowercased, topics sometimes title-cased) and several
templates come in matched entity/topic pairs with identical context
tokens, so neither capitalization nor context alone decides entity-hood;
vocabulary knowledge matters.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from pathlib import Path

from .config import (
    ConfigError,
    load_kv_file,
    parse_float,
    parse_int,
    parse_year_range,
)
from .corpus import Instance, TemporalCorpus

TOPIC_KIND = "TOPIC"
ANY_ENTITY_KIND = "ENT"

_SLOT_RE = re.compile(r"^\{([A-Z]+)\}$")

_ONSETS = (
    "b br ch d dr f fl g gr h j k kr l m n p pr qu r s sh sk st t th tr v w y z".split()
)
_VOWELS = "a e i o u ai ea io ou".split()
_CODAS = ["", "l", "m", "n", "r", "s", "th", "x", "k", "nd", "rn", "st"]

_LOC_PREFIXES = "Port Lake Fort New East West North South Mount San".split()
_LOC_SUFFIXES = "valley bay heights park square".split()
_ORG_SUFFIXES = "Labs Group Corp Media Systems Studios League Network Works Union".split()
_TOPIC_NOUNS = (
    "festival teaser blackout protest merger scandal update finale outage "
    "challenge meltdown reveal tour patch remix sequel strike auction recall glitch"
).split()

_DAYS = "Monday Tuesday Wednesday Thursday Friday Saturday Sunday".split()
_MONTHS = (
    "January February March April May June July August September October November December"
).split()

# Most templates come in matched pairs with identical context tokens: the
# entity bank uses a type-anonymous {ENT} slot where the topic bank uses
# {TOPIC}, so in those contexts neither the surrounding words nor the
# casing (see the fill-time noise) reveal whether the fill is an entity.
# A minority of informative templates keeps typed context cues learnable.
ENTITY_TEMPLATES = [
    "cannot believe {ENT} is trending again",
    "so hyped for {ENT} tonight",
    "everyone is talking about {ENT} today",
    "my timeline is just {ENT} now",
    "still not over {ENT} honestly",
    "{ENT} is all over my feed",
    "live from {ENT} right now",
    "the {ENT} hype is real",
    "day three of {ENT} and counting",
    "{ENT} broke the internet this {DAY}",
    "just saw {ENT} mentioned everywhere",
    "why is {ENT} trending in {MONTH}",
    "my feed is split between {ENT} and {TOPIC} right now",
    "{ENT} or {TOPIC} pick one",
    "went from {TOPIC} posts straight to {ENT} posts",
    "{PER} just signed with {ORG} and fans are losing it",
    "{PER} spotted at {LOC} last night",
    "breaking : {ORG} is opening a new office in {LOC}",
    "petition to get {PER} back on {ORG}",
    "{PER} seen leaving {LOC} this {DAY}",
    "report : {ORG} in talks with {ORG}",
    "seeing {PER} and {PER} outside {LOC} again",
    "{ORG} versus {ORG} with {PER} caught in the middle",
    "{PER} teasing something with {ORG} at {LOC}",
]

TOPIC_TEMPLATES = [
    "cannot believe {TOPIC} is trending again",
    "so hyped for {TOPIC} tonight",
    "everyone is talking about {TOPIC} today",
    "my timeline is just {TOPIC} now",
    "still not over {TOPIC} honestly",
    "{TOPIC} is all over my feed",
    "live from {TOPIC} right now",
    "the {TOPIC} hype is real",
    "day three of {TOPIC} and counting",
    "{TOPIC} broke the internet this {DAY}",
    "just saw {TOPIC} mentioned everywhere",
    "why is {TOPIC} trending in {MONTH}",
    "my feed is split between {TOPIC} and {TOPIC} right now",
    "the {TOPIC} discourse is exhausting",
    "no spoilers but the {TOPIC} ending broke me",
]

# fill-time casing noise: lowercased entity mentions are common (tweet
# style), title-cased topics rarer but present, so neither casing nor
# context alone decides entity-hood
ENTITY_LOWERCASE_P = 0.45
TOPIC_TITLECASE_P = 0.15

# instance framing drawn from shared pools, labeled O; multiplies context
# diversity so a few hundred instances cannot saturate context learning
OPENERS = [
    "ok so", "not gonna lie", "honestly", "breaking :", "thread :", "psa :",
    "update :", "cant believe it but", "low key", "real talk", "no way",
    "just in :", "overheard today :", "so apparently", "friendly reminder :",
    "hear me out :", "unpopular opinion :", "wait what", "big if true :",
    "ok but", "seriously though", "heads up :", "spoiler :", "deep sigh",
]
TAILS = [
    "and i cannot cope", "this is too much", "im deceased", "cannot make this up",
    "what a time to be alive", "and thats on that", "no thoughts just vibes",
    "someone explain please", "crying real tears", "we are so back",
    "its giving chaos", "i need a minute", "this broke me", "screaming honestly",
    "and the crowd goes wild", "my jaw dropped", "not okay rn", "pure cinema",
    "take my money already", "i called it first", "cant even process this",
    "the bar was underground", "history in the making", "somebody check on me",
]

@dataclass(frozen=True)
class GeneratorConfig:
    years: tuple[int, ...]
    per_year: int = 400
    turnover: float = 0.5
    alignment: float = 0.9
    entity_share: float = 0.5
    entity_pool_size: int = 100
    topic_pool_size: int = 800
    pools_file: str | None = None
    templates_file: str | None = None
    entity_types: tuple[str, ...] = ("PER", "LOC", "ORG")

    def validate(self) -> None:
        if not self.years:
            raise ConfigError("years: need at least one year")
        if len(set(self.years)) != len(self.years):
            raise ConfigError("years: duplicate year")
        if self.per_year < 1:
            raise ConfigError(f"per_year must be >= 1, got {self.per_year}")
        if not 0.0 <= self.turnover <= 1.0:
            raise ConfigError(f"turnover must be in [0, 1], got {self.turnover}")
        if not 0.0 <= self.alignment <= 1.0:
            raise ConfigError(f"alignment must be in [0, 1], got {self.alignment}")
        if not 0.0 < self.entity_share < 1.0:
            raise ConfigError(f"entity_share must be in (0, 1), got {self.entity_share}")
        if self.entity_pool_size < 4 or self.topic_pool_size < 4:
            raise ConfigError("pool sizes must be >= 4")
        if not self.entity_types:
            raise ConfigError("entity_types must be nonempty")


_GEN_KEYS = {
    "years", "per_year", "turnover", "alignment", "entity_share", "pools_file",
    "templates_file", "entity_pool_size", "topic_pool_size",
}


def load_generator_config(path: str | Path) -> GeneratorConfig:
    """Build a :class:`GeneratorConfig` from a flat ``key = value`` file.

    Relative ``pools_file``/``templates_file`` paths resolve against the
    config file's directory.
    """
    path = Path(path)
    raw = load_kv_file(path)
    unknown = set(raw) - _GEN_KEYS
    if unknown:
        raise ConfigError(f"unknown generator config keys: {sorted(unknown)}")
    if "years" not in raw:
        raise ConfigError("generator config must set 'years'")

    def resolve(p: str) -> str:
        return str((path.parent / p) if not Path(p).is_absolute() else Path(p))

    kwargs: dict = {"years": parse_year_range(raw["years"], "years")}
    if "per_year" in raw:
        kwargs["per_year"] = parse_int(raw["per_year"], "per_year")
    if "turnover" in raw:
        kwargs["turnover"] = parse_float(raw["turnover"], "turnover")
    if "alignment" in raw:
        kwargs["alignment"] = parse_float(raw["alignment"], "alignment")
    if "entity_share" in raw:
        kwargs["entity_share"] = parse_float(raw["entity_share"], "entity_share")
    if "entity_pool_size" in raw:
        kwargs["entity_pool_size"] = parse_int(raw["entity_pool_size"], "entity_pool_size")
    if "topic_pool_size" in raw:
        kwargs["topic_pool_size"] = parse_int(raw["topic_pool_size"], "topic_pool_size")
    if raw.get("pools_file"):
        kwargs["pools_file"] = resolve(raw["pools_file"])
    if raw.get("templates_file"):
        kwargs["templates_file"] = resolve(raw["templates_file"])
    cfg = GeneratorConfig(**kwargs)
    cfg.validate()
    return cfg


# -- surface-form synthesis -------------------------------------------------


def _coin(rng: random.Random, syllables: int) -> str:
    parts = [rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(syllables)]
    return "".join(parts) + rng.choice(_CODAS)


class _Coiner:
    """Seeded factory for globally unique surface forms per slot kind."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.seen: set[str] = set()

    def fresh(self, kind: str) -> str:
        for _ in range(1000):
            form = self._propose(kind)
            if form not in self.seen:
                self.seen.add(form)
                return form
        raise RuntimeError("surface-form space exhausted")

    def _propose(self, kind: str) -> str:
        # every form is exactly two tokens so each mention carries an
        # internal bigram that frequency counting can see
        rng = self.rng
        if kind == "PER":
            return f"{_coin(rng, 2).capitalize()} {_coin(rng, 2).capitalize()}"
        if kind == "LOC":
            if rng.random() < 0.5:
                return f"{rng.choice(_LOC_PREFIXES)} {_coin(rng, 2).capitalize()}"
            return f"{_coin(rng, 2).capitalize()} {rng.choice(_LOC_SUFFIXES).capitalize()}"
        if kind == "ORG":
            if rng.random() < 0.7:
                return f"{_coin(rng, 2).capitalize()} {rng.choice(_ORG_SUFFIXES)}"
            return f"{_coin(rng, 2).capitalize()} {_coin(rng, 1).capitalize()}"
        if kind == TOPIC_KIND:
            return f"{_coin(rng, 2)} {rng.choice(_TOPIC_NOUNS)}"
        return f"{_coin(rng, 2).capitalize()} {_coin(rng, 1).capitalize()}"


def _load_pools_file(path: str, kinds: list[str]) -> dict[str, list[str]]:
    pools: dict[str, list[str]] = {k: [] for k in kinds}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ConfigError(f"{path}: line {lineno}: expected 'KIND surface form'")
        kind, form = parts
        if kind not in pools:
            raise ConfigError(f"{path}: line {lineno}: unknown kind {kind!r}")
        pools[kind].append(form)
    for kind, forms in pools.items():
        if len(forms) < 4:
            raise ConfigError(f"{path}: pool for {kind} needs at least 4 forms")
    return pools


# Rich-get-richer popularity: a form's mention weight grows for every year
# it survives, so long-lived survivors dominate both recent n-gram counts
# and the evaluation year's mentions. Which members churn each year stays
# uniform, so pool-level novelty still follows (1 - turnover)**age. The
# alignment knob splits the growth between entity and topic forms: at 1.0
# only entities trend, at 0.0 only topics do, in between both (so trend
# scores are never trivially equal to entity presence).
_POPULARITY_GROWTH = 2.0
_WEIGHT_SIGMA = 0.4

PoolRecord = tuple[str, int, float]  # (surface form, birth year index, base weight)


def _growth_rate(kind: str, alignment: float) -> float:
    share = alignment if kind != TOPIC_KIND else 1.0 - alignment
    return 1.0 + share * (_POPULARITY_GROWTH - 1.0)


def _mention_weight(record: PoolRecord, year_index: int, growth: float) -> float:
    _, birth, base = record
    return base * growth ** (year_index - birth)


def _pool_records(cfg: GeneratorConfig, seed: int) -> dict[str, list[list[PoolRecord]]]:
    cfg.validate()
    rng = random.Random(f"trendgen:{seed}:pools")
    coiner = _Coiner(rng)
    kinds = list(cfg.entity_types) + [TOPIC_KIND]

    def record(kind: str, birth: int) -> PoolRecord:
        return coiner.fresh(kind), birth, rng.lognormvariate(0.0, _WEIGHT_SIGMA)

    if cfg.pools_file:
        named = _load_pools_file(cfg.pools_file, kinds)
        coiner.seen.update(form for forms in named.values() for form in forms)
        initial = {
            kind: [(form, 0, rng.lognormvariate(0.0, _WEIGHT_SIGMA)) for form in named[kind]]
            for kind in kinds
        }
    else:
        initial = {}
        for kind in kinds:
            size = cfg.topic_pool_size if kind == TOPIC_KIND else cfg.entity_pool_size
            initial[kind] = [record(kind, 0) for _ in range(size)]

    history: dict[str, list[list[PoolRecord]]] = {k: [initial[k]] for k in kinds}
    for year_index in range(1, len(cfg.years)):
        for kind in kinds:
            prev = history[kind][-1]
            size = len(prev)
            n_replace = round(cfg.turnover * size)
            keep_idx = sorted(rng.sample(range(size), size - n_replace))
            pool = [prev[i] for i in keep_idx]
            pool += [record(kind, year_index) for _ in range(n_replace)]
            history[kind].append(pool)
    return history


def pool_history(cfg: GeneratorConfig, seed: int) -> dict[str, list[list[str]]]:
    """Per-kind, per-year surface-form pools, exactly as generation uses.

    Each year, ``round(turnover * size)`` uniformly chosen members are
    replaced with fresh forms never seen before, so the expected fraction
    of year-Y forms already present in year 1 is ``(1 - turnover)**(Y-1)``.
    """
    records = _pool_records(cfg, seed)
    return {
        kind: [[form for form, _, _ in pool] for pool in pools]
        for kind, pools in records.items()
    }


# -- templates and instance assembly -----------------------------------------


def _load_templates(cfg: GeneratorConfig) -> tuple[list[list[str]], list[list[str]]]:
    if cfg.templates_file:
        lines = [
            ln.strip()
            for ln in Path(cfg.templates_file).read_text(encoding="utf-8").splitlines()
            if ln.strip() and not ln.strip().startswith("#")
        ]
        if not lines:
            raise ConfigError(f"{cfg.templates_file}: no templates")
    else:
        lines = ENTITY_TEMPLATES + TOPIC_TEMPLATES

    known = set(cfg.entity_types) | {TOPIC_KIND, ANY_ENTITY_KIND, "DAY", "MONTH"}
    entity_templates: list[list[str]] = []
    topic_templates: list[list[str]] = []
    for line in lines:
        tokens = line.split()
        slots = [m.group(1) for tok in tokens if (m := _SLOT_RE.match(tok))]
        for slot in slots:
            if slot not in known:
                raise ConfigError(f"template {line!r}: unknown slot {{{slot}}}")
        if any(s in cfg.entity_types or s == ANY_ENTITY_KIND for s in slots):
            entity_templates.append(tokens)
        else:
            topic_templates.append(tokens)
    if not entity_templates or not topic_templates:
        raise ConfigError("need at least one entity template and one topic template")
    return entity_templates, topic_templates


def _pick_popular(
    rng: random.Random, records: list[PoolRecord], count: int, year_index: int, growth: float
) -> list[str]:
    """Distinct popularity-weighted picks from one year's pool."""
    weights = [_mention_weight(r, year_index, growth) for r in records]
    chosen: list[str] = []
    taken: set[int] = set()
    attempts = 0
    while len(chosen) < count:
        i = rng.choices(range(len(records)), weights=weights, k=1)[0]
        attempts += 1
        if i not in taken:
            taken.add(i)
            chosen.append(records[i][0])
        elif attempts > 50 * count:
            remaining = [r for j, r in enumerate(records) if j not in taken]
            chosen.extend(form for form, _, _ in rng.sample(remaining, count - len(chosen)))
            break
    return chosen


def _fill_template(
    rng: random.Random,
    template: list[str],
    pools: dict[str, list[PoolRecord]],
    year_index: int,
    cfg: GeneratorConfig,
) -> tuple[list[str], list[str]]:
    # resolve type-anonymous entity slots first, then sample distinct
    # fills per kind within the instance
    kinds: list[str] = []
    for tok in template:
        m = _SLOT_RE.match(tok)
        if not m:
            continue
        kind = m.group(1)
        if kind == ANY_ENTITY_KIND:
            kind = rng.choice(cfg.entity_types)
        kinds.append(kind)
    slot_counts: dict[str, int] = {}
    for kind in kinds:
        slot_counts[kind] = slot_counts.get(kind, 0) + 1
    picks: dict[str, list[str]] = {}
    for kind in sorted(slot_counts):
        if kind in pools:
            growth = _growth_rate(kind, cfg.alignment)
            picks[kind] = _pick_popular(rng, pools[kind], slot_counts[kind], year_index, growth)
        else:
            source = _DAYS if kind == "DAY" else _MONTHS
            picks[kind] = rng.sample(source, slot_counts[kind])

    tokens: list[str] = []
    labels: list[str] = []
    slot_index = 0
    for tok in template:
        m = _SLOT_RE.match(tok)
        if not m:
            tokens.append(tok)
            labels.append("O")
            continue
        kind = kinds[slot_index]
        slot_index += 1
        form = picks[kind].pop(0)
        if kind == TOPIC_KIND and rng.random() < TOPIC_TITLECASE_P:
            form = form.title()
        elif kind in cfg.entity_types and rng.random() < ENTITY_LOWERCASE_P:
            form = form.lower()
        parts = form.split()
        tokens.extend(parts)
        if kind in cfg.entity_types:
            labels.extend([f"B-{kind}"] + [f"I-{kind}"] * (len(parts) - 1))
        else:
            labels.extend(["O"] * len(parts))
    return tokens, labels


def _add_noise(rng: random.Random, tokens: list[str], labels: list[str]) -> None:
    if rng.random() < 0.15:
        tokens.insert(0, "@" + _coin(rng, 2))
        labels.insert(0, "O")
    if rng.random() < 0.20:
        tokens.append("#" + _coin(rng, 2))
        labels.append("O")
    if rng.random() < 0.15:
        suffix = "".join(rng.choice("abcdefghij0123456789") for _ in range(5))
        tokens.append(f"http://t.co/{suffix}")
        labels.append("O")


def generate_drift_corpus(cfg: GeneratorConfig, seed: int) -> TemporalCorpus:
    """Fully deterministic per (config, seed); see module docstring."""
    cfg.validate()
    history = _pool_records(cfg, seed)
    entity_templates, topic_templates = _load_templates(cfg)

    partitions: dict[int, list[Instance]] = {}
    next_id = 0
    for year_index, year in enumerate(cfg.years):
        rng = random.Random(f"trendgen:{seed}:year:{year}")
        pools = {kind: history[kind][year_index] for kind in history}
        insts: list[Instance] = []
        for _ in range(cfg.per_year):
            bank = entity_templates if rng.random() < cfg.entity_share else topic_templates
            template = rng.choice(bank)
            tokens, labels = _fill_template(rng, template, pools, year_index, cfg)
            if rng.random() < 0.8:
                opener = rng.choice(OPENERS).split()
                tokens[:0] = opener
                labels[:0] = ["O"] * len(opener)
            if rng.random() < 0.6:
                tail = rng.choice(TAILS).split()
                tokens.extend(tail)
                labels.extend(["O"] * len(tail))
            _add_noise(rng, tokens, labels)
            insts.append(Instance(next_id, tuple(tokens), tuple(labels), year))
            next_id += 1
        partitions[year] = insts
    return TemporalCorpus(partitions)


# The bundled benchmark corpus: five training years plus an evaluation
# year, 400 instances each, 50% yearly vocabulary turnover. Regenerate it
# any time with `trendner gen` (generation is deterministic) or via
# :func:`benchmark_corpus`.
BENCHMARK_SEED = 11


def benchmark_generator_config() -> GeneratorConfig:
    return GeneratorConfig(years=tuple(range(2014, 2020)), per_year=400, turnover=0.5)


def benchmark_corpus() -> TemporalCorpus:
    return generate_drift_corpus(benchmark_generator_config(), BENCHMARK_SEED)
