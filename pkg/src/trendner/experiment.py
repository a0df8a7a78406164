"""Incremental-retraining experiment protocols and their configuration.

Scenario 1: candidate data arrives chronologically; each step's pool is one
training year. Scenario 2: all training years form a single merged pool and
each step takes the next batch from it. Both compare a trend-score-ranked
selection strategy against seeded random selection under an equal
per-step budget, retraining a warm-started CRF after every step and
evaluating on a fixed held-out split of the evaluation year.

Selection never looks at the model, so batch plans are computed up front;
runs whose batch plans coincide (trend selection is seed-free) share one
deterministic training pass.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Container, Sequence

from .config import (
    ConfigError,
    load_kv_file,
    parse_float,
    parse_int,
    parse_int_list,
)
from .corpus import (
    DistributionTable,
    Instance,
    TemporalCorpus,
    entity_distribution,
    split_eval,
)
from .evalmetrics import PRF, EvalResult, entity_f1
from .tagger import CrfModel, TaggerConfig, bio_labels
from .textproc import StopwordSet
from .trend import TrendScorer, build_table, rank_and_select

logger = logging.getLogger(__name__)

STRATEGIES = ("trend", "random")
RETRAIN_MODES = ("cumulative", "sequential")
SCENARIO1_PAST_MODES = ("selected", "years")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: int = 2
    strategy: str = "trend"
    step_size: int = 100
    ngram_order: int = 2
    k: float = 0.1
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    retrain_mode: str = "cumulative"
    frequency_mode: str = "raw"
    eval_year: int | None = None
    dev_fraction: float = 0.25
    split_seed: int = 0
    scenario1_past: str = "selected"
    scenario2_past_years: tuple[int, ...] | None = None
    scenario2_recent_years: tuple[int, ...] | None = None
    stopwords_path: str | None = None
    tagger: TaggerConfig = TaggerConfig()

    def validate(self) -> None:
        if self.scenario not in (1, 2):
            raise ConfigError(f"scenario must be 1 or 2, got {self.scenario}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.step_size < 1:
            raise ConfigError(f"step_size must be >= 1, got {self.step_size}")
        if self.ngram_order < 1:
            raise ConfigError(f"ngram_order must be >= 1, got {self.ngram_order}")
        if not self.k > 0:
            raise ConfigError(f"k must be positive, got {self.k}")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("duplicate seeds")
        if self.retrain_mode not in RETRAIN_MODES:
            raise ConfigError(f"retrain_mode must be one of {RETRAIN_MODES}")
        if self.frequency_mode not in ("raw", "relative"):
            raise ConfigError("frequency_mode must be 'raw' or 'relative'")
        if not 0.0 < self.dev_fraction < 1.0:
            raise ConfigError(f"dev_fraction must be in (0, 1), got {self.dev_fraction}")
        if self.scenario1_past not in SCENARIO1_PAST_MODES:
            raise ConfigError(f"scenario1_past must be one of {SCENARIO1_PAST_MODES}")


@dataclass(frozen=True)
class RunSpec:
    """A ``run`` invocation: corpus, strategies to compare, shared config."""

    corpus_path: str
    strategies: tuple[str, ...]
    config: ExperimentConfig


_RUN_KEYS = {
    "corpus", "scenario", "strategies", "step_size", "ngram_order", "k", "seeds",
    "retrain_mode", "frequency_mode", "eval_year", "dev_fraction", "split_seed",
    "scenario1_past", "scenario2_past_years", "scenario2_recent_years", "stopwords",
    "l2", "max_epochs", "patience", "learning_rate",
}


def load_run_spec(path: str | Path) -> RunSpec:
    """Read a flat ``key = value`` experiment config file.

    Relative paths (corpus, stopwords) resolve against the config file's
    directory. Unknown keys are rejected.
    """
    path = Path(path)
    raw = load_kv_file(path)
    unknown = set(raw) - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown experiment config keys: {sorted(unknown)}")
    if "corpus" not in raw:
        raise ConfigError("experiment config must set 'corpus'")

    def resolve(p: str) -> str:
        return str((path.parent / p) if not Path(p).is_absolute() else Path(p))

    strategies = tuple(
        s.strip() for s in raw.get("strategies", "trend,random").split(",") if s.strip()
    )
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"strategies: unknown strategy {s!r}")
    if not strategies:
        raise ConfigError("strategies: need at least one")

    kwargs: dict = {}
    if "scenario" in raw:
        kwargs["scenario"] = parse_int(raw["scenario"], "scenario")
    if "step_size" in raw:
        kwargs["step_size"] = parse_int(raw["step_size"], "step_size")
    if "ngram_order" in raw:
        kwargs["ngram_order"] = parse_int(raw["ngram_order"], "ngram_order")
    if "k" in raw:
        kwargs["k"] = parse_float(raw["k"], "k")
    if "seeds" in raw:
        kwargs["seeds"] = parse_int_list(raw["seeds"], "seeds")
    if "retrain_mode" in raw:
        kwargs["retrain_mode"] = raw["retrain_mode"]
    if "frequency_mode" in raw:
        kwargs["frequency_mode"] = raw["frequency_mode"]
    if "eval_year" in raw:
        kwargs["eval_year"] = parse_int(raw["eval_year"], "eval_year")
    if "dev_fraction" in raw:
        kwargs["dev_fraction"] = parse_float(raw["dev_fraction"], "dev_fraction")
    if "split_seed" in raw:
        kwargs["split_seed"] = parse_int(raw["split_seed"], "split_seed")
    if "scenario1_past" in raw:
        kwargs["scenario1_past"] = raw["scenario1_past"]
    if "scenario2_past_years" in raw:
        kwargs["scenario2_past_years"] = parse_int_list(
            raw["scenario2_past_years"], "scenario2_past_years"
        )
    if "scenario2_recent_years" in raw:
        kwargs["scenario2_recent_years"] = parse_int_list(
            raw["scenario2_recent_years"], "scenario2_recent_years"
        )
    if raw.get("stopwords"):
        kwargs["stopwords_path"] = resolve(raw["stopwords"])

    tagger_kwargs: dict = {}
    if "l2" in raw:
        tagger_kwargs["l2"] = parse_float(raw["l2"], "l2")
    if "max_epochs" in raw:
        tagger_kwargs["max_epochs"] = parse_int(raw["max_epochs"], "max_epochs")
    if "patience" in raw:
        tagger_kwargs["patience"] = parse_int(raw["patience"], "patience")
    if "learning_rate" in raw:
        tagger_kwargs["learning_rate"] = parse_float(raw["learning_rate"], "learning_rate")
    if tagger_kwargs:
        kwargs["tagger"] = replace(TaggerConfig(), **tagger_kwargs)

    cfg = ExperimentConfig(strategy=strategies[0], **kwargs)
    cfg.validate()
    return RunSpec(resolve(raw["corpus"]), strategies, cfg)


# -- learning curves ----------------------------------------------------------


@dataclass
class StepResult:
    step: int  # 1-based
    year: int | None  # scenario 1 only
    per_seed: dict[int, PRF]
    selected: dict[int, tuple[int, ...]]

    @property
    def mean_f1(self) -> float:
        values = [prf.f1 for prf in self.per_seed.values()]
        return sum(values) / len(values)

    @property
    def mean_precision(self) -> float:
        values = [prf.precision for prf in self.per_seed.values()]
        return sum(values) / len(values)

    @property
    def mean_recall(self) -> float:
        values = [prf.recall for prf in self.per_seed.values()]
        return sum(values) / len(values)


@dataclass
class LearningCurve:
    scenario: int
    strategy: str
    seeds: tuple[int, ...]
    steps: list[StepResult]
    weight_digests: dict[int, str]  # seed -> sha256 of final trained weights

    def mean_f1_per_step(self) -> list[float]:
        return [s.mean_f1 for s in self.steps]


# -- shared plumbing ----------------------------------------------------------


def load_stopwords(cfg: ExperimentConfig) -> StopwordSet:
    if cfg.stopwords_path:
        return StopwordSet.from_file(cfg.stopwords_path)
    return StopwordSet.default()


def resolve_eval_year(corpus: TemporalCorpus, cfg: ExperimentConfig) -> int:
    year = cfg.eval_year if cfg.eval_year is not None else max(corpus.years())
    if year not in corpus.partitions:
        raise ConfigError(f"eval year {year} not present in corpus")
    return year


def training_years(corpus: TemporalCorpus, eval_year: int) -> list[int]:
    years = [y for y in corpus.years() if y < eval_year]
    if len(years) < 2:
        raise ConfigError(
            f"need at least 2 training years before eval year {eval_year}, got {years}"
        )
    return years


def corpus_label_set(corpus: TemporalCorpus) -> tuple[str, ...]:
    types = sorted({lab[2:] for inst in corpus.all_instances() for lab in inst.labels if lab != "O"})
    return bio_labels(types)


def _sorted_pool(instances: Sequence[Instance]) -> list[Instance]:
    return sorted(instances, key=lambda inst: inst.id)


def _take_random(
    rng: random.Random, pool: Sequence[Instance], n: int, excluded: set[int]
) -> list[Instance]:
    candidates = [inst for inst in pool if inst.id not in excluded]
    return rng.sample(candidates, min(n, len(candidates)))


BatchPlan = list[tuple[int | None, list[Instance]]]  # one (year, batch) per step


def scenario1_batches(
    corpus: TemporalCorpus,
    cfg: ExperimentConfig,
    seed: int,
    stopwords: Container[str],
    years: Sequence[int],
) -> BatchPlan:
    """Per-year batches: pool is that year's partition; the trend scorer
    contrasts it against everything selected so far (or against prior
    years' full partitions with ``scenario1_past = years``). The first
    step's past table is empty, so every pool n-gram scores f_recent / k."""
    plan: BatchPlan = []
    selected: list[Instance] = []
    selected_ids: set[int] = set()
    for year in years:
        pool = _sorted_pool(corpus.partitions[year])
        if cfg.strategy == "trend":
            if cfg.scenario1_past == "selected":
                past = list(selected)
            else:
                past = [
                    inst for y in years if y < year for inst in corpus.partitions[y]
                ]
            scorer = TrendScorer(
                build_table(past, cfg.ngram_order, stopwords, cfg.frequency_mode),
                build_table(pool, cfg.ngram_order, stopwords, cfg.frequency_mode),
                cfg.k,
            )
            batch = rank_and_select(pool, scorer, cfg.step_size, stopwords, selected_ids)
        else:
            rng = random.Random(f"trendner:s1:{seed}:{year}")
            batch = _take_random(rng, pool, cfg.step_size, selected_ids)
        if len(batch) < cfg.step_size:
            logger.warning(
                "year %d: pool exhausted, selected %d of %d", year, len(batch), cfg.step_size
            )
        selected.extend(batch)
        selected_ids.update(inst.id for inst in batch)
        plan.append((year, batch))
    return plan


def scenario2_batches(
    corpus: TemporalCorpus,
    cfg: ExperimentConfig,
    seed: int,
    stopwords: Container[str],
    years: Sequence[int],
) -> BatchPlan:
    """Merged-pool batches: the trend strategy ranks the whole pool once
    (past = earliest training year unless overridden, recent = full pool)
    and takes successive disjoint top-N slices; the random strategy slices
    a seeded shuffle."""
    pool = _sorted_pool([inst for y in years for inst in corpus.partitions[y]])
    steps = len(years)
    plan: BatchPlan = []
    if cfg.strategy == "trend":
        scorer = _scenario2_scorer(corpus, cfg, stopwords, years)
        excluded: set[int] = set()
        for _ in range(steps):
            batch = rank_and_select(pool, scorer, cfg.step_size, stopwords, excluded)
            excluded.update(inst.id for inst in batch)
            plan.append((None, batch))
    else:
        rng = random.Random(f"trendner:s2:{seed}")
        order = rng.sample(pool, len(pool))
        for step in range(steps):
            plan.append((None, order[step * cfg.step_size : (step + 1) * cfg.step_size]))
    for step, (_, batch) in enumerate(plan, 1):
        if len(batch) < cfg.step_size:
            logger.warning(
                "step %d: pool exhausted, selected %d of %d", step, len(batch), cfg.step_size
            )
    return plan


def _scenario2_scorer(
    corpus: TemporalCorpus,
    cfg: ExperimentConfig,
    stopwords: Container[str],
    years: Sequence[int],
) -> TrendScorer:
    past_years = cfg.scenario2_past_years or (years[0],)
    recent_years = cfg.scenario2_recent_years or tuple(years)
    for y in tuple(past_years) + tuple(recent_years):
        if y not in corpus.partitions:
            raise ConfigError(f"scenario 2 past/recent year {y} not present in corpus")
    past = [inst for y in past_years for inst in corpus.partitions[y]]
    recent = [inst for y in recent_years for inst in corpus.partitions[y]]
    return TrendScorer(
        build_table(past, cfg.ngram_order, stopwords, cfg.frequency_mode),
        build_table(recent, cfg.ngram_order, stopwords, cfg.frequency_mode),
        cfg.k,
    )


def _weights_digest(model: CrfModel) -> str:
    return hashlib.sha256(model.weights.tobytes()).hexdigest()


def _run_curve(
    cfg: ExperimentConfig,
    labels: Sequence[str],
    plans: dict[int, BatchPlan],
    dev: list[Instance],
    test: list[Instance],
) -> LearningCurve:
    """Train/evaluate every seed's batch plan; identical plans (trend
    selection is seed-free) share one training pass."""
    memo: dict[tuple, tuple[list[PRF], str]] = {}
    per_seed_prfs: dict[int, list[PRF]] = {}
    digests: dict[int, str] = {}
    for seed in cfg.seeds:
        plan = plans[seed]
        key = tuple(tuple(inst.id for inst in batch) for _, batch in plan)
        if key not in memo:
            model = CrfModel(labels, cfg.tagger)
            selected: list[Instance] = []
            prfs: list[PRF] = []
            for _, batch in plan:
                selected.extend(batch)
                train_data = selected if cfg.retrain_mode == "cumulative" else list(batch)
                model.fit(train_data, dev)
                prfs.append(entity_f1(test, model.decode(test)).overall)
            memo[key] = (prfs, _weights_digest(model))
        per_seed_prfs[seed], digests[seed] = memo[key]

    sample_plan = plans[cfg.seeds[0]]
    steps = [
        StepResult(
            step=i + 1,
            year=sample_plan[i][0],
            per_seed={seed: per_seed_prfs[seed][i] for seed in cfg.seeds},
            selected={
                seed: tuple(inst.id for inst in plans[seed][i][1]) for seed in cfg.seeds
            },
        )
        for i in range(len(sample_plan))
    ]
    return LearningCurve(cfg.scenario, cfg.strategy, cfg.seeds, steps, digests)


def run_scenario1(corpus: TemporalCorpus, cfg: ExperimentConfig) -> LearningCurve:
    """Chronological protocol: one step per training year, ascending."""
    cfg.validate()
    if cfg.scenario != 1:
        raise ConfigError(f"run_scenario1 called with scenario {cfg.scenario}")
    return _run_incremental(corpus, cfg, scenario1_batches)


def run_scenario2(corpus: TemporalCorpus, cfg: ExperimentConfig) -> LearningCurve:
    """Merged-pool protocol: successive disjoint batches from one pool."""
    cfg.validate()
    if cfg.scenario != 2:
        raise ConfigError(f"run_scenario2 called with scenario {cfg.scenario}")
    return _run_incremental(corpus, cfg, scenario2_batches)


def run_experiment(corpus: TemporalCorpus, cfg: ExperimentConfig) -> LearningCurve:
    return run_scenario1(corpus, cfg) if cfg.scenario == 1 else run_scenario2(corpus, cfg)


def _run_incremental(corpus, cfg, batch_fn) -> LearningCurve:
    eval_year = resolve_eval_year(corpus, cfg)
    years = training_years(corpus, eval_year)
    stopwords = load_stopwords(cfg)
    dev, test = split_eval(corpus, eval_year, cfg.dev_fraction, cfg.split_seed)
    labels = corpus_label_set(corpus)
    plans = {
        seed: batch_fn(corpus, cfg, seed, stopwords, years) for seed in cfg.seeds
    }
    return _run_curve(cfg, labels, plans, dev, test)


# -- side-by-side comparison on one selection ---------------------------------


@dataclass
class ComparisonReport:
    sample_size: int
    results: dict[str, EvalResult]  # strategy -> test scores
    trend_ids: tuple[int, ...]
    random_ids: dict[int, tuple[int, ...]]  # seed -> selected ids
    trend_distribution: DistributionTable
    random_distributions: dict[int, DistributionTable]


def comparison_selections(
    corpus: TemporalCorpus, cfg: ExperimentConfig, sample_size: int
) -> tuple[list[Instance], dict[int, list[Instance]]]:
    """One trend-ranked and per-seed random selections of equal size from
    the merged training pool."""
    eval_year = resolve_eval_year(corpus, cfg)
    years = training_years(corpus, eval_year)
    stopwords = load_stopwords(cfg)
    pool = _sorted_pool([inst for y in years for inst in corpus.partitions[y]])
    if sample_size > len(pool):
        raise ConfigError(f"sample size {sample_size} exceeds pool size {len(pool)}")
    scorer = _scenario2_scorer(corpus, cfg, stopwords, years)
    trend_sel = rank_and_select(pool, scorer, sample_size, stopwords)
    random_sel = {
        seed: random.Random(f"trendner:compare:{seed}").sample(pool, sample_size)
        for seed in cfg.seeds
    }
    return trend_sel, random_sel


def compare_on_selection(
    corpus: TemporalCorpus, cfg: ExperimentConfig, sample_size: int
) -> ComparisonReport:
    """Train a fresh tagger on one trend-selected and one random-selected
    training set of the same size and report test scores side by side,
    plus the entity distribution of each selection."""
    cfg.validate()
    trend_sel, random_sel = comparison_selections(corpus, cfg, sample_size)
    eval_year = resolve_eval_year(corpus, cfg)
    dev, test = split_eval(corpus, eval_year, cfg.dev_fraction, cfg.split_seed)
    labels = corpus_label_set(corpus)

    results: dict[str, EvalResult] = {}
    first_random = random_sel[cfg.seeds[0]]
    for strategy, sel in (("random", first_random), ("trend", trend_sel)):
        model = CrfModel(labels, cfg.tagger)
        model.fit(sel, dev)
        results[strategy] = entity_f1(test, model.decode(test))

    return ComparisonReport(
        sample_size=sample_size,
        results=results,
        trend_ids=tuple(inst.id for inst in trend_sel),
        random_ids={s: tuple(inst.id for inst in sel) for s, sel in random_sel.items()},
        trend_distribution=entity_distribution(trend_sel),
        random_distributions={s: entity_distribution(sel) for s, sel in random_sel.items()},
    )
