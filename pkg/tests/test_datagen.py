import statistics

import pytest

from trendner.config import ConfigError
from trendner.corpus import parse_conll, serialize_conll
from trendner.datagen import (
    GeneratorConfig,
    generate_drift_corpus,
    load_generator_config,
    pool_history,
)

SMALL = GeneratorConfig(
    years=(2014, 2015, 2016, 2017),
    per_year=30,
    turnover=0.5,
    entity_pool_size=16,
    topic_pool_size=24,
)


class TestDeterminism:
    def test_same_seed_is_byte_identical(self):
        a = serialize_conll(generate_drift_corpus(SMALL, 9))
        b = serialize_conll(generate_drift_corpus(SMALL, 9))
        assert a == b

    def test_different_seeds_differ(self):
        a = serialize_conll(generate_drift_corpus(SMALL, 9))
        b = serialize_conll(generate_drift_corpus(SMALL, 10))
        assert a != b


class TestGeneratedCorpus:
    def test_shape_and_validity(self):
        corpus = generate_drift_corpus(SMALL, 9)
        assert corpus.years() == [2014, 2015, 2016, 2017]
        for year in corpus.years():
            assert len(corpus.partitions[year]) == 30
        # serialize -> parse revalidates tokens, tags, and BIO structure
        assert parse_conll(serialize_conll(corpus)) == corpus

    def test_contains_entities_and_distractors(self):
        corpus = generate_drift_corpus(SMALL, 9)
        labels = [lab for inst in corpus.all_instances() for lab in inst.labels]
        assert any(lab.startswith("B-") for lab in labels)
        tokens = [t for inst in corpus.all_instances() for t in inst.raw_tokens]
        assert any(t.startswith("#") for t in tokens)
        assert any(t.startswith("@") for t in tokens)
        assert any(t.startswith("http://") for t in tokens)


class TestPoolHistory:
    def test_zero_turnover_keeps_pools_identical(self):
        cfg = GeneratorConfig(
            years=(2014, 2015, 2016),
            per_year=10,
            turnover=0.0,
            entity_pool_size=8,
            topic_pool_size=8,
        )
        history = pool_history(cfg, 4)
        for pools in history.values():
            assert pools[0] == pools[1] == pools[2]

    def test_year5_novelty_exceeds_forty_percent(self):
        cfg = GeneratorConfig(years=(2014, 2015, 2016, 2017, 2018), per_year=400, turnover=0.5)
        history = pool_history(cfg, 9)
        for etype in ("PER", "LOC", "ORG"):
            first = set(history[etype][0])
            last = set(history[etype][4])
            novelty = 1 - len(first & last) / len(last)
            assert novelty >= 0.40

    def test_novelty_matches_expectation_within_three_sigma(self):
        cfg = GeneratorConfig(
            years=(2014, 2015, 2016, 2017, 2018),
            per_year=10,
            turnover=0.4,
            entity_pool_size=60,
            topic_pool_size=60,
        )
        expected = 1 - (1 - cfg.turnover) ** 4
        samples = []
        for seed in range(12):
            history = pool_history(cfg, seed)
            first, last = set(history["PER"][0]), set(history["PER"][4])
            samples.append(1 - len(first & last) / len(last))
        mean = statistics.fmean(samples)
        stderr = statistics.stdev(samples) / len(samples) ** 0.5
        assert abs(mean - expected) <= 3 * max(stderr, 0.01)

    def test_pool_sizes_are_stable_across_years(self):
        history = pool_history(SMALL, 9)
        assert all(len(pool) == 16 for pool in history["PER"])
        assert all(len(pool) == 24 for pool in history["TOPIC"])


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"years": ()},
            {"years": (2014, 2014)},
            {"per_year": 0},
            {"turnover": -0.1},
            {"turnover": 1.5},
            {"alignment": 2.0},
            {"entity_share": 0.0},
            {"entity_pool_size": 2},
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        base = {"years": (2014, 2015)}
        base.update(kwargs)
        with pytest.raises(ConfigError):
            GeneratorConfig(**base).validate()


class TestConfigFile:
    def test_full_config_file(self, tmp_path):
        path = tmp_path / "gen.cfg"
        path.write_text(
            "# demo generator config\n"
            "years = 2014-2016\n"
            "per_year = 25\n"
            "turnover = 0.4\n"
            "alignment = 0.8\n"
            "entity_pool_size = 12\n"
            "topic_pool_size = 18\n",
            encoding="utf-8",
        )
        cfg = load_generator_config(path)
        assert cfg.years == (2014, 2015, 2016)
        assert cfg.per_year == 25
        assert cfg.turnover == 0.4
        assert cfg.alignment == 0.8

    def test_comma_separated_years(self, tmp_path):
        path = tmp_path / "gen.cfg"
        path.write_text("years = 2014, 2016, 2018\n", encoding="utf-8")
        assert load_generator_config(path).years == (2014, 2016, 2018)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "gen.cfg"
        path.write_text("years = 2014-2016\nbogus = 1\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_generator_config(path)

    def test_missing_years_rejected(self, tmp_path):
        path = tmp_path / "gen.cfg"
        path.write_text("per_year = 10\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_generator_config(path)

    def test_pools_and_templates_files(self, tmp_path):
        pools = tmp_path / "pools.txt"
        lines = ["# pools"]
        for kind in ("PER", "LOC", "ORG", "TOPIC"):
            for i in range(6):
                lines.append(f"{kind}\t{kind.lower()}ex{i} form{i}")
        pools.write_text("\n".join(lines) + "\n", encoding="utf-8")
        templates = tmp_path / "templates.txt"
        templates.write_text(
            "so much {TOPIC} today\n{PER} visits {LOC} with {ORG}\n", encoding="utf-8"
        )
        cfg_file = tmp_path / "gen.cfg"
        cfg_file.write_text(
            "years = 2014-2016\nper_year = 12\npools_file = pools.txt\n"
            "templates_file = templates.txt\n",
            encoding="utf-8",
        )
        cfg = load_generator_config(cfg_file)
        corpus = generate_drift_corpus(cfg, 3)
        tokens = {t for inst in corpus.all_instances() for t in inst.raw_tokens}
        assert any(t.startswith("perex") for t in tokens)

    def test_templates_need_both_banks(self, tmp_path):
        templates = tmp_path / "templates.txt"
        templates.write_text("{PER} visits {LOC}\n", encoding="utf-8")
        cfg = GeneratorConfig(years=(2014, 2015), templates_file=str(templates))
        with pytest.raises(ConfigError):
            generate_drift_corpus(cfg, 1)

    def test_unknown_template_slot_rejected(self, tmp_path):
        templates = tmp_path / "templates.txt"
        templates.write_text("hello {WAT}\nthe {TOPIC} again\n", encoding="utf-8")
        cfg = GeneratorConfig(years=(2014, 2015), templates_file=str(templates))
        with pytest.raises(ConfigError):
            generate_drift_corpus(cfg, 1)
