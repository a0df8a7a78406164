import pytest

from trendner.cli import main
from trendner.corpus import parse_conll_file

GEN_CFG = (
    "years = 2014-2017\n"
    "per_year = 30\n"
    "turnover = 0.5\n"
    "entity_pool_size = 12\n"
    "topic_pool_size = 18\n"
)


@pytest.fixture()
def corpus_file(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text(GEN_CFG, encoding="utf-8")
    out = tmp_path / "corpus.conll"
    assert main(["gen", "--config", str(cfg), "--seed", "3", "--out", str(out)]) == 0
    return out


class TestGen:
    def test_gen_is_deterministic(self, tmp_path, corpus_file):
        cfg = tmp_path / "gen.cfg"
        again = tmp_path / "again.conll"
        assert main(["gen", "--config", str(cfg), "--seed", "3", "--out", str(again)]) == 0
        assert again.read_bytes() == corpus_file.read_bytes()

    def test_bad_config_exits_1(self, tmp_path):
        cfg = tmp_path / "gen.cfg"
        cfg.write_text("years = 2014-2016\nturnover = 9\n", encoding="utf-8")
        assert main(["gen", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "x")]) == 1

    def test_missing_config_exits_2(self, tmp_path):
        code = main(["gen", "--config", str(tmp_path / "nope.cfg"), "--seed", "1", "--out", "x"])
        assert code == 2


class TestScoreAndSelect:
    def test_score_writes_csv(self, tmp_path, corpus_file):
        out = tmp_path / "scores.csv"
        code = main(
            ["score", "--past", str(corpus_file), "--recent", str(corpus_file), "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "instance_id,year,score"
        assert len(lines) == 121  # 4 years x 30 instances + header

    def test_select_writes_topn_conll(self, tmp_path, corpus_file):
        out = tmp_path / "batch.conll"
        code = main(
            ["select", "--pool", str(corpus_file), "--past", str(corpus_file), "-N", "7",
             "--out", str(out)]
        )
        assert code == 0
        assert len(parse_conll_file(out)) == 7

    def test_select_with_exclusions(self, tmp_path, corpus_file):
        exclude = tmp_path / "ids.txt"
        first = tmp_path / "first.conll"
        main(["select", "--pool", str(corpus_file), "--past", str(corpus_file), "-N", "120",
              "--out", str(first)])
        exclude.write_text("\n".join(str(i) for i in range(120)), encoding="utf-8")
        out = tmp_path / "batch.conll"
        code = main(
            ["select", "--pool", str(corpus_file), "--past", str(corpus_file), "-N", "7",
             "--exclude", str(exclude), "--out", str(out)]
        )
        assert code == 0
        assert len(parse_conll_file(out)) == 0  # everything excluded

    def test_malformed_corpus_exits_2(self, tmp_path):
        bad = tmp_path / "bad.conll"
        bad.write_text("token-without-tag\n", encoding="utf-8")
        out = tmp_path / "scores.csv"
        assert main(["score", "--past", str(bad), "--recent", str(bad), "--out", str(out)]) == 2


class TestEval:
    def test_perfect_predictions(self, tmp_path, corpus_file, capsys):
        code = main(["eval", "--gold", str(corpus_file), "--pred", str(corpus_file)])
        assert code == 0
        out = capsys.readouterr().out
        assert "overall" in out
        assert "100.00" in out

    def test_pred_without_year_lines_is_accepted(self, tmp_path, corpus_file):
        corpus = parse_conll_file(corpus_file)
        pred = tmp_path / "pred.conll"
        lines = []
        for inst in corpus.all_instances():
            lines.extend(f"{t}\t{lab}" for t, lab in zip(inst.raw_tokens, inst.labels))
            lines.append("")
        pred.write_text("\n".join(lines) + "\n", encoding="utf-8")
        assert main(["eval", "--gold", str(corpus_file), "--pred", str(pred)]) == 0

    def test_mismatched_lengths_exit_2(self, tmp_path, corpus_file):
        pred = tmp_path / "pred.conll"
        pred.write_text("# year: 2014\nlone\tO\n\n", encoding="utf-8")
        assert main(["eval", "--gold", str(corpus_file), "--pred", str(pred)]) == 2


class TestRunAndCompare:
    def write_run_cfg(self, tmp_path, corpus_file):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"corpus = {corpus_file}\n"
            "scenario = 2\n"
            "strategies = trend,random\n"
            "step_size = 10\n"
            "seeds = 1,2\n"
            "eval_year = 2017\n"
            "max_epochs = 5\n"
            "patience = 2\n",
            encoding="utf-8",
        )
        return cfg

    def test_run_emits_all_artifacts(self, tmp_path, corpus_file, capsys):
        cfg = self.write_run_cfg(tmp_path, corpus_file)
        out_dir = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out-dir", str(out_dir)]) == 0
        for name in (
            "curve_trend.csv",
            "curve_random.csv",
            "selections_trend.csv",
            "selections_random.csv",
            "run_manifest.txt",
            "curve.svg",
        ):
            assert (out_dir / name).exists(), name
        stdout = capsys.readouterr().out
        assert "trend: mean F1 per step" in stdout

    def test_compare_emits_tables(self, tmp_path, corpus_file, capsys):
        out_dir = tmp_path / "cmp"
        code = main(
            ["compare", "--corpus", str(corpus_file), "--size", "20", "--eval-year", "2017",
             "--out-dir", str(out_dir)]
        )
        assert code == 0
        assert (out_dir / "comparison.csv").exists()
        assert (out_dir / "distribution.csv").exists()
        assert "paired comparison" in capsys.readouterr().out

    def test_compare_oversized_exits_1(self, tmp_path, corpus_file):
        code = main(
            ["compare", "--corpus", str(corpus_file), "--size", "5000", "--eval-year", "2017",
             "--out-dir", str(tmp_path / "x")]
        )
        assert code == 1


class TestUsageErrors:
    def test_unknown_flag_exits_1(self):
        with pytest.raises(SystemExit) as err:
            main(["score", "--bogus"])
        assert err.value.code == 1

    def test_missing_subcommand_exits_1(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 1
