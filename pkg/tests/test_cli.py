"""CLI and runner: config validation, smoke runs, determinism, summaries."""
from __future__ import annotations

import json
import time
from pathlib import Path

import pytest

from hqcbench import cli
from hqcbench.config import ConfigError, RunConfig
from hqcbench.runner import load_reports, run_benchmark
from hqcbench.summary import build_accuracy_figure, emit_summary


def write_config(path: Path, doc: dict) -> Path:
    path.write_text(json.dumps(doc, indent=2))
    return path


def smoke_config(data_dir, out_dir, models=("classical",), k=2, epochs=2, seed=0,
                 workers=1) -> dict:
    return {
        "seed": seed,
        "out_dir": str(out_dir),
        "k_folds": k,
        "epochs": epochs,
        "workers": workers,
        "datasets": [{"name": "wine", "data_dir": str(data_dir)}],
        "models": list(models),
    }


class TestConfigParsing:
    def test_roundtrip(self, tmp_path, data_dir):
        doc = smoke_config(data_dir, tmp_path / "out", models=["classical", "quantum_only"])
        config = RunConfig.from_dict(doc)
        again = RunConfig.from_dict(config.to_dict())
        assert config.to_dict() == again.to_dict()
        assert config.config_hash() == again.config_hash()

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            RunConfig.from_dict({"datasets": ["wine"], "models": ["classical"], "turbo": True})

    def test_model_overrides(self):
        config = RunConfig.from_dict({
            "datasets": ["wine"],
            "models": [{"kind": "midfusion_attn", "latent_dim": 32, "num_heads": 8}],
        })
        assert config.models[0].overrides == {"latent_dim": 32, "num_heads": 8}

    def test_requires_datasets_and_models(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"models": ["classical"]})
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"datasets": ["wine"]})

    def test_validate_reports_missing_files(self, tmp_path):
        config = RunConfig.from_dict({
            "datasets": [{"name": "wine", "data_dir": str(tmp_path / "nowhere")}],
            "models": ["classical"],
        })
        problems = config.validate()
        assert any("missing data file" in p for p in problems)

    def test_validate_flags_bad_model(self, data_dir):
        config = RunConfig.from_dict({
            "datasets": [{"name": "wine", "data_dir": str(data_dir)}],
            "models": ["classical"],
        })
        config.models[0].kind = "mystery_model"
        assert any("unknown model kind" in p for p in config.validate())


class TestCliExitCodes:
    def test_validate_config_ok(self, tmp_path, data_dir, capsys):
        path = write_config(tmp_path / "ok.json", smoke_config(data_dir, tmp_path / "out"))
        assert cli.main(["validate-config", "--config", str(path)]) == cli.EXIT_OK
        assert "config ok" in capsys.readouterr().out

    def test_validate_config_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert cli.main(["validate-config", "--config", str(path)]) == cli.EXIT_CONFIG_ERROR

    def test_validate_config_missing_data(self, tmp_path):
        doc = smoke_config(tmp_path / "nodata", tmp_path / "out")
        path = write_config(tmp_path / "bad.json", doc)
        assert cli.main(["validate-config", "--config", str(path)]) == cli.EXIT_CONFIG_ERROR

    def test_run_with_unknown_model_filter(self, tmp_path, data_dir):
        path = write_config(tmp_path / "c.json", smoke_config(data_dir, tmp_path / "out"))
        code = cli.main(["run", "--config", str(path), "--models", "nonexistent"])
        assert code == cli.EXIT_CONFIG_ERROR


class TestSmokeRun:
    def test_wine_smoke_completes_quickly(self, tmp_path, data_dir, capsys):
        out = tmp_path / "out"
        path = write_config(tmp_path / "smoke.json",
                            smoke_config(data_dir, out, models=["classical", "midfusion_linear"]))
        start = time.time()
        code = cli.main(["run", "--config", str(path)])
        elapsed = time.time() - start
        assert code == cli.EXIT_OK
        assert elapsed < 60.0
        assert (out / "wine__classical.json").exists()
        assert (out / "wine__midfusion_linear.json").exists()
        assert (out / "results.csv").exists()
        doc = json.loads((out / "wine__classical.json").read_text())
        assert {"dataset", "model", "folds", "mean", "std", "config_hash"} <= set(doc)
        assert len(doc["folds"]) == 2

    def test_rerun_is_byte_identical(self, tmp_path, data_dir):
        doc = smoke_config(data_dir, tmp_path / "a", models=["classical"], seed=11)
        run_benchmark(RunConfig.from_dict(doc), out_dir=tmp_path / "a")
        run_benchmark(RunConfig.from_dict(doc), out_dir=tmp_path / "b")
        for name in ("wine__classical.json", "results.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_worker_count_does_not_change_results(self, tmp_path, data_dir):
        serial = smoke_config(data_dir, tmp_path / "w1", models=["classical"], workers=1)
        parallel = smoke_config(data_dir, tmp_path / "w2", models=["classical"], workers=2)
        run_benchmark(RunConfig.from_dict(serial), out_dir=tmp_path / "w1")
        run_benchmark(RunConfig.from_dict(parallel), out_dir=tmp_path / "w2")
        a = (tmp_path / "w1" / "wine__classical.json").read_bytes()
        b = (tmp_path / "w2" / "wine__classical.json").read_bytes()
        assert a == b

    def test_loaded_reports_match_written(self, tmp_path, data_dir):
        doc = smoke_config(data_dir, tmp_path / "out", models=["classical"])
        result = run_benchmark(RunConfig.from_dict(doc), out_dir=tmp_path / "out")
        loaded = load_reports(tmp_path / "out")
        assert len(loaded) == 1
        assert loaded[0].mean == result.reports[0].mean
        assert loaded[0].provenance["source"].endswith("wine.csv")

    def test_history_log_written(self, tmp_path, data_dir):
        doc = smoke_config(data_dir, tmp_path / "out", models=["classical"])
        run_benchmark(RunConfig.from_dict(doc), out_dir=tmp_path / "out")
        lines = (tmp_path / "out" / "history.csv").read_text().splitlines()
        assert lines[0] == "dataset,model,fold,epoch,train_loss,monitor,lr"
        assert len(lines) == 1 + 2 * 2  # two folds, two epochs each

    def test_env_var_overrides_out_dir(self, tmp_path, data_dir, monkeypatch):
        target = tmp_path / "env_out"
        monkeypatch.setenv("HQCBENCH_OUT", str(target))
        doc = smoke_config(data_dir, tmp_path / "ignored", models=["classical"])
        path = write_config(tmp_path / "env.json", doc)
        assert cli.main(["run", "--config", str(path)]) == cli.EXIT_OK
        assert (target / "wine__classical.json").exists()
        assert not (tmp_path / "ignored").exists()


class TestReducedBudgetPipeline:
    def test_synthetic_covertype_end_to_end(self, tmp_path):
        """The reduced-budget path on a same-shaped synthetic file."""
        from test_datasets import synth_covertype_csv

        data_dir = tmp_path / "data"
        data_dir.mkdir()
        synth_covertype_csv(data_dir / "covertype.csv", n=240)
        out = tmp_path / "out"
        doc = {
            "seed": 0,
            "out_dir": str(out),
            "k_folds": 2,
            "epochs": 2,
            "datasets": [{"name": "covertype", "data_dir": str(data_dir),
                          "subsample_cap": 150}],
            "models": ["best_classical", "quantum_only"],
        }
        result = run_benchmark(RunConfig.from_dict(doc), out_dir=out)
        assert result.ok
        assert (out / "covertype__best_classical.json").exists()
        assert (out / "covertype__quantum_only.json").exists()


class TestJobFailure:
    def test_partial_results_survive_and_are_marked(self, tmp_path, data_dir):
        out = tmp_path / "out"
        doc = smoke_config(data_dir, out, models=["classical"])
        # invalid head split slips past validate() only if injected after parsing
        config = RunConfig.from_dict(doc)
        config.models.append(type(config.models[0])("midfusion_attn",
                                                    {"latent_dim": 10, "num_heads": 4}))
        result = run_benchmark(config, out_dir=out)
        assert not result.ok
        assert len(result.failures) == 2  # both folds of the broken model
        assert (out / "failures.json").exists()
        assert (out / "wine__classical.json").exists()
        assert not (out / "wine__midfusion_attn.json").exists()


class TestSummary:
    @pytest.fixture()
    def results(self, tmp_path, data_dir):
        out = tmp_path / "res"
        doc = smoke_config(data_dir, out, models=["classical", "quantum_only", "midfusion_linear"])
        run_benchmark(RunConfig.from_dict(doc), out_dir=out)
        return out

    def test_emit_summary_files(self, results):
        paths = emit_summary(results)
        assert paths["markdown"].exists()
        assert paths["csv"].exists()
        assert paths["figure"].exists()
        text = paths["markdown"].read_text()
        assert "### wine" in text
        assert "**" in text  # best F1 row bolded
        assert "Best fusion by mean F1" in text

    def test_figure_axis_clipped_and_quantum_omitted(self, results):
        reports = load_reports(results)
        fig, ax = build_accuracy_figure(reports)
        assert ax.get_ylim() == (70.0, 100.0)
        labels = [t.get_text() for t in ax.get_legend().get_texts()]
        assert "quantum_only" not in labels
        assert "classical" in labels

    def test_svg_is_wellformed(self, results):
        paths = emit_summary(results)
        head = paths["figure"].read_text()[:200]
        assert "<?xml" in head and "svg" in head

    def test_summarize_cli(self, results, capsys):
        assert cli.main(["summarize", "--results", str(results)]) == cli.EXIT_OK
        assert "markdown" in capsys.readouterr().out

    def test_empty_dir_fails(self, tmp_path):
        assert cli.main(["summarize", "--results", str(tmp_path)]) == cli.EXIT_JOB_FAILURE
