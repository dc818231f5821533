import numpy as np
import pytest

from wavestack import cli, config as cfgmod, dataio
from wavestack.errors import ConfigError

TINY_CONFIG = """
# fast synthetic run
model.n_stacks = 2
model.blocks_per_stack = 1
model.alpha = 0.4
model.lookback = 16
model.horizon = 4
model.hidden_depth = 1
model.hidden_width = 4
model.conv_variant = "none"
model.dropout_rate = 0.0
train.learning_rate = 0.003
train.epochs = 2
train.batch_size = 16
stride = 4
synthetic.length = 480
synthetic.noise = 0.02
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(TINY_CONFIG)
    return path


class TestConfigParsing:
    def test_key_value_types(self):
        entries = cfgmod.parse_config_text(
            'a = 3\nb = 0.5\nc = "text"\nd = [1, 2]\ne = true\nf = null\n')
        assert entries == {"a": 3, "b": 0.5, "c": "text", "d": [1, 2],
                           "e": True, "f": None}

    def test_comments_and_blank_lines(self):
        entries = cfgmod.parse_config_text("# header\n\na = 1  # trailing\n")
        assert entries == {"a": 1}

    def test_bare_string_fallback(self):
        assert cfgmod.parse_config_text("kind = haar\n") == {"kind": "haar"}

    def test_duplicate_key(self):
        with pytest.raises(ConfigError):
            cfgmod.parse_config_text("a = 1\na = 2\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            cfgmod.parse_config_text("just a line\n")


class TestRunConfig:
    def test_defaults_applied(self):
        run = cfgmod.load_run_config(text="")
        assert run["stride"] == 1
        assert run["standardize"] is True
        assert run.model.n_stacks == 4
        assert run.train.epochs == 100
        assert run.ensemble.size == 5

    def test_section_values(self):
        run = cfgmod.load_run_config(
            text="model.n_stacks = 3\ntrain.epochs = 7\nensemble.size = 2\n")
        assert run.model.n_stacks == 3
        assert run.train.epochs == 7
        assert run.ensemble.size == 2

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            cfgmod.load_run_config(text="model.n_stack = 3\n")
        with pytest.raises(ConfigError):
            cfgmod.load_run_config(text="mystery = 1\n")

    def test_invalid_value_becomes_config_error(self):
        with pytest.raises(ConfigError):
            cfgmod.load_run_config(text="model.alpha = 2.0\n")

    def test_unsupported_spec_version(self):
        with pytest.raises(ConfigError):
            cfgmod.load_run_config(text="spec_version = 99\n")

    def test_split_fractions_must_sum(self):
        with pytest.raises(ConfigError):
            cfgmod.load_run_config(text="split.train = 0.9\n")

    def test_decompose_defaults_follow_model(self):
        run = cfgmod.load_run_config(
            text='model.n_stacks = 4\nmodel.wavelet_kind = "db2"\n')
        assert run["decompose.levels"] == 3
        assert run["decompose.kind"] == "db2"

    def test_resolved_round_trip(self):
        run = cfgmod.load_run_config(text=TINY_CONFIG)
        resolved = cfgmod.resolved_config_text(run)
        again = cfgmod.load_run_config(text=resolved)
        assert cfgmod.resolved_config_text(again) == resolved


class TestExitCodes:
    def test_missing_config_file(self, tmp_path, capsys):
        assert cli.main(["decompose", "--config",
                         str(tmp_path / "absent.cfg")]) == 2
        assert "error" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("mystery = 1\n")
        assert cli.main(["train", "--config", str(bad)]) == 2

    def test_partition_too_short(self, tmp_path, capsys):
        cfg = tmp_path / "short.cfg"
        cfg.write_text(TINY_CONFIG + "synthetic.length = 60\n")
        assert cli.main(["train", "--config", str(cfg),
                         "--out", str(tmp_path / "o")]) == 2

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_runtime_error_is_three(self, tmp_path, capsys):
        cfg = tmp_path / "diverge.cfg"
        cfg.write_text(TINY_CONFIG.replace(
            "train.learning_rate = 0.003", "train.learning_rate = 1e30") +
            "train.grad_clip = null\n")
        assert cli.main(["train", "--config", str(cfg),
                         "--out", str(tmp_path / "o")]) == 3
        assert "runtime error" in capsys.readouterr().err


class TestDecompose:
    def test_outputs_and_reconstruction(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "dec"
        assert cli.main(["decompose", "--config", str(tiny_config),
                         "--out", str(out)]) == 0
        assert (out / "resolved_config.txt").exists()
        approx = dataio.load_csv(out / "synthetic.L1.approx.csv", "value")
        detail = dataio.load_csv(out / "synthetic.L1.detail.csv", "value")
        series = dataio.multi_frequency_benchmark(length=480,
                                                  noise_level=0.02, seed=0)
        np.testing.assert_allclose(approx + detail, series, atol=1e-8)
        assert float((out / "recon_error.txt").read_text()) < 1e-8


class TestTrainForecastEval:
    def test_full_pipeline(self, tiny_config, tmp_path):
        out = tmp_path / "run1"
        assert cli.main(["train", "--config", str(tiny_config),
                         "--out", str(out)]) == 0
        ckpt = out / "checkpoint.txt"
        assert ckpt.exists()
        history = (out / "history.csv").read_text().splitlines()
        assert history[0] == "epoch,lr,train_loss,val_loss"
        assert len(history) == 3  # header + 2 epochs

        fc_out = tmp_path / "fc"
        assert cli.main(["forecast", "--config", str(tiny_config),
                         "--out", str(fc_out),
                         "--checkpoint", str(ckpt)]) == 0
        total = dataio.load_csv(fc_out / "global.csv", "value")
        parts = [dataio.load_csv(fc_out / f"stack{i}.forecast.csv", "value")
                 for i in (1, 2)]
        np.testing.assert_array_equal(parts[0] + parts[1], total)

        ev_out = tmp_path / "ev"
        assert cli.main(["eval", "--config", str(tiny_config),
                         "--out", str(ev_out), "--checkpoint", str(ckpt),
                         "--baseline"]) == 0
        lines = (ev_out / "metrics.csv").read_text().splitlines()
        assert lines[0] == "scale,model,mse,mae"
        labels = {line.split(",")[1] for line in lines[1:]}
        assert labels == {"model", "persistence"}

    def test_checkpoint_config_mismatch(self, tiny_config, tmp_path):
        out = tmp_path / "run"
        assert cli.main(["train", "--config", str(tiny_config),
                         "--out", str(out)]) == 0
        other = tmp_path / "other.cfg"
        other.write_text(TINY_CONFIG.replace("model.hidden_width = 4",
                                             "model.hidden_width = 8"))
        assert cli.main(["forecast", "--config", str(other),
                         "--out", str(tmp_path / "fc"),
                         "--checkpoint", str(out / "checkpoint.txt")]) == 2

    def test_seed_override_changes_result(self, tiny_config, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["train", "--config", str(tiny_config),
                         "--out", str(a), "--seed", "1"]) == 0
        assert cli.main(["train", "--config", str(tiny_config),
                         "--out", str(b), "--seed", "2"]) == 0
        assert (a / "checkpoint.txt").read_bytes() != \
            (b / "checkpoint.txt").read_bytes()


class TestDeterminism:
    def test_byte_identical_reruns(self, tiny_config, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert cli.main(["train", "--config", str(tiny_config),
                             "--out", str(out), "--seed", "3"]) == 0
        for name in ("checkpoint.txt", "history.csv",
                     "resolved_config.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


class TestAblate:
    def test_alpha_axis(self, tmp_path):
        cfg = tmp_path / "ab.cfg"
        cfg.write_text(TINY_CONFIG +
                       "ablate.alpha_grid = [0.0, 0.4]\n"
                       "ablate.repetitions = 1\n")
        out = tmp_path / "ab"
        assert cli.main(["ablate", "--config", str(cfg), "--axis", "alpha",
                         "--out", str(out)]) == 0
        lines = (out / "ablation_alpha.csv").read_text().splitlines()
        assert len(lines) == 3
        assert lines[1].startswith("0.0,1,")
        assert lines[2].startswith("0.4,1,")

    def test_unknown_axis_rejected(self, tiny_config, capsys):
        with pytest.raises(SystemExit):
            cli.main(["ablate", "--config", str(tiny_config),
                      "--axis", "bogus"])
