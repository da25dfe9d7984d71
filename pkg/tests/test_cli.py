"""Tests for the command-line interface."""

import json
import math
from pathlib import Path

import numpy as np
import pytest
from typer.testing import CliRunner

from sqlab import __version__
from sqlab.cli.main import EXIT_CONFIG, EXIT_NUMERIC, app
from sqlab.evaluation import METRICS_COLUMNS
from sqlab.exceptions import NumericAbortError
from sqlab.utils.checkpoint import load_checkpoint
from sqlab.utils.io import load_samples, read_csv_checked


runner = CliRunner()

TINY_CONFIG = """\
mode = "{mode}"
seed = 0
output_dir = "{output_dir}"
progress = false

[model]
d_z = 4
d_w = 4
s = 2
data_dim = 2

[networks]
mapper_hidden = 8
mapper_depth = 2
generator_hidden = 8
generator_depth = 2
discriminator_hidden = 8
discriminator_depth = 2

[codebook]
k = 8

[optimizer]
steps = 4
batch_size = 8

[eval]
interval = 2
samples = 32

[dataset]
kind = "gauss_mixture"
size = 200
"""

TINY_CBI = """
[cbi]
steps = 3
batch_size = 4
code_batch_size = 4
embedder_hidden = 8

[cbi.provider]
d_e = 4
tokens = 3
hidden = 8
"""


def _write_config(tmp_path: Path, mode: str = "sq_gan") -> Path:
    text = TINY_CONFIG.format(mode=mode, output_dir=(tmp_path / "run").as_posix())
    if mode == "sq_gan_cbi":
        text += TINY_CBI
    path = tmp_path / f"{mode}.toml"
    path.write_text(text)
    return path


def test_version() -> None:
    """Test version command."""
    result = runner.invoke(app, ["version"])

    assert result.exit_code == 0
    assert __version__ in result.stdout


def test_gen_data(tmp_path: Path) -> None:
    """Test dataset generation to .npy."""
    out = tmp_path / "rings.npy"
    result = runner.invoke(
        app, ["gen-data", "--kind", "rings", "--size", "50", "--seed", "1", "--out", str(out)]
    )

    assert result.exit_code == 0
    assert load_samples(out).shape == (50, 2)


def test_gen_data_unknown_kind(tmp_path: Path) -> None:
    """Test that an unknown dataset kind is a usage error."""
    result = runner.invoke(
        app, ["gen-data", "--kind", "moons", "--size", "5", "--out", str(tmp_path / "x.npy")]
    )

    assert result.exit_code == EXIT_CONFIG


def test_sinkhorn(tmp_path: Path) -> None:
    """Test the transport solver on a permutation-friendly cost."""
    cost = tmp_path / "cost.txt"
    np.savetxt(cost, 1.0 - np.eye(3))
    result = runner.invoke(app, ["sinkhorn", "--cost", str(cost), "--eta", "0.05"])

    assert result.exit_code == 0
    keys = ("value", "iterations", "marginal_error")
    output = [line for line in result.stdout.splitlines() if line.startswith(keys)]
    lines = dict(line.split(maxsplit=1) for line in output)
    assert set(lines) == {"value", "iterations", "marginal_error"}
    assert float(lines["value"]) < 0.01
    assert float(lines["marginal_error"]) <= 1e-6


def test_sinkhorn_scaled_cost(tmp_path: Path) -> None:
    """Test that a large-valued cost is solved at the default tolerance."""
    cost = tmp_path / "cost.txt"
    np.savetxt(cost, 50.0 * (1.0 - np.eye(4)))
    result = runner.invoke(app, ["sinkhorn", "--cost", str(cost)])

    assert result.exit_code == 0
    keys = ("value", "marginal_error", "scale")
    output = [line for line in result.stdout.splitlines() if line.startswith(keys)]
    lines = dict(line.split(maxsplit=1) for line in output)
    assert float(lines["scale"]) == 50.0
    assert float(lines["value"]) < 0.5
    assert float(lines["marginal_error"]) <= 1e-6


def test_train(tmp_path: Path) -> None:
    """Test a short training run from a TOML file."""
    result = runner.invoke(app, ["train", "--config", str(_write_config(tmp_path))])

    assert result.exit_code == 0
    frame = read_csv_checked(tmp_path / "run" / "metrics.csv", METRICS_COLUMNS)
    assert list(frame["step"]) == [2, 4]
    assert (tmp_path / "run" / "final.ckpt").exists()


def test_train_overrides(tmp_path: Path) -> None:
    """Test the output directory and step overrides."""
    out = tmp_path / "elsewhere"
    result = runner.invoke(
        app,
        ["train", "-c", str(_write_config(tmp_path)), "-o", str(out), "--steps", "2"],
    )

    assert result.exit_code == 0
    assert list(read_csv_checked(out / "metrics.csv", METRICS_COLUMNS)["step"]) == [2]


def test_train_bad_config_exits_with_config_code(tmp_path: Path) -> None:
    """Test that an invalid config is reported with exit code 1."""
    path = tmp_path / "bad.toml"
    path.write_text('mode = "sq_gan"\n[codebook]\nk = 8\nsize = 3\n')
    result = runner.invoke(app, ["train", "--config", str(path)])

    assert result.exit_code == EXIT_CONFIG
    assert "codebook.size" in " ".join(result.stdout.split())


def test_train_numeric_abort_exits_with_numeric_code(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Test that a numeric abort is reported with exit code 2."""

    def abort(self: object) -> None:
        raise NumericAbortError(3, {"adv_d": math.nan}, phase="discriminator")

    monkeypatch.setattr("sqlab.cli.main.Trainer.run", abort)
    result = runner.invoke(app, ["train", "--config", str(_write_config(tmp_path))])

    assert result.exit_code == EXIT_NUMERIC
    assert "step 3" in " ".join(result.stdout.split())


def test_init_codebook(tmp_path: Path) -> None:
    """Test codebook initialization on its own."""
    out = tmp_path / "init.ckpt"
    config = _write_config(tmp_path, "sq_gan_cbi")
    result = runner.invoke(app, ["init-codebook", "--config", str(config), "--out", str(out)])

    assert result.exit_code == 0
    checkpoint = load_checkpoint(out)
    assert checkpoint.step == 0
    assert checkpoint.extra_arrays("embedder.")
    assert (tmp_path / "run" / "cbi_report.json").exists()


def test_init_codebook_requires_cbi_section(tmp_path: Path) -> None:
    """Test the missing-section error."""
    out = tmp_path / "init.ckpt"
    result = runner.invoke(
        app, ["init-codebook", "--config", str(_write_config(tmp_path)), "--out", str(out)]
    )

    assert result.exit_code == EXIT_CONFIG
    assert not out.exists()


def test_eval_appends_row(tmp_path: Path) -> None:
    """Test checkpoint evaluation into a metrics file."""
    runner.invoke(app, ["train", "--config", str(_write_config(tmp_path))])
    metrics = tmp_path / "eval.csv"
    ckpt = tmp_path / "run" / "final.ckpt"

    for _ in range(2):
        result = runner.invoke(app, ["eval", "--ckpt", str(ckpt), "--metrics", str(metrics)])
        assert result.exit_code == 0

    frame = read_csv_checked(metrics, METRICS_COLUMNS)
    assert list(frame["step"]) == [4, 4]
    assert frame.iloc[0].equals(frame.iloc[1])


def test_eval_missing_checkpoint(tmp_path: Path) -> None:
    """Test the error for a missing checkpoint."""
    result = runner.invoke(
        app,
        ["eval", "--ckpt", str(tmp_path / "nope.ckpt"), "--metrics", str(tmp_path / "m.csv")],
    )

    assert result.exit_code == EXIT_CONFIG


def test_plot(tmp_path: Path) -> None:
    """Test curve, sample and usage figures."""
    runner.invoke(app, ["train", "--config", str(_write_config(tmp_path))])
    plots = tmp_path / "plots"
    result = runner.invoke(
        app,
        [
            "plot",
            "--metrics",
            str(tmp_path / "run" / "metrics.csv"),
            "--columns",
            "mode_coverage,usage",
            "--ckpt",
            str(tmp_path / "run" / "final.ckpt"),
            "--samples",
            "100",
            "-o",
            str(plots),
        ],
    )

    assert result.exit_code == 0
    expected = {"mode_coverage.png", "usage.png", "samples.png"}
    assert expected <= {p.name for p in plots.iterdir()}


def test_sweep_with_comparison(tmp_path: Path) -> None:
    """Test a two-arm sweep with a paired comparison."""
    out = tmp_path / "sweep"
    result = runner.invoke(
        app,
        [
            "sweep",
            "-c",
            str(_write_config(tmp_path)),
            "-o",
            str(out),
            "--modes",
            "plain_gan,sq_gan",
            "--seeds",
            "0,1",
            "--compare",
            "plain_gan,sq_gan",
            "--metric",
            "kernel_mmd",
        ],
    )

    assert result.exit_code == 0
    comparison = json.loads((out / "comparison.json").read_text())
    assert len(comparison) == 1
    assert comparison[0]["n"] == 2.0
    assert (out / "summary.csv").exists()


def test_sweep_rejects_bad_code_width(tmp_path: Path) -> None:
    """Test that a code width not dividing d_w exits with the config code."""
    result = runner.invoke(
        app, ["sweep", "-c", str(_write_config(tmp_path)), "--d-c", "3", "-o", str(tmp_path)]
    )

    assert result.exit_code == EXIT_CONFIG
