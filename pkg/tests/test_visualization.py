"""Tests for run figures."""

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import pytest

from sqlab.evaluation import METRICS_COLUMNS
from sqlab.visualization import PlotFactory


@pytest.fixture
def factory() -> PlotFactory:
    return PlotFactory(figsize=(4, 3), dpi=50)


def _metrics_frame(offset: float) -> pd.DataFrame:
    frame = pd.DataFrame({c: np.nan for c in METRICS_COLUMNS}, index=range(4))
    frame["step"] = [10, 20, 30, 40]
    frame["mode_coverage"] = np.array([0.25, 0.5, 0.75, 1.0]) - offset
    return frame


def test_metric_curves(factory: PlotFactory, tmp_path: Path) -> None:
    """Test one line per run and the saved file."""
    runs = {"sq_gan": _metrics_frame(0.0), "plain_gan": _metrics_frame(0.25)}
    fig = factory.plot_metric_curves(runs, "mode_coverage", tmp_path / "cov.png", smooth=2)

    assert len(fig.axes[0].lines) == 2
    assert (tmp_path / "cov.png").exists()
    plt.close(fig)


def test_all_nan_metric_draws_nothing(factory: PlotFactory) -> None:
    """Test that a metric absent from a run is skipped."""
    fig = factory.plot_metric_curves({"plain_gan": _metrics_frame(0.0)}, "usage")

    assert len(fig.axes[0].lines) == 0
    plt.close(fig)


def test_unknown_metric(factory: PlotFactory) -> None:
    """Test metric validation."""
    with pytest.raises(ValueError, match="Unknown metric"):
        factory.plot_metric_curves({}, "step")


def test_sample_scatter(factory: PlotFactory, tmp_path: Path, rng: np.random.Generator) -> None:
    """Test the 2-D scatter and its shape check."""
    fig = factory.plot_samples(
        rng.normal(size=(50, 2)), rng.normal(size=(20, 2)), np.eye(2), tmp_path / "s.png"
    )

    assert (tmp_path / "s.png").exists()
    plt.close(fig)
    with pytest.raises(ValueError, match="2-D samples"):
        factory.plot_samples(rng.normal(size=(5, 3)))


def test_usage_histogram_title(factory: PlotFactory) -> None:
    """Test that the title reports used codes."""
    fig = factory.plot_usage_histogram(np.array([0, 3, 0, 1]))

    assert fig.axes[0].get_title() == "Codebook usage: 2/4 codes"
    plt.close(fig)


def test_run_colors_are_stable(factory: PlotFactory) -> None:
    """Test that a run keeps its color across figures."""
    runs = {"sq_gan": _metrics_frame(0.0), "plain_gan": _metrics_frame(0.25)}
    first = factory.plot_metric_curves(runs, "mode_coverage")
    second = factory.plot_metric_curves({"plain_gan": runs["plain_gan"]}, "mode_coverage")

    assert factory.run_color("sq_gan") != factory.run_color("plain_gan")
    assert second.axes[0].lines[0].get_color() == first.axes[0].lines[1].get_color()
    plt.close(first)
    plt.close(second)
