"""
Figures for training runs.

Metric curves come from metrics.csv, sample scatters from generated or real
samples, and the usage histogram from quantizer selection counts.
"""

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from sqlab.evaluation.metrics import METRICS_COLUMNS


class PlotFactory:
    """
    Figures for one or more runs, sharing a seaborn theme and a run palette.

    Runs keep their color across figures in the order they are first seen.
    """

    def __init__(
        self,
        figsize: tuple[float, float] = (7.0, 4.5),
        dpi: int = 120,
        palette: str = "colorblind",
    ) -> None:
        self.figsize = figsize
        self.dpi = dpi
        self.palette = palette
        self._colors: dict[str, tuple[float, float, float]] = {}
        sns.set_theme(context="notebook", style="whitegrid", palette=palette)

    def run_color(self, label: str) -> tuple[float, float, float]:
        """Color assigned to a run label (stable for the factory's lifetime)."""
        if label not in self._colors:
            cycle = sns.color_palette(self.palette)
            self._colors[label] = cycle[len(self._colors) % len(cycle)]
        return self._colors[label]

    def _new_axes(self) -> tuple[plt.Figure, plt.Axes]:
        return plt.subplots(figsize=self.figsize, dpi=self.dpi)

    def _save(self, fig: plt.Figure, output_path: str | Path | None) -> None:
        if output_path is None:
            return
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, bbox_inches="tight")

    def plot_metric_curves(
        self,
        runs: dict[str, pd.DataFrame],
        metric: str,
        output_path: str | Path | None = None,
        smooth: int = 1,
    ) -> plt.Figure:
        """
        Plot one metric against step for several runs.

        Args:
            runs: Metrics frames keyed by run label
            metric: Column of metrics.csv to plot
            output_path: Optional path to save plot
            smooth: Rolling-mean window (1 disables smoothing)

        Returns:
            Matplotlib figure
        """
        if metric not in METRICS_COLUMNS or metric == "step":
            raise ValueError(f"Unknown metric: {metric}")
        fig, ax = self._new_axes()
        for label, frame in runs.items():
            values = frame[metric].rolling(smooth, min_periods=1).mean()
            if values.notna().any():
                ax.plot(frame["step"], values, label=label, color=self.run_color(label))
        ax.set_xlabel("step")
        ax.set_ylabel(metric)
        ax.set_title(f"{metric} over training")
        if runs:
            ax.legend()
        self._save(fig, output_path)
        return fig

    def plot_samples(
        self,
        generated: np.ndarray,
        real: np.ndarray | None = None,
        centers: np.ndarray | None = None,
        output_path: str | Path | None = None,
    ) -> plt.Figure:
        """
        Scatter 2-D samples, optionally over real data and mixture centers.

        Args:
            generated: Generated samples, shape (n, 2)
            real: Real samples, shape (m, 2)
            centers: Mixture centers, shape (modes, 2)
            output_path: Optional path to save plot

        Returns:
            Matplotlib figure
        """
        generated = np.asarray(generated)
        if generated.ndim != 2 or generated.shape[1] != 2:
            raise ValueError(f"scatter needs 2-D samples, got shape {generated.shape}")
        fig, ax = self._new_axes()
        if real is not None:
            ax.scatter(real[:, 0], real[:, 1], s=4, alpha=0.3, color="grey", label="real")
        ax.scatter(generated[:, 0], generated[:, 1], s=4, alpha=0.6, label="generated")
        if centers is not None:
            ax.scatter(centers[:, 0], centers[:, 1], marker="x", color="black", label="modes")
        ax.set_aspect("equal")
        ax.legend()
        self._save(fig, output_path)
        return fig

    def plot_usage_histogram(
        self,
        counts: np.ndarray,
        output_path: str | Path | None = None,
    ) -> plt.Figure:
        """
        Bar chart of selection counts per code, sorted from most to least used.

        Args:
            counts: Selection count per codebook entry
            output_path: Optional path to save plot

        Returns:
            Matplotlib figure
        """
        counts = np.sort(np.asarray(counts))[::-1]
        fig, ax = self._new_axes()
        ax.bar(np.arange(len(counts)), counts, width=1.0)
        used = int((counts > 0).sum())
        ax.set_xlabel("code rank")
        ax.set_ylabel("selections")
        ax.set_title(f"Codebook usage: {used}/{len(counts)} codes")
        self._save(fig, output_path)
        return fig
