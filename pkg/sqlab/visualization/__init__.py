"""Figures for metric curves, samples and codebook usage."""

from sqlab.visualization.plots import PlotFactory


__all__ = ["PlotFactory"]
