"""Synthetic datasets."""

from sqlab.data.datasets import Dataset, DatasetKind, DatasetSpec, make_dataset, mixture_centers


__all__ = ["Dataset", "DatasetKind", "DatasetSpec", "make_dataset", "mixture_centers"]
