"""Utility functions and helpers."""

from sqlab.utils.io import append_csv_row, read_csv_checked, write_json_artifact
from sqlab.utils.stats import is_non_increasing, paired_comparison, window_means


__all__ = [
    "append_csv_row",
    "is_non_increasing",
    "paired_comparison",
    "read_csv_checked",
    "window_means",
    "write_json_artifact",
]
