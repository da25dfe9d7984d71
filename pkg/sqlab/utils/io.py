"""I/O utilities for run artifacts."""

import json
import math
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd


def _jsonable(value: Any) -> Any:
    # NaN and infinities are not JSON; diagnostics of aborted runs carry them as null
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def write_json_artifact(data: Any, path: str | Path) -> Path:
    """
    Write a run artifact (report, diagnostics, comparison) as strict JSON.

    Non-finite floats become null and numpy scalars and arrays become plain values.

    Args:
        data: Mapping or list of records
        path: Output file; parent directories are created

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, allow_nan=False), encoding="utf-8")
    return path


def append_csv_row(path: str | Path, row: Mapping[str, Any], columns: Sequence[str]) -> None:
    """
    Append one row to a CSV file, writing the header only when the file is new.

    Args:
        path: CSV path
        row: Values keyed by column name
        columns: Fixed column order
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    missing = set(columns) - set(row)
    if missing:
        raise ValueError(f"row is missing columns: {sorted(missing)}")
    frame = pd.DataFrame([[row[c] for c in columns]], columns=list(columns))
    frame.to_csv(path, mode="a", header=not path.exists(), index=False)


def read_csv_checked(path: str | Path, columns: Sequence[str]) -> pd.DataFrame:
    """Read a CSV and verify its header matches ``columns`` exactly."""
    frame = pd.read_csv(path, float_precision="round_trip")
    if list(frame.columns) != list(columns):
        raise ValueError(f"{path}: header {list(frame.columns)} does not match {list(columns)}")
    return frame


def save_samples(samples: np.ndarray, output_path: str | Path) -> None:
    """
    Save a sample matrix as .npy or CSV (chosen by suffix).

    Args:
        samples: Array of shape (n, d)
        output_path: Output path ending in .npy or .csv
    """
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    samples = np.asarray(samples, dtype=np.float64)
    if output_path.suffix.lower() == ".npy":
        np.save(output_path, samples)
        return
    if output_path.suffix.lower() != ".csv":
        raise ValueError(f"Unsupported sample format: {output_path.suffix or '<none>'}")
    columns = [f"x{i}" for i in range(samples.shape[1])]
    pd.DataFrame(samples, columns=columns).to_csv(output_path, index=False, float_format="%.17g")


def load_samples(input_path: str | Path) -> np.ndarray:
    input_path = Path(input_path)
    if not input_path.exists():
        raise FileNotFoundError(f"Source not found: {input_path}")
    if input_path.suffix.lower() == ".npy":
        return np.load(input_path)
    return pd.read_csv(input_path, float_precision="round_trip").to_numpy(dtype=np.float64)
