"""Statistical helpers for training curves and seed-paired comparisons."""

import numpy as np
import pandas as pd
from scipy import stats


def window_means(values: pd.Series | np.ndarray, window: int) -> np.ndarray:
    """
    Means of consecutive non-overlapping windows.

    A trailing partial window is dropped.

    Args:
        values: Sequence of observations
        window: Window length (> 0)

    Returns:
        Array of len(values) // window means
    """
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    arr = np.asarray(values, dtype=np.float64)
    full = (len(arr) // window) * window
    return arr[:full].reshape(-1, window).mean(axis=1)


def rolling_mean(values: pd.Series | np.ndarray, window: int) -> pd.Series:
    """Trailing moving average (NaN until the window fills)."""
    return pd.Series(np.asarray(values, dtype=np.float64)).rolling(window).mean()


def is_non_increasing(values: pd.Series | np.ndarray, tol: float = 0.0) -> bool:
    """True if no element exceeds its predecessor by more than ``tol``."""
    arr = np.asarray(values, dtype=np.float64)
    return bool(np.all(np.diff(arr) <= tol))


def paired_cohens_d(before: np.ndarray, after: np.ndarray) -> float:
    """
    Standardized mean of paired differences (after - before).

    Args:
        before: First arm, one value per seed
        after: Second arm, same seeds in the same order

    Returns:
        Effect size (0 when the differences have no spread)
    """
    diff = np.asarray(after, dtype=np.float64) - np.asarray(before, dtype=np.float64)
    diff = diff[~np.isnan(diff)]
    if len(diff) < 2:
        return float("nan")
    sd = np.std(diff, ddof=1)
    return 0.0 if sd == 0 else float(np.mean(diff) / sd)


def paired_comparison(
    baseline: pd.Series | np.ndarray,
    treatment: pd.Series | np.ndarray,
    alternative: str = "two-sided",
) -> dict[str, float]:
    """
    Compare two arms run on the same seeds.

    Uses the Wilcoxon signed-rank test; with every difference zero the test is
    undefined and the p-value is reported as 1.

    Args:
        baseline: Metric per seed for the reference arm
        treatment: Metric per seed for the compared arm (same seed order)
        alternative: 'two-sided', 'greater' or 'less' (treatment relative to baseline)

    Returns:
        Dictionary with n, mean values, mean difference, wins, statistic, p_value, effect_size
    """
    a = np.asarray(baseline, dtype=np.float64)
    b = np.asarray(treatment, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"paired arms differ in length: {a.shape} vs {b.shape}")
    diff = b - a
    result = {
        "n": float(len(a)),
        "baseline_mean": float(np.mean(a)),
        "treatment_mean": float(np.mean(b)),
        "mean_difference": float(np.mean(diff)),
        "wins": float(np.sum(diff > 0)),
        "effect_size": paired_cohens_d(a, b),
    }
    if np.all(diff == 0):
        result.update(statistic=0.0, p_value=1.0)
    else:
        test = stats.wilcoxon(b, a, alternative=alternative)
        result.update(statistic=float(test.statistic), p_value=float(test.pvalue))
    return result
