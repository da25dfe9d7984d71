"""
Grid runs over training arms and codebook settings.

Every grid point is a full training run; the summary keeps the final metrics
row of each run so arms can be compared on shared seeds.
"""

from __future__ import annotations

import itertools
import logging
from pathlib import Path

import pandas as pd

from sqlab.config.schema import CBISettings, Mode, TrainConfig
from sqlab.exceptions import ConfigError
from sqlab.training.trainer import train
from sqlab.utils.stats import paired_comparison


logger = logging.getLogger(__name__)

GRID_KEYS = ("mode", "d_c", "k", "use_uniformity", "seed")


def sweep_configs(
    base: TrainConfig,
    modes: list[Mode],
    d_cs: list[int],
    ks: list[int],
    uniformity: list[bool],
    seeds: list[int],
    output_dir: str | Path,
) -> list[tuple[dict[str, object], TrainConfig]]:
    """
    Expand a grid into labeled configs.

    Codebook settings only vary for quantized arms; other arms run once per seed
    and carry the base config's codebook values as labels.

    Args:
        base: Config supplying every setting the grid does not vary
        modes: Training arms
        d_cs: Code widths (d_w must be divisible by each)
        ks: Codebook sizes
        uniformity: Uniformity regularizer on/off values
        seeds: Run seeds
        output_dir: Parent directory of the per-run output directories

    Returns:
        List of (labels, config) pairs

    Raises:
        ConfigError: If a code width does not divide d_w
    """
    runs: list[tuple[dict[str, object], TrainConfig]] = []
    d_w = base.model.d_w
    for d_c in d_cs:
        if d_c <= 0 or d_w % d_c != 0:
            raise ConfigError(f"d_c={d_c} does not divide d_w={d_w}")

    for mode in modes:
        grid = [(base.model.d_c, base.codebook.k, base.codebook.use_uniformity)]
        if mode.quantized:
            grid = list(itertools.product(d_cs, ks, uniformity))
        for (d_c, k, use_uniformity), seed in itertools.product(grid, seeds):
            labels: dict[str, object] = dict(
                zip(GRID_KEYS, (mode.value, d_c, k, use_uniformity, seed), strict=True)
            )
            name = "_".join(f"{key}-{value}" for key, value in labels.items())
            update = {
                "mode": mode,
                "seed": seed,
                "output_dir": Path(output_dir) / name,
                "model": base.model.model_copy(update={"s": d_w // d_c}),
                "codebook": base.codebook.model_copy(
                    update={"k": k, "d_c": None, "use_uniformity": use_uniformity}
                ),
                "cbi": (base.cbi or CBISettings()) if mode is Mode.SQ_GAN_CBI else None,
            }
            config = TrainConfig.model_validate({**base.model_dump(), **update})
            runs.append((labels, config))
    return runs


def run_sweep(runs: list[tuple[dict[str, object], TrainConfig]]) -> pd.DataFrame:
    """
    Train every config and collect the final metrics rows.

    Returns:
        DataFrame with the grid labels followed by the final metrics of each run
    """
    rows = []
    for i, (labels, config) in enumerate(runs, start=1):
        logger.info(f"Sweep run {i}/{len(runs)}: {labels}")
        result = train(config)
        final = result.rows[-1].as_record()
        final.pop("step")
        clash = set(labels) & set(final)
        if clash:
            raise ValueError(f"grid labels collide with metric columns: {sorted(clash)}")
        rows.append({**labels, "steps": config.optimizer.steps, **final})
    return pd.DataFrame(rows)


def compare_arms(
    summary: pd.DataFrame,
    baseline: str,
    treatment: str,
    metric: str,
    alternative: str = "two-sided",
) -> pd.DataFrame:
    """
    Seed-paired comparison of two arms on one metric.

    Runs pair on seed, and also on d_c, k and use_uniformity when both arms are
    quantized. One comparison is reported per treatment setting.

    Returns:
        DataFrame with one row per treatment setting
    """
    base = summary[summary["mode"] == baseline]
    treat = summary[summary["mode"] == treatment]
    if base.empty or treat.empty:
        raise ValueError(f"sweep has no runs for {baseline!r} and {treatment!r}")
    keys = ["seed"]
    if Mode(baseline).quantized and Mode(treatment).quantized:
        keys += ["d_c", "k", "use_uniformity"]

    results = []
    for setting, group in treat.groupby(["d_c", "k", "use_uniformity"]):
        paired = group.merge(base, on=keys, suffixes=("_t", "_b")).sort_values("seed")
        if paired.empty:
            continue
        stats = paired_comparison(
            paired[f"{metric}_b"], paired[f"{metric}_t"], alternative=alternative
        )
        d_c, k, use_uniformity = setting
        results.append(
            {
                "baseline": baseline,
                "treatment": treatment,
                "metric": metric,
                "d_c": d_c,
                "k": k,
                "use_uniformity": use_uniformity,
                **stats,
            }
        )
    return pd.DataFrame(results)
