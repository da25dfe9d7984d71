"""
Main CLI interface for sqlab.

Provides commands for:
- Training a run from a config file
- Codebook initialization on its own
- Evaluating checkpoints
- Solving a single transport problem
- Generating synthetic datasets
- Sweeps over arms and codebook settings
- Plotting metric curves, samples and codebook usage
"""

import logging
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from sqlab import __version__
from sqlab.config import Mode, load_config
from sqlab.data import make_dataset
from sqlab.evaluation.metrics import METRICS_COLUMNS
from sqlab.exceptions import CheckpointError, ConfigError, NumericAbortError
from sqlab.networks.model import generate
from sqlab.quantizer import usage_histogram
from sqlab.training.seeding import SeedStreams
from sqlab.training.steps import generator_input
from sqlab.training.sweep import compare_arms, run_sweep, sweep_configs
from sqlab.training.trainer import Trainer, evaluate_checkpoint, restore_model
from sqlab.transport import solve, uniform_marginal
from sqlab.transport.sinkhorn import DEFAULT_ETA, DEFAULT_MAX_ITER, DEFAULT_TOL
from sqlab.utils.io import append_csv_row, read_csv_checked, save_samples, write_json_artifact
from sqlab.visualization.plots import PlotFactory


app = typer.Typer(help="sqlab: style-space quantization experiments at desk scale")
console = Console()

EXIT_CONFIG = 1
EXIT_NUMERIC = 2


def _fail(message: str, code: int) -> typer.Exit:
    console.print(f"[red]Error:[/red] {message}")
    return typer.Exit(code)


def _split(values: str) -> list[str]:
    return [v.strip() for v in values.split(",") if v.strip()]


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show debug logging"),
) -> None:
    """Configure logging for every command."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
    )


@app.command()
def version() -> None:
    """Show version information."""
    console.print(f"[bold green]sqlab version {__version__}[/bold green]")


@app.command()
def train(
    config_path: Path = typer.Option(..., "--config", "-c", help="Config file (.toml or .json)"),
    output_dir: Path | None = typer.Option(None, "--output-dir", "-o", help="Override output"),
    steps: int | None = typer.Option(None, "--steps", help="Override adversarial steps"),
) -> None:
    """Train one run and write metrics and checkpoints."""
    try:
        config = load_config(config_path)
        update: dict[str, object] = {}
        if output_dir is not None:
            update["output_dir"] = output_dir
        if steps is not None:
            update["optimizer"] = config.optimizer.model_copy(update={"steps": steps})
        config = config.model_copy(update=update)
        console.print(f"[blue]Training:[/blue] {config.mode.value} (seed {config.seed})")
        result = Trainer(config).run()
    except ConfigError as e:
        raise _fail(str(e), EXIT_CONFIG) from e
    except NumericAbortError as e:
        raise _fail(str(e), EXIT_NUMERIC) from e

    if result.cbi_report is not None:
        report = result.cbi_report
        console.print(
            f"[green]✓[/green] Codebook usage after initialization: "
            f"{report.usage_before:.3f} -> {report.usage_after:.3f}"
        )
    last = result.rows[-1]
    console.print(f"[green]✓[/green] Final metrics at step {last.step}: {last.as_record()}")
    console.print(f"[green]✓[/green] Checkpoint: {result.checkpoint_path}")


@app.command()
def init_codebook(
    config_path: Path = typer.Option(..., "--config", "-c", help="Config with a [cbi] section"),
    out: Path = typer.Option(..., "--out", help="Output checkpoint"),
) -> None:
    """Run codebook initialization only and save the initialized model."""
    try:
        config = load_config(config_path)
        if config.cbi is None:
            raise ConfigError(f"{config_path}: codebook initialization needs a [cbi] section")
        trainer = Trainer(config)
        trainer.output_dir.mkdir(parents=True, exist_ok=True)
        report = trainer.initialize_codebook()
    except ConfigError as e:
        raise _fail(str(e), EXIT_CONFIG) from e
    except NumericAbortError as e:
        raise _fail(str(e), EXIT_NUMERIC) from e

    trainer.save(0, out)
    trace = report.trace()
    if not trace.empty:
        console.print(f"[green]✓[/green] Final L_ot: {trace['ot'].iloc[-1]:.6f}")
    console.print(
        f"[green]✓[/green] Usage {report.usage_before:.3f} -> {report.usage_after:.3f}; "
        f"saved to {out}"
    )


@app.command("eval")
def evaluate(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint to evaluate"),
    metrics: Path = typer.Option(..., "--metrics", help="Metrics CSV to append to"),
) -> None:
    """Evaluate a checkpoint and append one metrics row."""
    try:
        row = evaluate_checkpoint(ckpt)
    except (CheckpointError, ConfigError, FileNotFoundError) as e:
        raise _fail(str(e), EXIT_CONFIG) from e

    append_csv_row(metrics, row.as_record(), METRICS_COLUMNS)
    table = Table(title=f"Metrics at step {row.step}")
    table.add_column("metric")
    table.add_column("value", justify="right")
    for name, value in row.as_record().items():
        table.add_row(name, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)
    console.print(f"[green]✓[/green] Appended to {metrics}")


@app.command()
def sinkhorn(
    cost: Path = typer.Option(..., "--cost", help="Whitespace-separated cost matrix"),
    eta: float = typer.Option(DEFAULT_ETA, "--eta", help="Entropic weight (relative to max cost)"),
    tol: float = typer.Option(DEFAULT_TOL, "--tol", help="Marginal tolerance"),
    max_iter: int = typer.Option(DEFAULT_MAX_ITER, "--max-iter", help="Iteration cap"),
    log_domain: bool = typer.Option(False, "--log-domain", help="Use the log-domain solver"),
) -> None:
    """Solve one entropic transport problem with uniform marginals."""
    try:
        matrix = np.atleast_2d(np.loadtxt(cost, dtype=np.float64))
        state = solve(
            matrix,
            uniform_marginal(matrix.shape[0]),
            uniform_marginal(matrix.shape[1]),
            eta=eta,
            tol=tol,
            max_iter=max_iter,
            log_domain=log_domain,
        )
    except (OSError, ValueError) as e:
        raise _fail(str(e), EXIT_CONFIG) from e

    console.print(f"value {state.transport_cost:.12g}")
    console.print(f"iterations {state.iterations}")
    console.print(f"marginal_error {state.marginal_error:.3e}")
    console.print(f"scale {state.scale:.12g}")


@app.command()
def gen_data(
    kind: str = typer.Option(..., "--kind", help="gauss_mixture, rings or tiny_raster"),
    size: int = typer.Option(..., "--size", help="Number of samples"),
    seed: int = typer.Option(0, "--seed", help="Sampling seed"),
    out: Path = typer.Option(..., "--out", help="Output file (.npy or .csv)"),
) -> None:
    """Generate a synthetic dataset."""
    try:
        dataset = make_dataset(kind, size, seed)  # type: ignore[arg-type]
    except ValueError as e:
        raise _fail(str(e), EXIT_CONFIG) from e
    save_samples(dataset.samples, out)
    console.print(f"[green]✓[/green] Wrote {dataset.size} {kind} samples to {out}")


@app.command()
def sweep(
    config_path: Path = typer.Option(..., "--config", "-c", help="Base config file"),
    output_dir: Path = typer.Option("sweep", "--output-dir", "-o", help="Output directory"),
    modes: str = typer.Option("plain_gan,sq_gan", "--modes", help="Comma-separated arms"),
    d_cs: str = typer.Option("", "--d-c", help="Comma-separated code widths (default: base)"),
    ks: str = typer.Option("", "--k", help="Comma-separated codebook sizes (default: base)"),
    uniformity: str = typer.Option("on", "--uniformity", help="on, off or on,off"),
    seeds: str = typer.Option("0,1,2,3,4", "--seeds", help="Comma-separated seeds"),
    compare: str = typer.Option(
        "", "--compare", help="baseline,treatment arms for the paired comparison"
    ),
    metric: str = typer.Option("mode_coverage", "--metric", help="Metric for the comparison"),
) -> None:
    """Run a grid of training runs and summarize final metrics."""
    try:
        base = load_config(config_path)
        runs = sweep_configs(
            base,
            modes=[Mode(m) for m in _split(modes)],
            d_cs=[int(v) for v in _split(d_cs)] or [base.model.d_c],
            ks=[int(v) for v in _split(ks)] or [base.codebook.k],
            uniformity=[v == "on" for v in _split(uniformity)],
            seeds=[int(v) for v in _split(seeds)],
            output_dir=output_dir,
        )
        pair = _split(compare)
        if compare and len(pair) != 2:
            raise ConfigError(f"--compare needs two arms, got {compare!r}")
        console.print(f"[blue]Sweep:[/blue] {len(runs)} runs")
        summary = run_sweep(runs)
    except (ConfigError, ValueError) as e:
        raise _fail(str(e), EXIT_CONFIG) from e
    except NumericAbortError as e:
        raise _fail(str(e), EXIT_NUMERIC) from e

    output_dir.mkdir(parents=True, exist_ok=True)
    summary.to_csv(output_dir / "summary.csv", index=False)
    console.print(f"[green]✓[/green] Summary: {output_dir / 'summary.csv'}")

    if pair:
        baseline, treatment = pair
        comparison = compare_arms(summary, baseline, treatment, metric)
        write_json_artifact(comparison.to_dict(orient="records"), output_dir / "comparison.json")
        for record in comparison.to_dict(orient="records"):
            console.print(
                f"{treatment} vs {baseline} (d_c={record['d_c']}, k={record['k']}): "
                f"mean diff {record['mean_difference']:+.4f}, p={record['p_value']:.4f}"
            )


@app.command()
def plot(
    metrics: list[Path] = typer.Option(..., "--metrics", help="metrics.csv files (repeatable)"),
    output_dir: Path = typer.Option("plots", "--output-dir", "-o", help="Output directory"),
    columns: str = typer.Option(
        "mode_coverage,kernel_mmd,usage,mean_cos_sim", "--columns", help="Metrics to plot"
    ),
    ckpt: Path | None = typer.Option(None, "--ckpt", help="Checkpoint for sample/usage plots"),
    samples: int = typer.Option(2000, "--samples", help="Generated samples for scatter plots"),
    smooth: int = typer.Option(1, "--smooth", help="Rolling-mean window"),
) -> None:
    """Render metric curves, and sample/usage figures for a checkpoint."""
    factory = PlotFactory()
    output_dir.mkdir(parents=True, exist_ok=True)
    try:
        runs = {
            path.parent.name or str(path): read_csv_checked(path, METRICS_COLUMNS)
            for path in metrics
        }
    except (OSError, ValueError) as e:
        raise _fail(str(e), EXIT_CONFIG) from e

    for column in _split(columns):
        fig = factory.plot_metric_curves(runs, column, output_dir / f"{column}.png", smooth)
        plt.close(fig)
        console.print(f"[green]✓[/green] {output_dir / f'{column}.png'}")

    if ckpt is None:
        return
    try:
        model, config, _ = restore_model(ckpt)
    except (CheckpointError, ConfigError, FileNotFoundError) as e:
        raise _fail(str(e), EXIT_CONFIG) from e
    dataset = config.dataset.build()
    z = SeedStreams(config.seed).generator("eval").standard_normal((samples, config.model.d_z))
    g_in, q = generator_input(z, model, config.mode.quantized)
    generated = generate(g_in, model).data
    if dataset.data_dim == 2:
        fig = factory.plot_samples(
            generated, dataset.samples, dataset.centers, output_dir / "samples.png"
        )
        plt.close(fig)
        console.print(f"[green]✓[/green] {output_dir / 'samples.png'}")
    if q is not None:
        counts = usage_histogram(q, model.codebook.k)
        fig = factory.plot_usage_histogram(counts, output_dir / "usage.png")
        plt.close(fig)
        console.print(f"[green]✓[/green] {output_dir / 'usage.png'}")


if __name__ == "__main__":
    app()
