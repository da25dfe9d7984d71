"""
Adversarial training loop.

Each step runs one discriminator update on total_d followed by one update of
the mapper, generator and (in quantized modes) codebook on total_g. Every random
draw comes from a named stream of the run seed, so (config, seed) determines
every artifact the run writes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from sqlab.cbi import (
    CBIReport,
    CodeEmbedder,
    FileBackedProvider,
    FrozenRandomMLPProvider,
    VocabularyProvider,
    perturbation_sensitivity,
    run_cbi,
)
from sqlab.cbi.features import FeatureProvider
from sqlab.config.schema import ProviderSettings, TrainConfig
from sqlab.data.datasets import Dataset
from sqlab.evaluation.metrics import (
    METRICS_COLUMNS,
    MetricsRow,
    kernel_mmd,
    mean_cosine_similarity,
    mode_coverage,
)
from sqlab.exceptions import ConfigError, NumericAbortError
from sqlab.networks.model import GanModel, discriminator_features, generate
from sqlab.objectives.total import LossBreakdown
from sqlab.quantizer import Codebook, usage
from sqlab.training.optim import Adam
from sqlab.training.seeding import SeedStreams
from sqlab.training.steps import discriminator_objective, generator_input, generator_objective
from sqlab.utils.checkpoint import load_checkpoint, save_checkpoint
from sqlab.utils.io import append_csv_row, write_json_artifact


logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
FINAL_CHECKPOINT = "final.ckpt"


def build_model(config: TrainConfig, streams: SeedStreams | None = None) -> GanModel:
    """
    Initialize all networks and the codebook from the run's seed streams.

    Args:
        config: Experiment config
        streams: Seed streams (derived from ``config.seed`` when omitted)

    Returns:
        Freshly initialized model
    """
    streams = streams or SeedStreams(config.seed)
    seeds = {name: streams.int_seed(name) for name in ("mapper", "generator", "discriminator")}
    specs = config.networks.specs(config.model, seeds)
    codebook = Codebook.random(
        config.codebook.k,
        config.model.d_c,
        streams.generator("codebook"),
        d_p=config.codebook.d_p,
        rbf_scale=config.codebook.rbf_scale,
    )
    return GanModel.build(
        config.model, specs["mapper"], specs["generator"], specs["discriminator"], codebook
    )


def build_provider(settings: ProviderSettings, data_dim: int, seed: int) -> FeatureProvider:
    """Frozen feature provider described by ``settings``."""
    if settings.kind == "file_backed":
        if settings.path is None:
            raise ConfigError("file_backed provider needs a feature file path")
        provider = FileBackedProvider(settings.path, settings.shape)
        if provider.d_e != settings.d_e:
            logger.warning(f"feature file has d_e={provider.d_e}; config says {settings.d_e}")
        return provider
    if settings.kind == "vocabulary":
        return VocabularyProvider(
            data_dim,
            d_e=settings.d_e,
            tokens=settings.tokens,
            words=settings.words,
            radius=settings.radius,
            seed=seed,
        )
    return FrozenRandomMLPProvider(
        data_dim, d_e=settings.d_e, tokens=settings.tokens, hidden=settings.hidden, seed=seed
    )


def evaluate_model(
    model: GanModel,
    config: TrainConfig,
    dataset: Dataset,
    rng: np.random.Generator,
    step: int,
    terms: LossBreakdown | None = None,
) -> MetricsRow:
    """
    Generate an evaluation batch and compute every metric that applies to the run.

    Args:
        model: Model to evaluate
        config: Experiment config
        dataset: Real data
        rng: Evaluation stream
        step: Step recorded in the row
        terms: Latest loss terms

    Returns:
        MetricsRow (NaN for metrics that do not apply)
    """
    settings = config.eval
    terms = terms if terms is not None else LossBreakdown()
    z = rng.standard_normal((settings.samples, config.model.d_z))
    g_in, q = generator_input(z, model, config.mode.quantized)
    samples = generate(g_in, model).data
    picked = rng.choice(dataset.size, min(settings.samples, dataset.size), replace=False)
    real = dataset.samples[picked]

    coverage = math.nan
    if dataset.kind == "gauss_mixture":
        coverage = mode_coverage(samples, dataset, threshold=settings.coverage_threshold)

    return MetricsRow(
        step=step,
        adv_g=terms.get("adv_g"),
        adv_d=terms.get("adv_d"),
        sq=terms.get("sq"),
        uniformity=terms.get("uniformity"),
        qcr=terms.get("qcr"),
        usage=usage(q, model.codebook.k) if q is not None else math.nan,
        mode_coverage=coverage,
        kernel_mmd=kernel_mmd(samples, real, settings.mmd_bandwidth),
        mean_cos_sim=mean_cosine_similarity(discriminator_features(samples, model).data),
    )


@dataclass
class TrainResult:
    """Artifacts of a finished run."""

    model: GanModel
    metrics_path: Path
    checkpoint_path: Path
    rows: list[MetricsRow] = field(default_factory=list)
    cbi_report: CBIReport | None = None
    embedder: CodeEmbedder | None = None
    sensitivity: float | None = None


class Trainer:
    """Runs one experiment described by a TrainConfig."""

    def __init__(self, config: TrainConfig, provider: FeatureProvider | None = None) -> None:
        """
        Initialize trainer.

        Args:
            config: Experiment config
            provider: Feature provider for codebook initialization (built from config if omitted)
        """
        self.config = config
        self.streams = SeedStreams(config.seed)
        self.dataset = config.dataset.build()
        self.model = build_model(config, self.streams)
        self.provider = provider
        self.embedder: CodeEmbedder | None = None
        self.output_dir = Path(config.output_dir)
        self.metrics_path = self.output_dir / METRICS_FILE

        self.data_rng = self.streams.generator("data")
        self.latent_rng = self.streams.generator("latent")
        self.perturb_rng = self.streams.generator("perturbation")
        self.eval_rng = self.streams.generator("eval")

        opt = config.optimizer
        self.opt_d = Adam(self.model.parameters("discriminator"), opt.lr_d, opt.betas)
        g_params = {**self.model.parameters("mapper"), **self.model.parameters("generator")}
        if config.mode.quantized:
            g_params.update(self.model.parameters("codebook"))
        self.opt_g = Adam(g_params, opt.lr_g, opt.betas)

    def initialize_codebook(self) -> CBIReport:
        """Run codebook initialization in place (requires a [cbi] section)."""
        settings = self.config.cbi
        if settings is None:
            raise ValueError("codebook initialization needs a [cbi] section")
        if self.provider is None:
            self.provider = build_provider(
                settings.provider, self.dataset.data_dim, self.streams.int_seed("provider")
            )
        data = None if self.provider.kind == "file_backed" else self.dataset.samples
        _, report, self.embedder = run_cbi(
            self.model,
            settings,
            self.provider,
            data,
            self.streams.generator("cbi"),
            weights=self.config.weights,
            use_uniformity=self.config.codebook.use_uniformity,
            progress=self.config.progress,
        )
        write_json_artifact(report.model_dump(), self.output_dir / "cbi_report.json")
        return report

    def _abort(self, step: int, phase: str, terms: dict[str, float], opt: Adam) -> None:
        error = NumericAbortError(step, terms, opt.grad_norms(), phase=phase)
        write_json_artifact(error.diagnostics(), self.output_dir / "abort.json")
        logger.error(str(error))
        raise error

    @staticmethod
    def _finite(terms: dict[str, float], opt: Adam) -> bool:
        grads_ok = all(math.isfinite(v) for v in opt.grad_norms().values())
        return grads_ok and all(math.isfinite(v) for v in terms.values())

    def discriminator_step(self, step: int) -> dict[str, float]:
        batch = self.config.optimizer.batch_size
        x_real = self.dataset.batch(self.data_rng, batch)
        z = self.latent_rng.standard_normal((batch, self.config.model.d_z))
        total, terms = discriminator_objective(
            self.model, self.config, x_real, z, self.perturb_rng
        )
        self.opt_d.zero_grad()
        total.backward()
        if not self._finite(terms, self.opt_d):
            self._abort(step, "discriminator", terms, self.opt_d)
        self.opt_d.step()
        return terms

    def generator_step(self, step: int) -> dict[str, float]:
        shape = (self.config.optimizer.batch_size, self.config.model.d_z)
        z = self.latent_rng.standard_normal(shape)
        total, terms, _ = generator_objective(self.model, self.config, z, self.perturb_rng)
        self.opt_g.zero_grad()
        total.backward()
        if not self._finite(terms, self.opt_g):
            self._abort(step, "generator", terms, self.opt_g)
        self.opt_g.step()
        return terms

    def save(self, step: int, path: Path) -> Path:
        extra = self.embedder.parameters() if self.embedder is not None else {}
        return save_checkpoint(
            self.model,
            path,
            config_json=self.config.to_json(),
            step=step,
            extra={name: p.data for name, p in extra.items()},
        )

    def measure_sensitivity(self) -> float | None:
        """
        Provider-space distance between samples from z and z + eps after training.

        Only runs with a provider that featurizes raw samples report it; the
        value is written to sensitivity.json.
        """
        if self.provider is None or self.provider.kind == "file_backed":
            return None
        config = self.config
        sigma = config.weights.sigma
        rng = self.streams.generator("perturbation")
        z = rng.standard_normal((config.eval.samples, config.model.d_z))
        value = perturbation_sensitivity(
            self.model, self.provider, z, sigma, rng, quantized=config.mode.quantized
        )
        write_json_artifact(
            {"sigma": sigma, "sensitivity": value}, self.output_dir / "sensitivity.json"
        )
        logger.info(f"Perturbation sensitivity at sigma={sigma:g}: {value:.4f}")
        return value

    def record(self, step: int, terms: LossBreakdown) -> MetricsRow:
        row = evaluate_model(self.model, self.config, self.dataset, self.eval_rng, step, terms)
        append_csv_row(self.metrics_path, row.as_record(), METRICS_COLUMNS)
        logger.debug(f"step {step}: {terms.computed()}")
        return row

    def run(self) -> TrainResult:
        """Train for the configured number of steps and write all artifacts."""
        config = self.config
        self.output_dir.mkdir(parents=True, exist_ok=True)
        if self.metrics_path.exists():
            logger.warning(f"Replacing existing metrics file {self.metrics_path}")
            self.metrics_path.unlink()
        logger.info(
            f"Training {config.mode.value} for {config.optimizer.steps} steps "
            f"(seed={config.seed}, output={self.output_dir})"
        )

        cbi_report = None
        if config.mode.value == "sq_gan_cbi":
            cbi_report = self.initialize_codebook()

        rows: list[MetricsRow] = []
        steps = config.optimizer.steps
        terms = LossBreakdown()
        for step in tqdm(range(1, steps + 1), desc="train", disable=not config.progress):
            terms = LossBreakdown(**self.discriminator_step(step), **self.generator_step(step))
            if step % config.eval.interval == 0 or step == steps:
                rows.append(self.record(step, terms))
            if config.checkpoint.interval and step % config.checkpoint.interval == 0:
                self.save(step, self.output_dir / "checkpoints" / f"step_{step:07d}.ckpt")
        if steps == 0:
            rows.append(self.record(0, terms))

        final = self.save(steps, self.output_dir / FINAL_CHECKPOINT)
        sensitivity = self.measure_sensitivity()
        logger.info(f"Training finished: {len(rows)} metric rows in {self.metrics_path}")
        return TrainResult(
            model=self.model,
            metrics_path=self.metrics_path,
            checkpoint_path=final,
            rows=rows,
            cbi_report=cbi_report,
            embedder=self.embedder,
            sensitivity=sensitivity,
        )


def train(config: TrainConfig, provider: FeatureProvider | None = None) -> TrainResult:
    """Run one experiment end to end."""
    return Trainer(config, provider).run()


def restore_model(path: str | Path) -> tuple[GanModel, TrainConfig, int]:
    """
    Rebuild a model from a checkpoint and the config stored in its header.

    Returns:
        Tuple of (model, config, step)
    """
    checkpoint = load_checkpoint(path)
    config = TrainConfig.model_validate_json(checkpoint.config_json)
    model = build_model(config)
    checkpoint.restore(model)
    return model, config, checkpoint.step


def evaluate_checkpoint(path: str | Path) -> MetricsRow:
    """
    Evaluate a stored model: loss terms on one batch plus every metric.

    Draws come from fresh evaluation and perturbation streams of the stored
    seed, so repeated evaluations of the same file agree.

    Args:
        path: Checkpoint written by a training run

    Returns:
        MetricsRow at the checkpoint's step
    """
    model, config, step = restore_model(path)
    dataset = config.dataset.build()
    streams = SeedStreams(config.seed)
    rng = streams.generator("eval")
    perturb_rng = streams.generator("perturbation")
    batch = config.optimizer.batch_size
    x_real = dataset.batch(rng, batch)
    z = rng.standard_normal((batch, config.model.d_z))
    _, d_terms = discriminator_objective(model, config, x_real, z, perturb_rng)
    _, g_terms, _ = generator_objective(model, config, z, perturb_rng)
    return evaluate_model(model, config, dataset, rng, step, LossBreakdown(**d_terms, **g_terms))
