"""
Codebook initialization by optimal-transport alignment.

Before adversarial training, the codebook, its projection, the mapping network
and the code embedder are trained on

    L_sq + L_uf + L_ot

where L_ot aligns embedded code tokens with frozen data features. Each code
sample i is paired with data sample i mod n; the transport problem runs over
token positions (s code tokens against l data tokens) and the per-pair losses
are averaged.
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from tqdm import tqdm

from sqlab.autodiff import Tensor
from sqlab.cbi.features import CodeEmbedder, FeatureProvider, FeatureSet, embed_codes, embed_data
from sqlab.config.schema import CBISettings
from sqlab.exceptions import DimensionError, NumericAbortError
from sqlab.networks.model import GanModel, map_style
from sqlab.objectives.consistency import perturb
from sqlab.objectives.total import LossWeights
from sqlab.quantizer import Codebook, quantize_style, sq_loss, uniformity_loss, usage
from sqlab.training.optim import Adam
from sqlab.training.steps import sample
from sqlab.transport import CostMatrix, Metric, ot_loss, pairwise_cost, solve, uniform_marginal
from sqlab.utils.stats import is_non_increasing, window_means


logger = logging.getLogger(__name__)

USAGE_SAMPLE_SIZE = 1024


class CBIStepRecord(BaseModel):
    """Loss terms and solver diagnostics of one initialization step."""

    step: int = Field(..., ge=0)
    sq: float
    uniformity: float | None = None
    ot: float | None = None
    total: float
    max_marginal_error: float = Field(default=0.0, description="Worst Sinkhorn row violation")
    sinkhorn_iterations: int = Field(default=0, description="Largest iteration count")


class CBIReport(BaseModel):
    """Loss curves and codebook usage of an initialization run."""

    steps: int = Field(..., ge=0)
    records: list[CBIStepRecord] = Field(default_factory=list)
    usage_before: float = Field(..., description="Usage of the random codebook")
    usage_after: float = Field(..., description="Usage after initialization")

    def trace(self) -> pd.DataFrame:
        """Per-step values as a DataFrame indexed by step."""
        if not self.records:
            return pd.DataFrame(columns=list(CBIStepRecord.model_fields)).set_index("step")
        return pd.DataFrame([r.model_dump() for r in self.records]).set_index("step")

    def smoothed_ot_is_non_increasing(self, window: int = 50, tol: float = 0.0) -> bool:
        """Whether consecutive ``window``-step means of L_ot never rise by more than ``tol``."""
        ot = self.trace()["ot"].dropna().to_numpy()
        return is_non_increasing(window_means(ot, window), tol)


def align_cost(
    t: Tensor | np.ndarray, f: Tensor | np.ndarray, metric: Metric = "cosine"
) -> CostMatrix:
    """
    s x l token cost matrix between one code sample and one data sample.

    Args:
        t: Code tokens, shape (s, d_e)
        f: Data tokens, shape (l, d_e)
        metric: 'euclidean' or 'cosine'

    Returns:
        CostMatrix (uniform marginals 1/s and 1/l go with it)
    """
    t_data = t.data if isinstance(t, Tensor) else t
    f_data = f.data if isinstance(f, Tensor) else f
    if t_data.shape[-1] != f_data.shape[-1]:
        raise DimensionError(f"token widths differ: {t_data.shape} vs {f_data.shape}")
    return pairwise_cost(t_data, f_data, metric)


def alignment_loss(
    codes: FeatureSet, data: FeatureSet, settings: CBISettings
) -> tuple[Tensor, float, int]:
    """
    Mean transport-weighted distance over round-robin (code, data) pairs.

    Returns:
        Tuple of (loss, worst marginal error, largest iteration count)
    """
    if codes.d_e != data.d_e:
        raise DimensionError(f"code features have d_e={codes.d_e}, data features d_e={data.d_e}")
    if codes.batch_size == 0 or data.batch_size == 0:
        raise DimensionError("alignment needs at least one code and one data sample")
    p = uniform_marginal(codes.tokens)
    q = uniform_marginal(data.tokens)
    pairs: list[Tensor] = []
    worst_error, most_iters = 0.0, 0
    for i in range(codes.batch_size):
        t = codes.sample(i)
        f = data.features.data[i % data.batch_size]
        cost = align_cost(t, f, settings.metric)
        state = solve(
            cost,
            p,
            q,
            settings.eta,
            settings.tol,
            settings.max_iter,
            log_domain=settings.log_domain,
        )
        worst_error = max(worst_error, state.marginal_error)
        most_iters = max(most_iters, state.iterations)
        pairs.append(ot_loss(t, f, state.plan, settings.metric))
    total = sum(pairs[1:], pairs[0])
    return total / float(codes.batch_size), worst_error, most_iters


def cbi_step(
    model: GanModel,
    embedder: CodeEmbedder,
    batch_z: np.ndarray,
    batch_x: np.ndarray,
    settings: CBISettings,
    optimizer: Adam,
    weights: LossWeights | None = None,
    use_uniformity: bool = True,
    step: int = 0,
) -> CBIStepRecord:
    """
    One initialization update of codebook, projection, f_W and embedder.

    Args:
        model: Model whose mapper and codebook are trained
        embedder: Code embedder (its MLP is trained)
        batch_z: Latents, shape (m, d_z)
        batch_x: Data batch (row indices for a file-backed provider)
        settings: Alignment settings
        optimizer: Adam over mapper, codebook and embedder parameters
        weights: Supplies the commitment weight beta
        use_uniformity: Include the uniformity term
        step: Step index for records and diagnostics

    Returns:
        Per-term values of the step

    Raises:
        NumericAbortError: If any term is non-finite (no update is applied)
    """
    weights = weights or LossWeights()
    q = quantize_style(map_style(batch_z, model), model.codebook)
    sq = sq_loss(q, weights.beta)
    total = sq
    terms = {"sq": sq.item()}

    uniformity = None
    if use_uniformity:
        uniformity = uniformity_loss(model.codebook)
        terms["uniformity"] = uniformity.item()
        total = total + uniformity

    ot = None
    error, iters = 0.0, 0
    if settings.ot_weight > 0:
        codes = embed_codes(q, embedder)
        data = embed_data(batch_x, embedder.provider)
        ot, error, iters = alignment_loss(codes, data, settings)
        terms["ot"] = ot.item()
        total = total + (ot if settings.ot_weight == 1.0 else settings.ot_weight * ot)

    terms["total"] = total.item()
    if not all(np.isfinite(v) for v in terms.values()):
        raise NumericAbortError(step, terms, optimizer.grad_norms(), phase="cbi")

    optimizer.zero_grad()
    total.backward()
    optimizer.step()
    return CBIStepRecord(
        step=step,
        sq=terms["sq"],
        uniformity=terms.get("uniformity"),
        ot=terms.get("ot"),
        total=terms["total"],
        max_marginal_error=error,
        sinkhorn_iterations=iters,
    )


def codebook_usage(model: GanModel, z: np.ndarray) -> float:
    """Fraction of codes selected when quantizing f_W(z)."""
    w = map_style(z, model).data
    return usage(quantize_style(w, model.codebook), model.codebook.k)


def run_cbi(
    model: GanModel,
    settings: CBISettings,
    provider: FeatureProvider,
    data: np.ndarray | None,
    rng: np.random.Generator,
    embedder: CodeEmbedder | None = None,
    weights: LossWeights | None = None,
    use_uniformity: bool = True,
    progress: bool = False,
) -> tuple[Codebook, CBIReport, CodeEmbedder]:
    """
    Run codebook initialization for ``settings.steps`` steps.

    Args:
        model: Model whose mapper and codebook are initialized in place
        settings: Schedule, batch sizes and alignment settings
        provider: Frozen feature provider
        data: Dataset samples; None selects file-backed feature rows directly
        rng: Source for latents and batches
        embedder: Code embedder (built from ``settings`` when omitted)
        weights: Supplies the commitment weight beta
        use_uniformity: Include the uniformity term
        progress: Show a progress bar

    Returns:
        Tuple of (codebook, report, embedder)
    """
    if embedder is None:
        embedder = CodeEmbedder(
            model.dims.d_c,
            provider,
            hidden=settings.embedder_hidden,
            depth=settings.embedder_depth,
            seed=int(rng.integers(2**31 - 1)),
        )
    if data is None:
        if provider.kind != "file_backed":
            raise ValueError(f"{provider.kind} provider needs data samples")
        source = np.arange(provider.size)  # type: ignore[attr-defined]
    else:
        source = np.asarray(data)

    z_usage = rng.standard_normal((USAGE_SAMPLE_SIZE, model.dims.d_z))
    usage_before = codebook_usage(model, z_usage)
    params = {
        **model.parameters("mapper"),
        **model.parameters("codebook"),
        **embedder.parameters(),
    }
    optimizer = Adam(params, lr=settings.lr)
    logger.info(
        f"Codebook initialization: {settings.steps} steps, k={model.codebook.k}, "
        f"metric={settings.metric}, eta={settings.eta:g}"
    )

    records = []
    for step in tqdm(range(settings.steps), desc="cbi", disable=not progress):
        batch_z = rng.standard_normal((settings.code_batch_size, model.dims.d_z))
        batch_x = source[rng.integers(0, len(source), size=settings.batch_size)]
        record = cbi_step(
            model, embedder, batch_z, batch_x, settings, optimizer, weights, use_uniformity, step
        )
        records.append(record)

    report = CBIReport(
        steps=settings.steps,
        records=records,
        usage_before=usage_before,
        usage_after=codebook_usage(model, z_usage),
    )
    logger.info(
        f"Codebook initialization done: usage {report.usage_before:.3f} -> {report.usage_after:.3f}"
    )
    return model.codebook, report, embedder


def perturbation_sensitivity(
    model: GanModel,
    provider: FeatureProvider,
    z: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
    quantized: bool = True,
) -> float:
    """
    Mean provider-space distance between samples generated from z and z + eps.

    Args:
        model: Trained model
        provider: Frozen provider able to featurize raw samples
        z: Latents, shape (n, d_z)
        sigma: Perturbation strength
        rng: Source for eps
        quantized: Generate through the quantizer

    Returns:
        Mean Euclidean distance between matching feature tokens
    """
    if provider.kind == "file_backed":
        raise ValueError("perturbation sensitivity needs a provider that featurizes samples")

    def features(latents: np.ndarray) -> np.ndarray:
        return provider.extract(sample(latents, model, quantized)).features.data

    a = features(z)
    b = features(perturb(z, sigma, rng))
    return float(np.linalg.norm(a - b, axis=2).mean())
