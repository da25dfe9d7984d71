"""Tests for feature providers, code embedding and transport-based codebook initialization."""

from pathlib import Path

import numpy as np
import pytest

from sqlab.autodiff import Tensor, reduce_sum
from sqlab.cbi import (
    CBIReport,
    CBIStepRecord,
    CodeEmbedder,
    FeatureSet,
    FileBackedProvider,
    FrozenRandomMLPProvider,
    VocabularyProvider,
    align_cost,
    alignment_loss,
    cbi_step,
    embed_codes,
    embed_data,
    perturbation_sensitivity,
    read_feature_file,
    run_cbi,
    write_feature_file,
)
from sqlab.config import CBISettings
from sqlab.data import Dataset
from sqlab.exceptions import DimensionError, NumericAbortError
from sqlab.networks import GanModel, MLPSpec, ModelDims, map_style
from sqlab.quantizer import Codebook, quantize_style
from sqlab.training import Adam
from sqlab.transport import ot_loss, solve, uniform_marginal


@pytest.fixture
def provider() -> FrozenRandomMLPProvider:
    """Frozen provider with three 4-wide tokens per sample."""
    return FrozenRandomMLPProvider(2, d_e=4, tokens=3, hidden=8, seed=0)


@pytest.fixture
def embedder(provider: FrozenRandomMLPProvider) -> CodeEmbedder:
    """Embedder from width-2 codes into the provider space."""
    return CodeEmbedder(2, provider, hidden=8, seed=1)


def test_feature_file_round_trip(tmp_path: Path, rng: np.random.Generator) -> None:
    """Test the header-plus-float32 feature format."""
    features = rng.normal(size=(5, 3, 4))
    path = tmp_path / "features.bin"
    write_feature_file(path, features)

    loaded = read_feature_file(path)

    assert path.read_bytes().startswith(b"5 3 4\n")
    assert loaded.dtype == np.float32
    np.testing.assert_array_equal(loaded, features.astype(np.float32))


def test_feature_file_rejects_malformed_input(tmp_path: Path) -> None:
    """Test header and payload checks."""
    bad_header = tmp_path / "header.bin"
    bad_header.write_bytes(b"5 three 4\n" + b"\x00" * 240)
    short = tmp_path / "short.bin"
    short.write_bytes(b"2 2 2\n" + b"\x00" * 12)

    with pytest.raises(ValueError, match="three integers"):
        read_feature_file(bad_header)
    with pytest.raises(ValueError, match="payload bytes"):
        read_feature_file(short)


def test_file_backed_provider_selects_rows(tmp_path: Path, rng: np.random.Generator) -> None:
    """Test indexing and shape checks of stored features."""
    features = rng.normal(size=(6, 2, 3))
    path = tmp_path / "features.bin"
    write_feature_file(path, features)

    provider = FileBackedProvider(path, expected_shape=(6, 2, 3))
    selected = provider.extract(np.array([4, 0]))

    assert (provider.size, provider.tokens, provider.d_e) == (6, 2, 3)
    np.testing.assert_allclose(selected.features.data[0], features[4], rtol=1e-6)
    with pytest.raises(DimensionError, match="declared"):
        FileBackedProvider(path, expected_shape=(6, 2, 4))
    with pytest.raises(IndexError):
        provider.extract(np.array([6]))
    with pytest.raises(DimensionError, match="integer index"):
        provider.extract(np.array([0.5]))


def test_frozen_provider_is_deterministic_and_frozen(
    provider: FrozenRandomMLPProvider, rng: np.random.Generator
) -> None:
    """Test that data features are seeded constants."""
    x = rng.normal(size=(5, 2))
    first = embed_data(x, provider)
    again = FrozenRandomMLPProvider(2, d_e=4, tokens=3, hidden=8, seed=0).extract(x)

    assert (first.batch_size, first.tokens, first.d_e) == (5, 3, 4)
    assert first.source == "data"
    assert not first.requires_grad
    np.testing.assert_array_equal(first.features.data, again.features.data)
    with pytest.raises(DimensionError):
        provider.extract(rng.normal(size=(5, 3)))


def test_vocabulary_provider_composes_known_words(gauss_dataset: Dataset) -> None:
    """Test that data tokens are vocabulary rows, nearest mixture mode first."""
    vocab = VocabularyProvider(2, d_e=6, tokens=3, words=8, seed=0)
    features = embed_data(gauss_dataset.samples[:40], vocab).features.data

    np.testing.assert_allclose(np.linalg.norm(vocab.vocabulary, axis=1), 1.0)
    np.testing.assert_array_equal(features[:, 0], vocab.vocabulary[gauss_dataset.labels[:40]])
    indices = vocab.word_indices(gauss_dataset.samples[:40])
    assert all(len(set(row)) == 3 for row in indices.tolist())
    tokens = Tensor(np.ones((2, 6)))
    assert vocab.encode_tokens(tokens) is tokens
    with pytest.raises(ValueError, match="exceed"):
        VocabularyProvider(2, tokens=9, words=8)


def test_code_features_carry_gradients(
    small_model: GanModel, embedder: CodeEmbedder, rng: np.random.Generator
) -> None:
    """Test that code features reach the embedder, the codes and f_W but not the provider."""
    q = quantize_style(map_style(rng.normal(size=(6, 4)), small_model), small_model.codebook)
    codes = embed_codes(q, embedder)
    reduce_sum(codes.features).backward()

    assert (codes.batch_size, codes.tokens, codes.d_e) == (6, 2, 4)
    assert codes.requires_grad
    assert small_model.codebook.codes.grad is not None
    assert small_model.mapper.weights[0].grad is not None
    assert all(p.grad is not None for p in embedder.parameters().values())
    provider = embedder.provider
    assert isinstance(provider, FrozenRandomMLPProvider)
    assert all(p.grad is None for p in provider.trunk.parameters().values())


def test_embed_codes_checks_code_width(
    small_model: GanModel, provider: FrozenRandomMLPProvider, rng: np.random.Generator
) -> None:
    """Test that the embedder input width must match d_c."""
    q = quantize_style(rng.normal(size=(2, 4)), small_model.codebook)

    with pytest.raises(DimensionError, match="width"):
        embed_codes(q, CodeEmbedder(3, provider))


def test_align_cost_shapes(rng: np.random.Generator) -> None:
    """Test the s x l token cost."""
    cost = align_cost(rng.normal(size=(2, 4)), rng.normal(size=(3, 4)), "cosine")

    assert cost.shape == (2, 3)
    assert cost.metric == "cosine"
    with pytest.raises(DimensionError):
        align_cost(rng.normal(size=(2, 4)), rng.normal(size=(3, 5)))


def test_alignment_loss_pairs_round_robin(
    small_model: GanModel,
    embedder: CodeEmbedder,
    provider: FrozenRandomMLPProvider,
    rng: np.random.Generator,
) -> None:
    """Test that code sample i is aligned with data sample i mod n."""
    settings = CBISettings(eta=0.1, tol=1e-9, max_iter=5000)
    q = quantize_style(map_style(rng.normal(size=(5, 4)), small_model), small_model.codebook)
    codes = embed_codes(q, embedder)
    data = embed_data(rng.normal(size=(2, 2)), provider)

    loss, error, iterations = alignment_loss(codes, data, settings)

    expected = 0.0
    for i in range(5):
        t = codes.sample(i)
        f = data.features.data[i % 2]
        cost = align_cost(t, f, "cosine").normalized()
        state = solve(cost, uniform_marginal(2), uniform_marginal(3), 0.1, 1e-9, 5000)
        expected += ot_loss(t, f, state.plan, "cosine").item()
    assert loss.item() == pytest.approx(expected / 5)
    assert error <= 1e-9
    assert iterations >= 1


def test_alignment_loss_rejects_empty_batch(
    embedder: CodeEmbedder, provider: FrozenRandomMLPProvider, rng: np.random.Generator
) -> None:
    """Test that an empty code batch is refused."""
    codes = FeatureSet(Tensor(np.zeros((0, 3, 4))), "codes")
    data = embed_data(rng.normal(size=(2, 2)), provider)

    with pytest.raises(DimensionError, match="at least one"):
        alignment_loss(codes, data, CBISettings())


def test_cbi_step_updates_parameters(
    small_model: GanModel, embedder: CodeEmbedder, gauss_dataset: Dataset
) -> None:
    """Test one initialization update and its record."""
    params = {
        **small_model.parameters("mapper"),
        **small_model.parameters("codebook"),
        **embedder.parameters(),
    }
    before = {name: p.data.copy() for name, p in params.items()}
    rng = np.random.default_rng(0)

    record = cbi_step(
        small_model,
        embedder,
        rng.normal(size=(4, 4)),
        gauss_dataset.samples[:4],
        CBISettings(),
        Adam(params, lr=1e-2),
        step=3,
    )

    assert isinstance(record, CBIStepRecord)
    assert record.step == 3
    assert record.ot is not None and record.uniformity is not None
    assert record.total == pytest.approx(record.sq + record.uniformity + record.ot)
    assert not np.array_equal(before["codebook.codes"], small_model.codebook.codes.data)
    assert not np.array_equal(before["embedder.0.weight"], embedder.mlp.weights[0].data)
    assert not np.array_equal(before["mapper.0.weight"], small_model.mapper.weights[0].data)
    assert all(p.grad is None for p in small_model.parameters("generator").values())


def test_cbi_step_without_transport_term(
    small_model: GanModel, embedder: CodeEmbedder, gauss_dataset: Dataset
) -> None:
    """Test ot_weight = 0 and use_uniformity = False."""
    rng = np.random.default_rng(0)
    record = cbi_step(
        small_model,
        embedder,
        rng.normal(size=(4, 4)),
        gauss_dataset.samples[:4],
        CBISettings(ot_weight=0.0),
        Adam(small_model.parameters("codebook")),
        use_uniformity=False,
    )

    assert record.ot is None
    assert record.uniformity is None
    assert record.total == pytest.approx(record.sq)


def test_cbi_step_aborts_on_non_finite_loss(
    small_model: GanModel, embedder: CodeEmbedder, gauss_dataset: Dataset
) -> None:
    """Test that a NaN codebook stops initialization without updating."""
    small_model.codebook.codes.data = np.full((8, 2), np.nan)
    mapper_before = small_model.mapper.weights[0].data.copy()

    with pytest.raises(NumericAbortError) as excinfo:
        cbi_step(
            small_model,
            embedder,
            np.ones((4, 4)),
            gauss_dataset.samples[:4],
            CBISettings(ot_weight=0.0),
            Adam(small_model.parameters("mapper")),
            use_uniformity=False,
            step=7,
        )
    assert excinfo.value.phase == "cbi"
    assert excinfo.value.step == 7
    np.testing.assert_array_equal(small_model.mapper.weights[0].data, mapper_before)


def test_run_cbi_reports_curves_and_usage(
    small_model: GanModel,
    provider: FrozenRandomMLPProvider,
    gauss_dataset: Dataset,
    tiny_cbi_settings: CBISettings,
) -> None:
    """Test a short initialization run end to end."""
    settings = tiny_cbi_settings.model_copy(update={"steps": 8})
    codebook, report, embedder = run_cbi(
        small_model, settings, provider, gauss_dataset.samples, np.random.default_rng(0)
    )

    assert codebook is small_model.codebook
    assert isinstance(report, CBIReport)
    assert len(report.records) == 8
    assert 0.0 < report.usage_before <= 1.0
    assert 0.0 < report.usage_after <= 1.0
    trace = report.trace()
    assert list(trace.index) == list(range(8))
    assert trace["ot"].notna().all()
    assert embedder.d_c == 2


def test_run_cbi_with_file_backed_provider(
    small_model: GanModel, tmp_path: Path, rng: np.random.Generator
) -> None:
    """Test initialization from stored features selected by row index."""
    path = tmp_path / "features.bin"
    write_feature_file(path, rng.normal(size=(10, 3, 4)))
    provider = FileBackedProvider(path)
    settings = CBISettings(steps=3, batch_size=4, code_batch_size=4, embedder_hidden=8)

    _, report, _ = run_cbi(small_model, settings, provider, None, np.random.default_rng(0))

    assert len(report.records) == 3
    with pytest.raises(ValueError, match="needs data samples"):
        run_cbi(
            small_model,
            settings,
            FrozenRandomMLPProvider(2, d_e=4),
            None,
            np.random.default_rng(0),
        )


def test_empty_report_trace() -> None:
    """Test the trace of a zero-step run."""
    report = CBIReport(steps=0, usage_before=0.5, usage_after=0.5)

    assert report.trace().empty


def test_smoothed_trace_check() -> None:
    """Test the windowed monotonicity check on a synthetic curve."""
    records = [
        CBIStepRecord(step=i, sq=0.0, ot=1.0 / (1 + i) + 0.01 * (-1) ** i, total=0.0)
        for i in range(200)
    ]
    report = CBIReport(steps=200, records=records, usage_before=0.1, usage_after=0.9)

    assert report.smoothed_ot_is_non_increasing(window=50)
    rising = CBIReport(
        steps=100,
        records=[CBIStepRecord(step=i, sq=0.0, ot=float(i), total=0.0) for i in range(100)],
        usage_before=0.1,
        usage_after=0.1,
    )
    assert not rising.smoothed_ot_is_non_increasing(window=50)


def test_perturbation_sensitivity(
    small_model: GanModel, provider: FrozenRandomMLPProvider, tmp_path: Path
) -> None:
    """Test the feature-space distance between samples from z and z + eps."""
    z = np.random.default_rng(0).normal(size=(16, 4))
    value = perturbation_sensitivity(small_model, provider, z, 0.5, np.random.default_rng(1))

    assert value >= 0.0
    path = tmp_path / "features.bin"
    write_feature_file(path, np.ones((2, 1, 4)))
    with pytest.raises(ValueError, match="featurizes"):
        perturbation_sensitivity(
            small_model, FileBackedProvider(path), z, 0.5, np.random.default_rng(1)
        )


@pytest.mark.slow
def test_cbi_raises_usage_and_lowers_transport_loss(gauss_dataset: Dataset) -> None:
    """Test codebook initialization at k = 256: usage goes up and smoothed L_ot goes down."""
    dims = ModelDims(d_z=16, d_w=16, s=4, data_dim=2)
    model = GanModel.build(
        dims,
        MLPSpec.stack(16, 64, 16, depth=3, seed=1),
        MLPSpec.stack(16, 64, 2, depth=3, seed=2),
        MLPSpec.stack(2, 64, 1, depth=3, seed=3),
        Codebook.random(256, 4, np.random.default_rng(4)),
    )
    settings = CBISettings(steps=2000, batch_size=16, code_batch_size=16, lr=1e-3)
    big_provider = FrozenRandomMLPProvider(2, d_e=16, tokens=4, seed=0)

    _, report, _ = run_cbi(
        model, settings, big_provider, gauss_dataset.samples, np.random.default_rng(0)
    )

    ot = report.trace()["ot"].to_numpy()
    assert report.usage_after > report.usage_before
    assert report.smoothed_ot_is_non_increasing(window=50, tol=0.02)
    assert ot[-50:].mean() < ot[:50].mean()
