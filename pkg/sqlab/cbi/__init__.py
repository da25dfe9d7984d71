"""Codebook initialization by optimal-transport alignment with frozen features."""

from sqlab.cbi.alignment import (
    CBIReport,
    CBIStepRecord,
    align_cost,
    alignment_loss,
    cbi_step,
    codebook_usage,
    perturbation_sensitivity,
    run_cbi,
)
from sqlab.cbi.features import (
    CodeEmbedder,
    FeatureProvider,
    FeatureSet,
    FileBackedProvider,
    FrozenRandomMLPProvider,
    VocabularyProvider,
    embed_codes,
    embed_data,
    read_feature_file,
    write_feature_file,
)


__all__ = [
    "CBIReport",
    "CBIStepRecord",
    "CodeEmbedder",
    "FeatureProvider",
    "FeatureSet",
    "FileBackedProvider",
    "FrozenRandomMLPProvider",
    "VocabularyProvider",
    "align_cost",
    "alignment_loss",
    "cbi_step",
    "codebook_usage",
    "embed_codes",
    "embed_data",
    "perturbation_sensitivity",
    "read_feature_file",
    "run_cbi",
    "write_feature_file",
]
