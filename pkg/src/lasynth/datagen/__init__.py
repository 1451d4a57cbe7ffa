"""Random restricted-C programs with sampled IO pairs."""

from .config import PRESETS, GenConfig, SamplerProfile
from .dataset import (
    Dataset, DatasetStats, Episode, GenerationStalled, SchemaMismatch, compute_stats,
    generate_dataset, generate_episode, generate_split, make_episode, read_dataset,
    write_class_csv, write_dataset, write_stats_csv,
)
from .sampler import LoopMode, has_for, is_degenerate, is_trivial, random_input, sample_candidate, sample_io

__all__ = [
    "PRESETS", "GenConfig", "SamplerProfile", "Dataset", "DatasetStats", "Episode",
    "GenerationStalled", "SchemaMismatch", "compute_stats", "generate_dataset",
    "generate_episode", "generate_split", "make_episode", "read_dataset",
    "write_class_csv", "write_dataset", "write_stats_csv", "LoopMode", "has_for",
    "is_degenerate", "is_trivial", "random_input", "sample_candidate", "sample_io",
]
