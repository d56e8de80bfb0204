"""Indexed B-rep encoding, masked sampling, reconstruction and deduplication."""
from .core import (DEFAULT_BITS, IndexedBRep, MergedVertexCollision, QuantGrid, StructureError, canonicalize,
                   corpus_filter, dequantize, from_points, quantize, structural_check)
from .dedup import ContentHash, content_hash, metrics
from .geom import Tolerances
from .kernel import SolidModel, ValidityReport, reconstruct
from .sampler import NGramScorer, SamplerConfig, UniformScorer, generate, generate_many
from .tokens import GrammarViolation, TokenSequence, assemble, flatten, replay_validate, unflatten

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BITS", "IndexedBRep", "MergedVertexCollision", "QuantGrid", "StructureError", "canonicalize",
    "corpus_filter", "dequantize", "from_points", "quantize", "structural_check",
    "ContentHash", "content_hash", "metrics", "Tolerances", "SolidModel", "ValidityReport", "reconstruct",
    "NGramScorer", "SamplerConfig", "UniformScorer", "generate", "generate_many",
    "GrammarViolation", "TokenSequence", "assemble", "flatten", "replay_validate", "unflatten",
]
