"""Unsupervised single-object localisation by iterative spectral filtering of proposals."""
from .boxes import BBox, BoxError
from .evaluation import CorLocReport, corloc_dataset, iou, load_ground_truth
from .grouping import LocalizationResult
from .pipeline import PipelineConfig, localize, localize_image
from .proposals import ProposalSet, combine_scores, generate_proposals, ingest_proposals
from .spectral import iterate_filter

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "BoxError",
    "CorLocReport",
    "LocalizationResult",
    "PipelineConfig",
    "ProposalSet",
    "combine_scores",
    "corloc_dataset",
    "generate_proposals",
    "ingest_proposals",
    "iou",
    "iterate_filter",
    "load_ground_truth",
    "localize",
    "localize_image",
]
