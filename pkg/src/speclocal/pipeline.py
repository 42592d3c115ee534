"""End-to-end localisation for one image and its result record."""
from dataclasses import asdict, dataclass
import json
import logging
import os
from pathlib import Path
import tempfile

import numpy as np

from . import features as feat
from .boxes import BBox
from .grouping import LocalizationResult, knn_groups, score_groups, select_and_fuse
from .imgproc import compute_saliency, load_image, load_saliency, to_grayscale, validate_image
from .proposals import ProposalSet, combine_scores, generate_proposals, ingest_proposals
from .spectral import iterate_filter

log = logging.getLogger(__name__)

RECORD_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    N: int = 1000
    T: int = 100
    k: int = 10
    C: int = 5
    sigma_scale: float = 0.05
    seed: int = 42
    codebook_words: int = 1000
    dense_stride: int = 4
    max_iters: int = 50

    def __post_init__(self):
        if not self.N > self.T >= 2:
            raise ConfigError(f"need N > T >= 2, got N={self.N}, T={self.T}")
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        if self.C < 1:
            raise ConfigError("C must be >= 1")
        if not self.sigma_scale > 0:
            raise ConfigError("sigma_scale must be positive")
        if self.codebook_words < 1 or self.dense_stride < 1 or self.max_iters < 1:
            raise ConfigError("codebook_words, dense_stride and max_iters must be >= 1")


def _stats(v):
    if v is None or len(v) == 0:
        return None
    return {"min": float(np.min(v)), "mean": float(np.mean(v)), "max": float(np.max(v))}


def localize_image(img, config=PipelineConfig(), proposals=None, saliency=None, image_id="image",
                   descriptor_dump=None):
    """Run proposals, scoring, spectral filtering and grouping on an in-memory image.

    ``proposals`` may be a path to a proposal file or a ready
    :class:`ProposalSet`; ``saliency`` a path to a saliency map or an array.
    Returns ``(LocalizationResult, scored ProposalSet)``.
    """
    img = validate_image(img)
    height, width = img.shape[:2]

    if proposals is None:
        pset = generate_proposals(img, config.N, config.seed, image_id=image_id)
    elif isinstance(proposals, ProposalSet):
        pset = proposals
    else:
        pset = ingest_proposals(proposals, (width, height), config.N, image_id=image_id)

    if saliency is None:
        smap = compute_saliency(img)
    elif isinstance(saliency, (str, os.PathLike)):
        smap = load_saliency(saliency, (height, width))
    else:
        smap = saliency
    pset = combine_scores(pset, smap)

    if len(pset) == 0:
        return LocalizationResult(image_id, None, pset, status="no-proposals"), pset
    if len(pset) == 1:
        return LocalizationResult(image_id, pset[0].box, pset, status="single-proposal"), pset

    hog = feat.hog_features(img, pset.boxes)
    filtered = iterate_filter(pset, hog, config.T, config.max_iters, config.sigma_scale)
    survivors = filtered.survivors
    log.info("%s: %d -> %d proposals (%s)", image_id, len(pset), len(survivors), filtered.stop_reason)

    if len(survivors) < 2:
        return LocalizationResult(
            image_id, survivors[0].box, survivors, [], filtered.trace, filtered.stop_reason,
            status="single-survivor",
        ), pset

    field = feat.extract_dense_descriptors(to_grayscale(img), config.dense_stride)
    if descriptor_dump is not None:
        feat.dump_descriptors(field, descriptor_dump)
    codebook = feat.build_codebook(field, config.codebook_words, config.seed)
    words = feat.quantize(field, codebook)
    spm, _ = feat.spm_features(words, survivors.boxes)

    groups = score_groups(knn_groups(spm, config.k), survivors.s, spm)
    b_final, chosen, _ = select_and_fuse(groups, survivors.boxes, config.C, (width, height))
    return LocalizationResult(
        image_id, b_final, survivors, chosen, filtered.trace, filtered.stop_reason
    ), pset


def build_record(result, pset, config):
    """JSON-serialisable record of every intermediate worth inspecting."""
    survivors = result.survivors
    return {
        "version": RECORD_VERSION,
        "image_id": result.image_id,
        "image_size": list(pset.image_size),
        "status": result.status,
        "config": asdict(config),
        "proposals": {
            "provenance": pset.provenance,
            "count": len(pset),
            "flags": list(pset.flags),
        },
        "scores": {"s_obj": _stats(pset.s_obj), "s_sal": _stats(pset.s_sal), "s": _stats(pset.s)},
        "filter": {
            "stop_reason": result.stop_reason,
            "trace": [t.as_dict() for t in result.trace],
        },
        "survivors": [
            [int(v) for v in b] + [float(s)] for b, s in zip(survivors.boxes, survivors.s)
        ],
        "top_groups": [
            {"seed": g.seed, "members": list(g.members), "score": g.score} for g in result.top_groups
        ],
        "b_final": None if result.b_final is None else [int(v) for v in result.b_final.as_tuple()],
    }


def encode_record(record):
    return (json.dumps(record, indent=1, sort_keys=True) + "\n").encode("utf-8")


def write_atomic(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_record(path):
    with open(path) as fh:
        rec = json.load(fh)
    b = rec.get("b_final")
    return rec["image_id"], (None if b is None else BBox(*b)), rec


def localize(image_path, config=PipelineConfig(), proposals_path=None, saliency_path=None,
             out_path=None, image_id=None, descriptor_dump=None):
    """Localise the object in an image file; optionally write the result record."""
    image_id = image_id or Path(image_path).stem
    img = load_image(image_path)
    result, pset = localize_image(img, config, proposals_path, saliency_path, image_id,
                                  descriptor_dump=descriptor_dump)
    record = build_record(result, pset, config)
    if out_path is not None:
        write_atomic(out_path, encode_record(record))
    return result, record
