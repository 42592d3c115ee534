"""Candidate boxes with objectness, saliency and combined scores."""
from dataclasses import dataclass, field, replace
import re

import numpy as np

from .boxes import BBox, BoxError, boxes_to_array, round_half_up
from .imgproc import (
    ImageError,
    SaliencyMap,
    box_means,
    gradients,
    integral_image,
    to_grayscale,
    validate_image,
)

DEFAULT_N = 1000
UNINFORMATIVE = "uninformative-objectness"

SCALE_STEPS = 8
SCALE_RANGE = (0.10, 0.90)
ASPECTS = (1 / 2, 2 / 3, 1.0, 3 / 2, 2.0)
REFINE_TOP = 200


class ProposalFormatError(ValueError):
    """A proposal file could not be parsed; the message names file and line."""


@dataclass(frozen=True)
class ScoredProposal:
    box: BBox
    s_obj: float
    s_sal: float
    s: float


@dataclass(frozen=True, eq=False)
class ProposalSet:
    """Proposals for one image, stored column-wise.

    ``boxes`` is an ``(n, 4)`` integer array of ``x, y, w, h``.  ``s_sal`` and
    ``s`` stay ``None`` until :func:`combine_scores` has run.
    """

    image_id: str
    image_size: tuple  # (width, height)
    boxes: np.ndarray
    s_obj: np.ndarray
    provenance: str
    s_sal: np.ndarray = None
    s: np.ndarray = None
    flags: tuple = field(default=())

    def __len__(self):
        return len(self.boxes)

    def __getitem__(self, i):
        x, y, w, h = (int(v) for v in self.boxes[i])
        s_sal = float(self.s_sal[i]) if self.s_sal is not None else float("nan")
        s = float(self.s[i]) if self.s is not None else float("nan")
        return ScoredProposal(BBox(x, y, w, h), float(self.s_obj[i]), s_sal, s)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def scores(self):
        return self.s if self.s is not None else self.s_obj

    def bboxes(self):
        return [BBox(*(int(v) for v in b)) for b in self.boxes]

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.intp)
        return replace(
            self,
            boxes=self.boxes[idx],
            s_obj=self.s_obj[idx],
            s_sal=None if self.s_sal is None else self.s_sal[idx],
            s=None if self.s is None else self.s[idx],
        )


def minmax_normalize(raw):
    """Scale to [0, 1]; all-equal input maps to 1.0.  Returns ``(values, degenerate)``."""
    raw = np.asarray(raw, dtype=np.float64)
    lo, hi = raw.min(), raw.max()
    if not hi > lo:
        return np.ones_like(raw), True
    return (raw - lo) / (hi - lo), False


def _first_unique(boxes):
    """Indices of the first occurrence of every distinct row, in original order."""
    _, first = np.unique(boxes, axis=0, return_index=True)
    return np.sort(first)


_SPLIT = re.compile(r"[,\s]+")


def parse_proposal_file(path):
    """Read ``x y w h score`` records.  Returns ``(records (n, 5), line numbers)``."""
    records, lines = [], []
    try:
        with open(path) as fh:
            text = fh.read().splitlines()
    except OSError as exc:
        raise ProposalFormatError(f"{path}: cannot read proposal file ({exc})") from exc
    for lineno, line in enumerate(text, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f for f in _SPLIT.split(line) if f]
        if len(fields) != 5:
            raise ProposalFormatError(f"{path}:{lineno}: expected 5 fields 'x y w h score', got {len(fields)}")
        try:
            rec = [float(f) for f in fields]
        except ValueError:
            raise ProposalFormatError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
        if not np.all(np.isfinite(rec)):
            raise ProposalFormatError(f"{path}:{lineno}: non-finite value in {line!r}")
        records.append(rec)
        lines.append(lineno)
    if not records:
        raise ProposalFormatError(f"{path}: no proposal records")
    return np.array(records), lines


def ingest_proposals(path, image_dims, N=DEFAULT_N, image_id=None):
    """Load precomputed proposals, clamp to the image and keep the top ``N`` by raw score.

    ``image_dims`` is ``(width, height)``.  Coordinates are rounded half-up to
    integer corners before clamping.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    width, height = image_dims
    records, lines = parse_proposal_file(path)
    boxes = np.empty((len(records), 4), dtype=np.int64)
    for i, (x, y, w, h, _) in enumerate(records):
        x1, y1 = round_half_up(x), round_half_up(y)
        x2, y2 = round_half_up(x + w), round_half_up(y + h)
        x1, y1, x2, y2 = max(x1, 0), max(y1, 0), min(x2, width), min(y2, height)
        if x2 - x1 < 1 or y2 - y1 < 1:
            raise ProposalFormatError(
                f"{path}:{lines[i]}: box ({x:g}, {y:g}, {w:g}, {h:g}) has w or h < 1 after clamping "
                f"to {width}x{height}"
            )
        boxes[i] = (x1, y1, x2 - x1, y2 - y1)

    s_obj, _ = minmax_normalize(records[:, 4])
    order = np.argsort(-records[:, 4], kind="stable")
    keep = order[_first_unique(boxes[order])][:N]
    return ProposalSet(
        image_id=image_id if image_id is not None else str(path),
        image_size=(int(width), int(height)),
        boxes=boxes[keep],
        s_obj=s_obj[keep],
        provenance="ingested",
    )


def window_lattice(width, height):
    """All sliding windows ``(x, y, w, h)`` of the generator's scale/aspect lattice."""
    min_dim = min(width, height)
    sides = min_dim * np.geomspace(SCALE_RANGE[0], SCALE_RANGE[1], SCALE_STEPS)
    windows = []
    for side in sides:
        for aspect in ASPECTS:
            w = round_half_up(side * np.sqrt(aspect))
            h = round_half_up(side / np.sqrt(aspect))
            if w < 1 or h < 1 or w > width or h > height:
                continue
            xs = np.arange(0, width - w + 1, max(1, round_half_up(w / 8)))
            ys = np.arange(0, height - h + 1, max(1, round_half_up(h / 8)))
            gy, gx = np.meshgrid(ys, xs, indexing="ij")
            n = gx.size
            windows.append(
                np.column_stack([gx.ravel(), gy.ravel(), np.full(n, w), np.full(n, h)])
            )
    lattice = np.concatenate(windows).astype(np.int64)
    return lattice[_first_unique(lattice)]


def window_objectness(mag, windows, ii=None):
    """Inside-minus-surround contrast of gradient magnitude, scaled by window size.

    The raw contrast is the mean magnitude inside the window minus the mean
    over a band just outside it (``max(2, min(w, h) // 8)`` pixels wide,
    clipped to the image).  It is multiplied by ``w * h / (w + h)`` so that
    a window enclosing a whole contour outranks slivers hugging one edge.
    """
    height, width = mag.shape
    if ii is None:
        ii = integral_image(mag)
    x, y, w, h = (windows[:, i] for i in range(4))
    inside_sum = ii[y + h, x + w] - ii[y, x + w] - ii[y + h, x] + ii[y, x]
    inside = inside_sum / (w * h)

    r = np.maximum(2, np.minimum(w, h) // 8)
    ox1, oy1 = np.maximum(x - r, 0), np.maximum(y - r, 0)
    ox2, oy2 = np.minimum(x + w + r, width), np.minimum(y + h + r, height)
    outer_sum = ii[oy2, ox2] - ii[oy1, ox2] - ii[oy2, ox1] + ii[oy1, ox1]
    band_area = (ox2 - ox1) * (oy2 - oy1) - w * h
    band = np.divide(
        outer_sum - inside_sum, band_area, out=np.zeros(len(windows)), where=band_area > 0
    )
    return (inside - band) * (w * h) / (w + h)


def _corner_objectness(mag, ii, corners):
    """Objectness of ``(x1, y1, x2, y2)`` rows; ``-inf`` where the box is off-image or thinner than 2 px."""
    height, width = mag.shape
    x1, y1, x2, y2 = (corners[:, i] for i in range(4))
    ok = (x1 >= 0) & (y1 >= 0) & (x2 <= width) & (y2 <= height) & (x2 - x1 >= 2) & (y2 - y1 >= 2)
    out = np.full(len(corners), -np.inf)
    if ok.any():
        c = corners[ok]
        out[ok] = window_objectness(mag, np.column_stack([c[:, :2], c[:, 2:] - c[:, :2]]), ii)
    return out


def refine_windows(mag, windows, ii=None):
    """Greedy local search on each window's four sides, maximising objectness.

    Each side moves by a step starting at an eighth of the shorter window
    side; a move is kept only if it strictly raises the score.  When no side
    can improve, the step is halved, down to one pixel.  Returns
    ``(windows, scores)``; no returned score is below its starting score.
    """
    if ii is None:
        ii = integral_image(mag)
    w = np.asarray(windows, dtype=np.int64)
    corners = np.column_stack([w[:, :2], w[:, :2] + w[:, 2:]])
    score = _corner_objectness(mag, ii, corners)
    step = np.maximum(1, np.minimum(w[:, 2], w[:, 3]) // 8)
    active = np.ones(len(w), dtype=bool)
    while active.any():
        moved = np.zeros(len(w), dtype=bool)
        for side in range(4):
            for sign in (-1, 1):
                cand = corners.copy()
                cand[:, side] += sign * step
                cand_score = _corner_objectness(mag, ii, cand)
                better = active & (cand_score > score)
                corners[better] = cand[better]
                score[better] = cand_score[better]
                moved |= better
        stalled = active & ~moved
        active &= ~(stalled & (step == 1))
        step = np.where(stalled, np.maximum(1, step // 2), step)
    return np.column_stack([corners[:, :2], corners[:, 2:] - corners[:, :2]]), score


def generate_proposals(img, N=DEFAULT_N, seed=0, image_id="image"):
    """Built-in proposals: score a window lattice by edge contrast, refine the best
    windows by local search, and keep the top ``N``.

    Everything is deterministic; ``seed`` is recorded for interface parity
    with randomised generators and does not alter the output.
    """
    gray = to_grayscale(validate_image(img))
    height, width = gray.shape
    if height < 32 or width < 32:
        raise ImageError(f"proposal generation needs at least 32x32 pixels, got {width}x{height}")
    mag = gradients(gray).magnitude
    ii = integral_image(mag)
    lattice = window_lattice(width, height)
    lattice_raw = window_objectness(mag, lattice, ii)
    best = np.argsort(-lattice_raw, kind="stable")[:REFINE_TOP]
    refined, refined_raw = refine_windows(mag, lattice[best], ii)

    windows = np.vstack([lattice, refined])
    raw = np.concatenate([lattice_raw, refined_raw])
    first = np.argsort(-raw, kind="stable")
    first = first[_first_unique(windows[first])]
    windows, raw = windows[first], raw[first]

    area = windows[:, 2] * windows[:, 3]
    order = np.lexsort((np.arange(len(windows)), windows[:, 0], windows[:, 1], area, -raw))[:N]
    # normalised over the returned set so s_obj spans [0, 1] there
    s_obj, _ = minmax_normalize(raw[order])
    flat = not raw.max() > raw.min()
    return ProposalSet(
        image_id=image_id,
        image_size=(width, height),
        boxes=windows[order],
        s_obj=s_obj,
        provenance="generated",
        flags=(UNINFORMATIVE,) if flat else (),
    )


def combine_scores(pset, smap):
    """Attach mean-box saliency and the overall score ``s = s_obj * s_sal``."""
    values = smap.values if isinstance(smap, SaliencyMap) else np.asarray(smap, dtype=np.float64)
    width, height = pset.image_size
    if values.shape != (height, width):
        raise ImageError(
            f"saliency map is {values.shape[1]}x{values.shape[0]}, proposals are for {width}x{height}"
        )
    if len(pset) == 0:
        empty = np.zeros(0)
        return replace(pset, s_sal=empty, s=empty)
    s_sal = np.clip(box_means(values, boxes_to_array(pset.boxes)), 0.0, 1.0)
    return replace(pset, s_sal=s_sal, s=pset.s_obj * s_sal)


__all__ = [
    "BBox",
    "BoxError",
    "ProposalFormatError",
    "ProposalSet",
    "ScoredProposal",
    "combine_scores",
    "generate_proposals",
    "ingest_proposals",
    "minmax_normalize",
    "refine_windows",
    "window_lattice",
    "window_objectness",
]
