"""Final window estimation from the filtered proposals."""
from dataclasses import dataclass, field

import numpy as np

from .boxes import BBox, boxes_to_array, round_half_up


@dataclass(frozen=True)
class Group:
    seed: int
    members: tuple  # seed first, then neighbours by descending similarity
    score: float = 0.0


@dataclass(frozen=True, eq=False)
class LocalizationResult:
    image_id: str
    b_final: BBox
    survivors: object = None
    top_groups: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    stop_reason: str = ""
    status: str = "ok"


def knn_groups(features, k=10):
    """One group per proposal: itself plus its ``k - 1`` most similar others (dot product)."""
    f = np.asarray(features, dtype=np.float64)
    K = len(f)
    if K < 2:
        raise ValueError("grouping needs at least two proposals")
    sim = f @ f.T
    m = min(k, K)
    groups = []
    others = np.arange(K)
    for i in range(K):
        cand = others[others != i]
        order = np.lexsort((cand, -sim[i, cand]))
        groups.append(Group(i, (i,) + tuple(int(j) for j in cand[order[: m - 1]])))
    return groups


def group_score(group, scores, features):
    """Sum over non-seed members of ``score_j * <f_j, f_seed>``."""
    s = np.asarray(scores, dtype=np.float64)
    f = np.asarray(features, dtype=np.float64)
    nbrs = np.asarray(group.members[1:], dtype=np.intp)
    if len(nbrs) == 0:
        return 0.0
    return float(np.sum(s[nbrs] * (f[nbrs] @ f[group.seed])))


def score_groups(groups, scores, features):
    return [Group(g.seed, g.members, group_score(g, scores, features)) for g in groups]


def top_groups(groups, C=5):
    order = sorted(range(len(groups)), key=lambda i: (-groups[i].score, groups[i].seed))
    return [groups[i] for i in order[:C]]


def fuse_boxes(boxes, image_size=None):
    """Corner-mean of ``(n, 4)`` boxes, rounded half-up and clamped to ``(width, height)``."""
    b = np.asarray(boxes_to_array(boxes), dtype=np.float64)
    x1 = round_half_up(b[:, 0].mean())
    y1 = round_half_up(b[:, 1].mean())
    x2 = round_half_up((b[:, 0] + b[:, 2]).mean())
    y2 = round_half_up((b[:, 1] + b[:, 3]).mean())
    if image_size is not None:
        width, height = image_size
        x1, y1 = min(max(x1, 0), width - 1), min(max(y1, 0), height - 1)
        x2, y2 = min(max(x2, x1 + 1), width), min(max(y2, y1 + 1), height)
    return BBox.from_corners(x1, y1, max(x2, x1 + 1), max(y2, y1 + 1))


def select_and_fuse(groups, boxes, C=5, image_size=None):
    """Union the members of the ``C`` best groups and average their corners.

    Returns ``(b_final, chosen groups, union indices)``.
    """
    if not groups:
        raise ValueError("no groups to select from")
    chosen = top_groups(groups, C)
    union = sorted({m for g in chosen for m in g.members})
    b = np.asarray(boxes_to_array(boxes))[union]
    return fuse_boxes(b, image_size), chosen, union
