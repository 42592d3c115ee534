"""Proposal descriptors: HOG for the similarity graph, pooled visual words for grouping."""
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .boxes import BBox, BoxError, boxes_to_array
from .imgproc import ImageError, gradient_components, to_grayscale, validate_image
from .kernels import HOG_LENGTH, hog_batch, orientation_histograms

SIFT_SUPPORT = 16
SIFT_SPATIAL = 4
SIFT_ORIENT = 8
SIFT_DIM = SIFT_SPATIAL * SIFT_SPATIAL * SIFT_ORIENT
SIFT_CLIP = 0.2
SPM_REGIONS = 10  # 1x1 + 3x3


class CodebookError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    kind: str  # "hog" or "spm"
    empty: bool = False  # spm only: the box held no lattice points


@dataclass(frozen=True, eq=False)
class DescriptorField:
    positions: np.ndarray  # (m, 2) top-left (y, x) of each support window
    descriptors: np.ndarray  # (m, 128)
    image_size: tuple  # (width, height)
    support: int = SIFT_SUPPORT

    @property
    def centers(self):
        return self.positions + self.support // 2

    def __len__(self):
        return len(self.descriptors)


@dataclass(frozen=True, eq=False)
class Codebook:
    words: np.ndarray  # (k, 128)
    seed: int
    iterations: int = 0

    def __len__(self):
        return len(self.words)


@dataclass(frozen=True, eq=False)
class WordField:
    centers: np.ndarray  # (m, 2) (y, x) lattice-point centres
    words: np.ndarray  # (m,)
    codebook_size: int


def _check_box(box, width, height):
    if not isinstance(box, BBox):
        box = BBox(*box)
    if box.x < 0 or box.y < 0 or box.x2 > width or box.y2 > height:
        raise BoxError(f"box {box.as_tuple()} is not inside the {width}x{height} image")
    return box


def hog_features(img, boxes):
    """HOG rows ``(n, 1764)`` for integer boxes inside the image."""
    gray = to_grayscale(validate_image(img))
    height, width = gray.shape
    arr = np.asarray(boxes_to_array(boxes), dtype=np.int64)
    if len(arr) and (
        np.any(arr[:, 2:] < 1)
        or np.any(arr[:, :2] < 0)
        or np.any(arr[:, 0] + arr[:, 2] > width)
        or np.any(arr[:, 1] + arr[:, 3] > height)
    ):
        raise BoxError("HOG boxes must be non-degenerate and inside the image")
    return hog_batch(gray, arr)


def hog_descriptor(img, box):
    gray = to_grayscale(validate_image(img))
    box = _check_box(box, gray.shape[1], gray.shape[0])
    x, y, w, h = (int(round(v)) for v in box.as_tuple())
    return FeatureVector(hog_batch(gray, [(x, y, w, h)])[0], "hog")


def _normalize_clip(v, clip):
    norm = np.linalg.norm(v, axis=1, keepdims=True)
    nz = norm[:, 0] > 1e-10
    out = np.zeros_like(v)
    out[nz] = np.minimum(v[nz] / norm[nz], clip)
    out[nz] /= np.linalg.norm(out[nz], axis=1, keepdims=True)
    return out


def extract_dense_descriptors(img, stride=4):
    """SIFT-like 4x4x8 descriptors on a regular lattice of 16x16 supports.

    Orientation is signed, voted linearly into 8 bins; spatial binning is hard
    (4x4-pixel sub-blocks).  Vectors are L2-normalised, clipped at 0.2 and
    renormalised; flat patches stay zero.
    """
    gray = to_grayscale(validate_image(img))
    height, width = gray.shape
    if height < SIFT_SUPPORT or width < SIFT_SUPPORT:
        raise ImageError(f"dense descriptors need at least 16x16 pixels, got {width}x{height}")
    gx, gy = gradient_components(gray)
    mag = np.hypot(gx, gy)
    theta = np.mod(np.arctan2(gy, gx), 2 * np.pi)
    votes = orientation_histograms(mag, theta / (2 * np.pi / SIFT_ORIENT), SIFT_ORIENT, 1)

    ii = np.zeros((height + 1, width + 1, SIFT_ORIENT))
    np.cumsum(np.cumsum(votes, axis=0), axis=1, out=ii[1:, 1:])

    ys = np.arange(0, height - SIFT_SUPPORT + 1, stride)
    xs = np.arange(0, width - SIFT_SUPPORT + 1, stride)
    py, px = np.meshgrid(ys, xs, indexing="ij")
    py, px = py.ravel(), px.ravel()

    cell = SIFT_SUPPORT // SIFT_SPATIAL
    off = np.arange(SIFT_SPATIAL) * cell
    y0 = py[:, None, None] + off[None, :, None]
    x0 = px[:, None, None] + off[None, None, :]
    y1, x1 = y0 + cell, x0 + cell
    bins = ii[y1, x1] - ii[y0, x1] - ii[y1, x0] + ii[y0, x0]  # (m, 4, 4, 8)
    desc = _normalize_clip(bins.reshape(len(py), SIFT_DIM), SIFT_CLIP)
    return DescriptorField(np.column_stack([py, px]), desc, (width, height))


def _sq_dists(x, c, x_sq=None):
    if x_sq is None:
        x_sq = np.einsum("ij,ij->i", x, x)
    d = x_sq[:, None] - 2.0 * (x @ c.T) + np.einsum("ij,ij->i", c, c)[None, :]
    return np.maximum(d, 0.0)


def nearest_centroid(x, centroids, chunk=4096):
    """Index of the nearest centroid per row; exact ties go to the lowest index."""
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(centroids, dtype=np.float64)
    if x.shape[1] != c.shape[1]:
        raise ValueError(f"dimension mismatch: descriptors {x.shape[1]}, centroids {c.shape[1]}")
    out = np.empty(len(x), dtype=np.intp)
    for s in range(0, len(x), chunk):
        xs = x[s : s + chunk]
        d = _sq_dists(xs, c)
        best = np.argmin(d, axis=1)
        dmin = d[np.arange(len(xs)), best]
        # the expanded form can misorder near-ties; re-rank those rows exactly
        close = d <= dmin[:, None] + 1e-9 * (1.0 + dmin[:, None])
        for r in np.flatnonzero(close.sum(axis=1) > 1):
            cand = np.flatnonzero(close[r])
            exact = np.sum((c[cand] - xs[r]) ** 2, axis=1)
            best[r] = cand[np.argmin(exact)]
        out[s : s + chunk] = best
    return out


def _kmeans_pp(points, weights, k, rng):
    n = len(points)
    centers = np.empty(k, dtype=np.intp)
    centers[0] = rng.choice(n, p=weights / weights.sum())
    p_sq = np.einsum("ij,ij->i", points, points)

    def sq_to(j):
        return np.maximum(p_sq - 2.0 * (points @ points[j]) + p_sq[j], 0.0)

    d2 = sq_to(centers[0])
    chosen = np.zeros(n, dtype=bool)
    chosen[centers[0]] = True
    for i in range(1, k):
        p = weights * d2
        p[chosen] = 0.0
        total = p.sum()
        if total > 0:
            nxt = rng.choice(n, p=p / total)
        else:
            nxt = int(np.flatnonzero(~chosen)[0])
        centers[i] = nxt
        chosen[nxt] = True
        d2 = np.minimum(d2, sq_to(nxt))
    return points[centers].copy()


def build_codebook(field, words=1000, seed=0, max_iter=50, tol=1e-4):
    """k-means (k-means++ start) over the field's descriptors.

    ``k`` is reduced to the number of distinct descriptors when there are
    fewer than ``words``.  Runs on distinct descriptors weighted by their
    multiplicity, which gives the same objective as the full set.
    """
    x = field.descriptors if isinstance(field, DescriptorField) else np.asarray(field, dtype=np.float64)
    if len(x) == 0:
        raise CodebookError("cannot build a codebook from an empty descriptor field")
    points, counts = np.unique(x, axis=0, return_counts=True)
    weights = counts.astype(np.float64)
    k = min(int(words), len(points))
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(points, weights, k, rng)

    p_sq = np.einsum("ij,ij->i", points, points)
    it = 0
    for it in range(1, max_iter + 1):
        labels = np.argmin(_sq_dists(points, centroids, p_sq), axis=1)
        mass = np.bincount(labels, weights=weights, minlength=k)
        assign = sparse.csr_matrix((weights, (labels, np.arange(len(points)))), shape=(k, len(points)))
        sums = assign @ points
        new = centroids.copy()
        filled = mass > 0
        new[filled] = sums[filled] / mass[filled, None]
        shift = np.max(np.linalg.norm(new - centroids, axis=1))
        centroids = new
        if shift < tol:
            break
    _, first = np.unique(centroids, axis=0, return_index=True)
    centroids = centroids[np.sort(first)]
    return Codebook(centroids, int(seed), it)


def quantize(field, codebook):
    words = codebook.words if isinstance(codebook, Codebook) else np.asarray(codebook)
    return WordField(field.centers, nearest_centroid(field.descriptors, words), len(words))


def _spm_rows(wf, boxes, codebook_size):
    boxes = np.asarray(boxes_to_array(boxes), dtype=np.int64)
    if len(boxes) and np.any(boxes[:, 2:] < 1):
        raise BoxError("SPM boxes must have w, h >= 1")
    cy, cx = wf.centers[:, 0], wf.centers[:, 1]
    K = int(codebook_size)
    out = np.zeros((len(boxes), SPM_REGIONS * K))
    for n, (x, y, w, h) in enumerate(boxes):
        inside = (cx >= x) & (cx < x + w) & (cy >= y) & (cy < y + h)
        if not inside.any():
            continue
        words = wf.words[inside]
        # ceil(3 * offset / extent) - 1: points on an internal grid line go to the lower cell
        col = np.maximum(-(-3 * (cx[inside] - x) // w) - 1, 0)
        row = np.maximum(-(-3 * (cy[inside] - y) // h) - 1, 0)
        region = 1 + row * 3 + col
        out[n, :K] = np.bincount(words, minlength=K)
        out[n] += np.bincount(region * K + words, minlength=SPM_REGIONS * K)
    return out


def spm_features(wf, boxes, codebook_size=None):
    """L2-normalised 1x1 + 3x3 pyramid histograms ``(n, 10 * K)`` and an empty-box mask."""
    K = wf.codebook_size if codebook_size is None else codebook_size
    raw = _spm_rows(wf, boxes, K)
    norm = np.linalg.norm(raw, axis=1)
    empty = norm == 0
    raw[~empty] /= norm[~empty, None]
    return raw, empty


def spm_pool(wf, box, codebook_size=None):
    values, empty = spm_features(wf, [box] if isinstance(box, BBox) else np.asarray(box).reshape(1, 4), codebook_size)
    return FeatureVector(values[0], "spm", bool(empty[0]))


def dump_descriptors(field, path):
    """Write descriptors as little-endian float32, row-major."""
    np.ascontiguousarray(field.descriptors, dtype="<f4").tofile(path)


__all__ = [
    "Codebook",
    "DescriptorField",
    "FeatureVector",
    "HOG_LENGTH",
    "WordField",
    "build_codebook",
    "extract_dense_descriptors",
    "hog_descriptor",
    "hog_features",
    "nearest_centroid",
    "quantize",
    "spm_features",
    "spm_pool",
]
