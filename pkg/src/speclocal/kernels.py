"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The public names (``resize_bilinear``, ``orientation_histograms``,
``hog_batch``) dispatch to the numba versions when ``USE_NUMBA`` is true and
to the numpy versions otherwise.  Both versions follow the same arithmetic
order for the interpolation step; histogram accumulation order differs, so
results agree to rounding (about 1e-12), not bit for bit.
"""
import math

import numpy as np

from ._jit import USE_NUMBA, njit

HOG_SIDE = 64
HOG_CELL = 8
HOG_BINS = 9
HOG_LENGTH = 7 * 7 * 4 * HOG_BINS
HOG_CLIP = 0.2
NORM_EPS = 1e-6


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def _axis_samples(n_in, n_out):
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, src - i0


def _resize_bilinear_numpy(img, out_h, out_w):
    img = np.asarray(img, dtype=np.float64)
    y0, y1, fy = _axis_samples(img.shape[0], out_h)
    x0, x1, fx = _axis_samples(img.shape[1], out_w)
    fx = fx[None, :]
    top = img[y0][:, x0] + fx * (img[y0][:, x1] - img[y0][:, x0])
    bot = img[y1][:, x0] + fx * (img[y1][:, x1] - img[y1][:, x0])
    return top + fy[:, None] * (bot - top)


def _orientation_histograms_numpy(mag, pos, nbins, cell):
    hc, wc = mag.shape[0] // cell, mag.shape[1] // cell
    mag = mag[: hc * cell, : wc * cell]
    pos = pos[: hc * cell, : wc * cell]
    lo = np.floor(pos)
    frac = pos - lo
    lo = lo.astype(np.intp) % nbins
    hi = (lo + 1) % nbins
    cy = (np.arange(hc * cell) // cell)[:, None]
    cx = (np.arange(wc * cell) // cell)[None, :]
    base = (cy * wc + cx) * nbins
    size = hc * wc * nbins
    hist = np.bincount((base + lo).ravel(), weights=(mag * (1.0 - frac)).ravel(), minlength=size)
    hist += np.bincount((base + hi).ravel(), weights=(mag * frac).ravel(), minlength=size)
    return hist.reshape(hc, wc, nbins)


def _unsigned_bin_position(gx, gy):
    theta = np.mod(np.arctan2(gy, gx), np.pi)
    theta[theta >= np.pi] = 0.0
    return theta / (np.pi / HOG_BINS) - 0.5


def _replicate_gradients(img):
    p = np.pad(img, 1, mode="edge")
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) * 0.5
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) * 0.5
    return gx, gy


def _l2_hys(v):
    v = v / np.sqrt(np.sum(v * v, axis=-1, keepdims=True) + NORM_EPS**2)
    v = np.minimum(v, HOG_CLIP)
    return v / np.sqrt(np.sum(v * v, axis=-1, keepdims=True) + NORM_EPS**2)


def hog_cell_histograms(patch):
    """Raw 8x8-pixel cell histograms (8, 8, 9) of a 64x64 patch, before block normalisation."""
    gx, gy = _replicate_gradients(np.asarray(patch, dtype=np.float64))
    mag = np.hypot(gx, gy)
    return _orientation_histograms_numpy(mag, _unsigned_bin_position(gx, gy), HOG_BINS, HOG_CELL)


def _hog_blocks(cells):
    blocks = np.stack(
        [cells[:-1, :-1], cells[:-1, 1:], cells[1:, :-1], cells[1:, 1:]], axis=2
    ).reshape(-1, 4 * HOG_BINS)
    return _l2_hys(blocks).ravel()


def _hog_batch_numpy(gray, boxes):
    gray = np.asarray(gray, dtype=np.float64)
    out = np.empty((len(boxes), HOG_LENGTH))
    for n, (x, y, w, h) in enumerate(np.asarray(boxes, dtype=np.intp)):
        patch = _resize_bilinear_numpy(gray[y : y + h, x : x + w], HOG_SIDE, HOG_SIDE)
        out[n] = _hog_blocks(hog_cell_histograms(patch))
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------


@njit
def _sample(n_in, n_out, i):
    s = (i + 0.5) * (n_in / n_out) - 0.5
    if s < 0.0:
        s = 0.0
    elif s > n_in - 1:
        s = n_in - 1.0
    i0 = int(math.floor(s))
    i1 = min(i0 + 1, n_in - 1)
    return i0, i1, s - i0


@njit
def _resize_into(img, y, x, h, w, out):
    oh, ow = out.shape
    for i in range(oh):
        y0, y1, fy = _sample(h, oh, i)
        for j in range(ow):
            x0, x1, fx = _sample(w, ow, j)
            a00 = img[y + y0, x + x0]
            a01 = img[y + y0, x + x1]
            a10 = img[y + y1, x + x0]
            a11 = img[y + y1, x + x1]
            top = a00 + fx * (a01 - a00)
            bot = a10 + fx * (a11 - a10)
            out[i, j] = top + fy * (bot - top)


@njit
def _resize_bilinear_numba(img, out_h, out_w):
    out = np.empty((out_h, out_w))
    _resize_into(img, 0, 0, img.shape[0], img.shape[1], out)
    return out


@njit
def _orientation_histograms_numba(mag, pos, nbins, cell):
    hc = mag.shape[0] // cell
    wc = mag.shape[1] // cell
    hist = np.zeros((hc, wc, nbins))
    for i in range(hc * cell):
        ci = i // cell
        for j in range(wc * cell):
            m = mag[i, j]
            if m == 0.0:
                continue
            p = pos[i, j]
            lo = math.floor(p)
            f = p - lo
            b0 = int(lo) % nbins
            b1 = (b0 + 1) % nbins
            cj = j // cell
            hist[ci, cj, b0] += m * (1.0 - f)
            hist[ci, cj, b1] += m * f
    return hist


@njit
def _hog_batch_numba(gray, boxes):
    n = boxes.shape[0]
    out = np.zeros((n, HOG_LENGTH))
    patch = np.empty((HOG_SIDE, HOG_SIDE))
    cells = np.empty((HOG_SIDE // HOG_CELL, HOG_SIDE // HOG_CELL, HOG_BINS))
    block = np.empty(4 * HOG_BINS)
    bin_width = math.pi / HOG_BINS
    last = HOG_SIDE - 1
    for b in range(n):
        _resize_into(gray, boxes[b, 1], boxes[b, 0], boxes[b, 3], boxes[b, 2], patch)
        cells[:] = 0.0
        for i in range(HOG_SIDE):
            for j in range(HOG_SIDE):
                gx = (patch[i, min(j + 1, last)] - patch[i, max(j - 1, 0)]) * 0.5
                gy = (patch[min(i + 1, last), j] - patch[max(i - 1, 0), j]) * 0.5
                m = math.hypot(gx, gy)
                if m == 0.0:
                    continue
                theta = math.atan2(gy, gx)
                if theta < 0.0:
                    theta += math.pi
                if theta >= math.pi:
                    theta -= math.pi
                p = theta / bin_width - 0.5
                lo = math.floor(p)
                f = p - lo
                b0 = int(lo) % HOG_BINS
                b1 = (b0 + 1) % HOG_BINS
                cells[i // HOG_CELL, j // HOG_CELL, b0] += m * (1.0 - f)
                cells[i // HOG_CELL, j // HOG_CELL, b1] += m * f
        k = 0
        for by in range(7):
            for bx in range(7):
                q = 0
                for dy in range(2):
                    for dx in range(2):
                        for o in range(HOG_BINS):
                            block[q] = cells[by + dy, bx + dx, o]
                            q += 1
                for rep in range(2):
                    ss = 0.0
                    for q in range(block.size):
                        ss += block[q] * block[q]
                    norm = math.sqrt(ss + NORM_EPS * NORM_EPS)
                    for q in range(block.size):
                        block[q] /= norm
                    if rep == 0:
                        for q in range(block.size):
                            if block[q] > HOG_CLIP:
                                block[q] = HOG_CLIP
                for q in range(block.size):
                    out[b, k] = block[q]
                    k += 1
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def resize_bilinear(img, out_h, out_w):
    """Resize a 2-D array with pixel-centre-aligned bilinear interpolation."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    if USE_NUMBA:
        return _resize_bilinear_numba(img, int(out_h), int(out_w))
    return _resize_bilinear_numpy(img, int(out_h), int(out_w))


def orientation_histograms(mag, pos, nbins, cell):
    """Per-cell orientation histograms with linear voting between adjacent bins.

    ``pos`` holds each pixel's fractional bin position; bins wrap modulo
    ``nbins``.  Pixels beyond the last whole cell are ignored.
    """
    mag = np.ascontiguousarray(mag, dtype=np.float64)
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    if USE_NUMBA:
        return _orientation_histograms_numba(mag, pos, int(nbins), int(cell))
    return _orientation_histograms_numpy(mag, pos, int(nbins), int(cell))


def hog_batch(gray, boxes):
    """HOG descriptors (n, 1764) for integer boxes ``(x, y, w, h)`` inside ``gray``."""
    gray = np.ascontiguousarray(gray, dtype=np.float64)
    boxes = np.ascontiguousarray(np.asarray(boxes, dtype=np.int64).reshape(-1, 4))
    if USE_NUMBA:
        return _hog_batch_numba(gray, boxes)
    return _hog_batch_numpy(gray, boxes)
