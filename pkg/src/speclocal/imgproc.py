"""Images, gradients and saliency.

Images are plain float64 arrays with values in [0, 1]: ``(H, W)`` for
grayscale, ``(H, W, 3)`` for RGB.
"""
from dataclasses import dataclass
import math

import numpy as np
from PIL import Image as PILImage
from scipy import ndimage

from .boxes import BBox, BoxError
from .kernels import resize_bilinear

LUMA_PERMILLE = np.array([299.0, 587.0, 114.0])
SALIENCY_SIDE = 64
SALIENCY_SIGMA = 2.5
AMPLITUDE_FLOOR = 1e-3


class ImageError(ValueError):
    """Unreadable image, bad value range, or wrong dimensions."""


@dataclass(frozen=True)
class GradientField:
    magnitude: np.ndarray
    orientation: np.ndarray  # unsigned, [0, pi)


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray
    constant: bool = False  # source image had no contrast; values are all zero

    @property
    def shape(self):
        return self.values.shape


def validate_image(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] not in (1, 3)):
        raise ImageError(f"expected (H, W) or (H, W, 3) array, got shape {img.shape}")
    if img.size == 0:
        raise ImageError("empty image")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise ImageError("image values must lie in [0, 1]")
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    return img


def load_image(path):
    """Read a PNG/JPEG/PGM file as floats in [0, 1], grayscale or RGB."""
    try:
        with PILImage.open(path) as im:
            im.load()
            if im.mode in ("L", "1", "LA"):
                arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
            elif im.mode in ("I;16", "I"):
                arr = np.asarray(im, dtype=np.float64)
                arr = arr / (65535.0 if arr.max() > 255 else 255.0)
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except (OSError, ValueError) as exc:
        raise ImageError(f"{path}: cannot read image ({exc})") from exc
    return arr


def to_grayscale(img):
    """ITU-R 601 luma; single-channel input passes through unchanged."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[:, :, 0]
    # integer weights keep white at exactly 1.0
    return np.clip((img @ LUMA_PERMILLE) / 1000.0, 0.0, 1.0)


def gradient_components(gray):
    """Central differences with replicated borders: ``(gx, gy)``."""
    p = np.pad(np.asarray(gray, dtype=np.float64), 1, mode="edge")
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) * 0.5
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) * 0.5
    return gx, gy


def gradients(gray):
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2:
        raise ImageError("gradients need a single-channel image")
    if gray.shape[0] < 3 or gray.shape[1] < 3:
        raise ImageError(f"image must be at least 3x3, got {gray.shape[1]}x{gray.shape[0]}")
    gx, gy = gradient_components(gray)
    theta = np.mod(np.arctan2(gy, gx), np.pi)
    theta[theta >= np.pi] = 0.0
    return GradientField(np.hypot(gx, gy), theta)


def compute_saliency(img):
    """Spectral-residual saliency at 64 px working size, upsampled and min-max normalised."""
    gray = to_grayscale(validate_image(img))
    H, W = gray.shape
    if gray.max() - gray.min() == 0.0:
        return SaliencyMap(np.zeros((H, W)), constant=True)
    scale = SALIENCY_SIDE / max(H, W)
    small = resize_bilinear(gray, max(1, round(H * scale)), max(1, round(W * scale)))

    spectrum = np.fft.fft2(small)
    amp = np.abs(spectrum)
    # floor near-null amplitudes so their log does not swamp the residual
    log_amp = np.log(amp + AMPLITUDE_FLOOR * amp.max())
    residual = log_amp - ndimage.uniform_filter(log_amp, size=3, mode="wrap")
    sal = np.abs(np.fft.ifft2(np.exp(residual + 1j * np.angle(spectrum)))) ** 2
    sal = ndimage.gaussian_filter(sal, SALIENCY_SIGMA, mode="nearest")

    sal = resize_bilinear(sal, H, W)
    lo, hi = sal.min(), sal.max()
    if not hi > lo:
        return SaliencyMap(np.zeros((H, W)), constant=True)
    return SaliencyMap((sal - lo) / (hi - lo))


def load_saliency(path, shape):
    """Read an 8-bit single-channel PNG/PGM saliency map, rescaled by 1/255."""
    try:
        with PILImage.open(path) as im:
            if im.mode not in ("L", "P"):
                raise ImageError(f"{path}: saliency map must be 8-bit single channel, got mode {im.mode}")
            values = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    except OSError as exc:
        raise ImageError(f"{path}: cannot read saliency map ({exc})") from exc
    if values.shape != tuple(shape[:2]):
        raise ImageError(
            f"{path}: saliency map is {values.shape[1]}x{values.shape[0]}, "
            f"image is {shape[1]}x{shape[0]}"
        )
    return SaliencyMap(values, constant=bool(values.max() == values.min() == 0.0))


def integral_image(values):
    ii = np.zeros((values.shape[0] + 1, values.shape[1] + 1))
    np.cumsum(np.cumsum(values, axis=0), axis=1, out=ii[1:, 1:])
    return ii


def _pixel_ranges(boxes, width, height):
    b = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    x1 = np.maximum(np.floor(b[:, 0]), 0).astype(np.intp)
    y1 = np.maximum(np.floor(b[:, 1]), 0).astype(np.intp)
    x2 = np.minimum(np.ceil(b[:, 0] + b[:, 2]), width).astype(np.intp)
    y2 = np.minimum(np.ceil(b[:, 1] + b[:, 3]), height).astype(np.intp)
    return x1, y1, x2, y2


def box_means(values, boxes, ii=None):
    """Mean of ``values`` over each ``(x, y, w, h)`` box clipped to the array."""
    height, width = values.shape
    x1, y1, x2, y2 = _pixel_ranges(boxes, width, height)
    if np.any((x2 <= x1) | (y2 <= y1)):
        bad = int(np.flatnonzero((x2 <= x1) | (y2 <= y1))[0])
        raise BoxError(f"box {np.asarray(boxes).reshape(-1, 4)[bad].tolist()} lies outside the image")
    if ii is None:
        ii = integral_image(values)
    sums = ii[y2, x2] - ii[y1, x2] - ii[y2, x1] + ii[y1, x1]
    return sums / ((x2 - x1) * (y2 - y1))


def box_saliency(smap, box):
    """Mean saliency over ``box`` clipped to the map."""
    values = smap.values if isinstance(smap, SaliencyMap) else np.asarray(smap, dtype=np.float64)
    if isinstance(box, BBox):
        box = box.as_tuple()
    m = float(box_means(values, np.asarray(box, dtype=np.float64))[0])
    # integral-image differences can stray a few ulps outside [0, 1]
    return min(max(m, 0.0), 1.0) if math.isfinite(m) else m
