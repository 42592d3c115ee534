"""Synthetic single-object images with known boxes, for end-to-end checks."""
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .boxes import BBox

SIZE = 200
MIN_SIDE = 40
MAX_SIDE = 90
MIN_CONTRAST = 0.4


def textured_rectangle_image(rng, size=SIZE, min_side=MIN_SIDE, max_side=MAX_SIDE,
                             min_contrast=MIN_CONTRAST, amplitude=0.1, blocks=(3, 8)):
    """Uniform background with one blocky-textured rectangle.

    The rectangle's mean differs from the background by at least
    ``min_contrast``.  Returns ``(image, box)``.
    """
    w, h = (int(v) for v in rng.integers(min_side, max_side + 1, size=2))
    x = int(rng.integers(0, size - w + 1))
    y = int(rng.integers(0, size - h + 1))

    contrast = rng.uniform(min_contrast, min_contrast + 0.15)
    if rng.random() < 0.5:
        bg = rng.uniform(0.05, 0.95 - contrast - 0.1)
        fg = bg + contrast
    else:
        bg = rng.uniform(0.05 + contrast + 0.1, 0.95)
        fg = bg - contrast

    block = int(rng.integers(blocks[0], blocks[1] + 1))
    coarse = rng.uniform(-amplitude, amplitude, size=(h // block + 1, w // block + 1))
    texture = np.kron(coarse, np.ones((block, block)))[:h, :w]

    img = np.full((size, size), bg)
    img[y : y + h, x : x + w] = np.clip(fg + texture, 0.0, 1.0)
    return img, BBox(x, y, w, h)


def make_corpus(n=50, seed=2024, **kwargs):
    rng = np.random.default_rng(seed)
    return [textured_rectangle_image(rng, **kwargs) for _ in range(n)]


def write_corpus(directory, n=50, seed=2024, label="object"):
    """Write ``img_XXX.png`` files plus ``ground_truth.txt``; returns the image paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths, lines = [], ["# image_id class x y w h"]
    for i, (img, box) in enumerate(make_corpus(n, seed)):
        image_id = f"img_{i:03d}"
        path = directory / f"{image_id}.png"
        PILImage.fromarray(np.round(img * 255).astype(np.uint8), mode="L").save(path)
        paths.append(path)
        lines.append(f"{image_id} {label} {box.x} {box.y} {box.w} {box.h}")
    (directory / "ground_truth.txt").write_text("\n".join(lines) + "\n")
    return paths
