import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image as PILImage

from speclocal.boxes import BBox, BoxError
from speclocal.imgproc import (
    ImageError,
    SaliencyMap,
    box_saliency,
    compute_saliency,
    gradients,
    load_image,
    load_saliency,
    to_grayscale,
    validate_image,
)

unit = st.floats(0.0, 1.0, allow_nan=False, allow_infinity=False)


def test_grayscale_white_black():
    assert to_grayscale(np.ones((1, 1, 3)))[0, 0] == 1.0
    assert to_grayscale(np.zeros((1, 1, 3)))[0, 0] == 0.0


def test_grayscale_red_weight(frozen):
    img = np.zeros((1, 1, 3))
    img[0, 0, 0] = 1.0
    assert to_grayscale(img)[0, 0] == pytest.approx(frozen["luma_red"], abs=1e-15)


@given(arrays(np.float64, (5, 4), elements=unit))
def test_grayscale_idempotent_on_single_channel(a):
    g = to_grayscale(a)
    np.testing.assert_array_equal(to_grayscale(g), g)


def test_validate_rejects_out_of_range_and_bad_shape():
    with pytest.raises(ImageError):
        validate_image(np.full((4, 4), 1.5))
    with pytest.raises(ImageError):
        validate_image(np.zeros((4, 4, 2)))


def test_gradients_constant_image_zero():
    g = gradients(np.full((10, 12), 0.4))
    assert np.all(g.magnitude == 0)


def test_gradients_vertical_step():
    img = np.zeros((9, 12))
    img[:, 6:] = 1.0
    g = gradients(img)
    cols = g.magnitude.max(axis=0)
    assert set(np.flatnonzero(cols == cols.max())) <= {5, 6}
    assert np.allclose(g.orientation[:, 5:7], 0.0)


def test_gradients_linear_ramp_interior(frozen):
    n = 8
    img = np.tile(np.arange(n) / n, (n, 1))
    g = gradients(img)
    np.testing.assert_allclose(g.magnitude[1:-1, 1:-1], frozen["ramp8_interior_magnitude"], atol=1e-15)


def test_gradients_too_small():
    with pytest.raises(ImageError):
        gradients(np.zeros((2, 5)))


@given(arrays(np.float64, (6, 7), elements=unit))
def test_gradients_rotation_equivariance(a):
    g = gradients(a)
    r = gradients(np.rot90(a))
    np.testing.assert_allclose(r.magnitude, np.rot90(g.magnitude), atol=1e-12)
    mask = np.rot90(g.magnitude) > 1e-9
    expected = np.mod(np.rot90(g.orientation) + np.pi / 2, np.pi)
    diff = np.abs(r.orientation - expected)[mask]
    assert np.all(np.minimum(diff, np.pi - diff) < 1e-9)


@given(arrays(np.float64, (6, 7), elements=unit))
def test_gradient_orientation_range(a):
    g = gradients(a)
    assert np.all(g.orientation >= 0) and np.all(g.orientation < np.pi)
    assert np.all(g.magnitude >= 0)


def test_saliency_constant_image():
    s = compute_saliency(np.full((80, 80), 0.3))
    assert s.constant and np.all(s.values == 0)


def test_saliency_peak_near_bright_square():
    img = np.zeros((200, 200))
    img[95:105, 120:130] = 1.0
    s = compute_saliency(img)
    y, x = np.unravel_index(np.argmax(s.values), s.values.shape)
    dx = max(120 - x, 0, x - 129)
    dy = max(95 - y, 0, y - 104)
    assert max(dx, dy) <= 8


@given(arrays(np.float64, (40, 50), elements=unit))
def test_saliency_range_and_exact_ends(a):
    s = compute_saliency(a)
    assert s.shape == a.shape
    if a.max() > a.min():
        assert s.values.min() == 0.0 and s.values.max() == 1.0
    assert np.all((s.values >= 0) & (s.values <= 1))


def test_saliency_upscales_small_input():
    rng = np.random.default_rng(1)
    s = compute_saliency(rng.random((20, 30)))
    assert s.shape == (20, 30)


def test_box_saliency_examples(frozen):
    assert box_saliency(SaliencyMap(np.ones((10, 10))), BBox(2, 3, 4, 5)) == 1.0
    assert box_saliency(SaliencyMap(np.zeros((10, 10))), BBox(2, 3, 4, 5)) == 0.0
    m = SaliencyMap(np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert box_saliency(m, BBox(0, 0, 2, 2)) == frozen["mean_2x2_single_one"]


def test_box_saliency_clips_to_image_and_rejects_outside():
    m = SaliencyMap(np.ones((10, 10)))
    assert box_saliency(m, BBox(-5, -5, 8, 8)) == 1.0
    with pytest.raises(BoxError):
        box_saliency(m, BBox(20, 20, 3, 3))


@given(st.integers(1, 8), st.integers(1, 8))
def test_box_saliency_monotone_growth_into_higher_values(w, h):
    values = np.zeros((20, 20))
    values[:, 10:] = 1.0
    m = SaliencyMap(values)
    small = box_saliency(m, BBox(10 - w, 5, w, h))
    grown = box_saliency(m, BBox(10 - w, 5, w + 3, h))
    assert grown > small


def test_load_image_and_saliency_roundtrip(tmp_path):
    rgb = np.zeros((12, 16, 3), dtype=np.uint8)
    rgb[..., 0] = 255
    PILImage.fromarray(rgb).save(tmp_path / "a.png")
    img = load_image(tmp_path / "a.png")
    assert img.shape == (12, 16, 3) and img.max() == 1.0

    sal = (np.arange(12 * 16).reshape(12, 16) % 256).astype(np.uint8)
    PILImage.fromarray(sal, mode="L").save(tmp_path / "s.png")
    m = load_saliency(tmp_path / "s.png", (12, 16))
    np.testing.assert_allclose(m.values, sal / 255.0)
    with pytest.raises(ImageError):
        load_saliency(tmp_path / "s.png", (10, 16))
    with pytest.raises(ImageError):
        load_saliency(tmp_path / "a.png", (12, 16))
