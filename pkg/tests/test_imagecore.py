import numpy as np
import pytest
from PIL import Image

from cofkit import imagecore
from cofkit.imagecore import (
    DecodeError,
    EncodeError,
    from_levels,
    load_image,
    mse,
    rgb_to_gray,
    rgb_to_lab,
    save_image,
    to_levels,
)


def test_png_round_trip_is_exact_for_8bit_content(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(5):
        img = from_levels(rng.integers(0, 256, (13, 17, 3)))
        path = tmp_path / f"c{i}.png"
        save_image(img, path)
        assert np.array_equal(load_image(path), img)


def test_gray_png_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    img = from_levels(rng.integers(0, 256, (9, 11)))
    path = tmp_path / "g.png"
    save_image(img, path)
    back = load_image(path)
    assert back.shape == (9, 11, 3)
    for c in range(3):
        assert np.array_equal(back[:, :, c], img)


def test_save_load_error_bound_half_level(tmp_path):
    rng = np.random.default_rng(2)
    img = rng.random((16, 16, 3))
    path = tmp_path / "f.png"
    save_image(img, path)
    back = load_image(path)
    assert np.abs(back - img).max() <= 0.5 / 255.0 + 1e-12


def test_to_levels_rounds_half_up():
    assert to_levels(np.array([0.0]))[0] == 0
    assert to_levels(np.array([1.0]))[0] == 255
    assert to_levels(np.array([0.5]))[0] == 128  # 127.5 rounds up
    assert to_levels(np.array([127.4999 / 255.0]))[0] == 127
    half = (10 + 0.5) / 255.0
    assert to_levels(np.array([half]))[0] == 11


def test_from_levels_is_inverse_on_integers():
    levels = np.arange(256)
    assert np.array_equal(to_levels(from_levels(levels)), levels)


def test_ppm_and_pgm_load(tmp_path):
    rng = np.random.default_rng(3)
    arr = rng.integers(0, 256, (7, 5, 3), dtype=np.uint8)
    Image.fromarray(arr, "RGB").save(tmp_path / "x.ppm")
    assert np.array_equal(load_image(tmp_path / "x.ppm"), arr / 255.0)
    g = rng.integers(0, 256, (7, 5), dtype=np.uint8)
    Image.fromarray(g, "L").save(tmp_path / "x.pgm")
    loaded = load_image(tmp_path / "x.pgm")
    assert np.array_equal(loaded[:, :, 0], g / 255.0)


def test_rgba_and_la_drop_alpha(tmp_path):
    rng = np.random.default_rng(4)
    rgba = rng.integers(0, 256, (6, 6, 4), dtype=np.uint8)
    Image.fromarray(rgba, "RGBA").save(tmp_path / "a.png")
    assert np.array_equal(load_image(tmp_path / "a.png"), rgba[:, :, :3] / 255.0)
    la = rng.integers(0, 256, (6, 6, 2), dtype=np.uint8)
    Image.fromarray(la, "LA").save(tmp_path / "la.png")
    loaded = load_image(tmp_path / "la.png")
    assert np.array_equal(loaded[:, :, 2], la[:, :, 0] / 255.0)


def test_palette_png_loads_as_rgb(tmp_path):
    rng = np.random.default_rng(5)
    arr = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
    Image.fromarray(arr, "RGB").convert(
        "P", palette=Image.Palette.ADAPTIVE
    ).save(tmp_path / "p.png")
    loaded = load_image(tmp_path / "p.png")
    assert loaded.shape == (8, 8, 3)
    assert loaded.min() >= 0.0 and loaded.max() <= 1.0


def test_load_rejects_16bit_and_junk(tmp_path):
    deep = Image.fromarray(np.full((4, 4), 1000, dtype=np.uint16))
    deep.save(tmp_path / "deep.png")
    with pytest.raises(DecodeError):
        load_image(tmp_path / "deep.png")
    (tmp_path / "junk.png").write_bytes(b"not an image at all")
    with pytest.raises(DecodeError):
        load_image(tmp_path / "junk.png")
    with pytest.raises(DecodeError):
        load_image(tmp_path / "missing.png")


def test_load_rejects_other_formats(tmp_path):
    arr = np.zeros((4, 4, 3), dtype=np.uint8)
    Image.fromarray(arr, "RGB").save(tmp_path / "x.bmp")
    with pytest.raises(DecodeError):
        load_image(tmp_path / "x.bmp")


def test_save_rejects_bad_inputs(tmp_path):
    with pytest.raises(ValueError):
        save_image(np.full((4, 4), 1.5), tmp_path / "x.png")
    with pytest.raises(ValueError):
        save_image(np.full((4, 4), np.nan), tmp_path / "x.png")
    with pytest.raises(ValueError):
        save_image(np.zeros((4, 4, 2)), tmp_path / "x.png")
    with pytest.raises(EncodeError):
        save_image(np.zeros((4, 4)), tmp_path / "x.jpg")


def test_rgb_to_gray_weights():
    img = np.zeros((1, 3, 3))
    img[0, 0, 0] = 1.0
    img[0, 1, 1] = 1.0
    img[0, 2, 2] = 1.0
    gray = rgb_to_gray(img)
    assert np.allclose(gray[0], [0.299, 0.587, 0.114])
    with pytest.raises(ValueError):
        rgb_to_gray(np.zeros((4, 4)))


def test_lab_white_and_black():
    white = rgb_to_lab(np.ones((1, 1, 3)))[0, 0]
    assert np.allclose(white, [100.0, 0.0, 0.0], atol=1e-9)
    black = rgb_to_lab(np.zeros((1, 1, 3)))[0, 0]
    assert np.allclose(black, [0.0, 0.0, 0.0], atol=1e-9)


def test_lab_matches_independent_reference():
    skimage_color = pytest.importorskip("skimage.color")
    rng = np.random.default_rng(6)
    img = rng.random((32, 32, 3))
    ours = rgb_to_lab(img)
    theirs = skimage_color.rgb2lab(img)
    assert np.abs(ours - theirs).max() < 0.01


def test_lab_gray_axis_has_zero_chroma():
    grays = np.linspace(0, 1, 16).reshape(1, 16, 1) * np.ones((1, 16, 3))
    lab = rgb_to_lab(grays)
    assert np.abs(lab[:, :, 1:]).max() < 1e-9
    assert np.all(np.diff(lab[0, :, 0]) > 0)


def test_mse_basics():
    a = np.zeros((4, 4))
    b = np.full((4, 4), 0.5)
    assert mse(a, a) == 0.0
    assert abs(mse(a, b) - 0.25) < 1e-15
    with pytest.raises(ValueError):
        mse(a, np.zeros((4, 5)))


def test_levels_round_trip_through_disk_matches_to_levels(tmp_path):
    rng = np.random.default_rng(7)
    img = rng.random((10, 10, 3))
    save_image(img, tmp_path / "q.png")
    back = load_image(tmp_path / "q.png")
    assert np.array_equal(to_levels(back), to_levels(img))


def test_white_point_is_matrix_row_sums():
    # internal consistency: neutral input maps to the white point exactly
    xyz_white = np.ones(3) @ imagecore._RGB_TO_XYZ.T
    assert np.allclose(xyz_white, imagecore._WHITE, rtol=0, atol=0)
