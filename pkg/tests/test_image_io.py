import numpy as np
import pytest

from simlearn.exceptions import CorruptImage, UnsupportedImageFormat
from simlearn.image_io import load_image, save_image


def test_pgm_decode_golden(tmp_path):
    path = tmp_path / "tiny.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 255, 0]))
    img = load_image(path)
    np.testing.assert_array_equal(img, [[0.0, 1.0], [1.0, 0.0]])


def test_ppm_decode_single_red_pixel(tmp_path):
    path = tmp_path / "red.ppm"
    path.write_bytes(b"P6\n1 1\n255\n" + bytes([255, 0, 0]))
    img = load_image(path)
    assert img.shape == (1, 1, 3)
    np.testing.assert_array_equal(img[0, 0], [255.0, 0.0, 0.0])


def test_pnm_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n2 1\n# another\n255\n" + bytes([10, 20]))
    img = load_image(path)
    assert img.shape == (1, 2)


def test_pgm_round_trip_error_bound(tmp_path):
    rng = np.random.default_rng(3)
    img = rng.uniform(0.0, 1.0, (9, 7))
    path = tmp_path / "r.pgm"
    save_image(img, path)
    back = load_image(path)
    assert np.abs(back - img).max() <= 1.0 / 510.0 + 1e-12


def test_constant_half_quantizes_to_adjacent_levels(tmp_path):
    path = tmp_path / "half.pgm"
    save_image(np.full((4, 4), 0.5), path)
    back = load_image(path)
    level = back[0, 0]
    assert level in (127.0 / 255.0, 128.0 / 255.0)
    assert np.all(back == level)


def test_zeros_round_trip_exact(tmp_path):
    path = tmp_path / "z.png"
    save_image(np.zeros((5, 5)), path)
    np.testing.assert_array_equal(load_image(path), np.zeros((5, 5)))


def test_png_gray_and_rgb_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    gray = rng.uniform(0.0, 1.0, (6, 8))
    save_image(gray, tmp_path / "g.png")
    assert np.abs(load_image(tmp_path / "g.png") - gray).max() <= 1.0 / 510.0 + 1e-12

    rgb = rng.integers(0, 256, (5, 4, 3)).astype(float)
    save_image(rgb, tmp_path / "c.png")
    np.testing.assert_array_equal(load_image(tmp_path / "c.png"), rgb)


def test_ppm_round_trip_exact(tmp_path):
    rgb = np.arange(2 * 3 * 3, dtype=float).reshape(2, 3, 3)
    save_image(rgb, tmp_path / "c.ppm")
    np.testing.assert_array_equal(load_image(tmp_path / "c.ppm"), rgb)


def test_save_is_byte_deterministic(tmp_path):
    rng = np.random.default_rng(7)
    img = rng.uniform(0.0, 1.0, (16, 16))
    save_image(img, tmp_path / "a.png")
    save_image(img, tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
    save_image(img, tmp_path / "a.pgm")
    save_image(img, tmp_path / "b.pgm")
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()


def test_missing_file_raises_file_not_found(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "nope.png")


def test_unsupported_format_rejected(tmp_path):
    path = tmp_path / "data.bin"
    path.write_bytes(b"GIF89a also not a real gif")
    with pytest.raises(UnsupportedImageFormat):
        load_image(path)


def test_truncated_png_is_corrupt(tmp_path):
    good = tmp_path / "ok.png"
    save_image(np.zeros((8, 8)), good)
    bad = tmp_path / "bad.png"
    bad.write_bytes(good.read_bytes()[:30])
    with pytest.raises(CorruptImage):
        load_image(bad)


def test_truncated_pgm_raster_is_corrupt(tmp_path):
    path = tmp_path / "short.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes(10))
    with pytest.raises(CorruptImage):
        load_image(path)


def test_pnm_nonstandard_maxval_rejected(tmp_path):
    path = tmp_path / "deep.pgm"
    path.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(UnsupportedImageFormat):
        load_image(path)


def test_save_to_missing_directory_errors(tmp_path):
    with pytest.raises(OSError):
        save_image(np.zeros((2, 2)), tmp_path / "no" / "dir" / "x.pgm")


def test_save_unknown_suffix_rejected(tmp_path):
    with pytest.raises(UnsupportedImageFormat):
        save_image(np.zeros((2, 2)), tmp_path / "x.jpg")
