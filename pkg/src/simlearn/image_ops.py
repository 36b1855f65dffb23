"""Color transforms, resampling, cropping, and patch extraction.

All functions take and return plain float64 arrays; see ``validation`` for
the array conventions.
"""

import numpy as np

from .rng import substream
from .validation import as_gray, as_rgb, check_drange

_BT601 = (0.299, 0.587, 0.114)


def _weighted_luma(rgb: np.ndarray) -> np.ndarray:
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    return (_BT601[0] * r + _BT601[1] * g + _BT601[2] * b) / 255.0


def rgb_to_luma(rgb) -> np.ndarray:
    """BT.601 luma of an (H, W, 3) [0, 255] image, scaled into [0, 1]."""
    return _weighted_luma(as_rgb(rgb))


def rgb_to_y(rgb) -> np.ndarray:
    """Full-range BT.601 Y channel, scaled into [0, 1].

    Identical to :func:`rgb_to_luma`; both names exist because the color
    transform and the Y-channel extraction play different roles upstream.
    """
    return _weighted_luma(as_rgb(rgb))


def rgb_to_y_studio(rgb) -> np.ndarray:
    """Studio-swing (16-235) BT.601 Y channel, scaled into [0, 1].

    This is the luma convention of the classic super-resolution benchmark
    tooling; the evaluation harness defaults to it so published baseline
    numbers are comparable.
    """
    return (16.0 + 219.0 * _weighted_luma(as_rgb(rgb))) / 255.0


def downsample2(a) -> np.ndarray:
    """Halve both dimensions by averaging each 2x2 block.

    Odd trailing rows/columns are dropped (floor semantics).
    """
    a = as_gray(a)
    h, w = a.shape
    if h < 2 or w < 2:
        raise ValueError(f"image {h}x{w} is too small to downsample")
    h2, w2 = h // 2, w // 2
    return a[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def downsample2_adjoint(grad, in_shape: tuple[int, int]) -> np.ndarray:
    """Adjoint of :func:`downsample2`: spread each coarse value, weighted 1/4.

    Rows/columns dropped by the forward pass receive zero.
    """
    grad = as_gray(grad, "grad")
    h, w = in_shape
    h2, w2 = h // 2, w // 2
    if grad.shape != (h2, w2):
        raise ValueError(f"grad shape {grad.shape} does not match input shape {in_shape}")
    out = np.zeros((h, w))
    out[: 2 * h2, : 2 * w2] = np.kron(grad, np.full((2, 2), 0.25))
    return out


def _catmull_rom(t: np.ndarray) -> np.ndarray:
    """Catmull-Rom cubic kernel (a = -0.5) evaluated at signed offsets."""
    at = np.abs(t)
    inner = 1.5 * at**3 - 2.5 * at**2 + 1.0
    outer = -0.5 * (at**3 - 5.0 * at**2 + 8.0 * at - 4.0)
    return np.where(at <= 1.0, inner, np.where(at < 2.0, outer, 0.0))


def _resample_matrix(n_in: int, n_out: int, antialias: bool) -> np.ndarray:
    """Dense (n_in, n_out) matrix applying 1-D bicubic resampling.

    Pixel-center alignment: output center j maps to source coordinate
    (j + 0.5) * n_in/n_out - 0.5. Out-of-bounds taps clamp to the edge
    sample. With ``antialias`` and a reducing ratio the kernel is widened
    by the ratio (and renormalized), the convention of the common imresize
    implementations.
    """
    ratio = n_in / n_out
    width = max(ratio, 1.0) if antialias else 1.0
    support = 2.0 * width
    mat = np.zeros((n_in, n_out))
    for j in range(n_out):
        u = (j + 0.5) * ratio - 0.5
        taps = np.arange(int(np.ceil(u - support)), int(np.floor(u + support)) + 1)
        weights = _catmull_rom((u - taps) / width)
        total = weights.sum()
        if total <= 0.0:
            raise ValueError("degenerate resampling weights")
        weights = weights / total
        np.add.at(mat[:, j], np.clip(taps, 0, n_in - 1), weights)
    return mat


def resize_bicubic(a, out_h: int, out_w: int, drange: str | None = "unit",
                   antialias: bool = False) -> np.ndarray:
    """Resize with the Catmull-Rom (a = -0.5) bicubic kernel.

    Separable, edge-clamped, pixel-center aligned. The result is clipped to
    the named dynamic range unless ``drange`` is None. ``antialias`` widens
    the kernel when reducing, which is what the standard super-resolution
    protocol expects for LR generation.
    """
    a = as_gray(a)
    if out_h < 1 or out_w < 1:
        raise ValueError(f"bad output size {out_h}x{out_w}")
    h, w = a.shape
    out = a
    if w != out_w:
        out = out @ _resample_matrix(w, out_w, antialias)
    if h != out_h:
        out = _resample_matrix(h, out_h, antialias).T @ out
    if out is a:  # same size either way: keep the caller's array intact
        out = a.copy()
    if drange is not None:
        lo, hi = check_drange(drange)
        out = np.clip(out, lo, hi)
    return out


def crop_border(a, n: int) -> np.ndarray:
    """Drop an ``n``-pixel margin on every side."""
    a = as_gray(a)
    if n < 0:
        raise ValueError("crop width must be nonnegative")
    if n == 0:
        return a.copy()
    h, w = a.shape
    if h <= 2 * n or w <= 2 * n:
        raise ValueError(f"crop of {n} exceeds image {h}x{w}")
    return a[n : h - n, n : w - n].copy()


def extract_patches(a, size: int, count: int, seed: int) -> np.ndarray:
    """Sample ``count`` random size x size patches, stacked as (count, size, size).

    Top-left corners are uniform over all valid positions; the same seed
    always yields the same patches.
    """
    a = as_gray(a)
    h, w = a.shape
    if size < 1 or size > min(h, w):
        raise ValueError(f"patch size {size} does not fit a {h}x{w} image")
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = substream(seed, "patches")
    rows = rng.integers(0, h - size + 1, size=count)
    cols = rng.integers(0, w - size + 1, size=count)
    return np.stack(
        [a[r : r + size, c : c + size] for r, c in zip(rows, cols)]
    ) if count else np.empty((0, size, size))


def rescale_range(a, source: str, target: str) -> np.ndarray:
    """Affine map between the named dynamic ranges ("unit" and "signed").

    Applying the inverse direction afterwards reproduces the input.
    """
    a = as_gray(a)
    check_drange(source)
    check_drange(target)
    if source == target:
        return a.copy()
    if source == "unit":  # [0,1] -> [-1,1]
        return 2.0 * a - 1.0
    return (a + 1.0) / 2.0  # [-1,1] -> [0,1]
