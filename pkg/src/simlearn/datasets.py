"""Seeded synthetic image generators for training toys and pipeline tests.

Everything here is procedural: gratings, Gaussian blobs, soft edges, and
colored blends of the same ingredients. The generators are deterministic in
their seed and cheap enough to rebuild on every run, so no binary fixtures
need to ship with the library itself.
"""

import numpy as np

from .rng import substream


def _grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    c = np.arange(size, dtype=np.float64)
    return np.meshgrid(c, c, indexing="ij")


def _rotated_coord(size: int, angle: float) -> np.ndarray:
    yy, xx = _grid(size)
    return np.cos(angle) * (xx - size / 2) + np.sin(angle) * (yy - size / 2)


def _grating(size: int, gen) -> np.ndarray:
    angle = gen.uniform(0.0, np.pi)
    cycles = gen.uniform(1.0, 3.0)
    phase = gen.uniform(0.0, 2.0 * np.pi)
    amplitude = gen.uniform(0.5, 0.9)
    u = _rotated_coord(size, angle)
    return amplitude * np.sin(2.0 * np.pi * cycles * u / size + phase)


def _blobs(size: int, gen) -> np.ndarray:
    yy, xx = _grid(size)
    gx, gy = gen.uniform(-0.3, 0.3, size=2)
    img = gx * (xx - size / 2) / size + gy * (yy - size / 2) / size
    for _ in range(int(gen.integers(1, 3))):
        cy, cx = gen.uniform(0.2 * size, 0.8 * size, size=2)
        width = gen.uniform(0.1 * size, 0.25 * size)
        height = gen.uniform(0.5, 0.9) * gen.choice([-1.0, 1.0])
        img = img + height * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width**2))
    return img


def _soft_edge(size: int, gen) -> np.ndarray:
    angle = gen.uniform(0.0, np.pi)
    offset = gen.uniform(-0.2 * size, 0.2 * size)
    sharpness = gen.uniform(0.8, 2.5)
    amplitude = gen.uniform(0.5, 0.9)
    u = _rotated_coord(size, angle)
    return amplitude * np.tanh((u - offset) / sharpness)


def toy_images(n: int, size: int = 16, seed: int = 0) -> np.ndarray:
    """Stack of ``n`` structured grayscale images in [-1, 1], shape (n, size, size).

    Cycles through four low-dimensional families (gratings, blobs on a
    gradient, soft edges, band-limited texture), so small autoencoders can
    actually learn the set while the images still have enough spatial
    structure for windowed metrics to differ from pixelwise ones.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if size < 4:
        raise ValueError(f"size {size} is too small for structured content")
    makers = (_grating, _blobs, _soft_edge, _toy_texture)
    images = np.empty((n, size, size))
    for i in range(n):
        gen = substream(seed, "toy", f"image{i}")
        images[i] = makers[i % len(makers)](size, gen)
    return np.clip(images, -1.0, 1.0)


def edge_images(n: int, size: int = 32, seed: int = 0) -> np.ndarray:
    """Soft oriented step edges in [0, 1], shape (n, size, size).

    Meant as super-resolution toy material: edges are exactly the content
    where bicubic upscaling leaves residual error for a model to claw back.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    images = np.empty((n, size, size))
    for i in range(n):
        gen = substream(seed, "edges", f"image{i}")
        u = _rotated_coord(size, gen.uniform(0.0, np.pi))
        offset = gen.uniform(-0.25 * size, 0.25 * size)
        sharpness = gen.uniform(0.8, 2.0)
        lo = gen.uniform(0.05, 0.35)
        hi = gen.uniform(0.65, 0.95)
        images[i] = lo + (hi - lo) * 0.5 * (1.0 + np.tanh((u - offset) / sharpness))
    return np.clip(images, 0.0, 1.0)


def _texture(size: int, gen, min_cycles: float = 8.0, max_cycles: float = 36.0) -> np.ndarray:
    """Band-limited texture: a few mid-to-high-frequency gratings."""
    img = np.zeros((size, size))
    for k in range(1, 5):
        u = _rotated_coord(size, gen.uniform(0.0, np.pi))
        cycles = gen.uniform(min_cycles, max_cycles)
        phase = gen.uniform(0.0, 2.0 * np.pi)
        img += (0.6 / k) * np.sin(2.0 * np.pi * cycles * u / size + phase)
    return img


def _toy_texture(size: int, gen) -> np.ndarray:
    """Texture rescaled so the finest component stays well below Nyquist."""
    return _texture(size, gen, min_cycles=1.5, max_cycles=0.35 * size)


def _color_mix(structures, weights):
    channel = sum(w * s for w, s in zip(weights, structures))
    lo, hi = channel.min(), channel.max()
    if hi - lo < 1e-12:
        return np.full_like(channel, 127.5)
    return np.clip(255.0 * (channel - lo) / (hi - lo), 0.0, 255.0)


def sr_standins(seed: int = 0) -> list[tuple[str, np.ndarray]]:
    """Five named RGB images, (H, W, 3) in [0, 255], for exercising SR evaluation.

    Sizes straddle the divisibility boundary for common scale factors so the
    center-crop path gets coverage, and each image blends smooth gradients
    with blobs, gratings, and edges so that downsampling actually loses
    information.
    """
    shapes = [(192, 192), (228, 256), (210, 183), (256, 224), (181, 235)]
    out = []
    for idx, (h, w) in enumerate(shapes):
        gen = substream(seed, "sr-standin", f"image{idx}")
        size = max(h, w)
        structures = [
            _grating(size, gen),
            _blobs(size, gen),
            _soft_edge(size, gen),
            _blobs(size, gen),
            _texture(size, gen),
        ]
        rgb = np.empty((h, w, 3))
        for c in range(3):
            weights = gen.uniform(0.2, 1.0, size=len(structures))
            weights[-1] = gen.uniform(0.3, 0.6)  # texture shares every channel
            rgb[..., c] = _color_mix(structures, weights)[:h, :w]
        out.append((f"standin{idx}", rgb))
    return out


def write_sr_standins(directory, seed: int = 0) -> list[str]:
    """Write the stand-in set as PNGs into ``directory``; returns the paths."""
    import os

    from .image_io import save_image

    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, rgb in sr_standins(seed=seed):
        path = os.path.join(os.fspath(directory), f"{name}.png")
        save_image(rgb, path)
        paths.append(path)
    return paths
