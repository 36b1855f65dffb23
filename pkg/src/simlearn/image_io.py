"""Image file I/O.

Supported formats: binary PGM/PPM (P5/P6, maxval 255) and 8-bit PNG
(grayscale or RGB). Grayscale files decode to 2-D float64 arrays in [0, 1];
color files decode to (H, W, 3) float64 arrays in [0, 255]. Quantization to
8 bits happens only here; everything else in the package works in doubles.
"""

import io
import os

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .exceptions import CorruptImage, UnsupportedImageFormat
from .validation import as_gray, as_rgb

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _read_pnm_header_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated integer tokens after the magic.

    Handles ``#`` comments per the PNM spec. Returns the tokens and the
    offset of the first raster byte (one whitespace char past the last token).
    """
    tokens: list[int] = []
    pos = 2  # past the two magic bytes
    while len(tokens) < count:
        if pos >= len(data):
            raise CorruptImage("truncated PNM header")
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            eol = data.find(b"\n", pos)
            if eol < 0:
                raise CorruptImage("truncated PNM comment")
            pos = eol + 1
        elif c.isdigit():
            start = pos
            while pos < len(data) and data[pos : pos + 1].isdigit():
                pos += 1
            tokens.append(int(data[start:pos]))
        else:
            raise CorruptImage(f"unexpected byte {c!r} in PNM header")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise CorruptImage("PNM header not terminated by whitespace")
    return tokens, pos + 1


def _decode_pnm(data: bytes) -> np.ndarray:
    magic = data[:2]
    channels = 1 if magic == b"P5" else 3
    (width, height, maxval), offset = _read_pnm_header_tokens(data, 3)
    if width < 1 or height < 1:
        raise CorruptImage(f"bad PNM dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedImageFormat(f"only maxval 255 PNM is supported, got {maxval}")
    expected = width * height * channels
    raster = data[offset : offset + expected]
    if len(raster) != expected:
        raise CorruptImage(
            f"PNM raster holds {len(raster)} bytes, expected {expected}"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    if channels == 1:
        return pixels.reshape(height, width) / 255.0
    return pixels.reshape(height, width, 3)


def _decode_png(data: bytes) -> np.ndarray:
    try:
        with PILImage.open(io.BytesIO(data)) as im:
            im.load()
            mode = im.mode
            if mode not in ("L", "RGB"):
                raise UnsupportedImageFormat(
                    f"only 8-bit gray or RGB PNG is supported, got mode {mode!r}"
                )
            arr = np.asarray(im, dtype=np.uint8).astype(np.float64)
    except UnidentifiedImageError as exc:
        raise CorruptImage(f"undecodable PNG stream: {exc}") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptImage(f"damaged PNG data: {exc}") from exc
    if arr.ndim == 2:
        return arr / 255.0
    return arr


def load_image(path) -> np.ndarray:
    """Load an image file, detecting the format from its magic bytes.

    Returns a 2-D [0, 1] array for grayscale sources and an (H, W, 3)
    [0, 255] array for color sources. Missing files, unsupported formats,
    and corrupt contents raise FileNotFoundError, UnsupportedImageFormat,
    and CorruptImage respectively.
    """
    path = os.fspath(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] in (b"P5", b"P6"):
        return _decode_pnm(data)
    if data[:8] == _PNG_MAGIC:
        return _decode_png(data)
    raise UnsupportedImageFormat(
        f"{path}: not a binary PGM/PPM or PNG file"
    )


def _quantize_unit(a: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(a * 255.0), 0, 255).astype(np.uint8)


def save_image(a: np.ndarray, path) -> None:
    """Save an image, choosing the format from the path suffix.

    ``.pgm`` / ``.png`` accept 2-D [0, 1] grayscale arrays (PNG also accepts
    (H, W, 3) [0, 255] color); ``.ppm`` accepts color only. Values are
    quantized to 8 bits; the file bytes are a pure function of the pixels.
    """
    path = os.fspath(path)
    arr = np.asarray(a, dtype=np.float64)
    suffix = os.path.splitext(path)[1].lower()
    if suffix == ".pgm":
        gray = as_gray(arr)
        h, w = gray.shape
        payload = b"P5\n%d %d\n255\n" % (w, h) + _quantize_unit(gray).tobytes()
        with open(path, "wb") as fh:
            fh.write(payload)
    elif suffix == ".ppm":
        rgb = as_rgb(arr)
        h, w = rgb.shape[:2]
        raster = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
        payload = b"P6\n%d %d\n255\n" % (w, h) + raster.tobytes()
        with open(path, "wb") as fh:
            fh.write(payload)
    elif suffix == ".png":
        if arr.ndim == 2:
            im = PILImage.fromarray(_quantize_unit(as_gray(arr)), mode="L")
        else:
            im = PILImage.fromarray(
                np.clip(np.rint(as_rgb(arr)), 0, 255).astype(np.uint8), mode="RGB"
            )
        im.save(path, format="PNG")
    else:
        raise UnsupportedImageFormat(
            f"{path}: unsupported save suffix {suffix!r} (use .pgm, .ppm, or .png)"
        )
