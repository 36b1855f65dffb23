"""Super-resolution evaluation: LR generation, upscaling, and Y-channel scoring.

The protocol: convert each high-resolution image to its Y channel, downsample
bicubically by the scale factor, reconstruct with each method, shave a border,
and score with PSNR (dynamic range 1) and SSIM. Results aggregate to per-method
means over the image set.

A "method" is a callable ``fn(lr, scale, hr) -> image``. Real methods ignore
``hr``; it is passed through so test oracles (such as a ground-truth
passthrough) can be expressed as ordinary methods.
"""

import csv
import io
import logging
import os
from dataclasses import dataclass

import numpy as np

from .image_io import load_image
from .image_ops import crop_border, resize_bicubic, rgb_to_y_studio
from .losses import psnr
from .metrics import MetricParams, max_feasible_scales, ms_ssim, ssim
from .nn.network import Network, forward
from .validation import as_gray

logger = logging.getLogger(__name__)

CSV_HEADER = ("name", "method", "scale", "border", "psnr_db", "ssim", "ms_ssim")


def center_crop_divisible(hr, scale: int) -> np.ndarray:
    """Center-crop to the largest size with both dimensions divisible by ``scale``."""
    hr = as_gray(hr, "hr")
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    h, w = hr.shape
    h2, w2 = (h // scale) * scale, (w // scale) * scale
    if h2 == 0 or w2 == 0:
        raise ValueError(f"image {h}x{w} is smaller than scale {scale}")
    top, left = (h - h2) // 2, (w - w2) // 2
    return hr[top : top + h2, left : left + w2].copy()


def make_lr(hr, scale: int) -> np.ndarray:
    """Bicubic downsample by ``scale`` with an antialiasing-widened kernel.

    Images whose dimensions are not divisible by the scale are center-cropped
    first, so ``upscale_bicubic(make_lr(hr, s), s)`` always matches the
    cropped ground truth's shape.
    """
    hr = center_crop_divisible(hr, scale)
    if scale == 1:
        return hr
    h, w = hr.shape
    return resize_bicubic(hr, h // scale, w // scale, antialias=True)


def upscale_bicubic(lr, scale: int) -> np.ndarray:
    """Bicubic upsample by ``scale``, clipped to [0, 1]."""
    lr = as_gray(lr, "lr")
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    if scale == 1:
        return lr.copy()
    h, w = lr.shape
    return resize_bicubic(lr, h * scale, w * scale)


def apply_model(lr, net: Network, scale: int) -> np.ndarray:
    """Bicubic upscale, then add the network's refinement, clipped to [0, 1].

    The network sees the upscaled image as a (1, 1, H, W) batch and must
    return the same shape; its output is treated as a residual on top of the
    bicubic baseline, so an all-zero network is exactly the baseline.
    """
    up = upscale_bicubic(lr, scale)
    out, _ = forward(net, up[None, None, :, :], mode="eval")
    if out.shape != (1, 1) + up.shape:
        raise ValueError(
            f"network output shape {out.shape} does not match image {(1, 1) + up.shape}"
        )
    return np.clip(up + out[0, 0], 0.0, 1.0)


def bicubic_method(lr, scale, hr):
    return upscale_bicubic(lr, scale)


def model_method(net: Network):
    """Wraps a trained refinement network as an evaluation method."""

    def method(lr, scale, hr):
        return apply_model(lr, net, scale)

    return method


@dataclass(frozen=True)
class SrRow:
    name: str
    method: str
    scale: int
    border: int
    psnr_db: float
    ssim: float
    ms_ssim: float | None


@dataclass(frozen=True)
class SrReport:
    rows: tuple[SrRow, ...]
    aggregates: dict  # method -> {"psnr_db": .., "ssim": .., "ms_ssim": .. or None}
    scale: int
    border: int
    skipped: int  # files that failed to decode


def _to_y(img: np.ndarray) -> np.ndarray:
    if img.ndim == 3:
        return rgb_to_y_studio(img)
    return img


def _score_pair(sr_img, hr_img, border: int):
    if border:
        sr_img = crop_border(sr_img, border)
        hr_img = crop_border(hr_img, border)
    psnr_db = psnr(hr_img, sr_img, dynamic_range=1.0)
    ssim_value = ssim(hr_img, sr_img)
    feasible = min(5, max_feasible_scales(hr_img.shape, MetricParams().window_size))
    ms_value = None
    if feasible >= 1:
        ms_value = ms_ssim(hr_img, sr_img, MetricParams(scales=feasible))
    return psnr_db, ssim_value, ms_value


def _aggregate(rows, method_names):
    out = {}
    for method in method_names:
        mine = [r for r in rows if r.method == method]
        ms_values = [r.ms_ssim for r in mine if r.ms_ssim is not None]
        out[method] = {
            "psnr_db": float(np.mean([r.psnr_db for r in mine])),
            "ssim": float(np.mean([r.ssim for r in mine])),
            "ms_ssim": float(np.mean(ms_values)) if ms_values else None,
        }
    return out


def evaluate_dir(hr_dir, methods, scale: int, border: int | None = None) -> SrReport:
    """Scores every method on every decodable image under ``hr_dir``.

    ``methods`` is a list of (name, fn) pairs; see the module docstring for
    the method signature. ``border`` defaults to ``scale`` pixels shaved from
    each side before scoring, which keeps resampling edge effects out of the
    comparison. Rows come back sorted by image name, then by method in the
    order given. Undecodable files are logged and counted, not fatal.
    """
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    if border is None:
        border = scale
    if border < 0:
        raise ValueError(f"border must be nonnegative, got {border}")
    names = [name for name, _ in methods]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate method names in {names}")
    hr_dir = os.fspath(hr_dir)
    files = sorted(
        entry for entry in os.listdir(hr_dir)
        if os.path.isfile(os.path.join(hr_dir, entry))
    )
    if not files:
        raise ValueError(f"no files in {hr_dir}")
    rows = []
    skipped = 0
    decoded = 0
    for filename in files:
        path = os.path.join(hr_dir, filename)
        try:
            img = load_image(path)
        except (ValueError, OSError) as exc:
            logger.warning("skipping %s: %s", path, exc)
            skipped += 1
            continue
        decoded += 1
        hr_y = center_crop_divisible(_to_y(img), scale)
        lr = make_lr(hr_y, scale)
        stem = os.path.splitext(filename)[0]
        for method_name, fn in methods:
            sr_img = as_gray(fn(lr, scale, hr_y), f"method {method_name!r} output")
            if sr_img.shape != hr_y.shape:
                raise ValueError(
                    f"method {method_name!r} returned {sr_img.shape}, "
                    f"expected {hr_y.shape}"
                )
            psnr_db, ssim_value, ms_value = _score_pair(sr_img, hr_y, border)
            rows.append(
                SrRow(stem, method_name, scale, border, psnr_db, ssim_value, ms_value)
            )
    if decoded == 0:
        raise ValueError(f"no decodable images in {hr_dir} ({skipped} skipped)")
    rows.sort(key=lambda r: (r.name, names.index(r.method)))
    return SrReport(
        rows=tuple(rows),
        aggregates=_aggregate(rows, names),
        scale=scale,
        border=border,
        skipped=skipped,
    )


def _full(value) -> str:
    """Full-precision cell so the CSV parses back to the exact row values."""
    if value is None:
        return ""
    return repr(float(value))


def _sig6(value) -> str:
    if value is None:
        return "-"
    return f"{float(value):.6g}"


def report_to_csv(report: SrReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in report.rows:
        writer.writerow(
            [r.name, r.method, r.scale, r.border,
             _full(r.psnr_db), _full(r.ssim), _full(r.ms_ssim)]
        )
    return buf.getvalue()


def parse_csv(text: str) -> list[SrRow]:
    """Inverse of :func:`report_to_csv` for the row section."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected header {header}")
    rows = []
    for rec in reader:
        name, method, scale, border, psnr_db, ssim_value, ms_value = rec
        rows.append(
            SrRow(name, method, int(scale), int(border), float(psnr_db),
                  float(ssim_value), float(ms_value) if ms_value else None)
        )
    return rows


def report_to_markdown(report: SrReport) -> str:
    """Aggregate table, metrics as rows and methods as columns."""
    methods = list(report.aggregates)
    n_images = len({r.name for r in report.rows})
    lines = [
        f"scale x{report.scale}, border {report.border}, "
        f"{n_images} images, {report.skipped} skipped",
        "",
        "| metric | " + " | ".join(methods) + " |",
        "| --- | " + " | ".join("---" for _ in methods) + " |",
    ]
    for metric in ("psnr_db", "ssim", "ms_ssim"):
        cells = [_sig6(report.aggregates[m][metric]) for m in methods]
        lines.append(f"| {metric} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def emit_report(report: SrReport, format: str, path) -> None:
    """Writes the report; bytes are a pure function of the report contents.

    ``csv`` holds the per-image rows at full precision; ``markdown`` holds
    the aggregate method-by-metric table rounded to 6 significant digits.
    """
    if format == "csv":
        text = report_to_csv(report)
    elif format == "markdown":
        text = report_to_markdown(report)
    else:
        raise ValueError(f"format must be 'csv' or 'markdown', got {format!r}")
    with open(os.fspath(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
