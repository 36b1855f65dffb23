"""Pixel losses, PSNR, and the loss wrappers used for training.

All gradients are taken with respect to the second argument ``y`` (the model
output), matching the metrics module. Identifiers accepted in configs and on
the command line are "mse", "mae", "ssim", and "ms-ssim"; the similarity
identifiers train by *minimizing* the negated metric.
"""

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DegenerateScaleError
from .metrics import MetricParams, ms_ssim, ms_ssim_grad, ssim, ssim_grad
from .rng import substream
from .validation import check_same_shape

_CANONICAL = {
    "mse": "mse",
    "mae": "mae",
    "ssim": "neg_ssim",
    "neg_ssim": "neg_ssim",
    "ms-ssim": "neg_ms_ssim",
    "neg_ms_ssim": "neg_ms_ssim",
}


def _as_pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    check_same_shape(x, y)
    if x.size == 0:
        raise ValueError("empty arrays have no loss")
    return x, y


def mse(x, y):
    """Mean squared error and its gradient 2(y - x)/N."""
    x, y = _as_pair(x, y)
    diff = y - x
    return float((diff * diff).mean()), 2.0 * diff / diff.size


def mae(x, y):
    """Mean absolute error and its subgradient sign(y - x)/N, sign(0) = 0."""
    x, y = _as_pair(x, y)
    diff = y - x
    return float(np.abs(diff).mean()), np.sign(diff) / diff.size


def psnr(x, y, dynamic_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical inputs."""
    if dynamic_range <= 0:
        raise ValueError(f"dynamic_range must be positive, got {dynamic_range}")
    value, _ = mse(x, y)
    if value == 0.0:
        return float("inf")
    return float(10.0 * np.log10(dynamic_range**2 / value))


@dataclass(frozen=True)
class Loss:
    """A named training loss with optional metric params and a scale divisor.

    ``scale`` divides the batch value and gradients; it is normally set from
    :func:`estimate_loss_scale` so different losses train on comparable
    magnitudes. The similarity losses carry ``params`` (window, exponents,
    dynamic range, pyramid depth); the pixel losses ignore them.
    """

    identifier: str
    params: MetricParams | None = None
    scale: float = 1.0

    def __post_init__(self):
        canonical = _CANONICAL.get(self.identifier)
        if canonical is None:
            raise ValueError(
                f"unknown loss {self.identifier!r}; expected one of "
                + ", ".join(sorted(set(_CANONICAL)))
            )
        object.__setattr__(self, "identifier", canonical)
        if self.scale <= 0 or not np.isfinite(self.scale):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        if canonical in ("neg_ssim", "neg_ms_ssim") and self.params is None:
            default = MetricParams() if canonical == "neg_ssim" else MetricParams(scales=5)
            object.__setattr__(self, "params", default)

    def with_scale(self, scale: float) -> "Loss":
        return replace(self, scale=scale)

    def pair(self, x, y):
        """Unscaled loss value and gradient for one image pair."""
        if self.identifier == "mse":
            return mse(x, y)
        if self.identifier == "mae":
            return mae(x, y)
        if self.identifier == "neg_ssim":
            value, grad = ssim_grad(x, y, self.params)
        else:
            value, grad = ms_ssim_grad(x, y, self.params)
        return -value, -grad

    def pair_value(self, x, y) -> float:
        """Unscaled loss value only (cheaper than :meth:`pair` for SSIM)."""
        if self.identifier == "mse":
            diff = np.asarray(y, dtype=np.float64) - np.asarray(x, dtype=np.float64)
            return float((diff * diff).mean())
        if self.identifier == "mae":
            return float(np.abs(np.asarray(y, float) - np.asarray(x, float)).mean())
        if self.identifier == "neg_ssim":
            return -ssim(x, y, self.params)
        return -ms_ssim(x, y, self.params)


def batch_loss(loss: Loss, xs, ys):
    """Summed per-pair loss over two image lists, divided by ``loss.scale``.

    Returns ``(value, gradients)`` where ``gradients[i]`` is the scaled
    gradient with respect to ``ys[i]``. Empty lists give 0 and no gradients.
    """
    if len(xs) != len(ys):
        raise ValueError(f"got {len(xs)} targets but {len(ys)} outputs")
    total = 0.0
    grads = []
    for x, y in zip(xs, ys):
        value, grad = loss.pair(x, y)
        total += value
        grads.append(grad / loss.scale)
    return total / loss.scale, grads


def estimate_loss_scale(loss: Loss, dataset, n_pairs: int = 10000, seed: int = 0) -> float:
    """Expected loss over random image pairs, for loss normalization.

    Draws ``n_pairs`` ordered pairs independently with replacement from
    ``dataset`` under a seeded stream and returns the absolute mean pair
    loss. Raises :class:`DegenerateScaleError` when that mean is zero (for
    example an all-identical dataset under mse).
    """
    if len(dataset) == 0:
        raise ValueError("dataset must be nonempty")
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    gen = substream(seed, "loss-scale")
    left = gen.integers(0, len(dataset), size=n_pairs)
    right = gen.integers(0, len(dataset), size=n_pairs)
    total = 0.0
    for i, j in zip(left, right):
        total += loss.pair_value(dataset[i], dataset[j])
    scale = abs(total / n_pairs)
    if scale == 0.0:
        raise DegenerateScaleError(
            f"expected {loss.identifier} over {n_pairs} random pairs is zero; "
            "cannot normalize by it"
        )
    return scale
