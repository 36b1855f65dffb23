"""Input validation helpers.

Conventions used throughout the package:

* grayscale image: 2-D float64 array, values in a named dynamic range
  ("unit" is [0, 1], "signed" is [-1, 1]);
* RGB image: (H, W, 3) float64 array with channel values in [0, 255];
* image stack: (n, H, W) float64 array, one grayscale image per row.
"""

import numpy as np

RANGE_BOUNDS = {"unit": (0.0, 1.0), "signed": (-1.0, 1.0)}


def check_drange(drange: str) -> tuple[float, float]:
    """Return (lo, hi) for a named dynamic range."""
    try:
        return RANGE_BOUNDS[drange]
    except KeyError:
        raise ValueError(
            f"unknown dynamic range {drange!r}; expected one of {sorted(RANGE_BOUNDS)}"
        ) from None


def as_gray(a, name: str = "image") -> np.ndarray:
    """Coerce to a 2-D float64 array and check finiteness."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def as_rgb(a, name: str = "image") -> np.ndarray:
    """Coerce to an (H, W, 3) float64 array with channels in [0, 255]."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    if a.min() < 0.0 or a.max() > 255.0:
        raise ValueError(f"{name} channel values must lie in [0, 255]")
    return a


def as_image_stack(X, name: str = "X") -> np.ndarray:
    """Coerce a list of same-shaped 2-D images or a 3-D array to (n, H, W)."""
    if isinstance(X, np.ndarray) and X.ndim == 3:
        stack = np.asarray(X, dtype=np.float64)
    else:
        imgs = [as_gray(x, f"{name}[{i}]") for i, x in enumerate(X)]
        if not imgs:
            raise ValueError(f"{name} is empty")
        shapes = {im.shape for im in imgs}
        if len(shapes) > 1:
            raise ValueError(f"{name} images disagree in shape: {sorted(shapes)}")
        stack = np.stack(imgs)
    if stack.shape[0] < 1:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(stack)):
        raise ValueError(f"{name} contains non-finite values")
    return stack


def check_same_shape(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")


def check_in_range(a: np.ndarray, drange: str, tol: float = 1e-9, name: str = "image") -> None:
    lo, hi = check_drange(drange)
    if a.min() < lo - tol or a.max() > hi + tol:
        raise ValueError(
            f"{name} values [{a.min():.6g}, {a.max():.6g}] exceed the "
            f"declared {drange} range [{lo}, {hi}]"
        )
