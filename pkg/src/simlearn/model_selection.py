"""Squared-MMD estimation and relative-similarity model selection.

Sample sets are (n, d) arrays of flattened images or feature vectors. The
kernel is an RBF with a median-heuristic bandwidth by default; the unbiased
U-statistic estimator of squared MMD can legitimately go negative, and the
relative-similarity statistic is the difference of two such estimates
against a common reference set.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateScaleError
from .rng import substream


def _as_samples(x, name) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty (n, d) sample array")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _check_dims(*sets):
    dims = {s.shape[1] for s in sets}
    if len(dims) > 1:
        raise ValueError(f"sample sets have mixed dimensions {sorted(dims)}")


def rbf_kernel(a, b, bandwidth: float) -> float:
    """exp(-||a - b||^2 / (2 bandwidth^2)) for two single vectors."""
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d2 = float(((a - b) ** 2).sum())
    return float(np.exp(-d2 / (2.0 * bandwidth**2)))


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clamped at zero."""
    aa = (a * a).sum(axis=1)[:, None]
    bb = (b * b).sum(axis=1)[None, :]
    return np.maximum(aa + bb - 2.0 * (a @ b.T), 0.0)


def _kernel_matrix(a, b, bandwidth):
    return np.exp(-_sq_dists(a, b) / (2.0 * bandwidth**2))


def median_bandwidth(samples, seed: int = 0, max_pairs: int = 1000) -> float:
    """Median pairwise distance over at most ``max_pairs`` seeded pairs.

    All pairs are used when there are no more than ``max_pairs`` of them;
    otherwise pair indices are subsampled from a substream of ``seed``.
    Raises :class:`DegenerateScaleError` when the median distance is zero
    (for example all-identical samples).
    """
    a = _as_samples(samples, "samples")
    n = a.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples for a bandwidth")
    if n * (n - 1) // 2 <= max_pairs:
        d2 = _sq_dists(a, a)
        dists = np.sqrt(d2[np.triu_indices(n, k=1)])
    else:
        gen = substream(seed, "bandwidth")
        i = gen.integers(0, n, size=max_pairs)
        j = gen.integers(0, n, size=max_pairs)
        j = np.where(i == j, (j + 1) % n, j)
        dists = np.sqrt(((a[i] - a[j]) ** 2).sum(axis=1))
    med = float(np.median(dists))
    if med == 0.0:
        raise DegenerateScaleError("median pairwise distance is zero")
    return med


@dataclass(frozen=True)
class MmdResult:
    mmd2: float
    bandwidth: float

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


def mmd2_unbiased(a, b, bandwidth: float) -> MmdResult:
    """Unbiased U-statistic estimate of the squared MMD between two sets.

    Diagonal terms are excluded from the within-set sums, so the estimate
    is unbiased and can be negative when the sets come from one
    distribution.
    """
    a = _as_samples(a, "a")
    b = _as_samples(b, "b")
    _check_dims(a, b)
    m, n = a.shape[0], b.shape[0]
    if m < 2 or n < 2:
        raise ValueError(f"need at least 2 samples per set, got {m} and {n}")
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    kaa = _kernel_matrix(a, a, bandwidth)
    kbb = _kernel_matrix(b, b, bandwidth)
    kab = _kernel_matrix(a, b, bandwidth)
    term_a = (kaa.sum() - np.trace(kaa)) / (m * (m - 1))
    term_b = (kbb.sum() - np.trace(kbb)) / (n * (n - 1))
    term_ab = 2.0 * kab.sum() / (m * n)
    return MmdResult(mmd2=float(term_a + term_b - term_ab), bandwidth=bandwidth)


def relative_similarity(ref, a, b, bandwidth: float) -> float:
    """mmd2(ref, a) - mmd2(ref, b); negative means ``a`` is closer to ``ref``."""
    return mmd2_unbiased(ref, a, bandwidth).mmd2 - mmd2_unbiased(ref, b, bandwidth).mmd2


@dataclass(frozen=True)
class SelectionResult:
    chosen: object
    mmd2: dict  # candidate -> squared-MMD point estimate against the reference
    pairwise: dict  # (candidate_a, candidate_b) -> relative-similarity statistic
    bandwidth: float


def select_tradeoff(ref, candidates: dict, bandwidth: float | None = None, seed: int = 0):
    """Picks the candidate whose samples minimize squared MMD to ``ref``.

    ``candidates`` maps a label (such as a trade-off constant) to its sample
    set. One bandwidth is shared by every comparison: either the given one
    or the median heuristic over the reference pooled with all candidates.
    Ties break toward the smaller label so selection is deterministic.
    """
    if len(candidates) < 2:
        raise ValueError(f"need at least 2 candidates, got {len(candidates)}")
    ref = _as_samples(ref, "ref")
    sets = {key: _as_samples(value, f"candidates[{key!r}]") for key, value in candidates.items()}
    _check_dims(ref, *sets.values())
    if bandwidth is None:
        pooled = np.concatenate([ref] + [sets[k] for k in sorted(sets)])
        bandwidth = median_bandwidth(pooled, seed=seed)
    mmd2 = {
        key: mmd2_unbiased(ref, sets[key], bandwidth).mmd2 for key in sorted(sets)
    }
    pairwise = {}
    keys = sorted(sets)
    for i, ka in enumerate(keys):
        for kb in keys[i + 1 :]:
            pairwise[(ka, kb)] = mmd2[ka] - mmd2[kb]
    chosen = min(keys, key=lambda k: (mmd2[k], k))
    return SelectionResult(chosen=chosen, mmd2=mmd2, pairwise=pairwise, bandwidth=bandwidth)
