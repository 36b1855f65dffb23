"""Structural-similarity metrics with analytic pixelwise gradients.

The metrics operate on 2-D float64 arrays. Single-scale SSIM uses an
unweighted square window and averages the per-window comparison product over
all window positions that fit entirely inside both images (no padding). The
multi-scale variant pools contrast/structure terms on an iteratively
box-downsampled pyramid and applies the luminance term only at the coarsest
scale.

Gradients are taken with respect to the *second* image argument, which is the
one produced by a model during training. ``fd_gradient`` provides the
central-difference oracle used to verify them.
"""

from dataclasses import dataclass, replace

import numpy as np

from .image_ops import downsample2, downsample2_adjoint
from .validation import as_gray, check_same_shape


@dataclass(frozen=True)
class MetricParams:
    """Window, stabilizer, and exponent settings for the SSIM family.

    ``dynamic_range`` is the value span of the inputs (1 for [0, 1] images,
    2 for [-1, 1]). ``scales`` is the pyramid depth M; ``betas``/``gammas``
    are per-scale exponents (empty means all ones) and ``alpha`` weights the
    luminance term at the coarsest scale.
    """

    window_size: int = 11
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0
    scales: int = 1
    alpha: float = 1.0
    betas: tuple = ()
    gammas: tuple = ()

    def __post_init__(self):
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValueError(f"window_size must be odd and >= 3, got {self.window_size}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be positive")
        if self.scales < 1:
            raise ValueError("scales must be >= 1")
        for field in ("betas", "gammas"):
            value = tuple(float(v) for v in getattr(self, field))
            if value and len(value) != self.scales:
                raise ValueError(
                    f"{field} has length {len(value)}, expected {self.scales} (or empty)"
                )
            object.__setattr__(self, field, value)

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    @property
    def c3(self) -> float:
        return self.c2 / 2.0

    def beta(self, j: int) -> float:
        return self.betas[j] if self.betas else 1.0

    def gamma(self, j: int) -> float:
        return self.gammas[j] if self.gammas else 1.0

    def with_scales(self, scales: int) -> "MetricParams":
        betas = self.betas if len(self.betas) == scales else ()
        gammas = self.gammas if len(self.gammas) == scales else ()
        return replace(self, scales=scales, betas=betas, gammas=gammas)


@dataclass(frozen=True)
class LocalStats:
    """Window means, standard deviations, and covariance at one center."""

    mu_x: float
    mu_y: float
    sigma_x: float
    sigma_y: float
    sigma_xy: float


def _check_pair(x, y, window: int) -> tuple[np.ndarray, np.ndarray]:
    x = as_gray(x, "x")
    y = as_gray(y, "y")
    check_same_shape(x, y)
    if min(x.shape) < window:
        raise ValueError(
            f"image {x.shape[0]}x{x.shape[1]} is smaller than the "
            f"{window}x{window} window"
        )
    return x, y


def local_stats(x, y, center: tuple[int, int], params: MetricParams) -> LocalStats:
    """Window statistics at one center, computed directly (two-pass).

    ``center`` is the (row, col) of the window's central pixel; the full
    window must fit inside both images. Standard deviations and the
    covariance use the biased (divide-by-N) estimator.
    """
    x, y = _check_pair(x, y, params.window_size)
    r, c = center
    half = params.window_size // 2
    h, w = x.shape
    if not (half <= r < h - half and half <= c < w - half):
        raise ValueError(f"window at center {center} falls outside the {h}x{w} image")
    wx = x[r - half : r + half + 1, c - half : c + half + 1]
    wy = y[r - half : r + half + 1, c - half : c + half + 1]
    mu_x = wx.mean()
    mu_y = wy.mean()
    dx = wx - mu_x
    dy = wy - mu_y
    return LocalStats(
        mu_x=mu_x,
        mu_y=mu_y,
        sigma_x=np.sqrt((dx * dx).mean()),
        sigma_y=np.sqrt((dy * dy).mean()),
        sigma_xy=(dx * dy).mean(),
    )


def ssim_components(stats: LocalStats, params: MetricParams) -> tuple[float, float, float]:
    """Luminance, contrast, and structure comparison terms for one window."""
    c1, c2, c3 = params.c1, params.c2, params.c3
    lum = (2 * stats.mu_x * stats.mu_y + c1) / (stats.mu_x**2 + stats.mu_y**2 + c1)
    con = (2 * stats.sigma_x * stats.sigma_y + c2) / (
        stats.sigma_x**2 + stats.sigma_y**2 + c2
    )
    struct = (stats.sigma_xy + c3) / (stats.sigma_x * stats.sigma_y + c3)
    return lum, con, struct


def _box_sum_valid(a: np.ndarray, k: int) -> np.ndarray:
    """Sums over every k x k window fully inside ``a`` (valid positions)."""
    c = np.pad(np.cumsum(np.cumsum(a, axis=0), axis=1), ((1, 0), (1, 0)))
    return c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]


def _powmap(base: np.ndarray, exponent: float) -> np.ndarray:
    """Elementwise power with the domain rule for negative bases."""
    if exponent == 1.0:
        return base
    if not float(exponent).is_integer() and np.any(base < 0.0):
        raise ValueError(
            f"negative comparison term under fractional exponent {exponent}"
        )
    return base**exponent


def _window_maps(x, y, params):
    """Per-window means/variances/covariance plus the two comparison maps.

    Returns a dict over valid window positions: mu_x, mu_y, var_x, var_y,
    cov, lum (luminance term) and cs (combined contrast-structure term,
    which with C3 = C2/2 factors exactly as (2*cov + C2)/(var_x+var_y+C2)).
    """
    k = params.window_size
    n = float(k * k)
    mu_x = _box_sum_valid(x, k) / n
    mu_y = _box_sum_valid(y, k) / n
    var_x = np.maximum(_box_sum_valid(x * x, k) / n - mu_x * mu_x, 0.0)
    var_y = np.maximum(_box_sum_valid(y * y, k) / n - mu_y * mu_y, 0.0)
    cov = _box_sum_valid(x * y, k) / n - mu_x * mu_y
    c1, c2 = params.c1, params.c2
    lum_num = 2.0 * mu_x * mu_y + c1
    lum_den = mu_x * mu_x + mu_y * mu_y + c1
    cs_num = 2.0 * cov + c2
    cs_den = var_x + var_y + c2
    return {
        "mu_x": mu_x,
        "mu_y": mu_y,
        "var_x": var_x,
        "var_y": var_y,
        "cov": cov,
        "lum_num": lum_num,
        "lum_den": lum_den,
        "cs_num": cs_num,
        "cs_den": cs_den,
        "lum": lum_num / lum_den,
        "cs": cs_num / cs_den,
    }


def _pooled_ssim(maps, params, j: int) -> float:
    """Mean over windows of lum^alpha * cs^beta_j (the single-scale score)."""
    per_window = _powmap(maps["lum"], params.alpha) * _powmap(maps["cs"], params.beta(j))
    return float(per_window.mean())


def max_feasible_scales(shape: tuple[int, int], window_size: int) -> int:
    """Largest pyramid depth M for which the coarsest scale still fits a window."""
    h, w = shape
    m = 0
    while min(h, w) >= window_size:
        m += 1
        h //= 2
        w //= 2
    return m


def ssim(x, y, params: MetricParams = MetricParams()) -> float:
    """Single-scale structural similarity between two images.

    The score is the mean over all valid window positions of
    lum^alpha * con^beta * struct^gamma, 1.0 exactly when x == y.
    """
    x, y = _check_pair(x, y, params.window_size)
    beta, gamma = params.beta(0), params.gamma(0)
    maps = _window_maps(x, y, params)
    if beta == gamma:
        return _pooled_ssim(maps, params, 0)
    # distinct contrast/structure exponents: evaluate the factored terms
    sig_x = np.sqrt(maps["var_x"])
    sig_y = np.sqrt(maps["var_y"])
    c2, c3 = params.c2, params.c3
    con = (2.0 * sig_x * sig_y + c2) / (maps["var_x"] + maps["var_y"] + c2)
    struct = (maps["cov"] + c3) / (sig_x * sig_y + c3)
    per_window = (
        _powmap(maps["lum"], params.alpha)
        * _powmap(con, beta)
        * _powmap(struct, gamma)
    )
    return float(per_window.mean())


def _pyramid(x, y, scales: int):
    pairs = [(x, y)]
    for _ in range(scales - 1):
        x, y = downsample2(x), downsample2(y)
        pairs.append((x, y))
    return pairs


def _check_scales(x, y, params) -> None:
    feasible = max_feasible_scales(x.shape, params.window_size)
    if params.scales > feasible:
        raise ValueError(
            f"{x.shape[0]}x{x.shape[1]} images support at most M={feasible} "
            f"scales with a {params.window_size}-pixel window; got M={params.scales}"
        )


def _signed_pow(value: float, exponent: float) -> float:
    if exponent == 1.0:
        return value
    if not float(exponent).is_integer() and value < 0.0:
        raise ValueError(
            f"negative pooled contrast-structure term {value:.6g} under "
            f"fractional exponent {exponent}"
        )
    return float(value**exponent)


def ms_ssim(x, y, params: MetricParams | None = None) -> float:
    """Multi-scale structural similarity.

    Contrast/structure terms are pooled per scale on a 2x2 box-mean pyramid
    and combined as a product with per-scale exponents; the luminance term
    enters per-window at the coarsest scale only, so M = 1 with unit
    exponents reproduces :func:`ssim`. Requires beta_j == gamma_j.
    """
    if params is None:
        params = MetricParams(scales=5)
    for j in range(params.scales):
        if params.beta(j) != params.gamma(j):
            raise ValueError("multi-scale pooling requires beta_j == gamma_j per scale")
    x, y = _check_pair(x, y, params.window_size)
    _check_scales(x, y, params)
    value = 1.0
    for j, (xj, yj) in enumerate(_pyramid(x, y, params.scales)):
        maps = _window_maps(xj, yj, params)
        if j < params.scales - 1:
            value *= _signed_pow(float(maps["cs"].mean()), params.beta(j))
        else:
            value *= _pooled_ssim(maps, params, j)
    return value


def _window_partials(maps, params, j: int, with_luminance: bool):
    """Partials of the per-window term w.r.t. (mu_y, var_y, cov).

    With ``with_luminance`` the term is lum^alpha * cs^beta_j (coarsest
    scale / single scale); otherwise it is plain cs (finer scales, whose
    exponent is applied to the pooled mean instead).
    """
    cs = maps["cs"]
    d_cs_d_var = -maps["cs_num"] / (maps["cs_den"] ** 2)
    d_cs_d_cov = 2.0 / maps["cs_den"]
    if not with_luminance:
        return None, d_cs_d_var, d_cs_d_cov
    lum = maps["lum"]
    alpha, beta = params.alpha, params.beta(j)
    lum_a = _powmap(lum, alpha)
    cs_b = _powmap(cs, beta)
    d_lum = (
        2.0
        * (maps["mu_x"] * maps["lum_den"] - maps["mu_y"] * maps["lum_num"])
        / (maps["lum_den"] ** 2)
    )
    g_mu = alpha * _powmap(lum, alpha - 1.0) * cs_b * d_lum if alpha != 0 else np.zeros_like(lum)
    cs_factor = beta * _powmap(cs, beta - 1.0) * lum_a if beta != 0 else np.zeros_like(cs)
    return g_mu, cs_factor * d_cs_d_var, cs_factor * d_cs_d_cov


def _spread(m: np.ndarray, k: int) -> np.ndarray:
    """Adjoint of the valid-window box sum: scatter each window value back."""
    return _box_sum_valid(np.pad(m, k - 1), k)


def _accumulate_grad(x, y, maps, g_mu, g_var, g_cov, k: int) -> np.ndarray:
    """Chain window-statistic partials back to per-pixel gradients in y.

    Uses d(mu_y)/dy_q = 1/N, d(var_y)/dy_q = 2(y_q - mu_y)/N and
    d(cov)/dy_q = (x_q - mu_x)/N for every window containing q, then
    averages over the P windows.
    """
    n = float(k * k)
    p = float(maps["mu_x"].size)
    acc = 2.0 * y * _spread(g_var, k) - 2.0 * _spread(g_var * maps["mu_y"], k)
    acc += x * _spread(g_cov, k) - _spread(g_cov * maps["mu_x"], k)
    if g_mu is not None:
        acc += _spread(g_mu, k)
    return acc / (p * n)


def ssim_grad(x, y, params: MetricParams = MetricParams()) -> tuple[float, np.ndarray]:
    """SSIM value and its exact gradient with respect to ``y``.

    Requires beta == gamma (the factored contrast-structure term is what
    makes the derivative smooth where a window of y is constant).
    """
    if params.beta(0) != params.gamma(0):
        raise ValueError("gradients require beta == gamma")
    x, y = _check_pair(x, y, params.window_size)
    k = params.window_size
    maps = _window_maps(x, y, params)
    value = _pooled_ssim(maps, params, 0)
    g_mu, g_var, g_cov = _window_partials(maps, params, 0, with_luminance=True)
    grad = _accumulate_grad(x, y, maps, g_mu, g_var, g_cov, k)
    return value, grad


def ms_ssim_grad(x, y, params: MetricParams | None = None) -> tuple[float, np.ndarray]:
    """MS-SSIM value and its exact gradient with respect to ``y``.

    Per-scale gradients are computed against the downsampled images and
    pulled back through the pyramid, each 2x2 box mean distributing a
    quarter of the coarse-pixel gradient to its source pixels.
    """
    if params is None:
        params = MetricParams(scales=5)
    for j in range(params.scales):
        if params.beta(j) != params.gamma(j):
            raise ValueError("gradients require beta_j == gamma_j per scale")
    x, y = _check_pair(x, y, params.window_size)
    _check_scales(x, y, params)
    m = params.scales
    k = params.window_size

    pairs = _pyramid(x, y, m)
    all_maps = [_window_maps(xj, yj, params) for xj, yj in pairs]
    terms = []
    for j in range(m):
        if j < m - 1:
            terms.append(float(all_maps[j]["cs"].mean()))
        else:
            terms.append(_pooled_ssim(all_maps[j], params, j))
    pooled = [
        _signed_pow(terms[j], params.beta(j)) if j < m - 1 else terms[j]
        for j in range(m)
    ]
    value = float(np.prod(pooled))

    grad = np.zeros_like(y)
    for j in range(m):
        others = 1.0
        for i in range(m):
            if i != j:
                others *= pooled[i]
        if j < m - 1:
            beta = params.beta(j)
            if beta == 0:
                continue
            coeff = others * beta * _signed_pow(terms[j], beta - 1.0)
            g_mu, g_var, g_cov = _window_partials(all_maps[j], params, j, with_luminance=False)
        else:
            coeff = others
            g_mu, g_var, g_cov = _window_partials(all_maps[j], params, j, with_luminance=True)
            if g_mu is not None:
                g_mu = g_mu * coeff
        xj, yj = pairs[j]
        gj = _accumulate_grad(xj, yj, all_maps[j], g_mu, coeff * g_var, coeff * g_cov, k)
        for level in range(j, 0, -1):
            gj = downsample2_adjoint(gj, pairs[level - 1][0].shape)
        grad += gj
    return value, grad


_METRIC_VALUES = {
    "ssim": lambda x, y, p: ssim(x, y, p),
    "ms-ssim": lambda x, y, p: ms_ssim(x, y, p),
    "mse": lambda x, y, p: float(((y - x) ** 2).mean()),
    "mae": lambda x, y, p: float(np.abs(y - x).mean()),
}


def fd_gradient(metric, x, y, params: MetricParams | None = None,
                eps: float = 1e-6, pixels=None) -> np.ndarray:
    """Central-difference gradient of a metric with respect to ``y``.

    ``metric`` is one of "ssim", "ms-ssim", "mse", "mae" or any callable
    ``f(x, y) -> float``. With ``pixels`` (an iterable of (row, col)) only
    those entries are probed and a 1-D array in the same order is returned;
    otherwise the full gradient image is computed.
    """
    if callable(metric):
        fn = lambda a, b: float(metric(a, b))
    else:
        if metric not in _METRIC_VALUES:
            raise ValueError(f"unknown metric {metric!r}")
        if params is None:
            params = MetricParams(scales=5) if metric == "ms-ssim" else MetricParams()
        fn = lambda a, b: _METRIC_VALUES[metric](a, b, params)
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = as_gray(x, "x")
    y = as_gray(y, "y").copy()
    check_same_shape(x, y)

    def probe(r, c):
        saved = y[r, c]
        y[r, c] = saved + eps
        hi = fn(x, y)
        y[r, c] = saved - eps
        lo = fn(x, y)
        y[r, c] = saved
        return (hi - lo) / (2.0 * eps)
    if pixels is not None:
        return np.array([probe(r, c) for r, c in pixels])
    out = np.empty_like(y)
    for r in range(y.shape[0]):
        for c in range(y.shape[1]):
            out[r, c] = probe(r, c)
    return out


def fd_relative_error(analytic: np.ndarray, fd: np.ndarray) -> float:
    """Max-norm relative disagreement between two gradients.

    Defined as max|analytic - fd| / max|fd| so near-zero individual entries
    do not blow up the ratio; exact-zero fd fields compare by absolute error.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    fd = np.asarray(fd, dtype=np.float64)
    scale = np.max(np.abs(fd))
    err = np.max(np.abs(analytic - fd))
    return float(err if scale == 0.0 else err / scale)
