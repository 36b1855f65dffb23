"""Layer specifications and their forward/backward computations.

Every layer exposes ``forward(x) -> (y, cache)`` and
``backward(cache, grad_y) -> (grad_x, param_grads)``. Inputs are batched:
dense-side layers see ``(batch, dim)`` arrays, image-side layers see
``(batch, channels, height, width)``. ``flatten`` and ``reshape`` bridge the
two forms so convolutional and fully-connected stages can be mixed freely.
"""

from dataclasses import dataclass

import numpy as np

_KIND_FIELDS = {
    "dense": ("in_dim", "out_dim"),
    "conv2d": ("in_channels", "filters", "kernel", "stride", "padding"),
    "upsample2": (),
    "relu": (),
    "tanh": (),
    "binarize_ste": (),
    "flatten": (),
    "reshape": ("channels", "height", "width"),
}


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a network; only the fields named by ``kind`` are used."""

    kind: str
    in_dim: int = 0
    out_dim: int = 0
    in_channels: int = 0
    filters: int = 0
    kernel: int = 0
    stride: int = 1
    padding: str = "same"
    channels: int = 0
    height: int = 0
    width: int = 0

    def __post_init__(self):
        if self.kind not in _KIND_FIELDS:
            raise ValueError(
                f"unknown layer kind {self.kind!r}; expected one of "
                + ", ".join(sorted(_KIND_FIELDS))
            )
        if self.kind == "dense":
            if self.in_dim < 1 or self.out_dim < 1:
                raise ValueError("dense dims must be positive")
        elif self.kind == "conv2d":
            if self.in_channels < 1 or self.filters < 1:
                raise ValueError("conv2d channel counts must be positive")
            if self.kernel < 1 or self.kernel % 2 == 0:
                raise ValueError(f"kernel must be odd and positive, got {self.kernel}")
            if self.stride < 1:
                raise ValueError(f"stride must be >= 1, got {self.stride}")
            if self.padding not in ("same", "valid"):
                raise ValueError(f"padding must be 'same' or 'valid', got {self.padding!r}")
        elif self.kind == "reshape":
            if min(self.channels, self.height, self.width) < 1:
                raise ValueError("reshape target dims must be positive")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for field in _KIND_FIELDS[self.kind]:
            d[field] = getattr(self, field)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        d = dict(d)
        kind = d.pop("kind", None)
        if kind not in _KIND_FIELDS:
            raise ValueError(f"bad layer kind in spec: {kind!r}")
        extra = set(d) - set(_KIND_FIELDS[kind])
        if extra:
            raise ValueError(f"unknown fields for {kind}: {sorted(extra)}")
        return cls(kind=kind, **d)


def dense(in_dim: int, out_dim: int) -> LayerSpec:
    return LayerSpec("dense", in_dim=in_dim, out_dim=out_dim)


def conv2d(in_channels, filters, kernel, stride=1, padding="same") -> LayerSpec:
    return LayerSpec(
        "conv2d",
        in_channels=in_channels,
        filters=filters,
        kernel=kernel,
        stride=stride,
        padding=padding,
    )


def upsample2() -> LayerSpec:
    return LayerSpec("upsample2")


def relu() -> LayerSpec:
    return LayerSpec("relu")


def tanh() -> LayerSpec:
    return LayerSpec("tanh")


def binarize_ste() -> LayerSpec:
    return LayerSpec("binarize_ste")


def flatten() -> LayerSpec:
    return LayerSpec("flatten")


def reshape(channels: int, height: int, width: int) -> LayerSpec:
    return LayerSpec("reshape", channels=channels, height=height, width=width)


def param_shapes(spec: LayerSpec) -> dict:
    """Parameter array shapes for a layer, empty for parameter-free kinds."""
    if spec.kind == "dense":
        return {"w": (spec.in_dim, spec.out_dim), "b": (spec.out_dim,)}
    if spec.kind == "conv2d":
        return {
            "w": (spec.filters, spec.in_channels, spec.kernel, spec.kernel),
            "b": (spec.filters,),
        }
    return {}


def fan_in(spec: LayerSpec) -> int:
    if spec.kind == "dense":
        return spec.in_dim
    if spec.kind == "conv2d":
        return spec.in_channels * spec.kernel * spec.kernel
    raise ValueError(f"{spec.kind} has no parameters")


class _Dense:
    def __init__(self, spec, params):
        self.spec = spec
        self.w = params["w"]
        self.b = params["b"]

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.spec.in_dim:
            raise ValueError(
                f"dense layer expects (batch, {self.spec.in_dim}), got {x.shape}"
            )
        return x @ self.w + self.b, x

    def backward(self, cache, g):
        x = cache
        return g @ self.w.T, {"w": x.T @ g, "b": g.sum(axis=0)}


def _im2col(x, kernel, stride):
    """(B, C, H, W) -> (B, C*k*k, L) column matrix over the output grid."""
    b, c, h, w = x.shape
    out_h = (h - kernel) // stride + 1
    out_w = (w - kernel) // stride + 1
    cols = np.empty((b, c, kernel, kernel, out_h, out_w))
    for i in range(kernel):
        for j in range(kernel):
            cols[:, :, i, j] = x[
                :, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride
            ]
    return cols.reshape(b, c * kernel * kernel, out_h * out_w), (out_h, out_w)


def _col2im(gcols, x_shape, kernel, stride, out_hw):
    b, c, h, w = x_shape
    out_h, out_w = out_hw
    g = np.zeros(x_shape)
    gcols = gcols.reshape(b, c, kernel, kernel, out_h, out_w)
    for i in range(kernel):
        for j in range(kernel):
            g[:, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride] += (
                gcols[:, :, i, j]
            )
    return g


class _Conv2d:
    def __init__(self, spec, params):
        self.spec = spec
        self.w = params["w"]
        self.b = params["b"]
        self.pad = spec.kernel // 2 if spec.padding == "same" else 0

    def forward(self, x):
        s = self.spec
        if x.ndim != 4 or x.shape[1] != s.in_channels:
            raise ValueError(
                f"conv2d expects (batch, {s.in_channels}, h, w), got {x.shape}"
            )
        if self.pad:
            x = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad), (self.pad, self.pad)))
        if min(x.shape[2], x.shape[3]) < s.kernel:
            raise ValueError(f"input {x.shape[2]}x{x.shape[3]} smaller than kernel")
        cols, out_hw = _im2col(x, s.kernel, s.stride)
        w2 = self.w.reshape(s.filters, -1)
        y = np.einsum("fc,bcl->bfl", w2, cols)
        y = y.reshape(x.shape[0], s.filters, *out_hw) + self.b[None, :, None, None]
        return y, (cols, x.shape, out_hw)

    def backward(self, cache, g):
        cols, padded_shape, out_hw = cache
        s = self.spec
        g2 = g.reshape(g.shape[0], s.filters, -1)
        gw = np.einsum("bfl,bcl->fc", g2, cols).reshape(self.w.shape)
        gb = g.sum(axis=(0, 2, 3))
        gcols = np.einsum("fc,bfl->bcl", self.w.reshape(s.filters, -1), g2)
        gx = _col2im(gcols, padded_shape, s.kernel, s.stride, out_hw)
        if self.pad:
            gx = gx[:, :, self.pad : -self.pad, self.pad : -self.pad]
        return gx, {"w": gw, "b": gb}


class _Upsample2:
    def __init__(self, spec, params):
        pass

    def forward(self, x):
        if x.ndim != 4:
            raise ValueError(f"upsample2 expects (batch, c, h, w), got {x.shape}")
        return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3), x.shape

    def backward(self, cache, g):
        b, c, h, w = cache
        return g.reshape(b, c, h, 2, w, 2).sum(axis=(3, 5)), {}


class _Relu:
    def __init__(self, spec, params):
        pass

    def forward(self, x):
        return np.maximum(x, 0.0), x > 0

    def backward(self, cache, g):
        return g * cache, {}


class _Tanh:
    def __init__(self, spec, params):
        pass

    def forward(self, x):
        y = np.tanh(x)
        return y, y

    def backward(self, cache, g):
        return g * (1.0 - cache * cache), {}


class _BinarizeSte:
    """Thresholds to +/-1 on the forward pass (0 maps to +1); the backward
    pass is the identity, so gradients reach the pre-activation unchanged."""

    def __init__(self, spec, params):
        pass

    def forward(self, x):
        return np.where(x >= 0.0, 1.0, -1.0), None

    def backward(self, cache, g):
        return g, {}


class _Flatten:
    def __init__(self, spec, params):
        pass

    def forward(self, x):
        if x.ndim < 2:
            raise ValueError(f"flatten expects a batched array, got shape {x.shape}")
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, cache, g):
        return g.reshape(cache), {}


class _Reshape:
    def __init__(self, spec, params):
        self.spec = spec

    def forward(self, x):
        s = self.spec
        want = s.channels * s.height * s.width
        if x.ndim != 2 or x.shape[1] != want:
            raise ValueError(
                f"reshape to ({s.channels}, {s.height}, {s.width}) expects "
                f"(batch, {want}), got {x.shape}"
            )
        return x.reshape(x.shape[0], s.channels, s.height, s.width), x.shape

    def backward(self, cache, g):
        return g.reshape(cache), {}


_BUILDERS = {
    "dense": _Dense,
    "conv2d": _Conv2d,
    "upsample2": _Upsample2,
    "relu": _Relu,
    "tanh": _Tanh,
    "binarize_ste": _BinarizeSte,
    "flatten": _Flatten,
    "reshape": _Reshape,
}


def build_layer(spec: LayerSpec, params: dict):
    return _BUILDERS[spec.kind](spec, params)


def check_chain(specs) -> None:
    """Static adjacency check over the dimensions that are knowable up front.

    Tracks whether the running value is a vector or an image and its known
    dimensions; raises on any contradiction (for example a dense layer whose
    in_dim disagrees with the previous out_dim). Dimensions that depend on
    the runtime input stay unknown and are checked during forward instead.
    """
    form, dims = None, None  # form: None | "vec" | "img"
    for i, spec in enumerate(specs):
        where = f"layer {i} ({spec.kind})"
        if spec.kind == "dense":
            if form == "img":
                raise ValueError(f"{where} needs a vector input; insert flatten")
            if form == "vec" and dims is not None and dims != spec.in_dim:
                raise ValueError(
                    f"{where} expects in_dim {spec.in_dim} but gets {dims}"
                )
            form, dims = "vec", spec.out_dim
        elif spec.kind == "conv2d":
            if form == "vec":
                raise ValueError(f"{where} needs an image input; insert reshape")
            if form == "img" and dims[0] is not None and dims[0] != spec.in_channels:
                raise ValueError(
                    f"{where} expects {spec.in_channels} channels but gets {dims[0]}"
                )
            h, w = (dims[1], dims[2]) if form == "img" else (None, None)
            pad = spec.kernel // 2 if spec.padding == "same" else 0

            def out_dim(n):
                if n is None:
                    return None
                m = (n + 2 * pad - spec.kernel) // spec.stride + 1
                if m < 1:
                    raise ValueError(f"{where} output collapses below 1 pixel")
                return m

            form, dims = "img", (spec.filters, out_dim(h), out_dim(w))
        elif spec.kind == "upsample2":
            if form == "vec":
                raise ValueError(f"{where} needs an image input; insert reshape")
            if form == "img":
                c, h, w = dims
                dims = (c, None if h is None else 2 * h, None if w is None else 2 * w)
            else:
                form, dims = "img", (None, None, None)
        elif spec.kind == "flatten":
            if form == "vec":
                raise ValueError(f"{where} input is already a vector")
            if form == "img" and all(d is not None for d in dims):
                form, dims = "vec", dims[0] * dims[1] * dims[2]
            else:
                form, dims = "vec", None
        elif spec.kind == "reshape":
            if form == "img":
                raise ValueError(f"{where} needs a vector input; insert flatten")
            want = spec.channels * spec.height * spec.width
            if form == "vec" and dims is not None and dims != want:
                raise ValueError(f"{where} expects {want} features but gets {dims}")
            form, dims = "img", (spec.channels, spec.height, spec.width)
        # relu/tanh/binarize_ste pass any form through unchanged
