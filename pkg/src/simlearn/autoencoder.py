"""Estimator-style wrapper around deterministic autoencoder training.

The underlying work happens in :mod:`simlearn.nn`; this class packages it
behind a fit/transform interface so experiments can swap losses and
architectures without re-plumbing the training loop.
"""

import numpy as np

from .base import ParamsMixin, check_fitted
from .losses import Loss, estimate_loss_scale
from .nn import EarlyStop, OptimizerConfig, encode, forward, train_autoencoder
from .nn.training import _as_image_list, _batch_arrays
from .rng import substream


def default_bottleneck(specs) -> int:
    """Index of the natural feature layer: the binarizer if present, else the
    narrowest dense layer."""
    for i, spec in enumerate(specs):
        if spec.kind == "binarize_ste":
            return i
    dense_layers = [(spec.out_dim, i) for i, spec in enumerate(specs) if spec.kind == "dense"]
    if not dense_layers:
        raise ValueError("architecture has no dense or binarize_ste layer to encode at")
    return min(dense_layers)[1]


class DeterministicAutoencoder(ParamsMixin):
    """Reconstruction autoencoder with a pluggable training loss.

    Parameters mirror the functional API: ``arch`` is a list of LayerSpec,
    ``loss`` a Loss or identifier string, ``normalize_scale`` estimates the
    loss normalization on the training set before fitting. Images passed to
    :meth:`fit` must already live in the network's output range.

    Fitted attributes: ``network_``, ``report_``, ``loss_``,
    ``bottleneck_index_``, ``image_shape_``.
    """

    def __init__(
        self,
        arch,
        loss="mse",
        optimizer=None,
        early_stop=None,
        seed=0,
        init="fan-in",
        gaussian_std=0.001,
        normalize_scale=False,
        scale_pairs=10000,
        bottleneck=None,
        valid_fraction=0.2,
    ):
        self.arch = arch
        self.loss = loss
        self.optimizer = optimizer
        self.early_stop = early_stop
        self.seed = seed
        self.init = init
        self.gaussian_std = gaussian_std
        self.normalize_scale = normalize_scale
        self.scale_pairs = scale_pairs
        self.bottleneck = bottleneck
        self.valid_fraction = valid_fraction

    def _split(self, images):
        n = len(images)
        n_valid = max(1, int(round(self.valid_fraction * n)))
        if n_valid >= n:
            raise ValueError(f"cannot hold out {n_valid} of {n} images for validation")
        order = substream(self.seed, "split").permutation(n)
        valid_idx = set(order[:n_valid].tolist())
        train = [images[i] for i in range(n) if i not in valid_idx]
        valid = [images[i] for i in range(n) if i in valid_idx]
        return train, valid

    def fit(self, images, valid=None):
        images = _as_image_list(images, "images")
        if valid is None:
            train, valid = self._split(images)
        else:
            train, valid = images, _as_image_list(valid, "valid")
        loss = self.loss if isinstance(self.loss, Loss) else Loss(self.loss)
        if self.normalize_scale:
            loss = loss.with_scale(
                estimate_loss_scale(loss, train, n_pairs=self.scale_pairs, seed=self.seed)
            )
        self.network_, self.report_ = train_autoencoder(
            self.arch,
            loss,
            train,
            valid,
            opt=self.optimizer or OptimizerConfig(),
            stop=self.early_stop or EarlyStop(),
            seed=self.seed,
            init=self.init,
            gaussian_std=self.gaussian_std,
        )
        self.loss_ = loss
        self.image_shape_ = train[0].shape
        self.bottleneck_index_ = (
            self.bottleneck
            if self.bottleneck is not None
            else default_bottleneck(self.network_.specs)
        )
        return self

    def transform(self, images) -> np.ndarray:
        """Bottleneck features, one row per image."""
        check_fitted(self, "network_")
        return encode(self.network_, images, self.bottleneck_index_)

    def reconstruct(self, images):
        """Reconstructed images in the network's output range."""
        check_fitted(self, "network_")
        images = _as_image_list(images, "images")
        batch = _batch_arrays(images, self.network_.specs[0].kind)
        out, _ = forward(self.network_, batch, mode="eval")
        return [out[i].reshape(self.image_shape_) for i in range(len(images))]

    def predict(self, images):
        return self.reconstruct(images)

    def score(self, images) -> float:
        """Negative mean per-image loss (higher is better)."""
        check_fitted(self, "network_")
        images = _as_image_list(images, "images")
        total = sum(
            self.loss_.pair_value(img, rec)
            for img, rec in zip(images, self.reconstruct(images))
        )
        return -total / (len(images) * self.loss_.scale)
