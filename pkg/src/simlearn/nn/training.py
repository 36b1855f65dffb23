"""Mini-batch training with early stopping, and bottleneck feature export.

The training loop is generic over the loss: each step feeds the batch
through the network, asks the losses module for the scaled batch value and
per-image output-gradients, backpropagates them, and applies one optimizer
step. Validation is evaluated before training (epoch 0, the untrained
baseline) and after every epoch; the returned network is the best-validation
snapshot.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DivergenceError, NonFiniteActivation
from ..losses import Loss, batch_loss
from ..rng import substream
from .network import Network, backward, forward, init_network
from .optim import OptimizerConfig, init_optimizer_state, optimizer_step


@dataclass(frozen=True)
class EarlyStop:
    """Stop when validation fails to improve for more than ``patience`` epochs."""

    patience: int = 1
    max_epochs: int = 50
    min_delta: float = 0.0

    def __post_init__(self):
        if self.patience < 0:
            raise ValueError("patience must be >= 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.min_delta < 0:
            raise ValueError("min_delta must be >= 0")


@dataclass
class TrainReport:
    """Per-epoch curves and stopping info from one training run.

    ``valid_metric[0]`` is the untrained baseline; ``valid_metric[e]`` pairs
    with ``train_loss[e-1]`` for epoch e >= 1. ``best_epoch`` indexes into
    ``valid_metric`` (0 means the initial parameters were never beaten).
    """

    train_loss: list = field(default_factory=list)
    valid_metric: list = field(default_factory=list)
    stop_epoch: int = 0
    best_epoch: int = 0
    wall_seconds: float = 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "train_loss": list(self.train_loss),
            "valid_metric": list(self.valid_metric),
            "stop_epoch": self.stop_epoch,
            "best_epoch": self.best_epoch,
        }
        if include_timing:
            d["wall_seconds"] = self.wall_seconds
        return d


def _as_image_list(images, name):
    out = []
    for i, img in enumerate(images):
        a = np.asarray(img, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"{name}[{i}] must be 2-D, got shape {a.shape}")
        if out and a.shape != out[0].shape:
            raise ValueError(f"{name}[{i}] shape {a.shape} differs from {out[0].shape}")
        out.append(a)
    if not out:
        raise ValueError(f"{name} dataset must be nonempty")
    return out


def _batch_arrays(images, first_kind):
    """Stacks images into the input form the first layer expects."""
    stack = np.stack(images)
    if first_kind == "dense":
        return stack.reshape(len(images), -1)
    if first_kind in ("conv2d", "upsample2"):
        return stack[:, None, :, :]
    if first_kind == "reshape":
        return stack.reshape(len(images), -1)
    raise ValueError(f"cannot feed images into a network starting with {first_kind}")


def _outputs_as_images(out, image_shape):
    n = out.shape[0]
    if out.size != n * image_shape[0] * image_shape[1]:
        raise ValueError(
            f"network output {out.shape[1:]} does not hold a {image_shape} image"
        )
    return [out[i].reshape(image_shape) for i in range(n)]


def _dataset_loss(net, loss, images, image_shape):
    """Mean per-image scaled loss over a dataset (the validation metric)."""
    batch = _batch_arrays(images, net.specs[0].kind)
    out, _ = forward(net, batch, mode="eval")
    value, _grads = batch_loss(loss, images, _outputs_as_images(out, image_shape))
    return value / len(images)


def train_autoencoder(
    arch,
    loss: Loss,
    train,
    valid,
    opt: OptimizerConfig = OptimizerConfig(),
    stop: EarlyStop = EarlyStop(),
    seed: int = 0,
    init: str = "fan-in",
    gaussian_std: float = 0.001,
    on_epoch=None,
):
    """Trains a reconstruction network; returns (best Network, TrainReport).

    ``train`` and ``valid`` are lists of same-shaped 2-D images already
    rescaled to the network's output range. The per-epoch training loss is
    the scaled loss summed over the epoch divided by the dataset size; the
    validation metric is the same quantity on the validation set (lower is
    better for every loss identifier, including the negated similarity
    losses). ``on_epoch(epoch, net)`` is called with the untrained network
    (epoch 0) and after each epoch's validation pass, for progress
    artifacts such as reconstruction snapshots.
    """
    start = time.monotonic()
    train = _as_image_list(train, "train")
    valid = _as_image_list(valid, "valid")
    if train[0].shape != valid[0].shape:
        raise ValueError("train and valid images must share one shape")
    image_shape = train[0].shape

    net = init_network(arch, seed, init=init, gaussian_std=gaussian_std)
    state = init_optimizer_state(net, opt)
    report = TrainReport()

    best_value = _dataset_loss(net, loss, valid, image_shape)
    report.valid_metric.append(best_value)
    best_params = net.params
    bad_epochs = 0
    if on_epoch is not None:
        on_epoch(0, net)

    for epoch in range(1, stop.max_epochs + 1):
        order = substream(seed, "data", f"epoch{epoch}").permutation(len(train))
        epoch_total = 0.0
        for lo in range(0, len(order), opt.batch_size):
            batch_imgs = [train[i] for i in order[lo : lo + opt.batch_size]]
            try:
                out, tape = forward(net, _batch_arrays(batch_imgs, net.specs[0].kind))
            except NonFiniteActivation as exc:
                raise DivergenceError(epoch, str(exc)) from exc
            value, grads = batch_loss(
                loss, batch_imgs, _outputs_as_images(out, image_shape)
            )
            if not np.isfinite(value):
                raise DivergenceError(epoch)
            epoch_total += value
            gout = np.stack([g.reshape(out.shape[1:]) for g in grads])
            param_grads, _ = backward(net, tape, gout)
            if any(
                not np.all(np.isfinite(arr))
                for layer in param_grads
                for arr in layer.values()
            ):
                raise DivergenceError(epoch, f"non-finite gradient at epoch {epoch}")
            net, state = optimizer_step(net, param_grads, state, opt)
        report.train_loss.append(epoch_total / len(train))

        try:
            metric = _dataset_loss(net, loss, valid, image_shape)
        except NonFiniteActivation as exc:
            raise DivergenceError(epoch, str(exc)) from exc
        if not np.isfinite(metric):
            raise DivergenceError(
                epoch, f"validation metric became non-finite at epoch {epoch}"
            )
        report.valid_metric.append(metric)
        report.stop_epoch = epoch
        if on_epoch is not None:
            on_epoch(epoch, net)
        if metric < best_value - stop.min_delta:
            best_value = metric
            best_params = net.params
            report.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs > stop.patience:
                break

    best_net = Network(specs=net.specs, params=best_params, seed=seed)
    report.wall_seconds = time.monotonic() - start
    return best_net, report


def encode(net: Network, images, bottleneck_layer: int) -> np.ndarray:
    """Activations at one layer for each image, flattened to a feature row."""
    n_layers = len(net.specs)
    if not -n_layers <= bottleneck_layer < n_layers:
        raise IndexError(
            f"layer index {bottleneck_layer} out of range for {n_layers} layers"
        )
    images = _as_image_list(images, "images")
    batch = _batch_arrays(images, net.specs[0].kind)
    _, tape = forward(net, batch, mode="eval")
    features = tape.outputs[bottleneck_layer]
    return features.reshape(len(images), -1)
