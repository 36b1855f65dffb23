"""Minimal feed-forward network engine with exact backpropagation."""

from .layers import (
    LayerSpec,
    binarize_ste,
    conv2d,
    dense,
    flatten,
    relu,
    reshape,
    tanh,
    upsample2,
)
from .network import (
    Checkpoint,
    Network,
    backward,
    forward,
    init_network,
    load_checkpoint,
    network_from_doc,
    network_to_doc,
    save_checkpoint,
)
from .optim import OptimizerConfig, OptimizerState, init_optimizer_state, optimizer_step
from .training import EarlyStop, TrainReport, encode, train_autoencoder

__all__ = [
    "Checkpoint",
    "EarlyStop",
    "LayerSpec",
    "Network",
    "OptimizerConfig",
    "OptimizerState",
    "TrainReport",
    "backward",
    "binarize_ste",
    "conv2d",
    "dense",
    "encode",
    "flatten",
    "forward",
    "init_network",
    "init_optimizer_state",
    "load_checkpoint",
    "network_from_doc",
    "network_to_doc",
    "optimizer_step",
    "relu",
    "reshape",
    "save_checkpoint",
    "tanh",
    "train_autoencoder",
    "upsample2",
]
