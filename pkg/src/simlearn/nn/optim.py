"""SGD-with-momentum and Adam, as pure functions on Network snapshots."""

from dataclasses import dataclass

import numpy as np

from .network import Network


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sgd"
    lr: float = 5e-5
    momentum: float = 0.9
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 64

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"kind must be 'sgd' or 'adam', got {self.kind!r}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must be in [0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")

    def to_dict(self) -> dict:
        base = {"kind": self.kind, "lr": self.lr, "batch_size": self.batch_size}
        if self.kind == "sgd":
            base.update(momentum=self.momentum, weight_decay=self.weight_decay)
        else:
            base.update(
                beta1=self.beta1,
                beta2=self.beta2,
                eps=self.eps,
                weight_decay=self.weight_decay,
            )
        return base


@dataclass(frozen=True)
class OptimizerState:
    step: int
    slots: tuple  # aligned with net.params: {param_name: {slot_name: array}}


def init_optimizer_state(net: Network, config: OptimizerConfig) -> OptimizerState:
    slot_names = ("v",) if config.kind == "sgd" else ("m", "v")
    slots = tuple(
        {
            name: {slot: np.zeros_like(arr) for slot in slot_names}
            for name, arr in layer.items()
        }
        for layer in net.params
    )
    return OptimizerState(step=0, slots=slots)


def optimizer_step(net: Network, grads, state: OptimizerState, config: OptimizerConfig):
    """One update over all parameters; returns (new_net, new_state).

    SGD: v <- momentum*v - lr*(g + wd*w); w <- w + v.
    Adam: standard bias-corrected first/second moments; weight decay enters
    as an L2 term added to the gradient.
    """
    t = state.step + 1
    new_params, new_slots = [], []
    for layer_params, layer_grads, layer_slots in zip(net.params, grads, state.slots):
        updated, slots = {}, {}
        for name, w in layer_params.items():
            g = np.asarray(layer_grads[name], dtype=np.float64)
            if g.shape != w.shape:
                raise ValueError(
                    f"gradient shape {g.shape} does not match parameter {w.shape}"
                )
            if not np.all(np.isfinite(g)):
                raise ValueError(f"non-finite gradient for parameter {name!r}")
            if config.weight_decay:
                g = g + config.weight_decay * w
            if config.kind == "sgd":
                v = config.momentum * layer_slots[name]["v"] - config.lr * g
                updated[name] = w + v
                slots[name] = {"v": v}
            else:
                m = config.beta1 * layer_slots[name]["m"] + (1 - config.beta1) * g
                v = config.beta2 * layer_slots[name]["v"] + (1 - config.beta2) * g * g
                m_hat = m / (1 - config.beta1**t)
                v_hat = v / (1 - config.beta2**t)
                updated[name] = w - config.lr * m_hat / (np.sqrt(v_hat) + config.eps)
                slots[name] = {"m": m, "v": v}
        new_params.append(updated)
        new_slots.append(slots)
    new_net = Network(specs=net.specs, params=tuple(new_params), seed=net.seed)
    return new_net, OptimizerState(step=t, slots=tuple(new_slots))
