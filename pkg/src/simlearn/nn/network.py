"""Networks: initialization, forward/backward passes, and JSON checkpoints.

A :class:`Network` is an immutable snapshot of layer specs plus parameter
arrays. ``forward`` returns the output together with a tape of cached
activations; ``backward`` consumes that tape and an output-gradient and
returns exact reverse-mode gradients. Optimizer steps build new Network
instances, which invalidates tapes taken against the old parameters.

Checkpoints are JSON with sorted keys, so saving the same networks twice
produces identical bytes.
"""

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import NonFiniteActivation
from ..rng import substream
from .layers import LayerSpec, build_layer, check_chain, fan_in, param_shapes

CHECKPOINT_VERSION = 1

_token_counter = itertools.count(1)


@dataclass(frozen=True)
class Network:
    specs: tuple
    params: tuple  # one dict of arrays per layer, empty for parameter-free kinds
    seed: int
    token: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "token", next(_token_counter))

    def layer_widths(self) -> list:
        return [spec.kind for spec in self.specs]


@dataclass(frozen=True)
class Tape:
    """Activation record from one forward pass, tied to one Network."""

    token: int
    input: np.ndarray
    outputs: tuple  # output of every layer, last one is the network output
    caches: tuple


def init_network(specs, seed: int, init: str = "fan-in", gaussian_std: float = 0.001):
    """Builds a Network with seeded weights and zero biases.

    ``init`` is "fan-in" (uniform on +/- 1/sqrt(fan_in)) or "gaussian"
    (zero-mean with ``gaussian_std``). Each layer draws from its own named
    substream, so editing one layer never reshuffles another's weights.
    """
    specs = tuple(specs)
    if not specs:
        raise ValueError("network needs at least one layer")
    check_chain(specs)
    if init not in ("fan-in", "gaussian"):
        raise ValueError(f"init must be 'fan-in' or 'gaussian', got {init!r}")
    if gaussian_std < 0:
        raise ValueError("gaussian_std must be >= 0")
    params = []
    for i, spec in enumerate(specs):
        shapes = param_shapes(spec)
        if not shapes:
            params.append({})
            continue
        gen = substream(seed, "init", f"layer{i}")
        if init == "fan-in":
            bound = 1.0 / np.sqrt(fan_in(spec))
            w = gen.uniform(-bound, bound, shapes["w"])
        else:
            w = gen.normal(0.0, gaussian_std, shapes["w"]) if gaussian_std else np.zeros(shapes["w"])
        params.append({"w": w, "b": np.zeros(shapes["b"])})
    return Network(specs=specs, params=tuple(params), seed=seed)


def forward(net: Network, x, mode: str = "train"):
    """Runs the network on a batched input; returns (output, tape).

    ``mode`` is accepted for interface stability; every layer, including the
    binarizing bottleneck, behaves identically in "train" and "eval".
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    outputs, caches = [], []
    value = x
    for i, (spec, params) in enumerate(zip(net.specs, net.params)):
        value, cache = build_layer(spec, params).forward(value)
        if not np.all(np.isfinite(value)):
            raise NonFiniteActivation(
                f"non-finite activation after layer {i} ({spec.kind})"
            )
        outputs.append(value)
        caches.append(cache)
    return value, Tape(
        token=net.token, input=x, outputs=tuple(outputs), caches=tuple(caches)
    )


def backward(net: Network, tape: Tape, output_grad):
    """Backpropagates an output-gradient; returns (param_grads, input_grad).

    ``param_grads`` aligns with ``net.params``: a dict of arrays per layer,
    empty for parameter-free layers.
    """
    if tape.token != net.token:
        raise ValueError("stale tape: it was recorded against different parameters")
    g = np.asarray(output_grad, dtype=np.float64)
    if g.shape != tape.outputs[-1].shape:
        raise ValueError(
            f"output_grad shape {g.shape} does not match output {tape.outputs[-1].shape}"
        )
    param_grads = [None] * len(net.specs)
    for i in range(len(net.specs) - 1, -1, -1):
        layer = build_layer(net.specs[i], net.params[i])
        g, param_grads[i] = layer.backward(tape.caches[i], g)
    return param_grads, g


def _array_to_doc(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def _array_from_doc(d: dict) -> np.ndarray:
    a = np.asarray(d["data"], dtype=np.float64).reshape(d["shape"])
    return a


def network_to_doc(net: Network) -> dict:
    return {
        "seed": net.seed,
        "specs": [spec.to_dict() for spec in net.specs],
        "params": [
            {name: _array_to_doc(arr) for name, arr in sorted(layer.items())}
            for layer in net.params
        ],
    }


def network_from_doc(doc: dict) -> Network:
    specs = tuple(LayerSpec.from_dict(d) for d in doc["specs"])
    params = []
    for spec, layer_doc in zip(specs, doc["params"]):
        want = param_shapes(spec)
        arrays = {name: _array_from_doc(d) for name, d in layer_doc.items()}
        if set(arrays) != set(want) or any(
            arrays[n].shape != tuple(want[n]) for n in want
        ):
            raise ValueError(f"checkpoint parameters do not fit a {spec.kind} layer")
        params.append(arrays)
    if len(params) != len(specs):
        raise ValueError("checkpoint has a spec/parameter count mismatch")
    net = Network(specs=specs, params=tuple(params), seed=int(doc["seed"]))
    for layer in net.params:
        for arr in layer.values():
            if not np.all(np.isfinite(arr)):
                raise ValueError("checkpoint contains non-finite parameters")
    return net


@dataclass(frozen=True)
class Checkpoint:
    kind: str  # "autoencoder" | "elvae" | "sr"
    networks: dict
    meta: dict


def save_checkpoint(path, kind: str, networks: dict, meta: dict | None = None) -> None:
    """Writes a versioned JSON checkpoint with deterministic bytes."""
    doc = {
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "networks": {name: network_to_doc(net) for name, net in networks.items()},
        "meta": meta or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_checkpoint(path) -> Checkpoint:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r}")
    networks = {
        name: network_from_doc(net_doc) for name, net_doc in doc["networks"].items()
    }
    return Checkpoint(kind=doc["kind"], networks=networks, meta=doc.get("meta", {}))
