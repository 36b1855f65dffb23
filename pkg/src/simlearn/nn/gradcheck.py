"""Finite-difference verification of engine gradients, callable at runtime.

The test suite carries its own independent oracles; this module exists so the
command line can re-run the same style of checks in any environment and fail
loudly if a build disagrees with central differences. Each check returns a
worst-case max-norm relative error (absolute where the reference is zero).

``corrupt`` deliberately perturbs the analytic gradient before comparison.
It exists so the reporting path that says "FAIL" is itself testable.
"""

import numpy as np

from ..metrics import fd_relative_error
from ..rng import substream
from .layers import binarize_ste
from .network import Network, backward, forward, init_network


def _perturbed(net: Network, layer: int, name: str, index, delta: float) -> Network:
    params = [dict(p) for p in net.params]
    arr = params[layer][name].copy()
    arr[index] += delta
    params[layer][name] = arr
    return Network(specs=net.specs, params=tuple(params), seed=net.seed)


def _flatten_grads(param_grads, input_grad) -> np.ndarray:
    parts = [input_grad.ravel()]
    for layer in param_grads:
        for name in sorted(layer):
            parts.append(layer[name].ravel())
    return np.concatenate(parts)


def network_fd_error(specs, input_shape, seed: int = 0, eps: float = 1e-6,
                     corrupt: bool = False) -> float:
    """Backprop vs central differences through a whole network.

    The scalar under test is the projection of the output onto a fixed
    random direction; both parameter and input gradients are compared.
    """
    net = init_network(specs, seed=seed)
    gen = substream(seed, "grad-check")
    x = gen.uniform(-0.8, 0.8, size=input_shape)
    out, tape = forward(net, x)
    projection = gen.normal(size=out.shape)

    def value(network, xs):
        y, _ = forward(network, xs)
        return float((y * projection).sum())

    param_grads, input_grad = backward(net, tape, projection)
    if corrupt:
        input_grad = input_grad.copy()
        input_grad.ravel()[0] += 1e-3

    fd_params = []
    for layer_index, layer in enumerate(net.params):
        fd_layer = {}
        for name, arr in layer.items():
            fd_arr = np.empty_like(arr)
            for index in np.ndindex(arr.shape):
                hi = value(_perturbed(net, layer_index, name, index, eps), x)
                lo = value(_perturbed(net, layer_index, name, index, -eps), x)
                fd_arr[index] = (hi - lo) / (2.0 * eps)
            fd_layer[name] = fd_arr
        fd_params.append(fd_layer)

    fd_input = np.empty_like(x)
    for index in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[index] += eps
        xm[index] -= eps
        fd_input[index] = (value(net, xp) - value(net, xm)) / (2.0 * eps)

    analytic = _flatten_grads(param_grads, input_grad)
    reference = _flatten_grads(fd_params, fd_input)
    return fd_relative_error(analytic, reference)


def ste_backward_error(seed: int = 0, corrupt: bool = False) -> float:
    """The binarizing layer's backward pass must be the exact identity."""
    net = init_network([binarize_ste()], seed=seed)
    gen = substream(seed, "grad-check", "ste")
    x = gen.normal(size=(3, 16))
    _, tape = forward(net, x)
    grad = gen.normal(size=(3, 16))
    _, input_grad = backward(net, tape, grad)
    if corrupt:
        input_grad = input_grad.copy()
        input_grad.ravel()[0] += 1e-3
    return float(np.max(np.abs(input_grad - grad)))
