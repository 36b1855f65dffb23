"""Layer-level checks: shapes, golden forward values, and FD gradients.

Each differentiable layer is verified in isolation by projecting its output
onto a fixed random direction and comparing backward() against central
finite differences on that scalar.
"""

import numpy as np
import pytest

from simlearn.metrics import fd_relative_error
from simlearn.nn import (
    LayerSpec,
    Network,
    backward,
    binarize_ste,
    conv2d,
    dense,
    flatten,
    forward,
    init_network,
    relu,
    reshape,
    tanh,
    upsample2,
)


def _with_param(net, layer, name, idx, delta):
    params = [dict(p) for p in net.params]
    arr = params[layer][name].copy()
    arr[idx] += delta
    params[layer][name] = arr
    return Network(specs=net.specs, params=tuple(params), seed=net.seed)


def fd_param_grads(net, x, projection, eps=1e-6):
    """Central-difference gradients of sum(forward(net, x) * projection)."""
    grads = []
    for li, layer in enumerate(net.params):
        layer_grads = {}
        for name, arr in layer.items():
            g = np.zeros_like(arr)
            for idx in np.ndindex(arr.shape):
                hi = float((forward(_with_param(net, li, name, idx, eps), x)[0] * projection).sum())
                lo = float((forward(_with_param(net, li, name, idx, -eps), x)[0] * projection).sum())
                g[idx] = (hi - lo) / (2 * eps)
            layer_grads[name] = g
        grads.append(layer_grads)
    return grads


def fd_input_grad(net, x, projection, eps=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += eps
        xm[idx] -= eps
        hi = float((forward(net, xp)[0] * projection).sum())
        lo = float((forward(net, xm)[0] * projection).sum())
        g[idx] = (hi - lo) / (2 * eps)
    return g


def check_net_gradients(net, x, seed=0, tol=1e-6):
    rng = np.random.default_rng(seed)
    out, tape = forward(net, x)
    projection = rng.normal(size=out.shape)
    param_grads, input_grad = backward(net, tape, projection)
    fd_params = fd_param_grads(net, x, projection)
    worst = fd_relative_error(input_grad, fd_input_grad(net, x, projection))
    for analytic, fd in zip(param_grads, fd_params):
        for name in fd:
            worst = max(worst, fd_relative_error(analytic[name], fd[name]))
    assert worst < tol, f"worst FD mismatch {worst}"
    return worst


class TestLayerSpec:
    def test_round_trip(self):
        spec = conv2d(3, 8, 5, stride=2, padding="valid")
        assert LayerSpec.from_dict(spec.to_dict()) == spec

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            LayerSpec.from_dict({"kind": "dropout"})

    def test_unknown_field(self):
        with pytest.raises(ValueError):
            LayerSpec.from_dict({"kind": "relu", "rate": 0.5})

    @pytest.mark.parametrize(
        "bad",
        [
            lambda: dense(0, 4),
            lambda: conv2d(1, 4, 4),
            lambda: conv2d(1, 4, 3, stride=0),
            lambda: conv2d(1, 0, 3),
            lambda: reshape(0, 4, 4),
        ],
    )
    def test_invalid_specs(self, bad):
        with pytest.raises(ValueError):
            bad()


class TestInit:
    def test_deterministic(self):
        arch = [dense(4, 3), tanh(), dense(3, 4)]
        a = init_network(arch, seed=11)
        b = init_network(arch, seed=11)
        for pa, pb in zip(a.params, b.params):
            for name in pa:
                assert np.array_equal(pa[name], pb[name])

    def test_seed_changes_weights(self):
        arch = [dense(4, 3)]
        a = init_network(arch, seed=1)
        b = init_network(arch, seed=2)
        assert not np.array_equal(a.params[0]["w"], b.params[0]["w"])

    def test_gaussian_std_zero_gives_zero_weights(self):
        net = init_network([dense(4, 3)], seed=0, init="gaussian", gaussian_std=0.0)
        assert not net.params[0]["w"].any()

    def test_fan_in_bound(self):
        net = init_network([dense(100, 50)], seed=3)
        assert np.abs(net.params[0]["w"]).max() <= 0.1
        assert not net.params[0]["b"].any()

    def test_chain_accepts_matching_dense(self):
        init_network([dense(2, 4), dense(4, 3)], seed=0)

    def test_chain_rejects_mismatched_dense(self):
        with pytest.raises(ValueError):
            init_network([dense(2, 4), dense(3, 3)], seed=0)

    def test_chain_rejects_conv_after_dense(self):
        with pytest.raises(ValueError):
            init_network([dense(2, 4), conv2d(1, 2, 3)], seed=0)

    def test_chain_rejects_bad_reshape(self):
        with pytest.raises(ValueError):
            init_network([dense(2, 10), reshape(1, 3, 3)], seed=0)


class TestForwardShapes:
    def test_same_padding_stride2_halves(self):
        net = init_network([conv2d(1, 2, 5, stride=2)], seed=0)
        out, _ = forward(net, np.zeros((3, 1, 16, 16)))
        assert out.shape == (3, 2, 8, 8)

    def test_valid_padding_dims(self):
        net = init_network([conv2d(1, 2, 3, stride=2, padding="valid")], seed=0)
        out, _ = forward(net, np.zeros((1, 1, 11, 11)))
        # floor((11 - 3)/2) + 1 = 5
        assert out.shape == (1, 2, 5, 5)

    def test_upsample_repeats_values(self):
        net = init_network([upsample2()], seed=0)
        x = np.arange(4.0).reshape(1, 1, 2, 2)
        out, _ = forward(net, x)
        assert out.shape == (1, 1, 4, 4)
        assert np.array_equal(out[0, 0], np.array([
            [0, 0, 1, 1],
            [0, 0, 1, 1],
            [2, 2, 3, 3],
            [2, 2, 3, 3],
        ], dtype=float))

    def test_identity_dense(self):
        net = init_network([dense(3, 3)], seed=0)
        params = ({"w": np.eye(3), "b": np.zeros(3)},)
        net = Network(specs=net.specs, params=params, seed=0)
        x = np.array([[0.1, -0.5, 2.0]])
        out, _ = forward(net, x)
        assert np.array_equal(out, x)

    def test_binarize_values_and_tie(self):
        net = init_network([binarize_ste()], seed=0)
        out, _ = forward(net, np.array([[0.3, -0.2, 0.0]]))
        assert np.array_equal(out, np.array([[1.0, -1.0, 1.0]]))

    def test_nonfinite_activation_names_layer(self):
        net = init_network([dense(2, 2), relu(), dense(2, 2)], seed=0)
        params = list(net.params)
        params[2] = {"w": np.full((2, 2), np.inf), "b": np.zeros(2)}
        net = Network(specs=net.specs, params=tuple(params), seed=0)
        with np.errstate(invalid="ignore"), pytest.raises(ValueError, match="layer 2"):
            forward(net, np.ones((1, 2)))

    def test_input_shape_mismatch(self):
        net = init_network([dense(4, 2)], seed=0)
        with pytest.raises(ValueError):
            forward(net, np.zeros((2, 5)))


class TestBackward:
    def test_dense_outer_product(self):
        net = init_network([dense(3, 2)], seed=5)
        x = np.random.default_rng(0).normal(size=(1, 3))
        out, tape = forward(net, x)
        err = np.array([[0.5, -1.5]])
        grads, _ = backward(net, tape, err)
        assert grads[0]["w"] == pytest.approx(np.outer(x[0], err[0]))
        assert grads[0]["b"] == pytest.approx(err[0])

    def test_binarize_straight_through_basis(self):
        net = init_network([binarize_ste()], seed=0)
        x = np.random.default_rng(1).normal(size=(2, 5))
        _, tape = forward(net, x)
        for k in range(5):
            basis = np.zeros((2, 5))
            basis[0, k] = 1.0
            _, gin = backward(net, tape, basis)
            assert np.array_equal(gin, basis)

    def test_stale_tape_rejected(self):
        net = init_network([dense(2, 2)], seed=0)
        _, tape = forward(net, np.zeros((1, 2)))
        other = Network(specs=net.specs, params=net.params, seed=0)
        with pytest.raises(ValueError, match="stale"):
            backward(other, tape, np.zeros((1, 2)))

    def test_output_grad_shape_checked(self):
        net = init_network([dense(2, 3)], seed=0)
        _, tape = forward(net, np.zeros((1, 2)))
        with pytest.raises(ValueError):
            backward(net, tape, np.zeros((1, 2)))


class TestLayerGradients:
    def test_six_parameter_dense(self):
        net = init_network([dense(2, 2)], seed=7)
        x = np.random.default_rng(2).normal(size=(3, 2))
        check_net_gradients(net, x)

    def test_dense_stack_with_tanh(self):
        net = init_network([dense(6, 4), tanh(), dense(4, 6)], seed=8)
        x = np.random.default_rng(3).normal(size=(4, 6))
        check_net_gradients(net, x)

    def test_relu_away_from_kink(self):
        net = init_network([dense(5, 5), relu()], seed=9)
        x = np.random.default_rng(4).normal(size=(3, 5)) + 0.05
        check_net_gradients(net, x)

    def test_conv2d_same_stride1(self):
        net = init_network([conv2d(2, 3, 3)], seed=10)
        x = np.random.default_rng(5).normal(size=(2, 2, 6, 6))
        check_net_gradients(net, x)

    def test_conv2d_same_stride2(self):
        net = init_network([conv2d(1, 2, 5, stride=2)], seed=11)
        x = np.random.default_rng(6).normal(size=(2, 1, 8, 8))
        check_net_gradients(net, x)

    def test_conv2d_valid(self):
        net = init_network([conv2d(1, 2, 3, padding="valid")], seed=12)
        x = np.random.default_rng(7).normal(size=(2, 1, 6, 6))
        check_net_gradients(net, x)

    def test_upsample2(self):
        net = init_network([upsample2()], seed=13)
        x = np.random.default_rng(8).normal(size=(2, 2, 3, 3))
        check_net_gradients(net, x)

    def test_flatten_reshape_round_trip(self):
        net = init_network([flatten(), dense(16, 16), reshape(1, 4, 4)], seed=14)
        x = np.random.default_rng(9).normal(size=(2, 1, 4, 4))
        check_net_gradients(net, x)

    def test_composed_encoder_decoder(self):
        arch = [
            conv2d(1, 2, 3, stride=2),
            relu(),
            flatten(),
            dense(32, 8),
            tanh(),
            dense(8, 32),
            reshape(2, 4, 4),
            upsample2(),
            conv2d(2, 1, 3),
            tanh(),
        ]
        net = init_network(arch, seed=15)
        x = np.random.default_rng(10).normal(size=(2, 1, 8, 8)) * 0.5
        check_net_gradients(net, x)
