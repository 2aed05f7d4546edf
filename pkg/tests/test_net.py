"""Dense-net kernel: forward/backward correctness, tying, Adam, checkpoints."""

import numpy as np
import pytest

from jmml.errors import NumericalError, ShapeError
from jmml.losses import grad_check
from jmml.net import Adam, DenseLayer, DenseNet, Param, tied_copy, zero_grads
from jmml.serialize import ParamCodec, decode_net, encode_net, load_checkpoint, save_checkpoint


def _mse_backprop(net, x, target):
    acts = net.forward(x)
    diff = acts[-1] - target
    value = float(np.mean(diff**2))
    net.backward(acts, 2.0 * diff / diff.size)
    return value


def test_dense_layer_relu_forward():
    w = Param(np.array([[1.0, -1.0], [2.0, 0.5]]))
    b = Param(np.array([0.0, 1.0]))
    layer = DenseLayer(w, b, "relu")
    out = layer.forward(np.array([[1.0, 1.0]]))
    np.testing.assert_allclose(out, [[3.0, 0.5]])


def test_net_backward_matches_fd():
    rng = np.random.default_rng(0)
    net = DenseNet.build([4, 6, 3], ["relu", "linear"], rng)
    x = rng.standard_normal((5, 4))
    target = rng.standard_normal((5, 3))
    params = net.params()

    def fn():
        zero_grads(params)
        value = _mse_backprop(net, x, target)
        return value, [p.grad.copy() for p in params]

    assert grad_check(fn, [p.value for p in params]) < 1e-6


def test_input_gradient_matches_fd():
    rng = np.random.default_rng(1)
    net = DenseNet.build([3, 5, 2], ["relu", "linear"], rng)
    x = rng.standard_normal((4, 3))
    target = rng.standard_normal((4, 2))

    def fn():
        zero_grads(net.params())
        acts = net.forward(x)
        diff = acts[-1] - target
        g = net.backward(acts, 2.0 * diff / diff.size)
        return float(np.mean(diff**2)), [g]

    assert grad_check(fn, [x]) < 1e-6


def test_weight_tying_shares_value_and_grad():
    rng = np.random.default_rng(2)
    layer = DenseLayer.create(3, 3, "relu", rng)
    twin = tied_copy(layer)
    assert twin.w is layer.w and twin.b is layer.b
    x = rng.standard_normal((2, 3))
    out = layer.forward(x)
    layer.backward(x, out, np.ones_like(out))
    g1 = layer.w.grad.copy()
    twin.backward(x, out, np.ones_like(out))
    # second accumulation doubles the shared gradient
    np.testing.assert_allclose(layer.w.grad, 2.0 * g1)


def test_params_deduplicates_tied_layers():
    rng = np.random.default_rng(3)
    shared = DenseLayer.create(4, 4, "relu", rng)
    net = DenseNet([shared, tied_copy(shared)])
    assert len(net.params()) == 2  # one w, one b


def test_adam_decreases_quadratic():
    p = Param(np.array([5.0, -3.0]))
    opt = Adam(lr=0.1)
    for _ in range(200):
        p.zero_grad()
        p.grad += 2.0 * p.value
        opt.step([p])
    assert np.abs(p.value).max() < 0.1
    assert opt.steps_taken(p) == 200


def test_adam_rejects_nan_grad():
    p = Param(np.zeros(2))
    p.grad[0] = np.nan
    with pytest.raises(NumericalError):
        Adam().step([p])


def test_adam_tied_param_steps_once_per_call():
    # stepping a list containing one Param twice is the caller's bug; the
    # contract is one state per Param object
    p = Param(np.ones(2))
    opt = Adam(lr=0.01)
    p.grad += 1.0
    opt.step([p])
    assert opt.steps_taken(p) == 1


def test_shape_validation():
    rng = np.random.default_rng(4)
    with pytest.raises(ShapeError):
        DenseNet.build([3, 4], ["relu", "relu"], rng)
    net = DenseNet.build([3, 4, 2], ["relu", "linear"], rng)
    with pytest.raises(ShapeError):
        net.forward(np.zeros((2, 5)))


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    shared = DenseLayer.create(4, 4, "relu", rng)
    net = DenseNet([DenseLayer.create(3, 4, "relu", rng), tied_copy(shared), shared])
    codec = ParamCodec()
    body = {"net": encode_net(net, codec)}
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, "test", body, codec)
    _kind, body2, params = load_checkpoint(path, expected_kind="test")
    net2 = decode_net(body2["net"], params)
    for p, q in zip(net.params(), net2.params()):
        np.testing.assert_array_equal(p.value, q.value)  # bit-exact
    # tying survives: layers 1 and 2 still share Params
    assert net2.layers[1].w is net2.layers[2].w


def test_checkpoint_rejects_wrong_kind(tmp_path):
    codec = ParamCodec()
    path = tmp_path / "x.json"
    save_checkpoint(path, "alpha", {}, codec)
    with pytest.raises(ValueError):
        load_checkpoint(path, expected_kind="beta")
