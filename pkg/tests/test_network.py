import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from noxcast.dataset import Standardizer
from noxcast.network import (
    DEFAULT_LAYER,
    DEFAULT_SPEC,
    ActivationKind,
    constant_network,
    forward,
    gradient,
    init_network,
    load_network,
    loss_value,
    model_label,
    network_from_json,
    network_to_json,
    predict_batch,
    save_network,
)


def random_standardizer(rng):
    return Standardizer(rng.normal(size=9) * 10, rng.uniform(0.5, 5.0, 9))


def random_net(seed, scale=1.0):
    rng = np.random.default_rng(seed + 1000)
    net = init_network(seed, random_standardizer(rng))
    return net.replace(W1=net.W1 * scale, W2=net.W2 * scale, b1=rng.normal(size=5) * 0.5,
                       b2=rng.normal(size=5) * 0.5, b_out=float(rng.normal()))


def random_inputs(net, n, rng):
    return net.standardizer.mean + net.standardizer.std * rng.normal(size=(n, 9))


# ---------------------------------------------------------------------------
# independent evaluator: plain python floats and math, one record at a time


def act(kind, u):
    if kind == "TanH":
        return math.tanh(u)
    if kind == "Linear":
        return u
    return math.exp(-u * u)


def straight_line_forward(d, x):
    z = [(xi - m) / s for xi, m, s in zip(x, d["standardizer"]["mean"], d["standardizer"]["std"])]
    h1 = [act(k, sum(w * v for w, v in zip(row, z)) + b) for k, row, b in zip(d["layers"][0], d["W1"], d["b1"])]
    h2 = [act(k, sum(w * v for w, v in zip(row, h1)) + b) for k, row, b in zip(d["layers"][1], d["W2"], d["b2"])]
    return sum(w * v for w, v in zip(d["W_out"], h2)) + d["b_out"]


def test_default_layer():
    assert [a.value for a in DEFAULT_LAYER] == ["TanH", "TanH", "TanH", "Linear", "Gaussian"]
    assert model_label() == "NTanH(3)NLinear(1)NGaussian(1)NTanH2(3)NLinear2(1)NGaussian2(1)"


def test_init_deterministic():
    std = Standardizer(np.zeros(9), np.ones(9))
    a, b = init_network(3, std), init_network(3, std)
    assert a.flat().tobytes() == b.flat().tobytes()
    assert not np.array_equal(init_network(1, std).flat(), init_network(2, std).flat())


def test_init_bounds_and_zero_biases():
    net = init_network(9, Standardizer(np.zeros(9), np.ones(9)))
    assert np.all(np.abs(net.W1) <= 1 / 3)
    assert np.all(np.abs(net.W2) <= 1 / math.sqrt(5))
    assert np.all(np.abs(net.W_out) <= 1 / math.sqrt(5))
    assert np.all(net.b1 == 0) and np.all(net.b2 == 0) and net.b_out == 0
    assert net.W1.shape == (5, 9) and net.W2.shape == (5, 5) and net.W_out.shape == (5,)


def test_zero_network_at_means():
    std = Standardizer(np.arange(9.0), np.ones(9))
    net = constant_network(0.0, std)
    y, cache = forward(net, std.mean)
    assert y == 0.0
    assert cache["h1"].tolist() == [0, 0, 0, 0, 1]
    assert cache["h2"].tolist() == [0, 0, 0, 0, 1]


def test_constant_output():
    net = random_net(4).replace(W_out=np.zeros(5), b_out=42.0)
    rng = np.random.default_rng(0)
    assert np.all(predict_batch(net, random_inputs(net, 50, rng)) == 42.0)


@pytest.mark.parametrize("seed", range(10))
def test_matches_straight_line_evaluator(seed):
    net = random_net(seed, scale=2.0)
    d = network_to_json(net)
    rng = np.random.default_rng(seed)
    for x in random_inputs(net, 20, rng):
        y, _ = forward(net, x)
        assert abs(y - straight_line_forward(d, x.tolist())) <= 1e-12 * max(1.0, abs(y))


def test_activation_identities_at_zero():
    u = np.zeros((1, 3))
    from noxcast.network import _activate

    out = _activate(u, (ActivationKind.TANH, ActivationKind.LINEAR, ActivationKind.GAUSSIAN))
    assert out.tolist() == [[0.0, 0.0, 1.0]]


@given(st.integers(0, 10_000))
def test_node_output_ranges(seed):
    net = random_net(seed % 50, scale=3.0)
    rng = np.random.default_rng(seed)
    _, cache = forward(net, random_inputs(net, 1, rng)[0])
    for h in (cache["h1"], cache["h2"]):
        assert np.all(np.abs(h[:3]) <= 1.0)
        assert 0.0 <= h[4] <= 1.0


def test_node_output_open_ranges_moderate_inputs():
    net = random_net(1)
    X = random_inputs(net, 1000, np.random.default_rng(1))
    for x in X[:200]:
        _, c = forward(net, x)
        assert np.all(np.abs(c["h1"][:3]) < 1) and 0 < c["h1"][4] <= 1


def test_predict_batch_edge_cases():
    net = random_net(2)
    assert predict_batch(net, np.empty((0, 9))).shape == (0,)
    x = random_inputs(net, 1, np.random.default_rng(3))
    assert predict_batch(net, x).tolist() == [forward(net, x[0])[0]]


def test_batching_is_transparent():
    net = random_net(5)
    X = random_inputs(net, 10_000, np.random.default_rng(5))
    batched = predict_batch(net, X)
    looped = np.array([forward(net, x)[0] for x in X])
    assert batched.tobytes() == looped.tobytes()
    assert predict_batch(net, X[:7]).tobytes() == batched[:7].tobytes()


def test_forward_deterministic():
    net = random_net(6)
    x = random_inputs(net, 1, np.random.default_rng(6))[0]
    assert forward(net, x)[0] == forward(net, x)[0]


# ---------------------------------------------------------------------------
# gradient


def central_differences(net, X, y, penalty, h=1e-6):
    theta = net.flat()
    out = np.empty_like(theta)
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = h
        out[i] = (loss_value(net.with_flat(theta + e), X, y, penalty)
                  - loss_value(net.with_flat(theta - e), X, y, penalty)) / (2 * h)
    return out


def max_relative_error(a, b, floor=1e-6):
    # the floor keeps components that are zero on both sides from dividing by ~0
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(seed):
    net = random_net(seed)
    rng = np.random.default_rng(seed)
    X, y = random_inputs(net, 16, rng), rng.normal(size=16)
    g = gradient(net, X, y, penalty=0.01)
    assert g.loss == pytest.approx(loss_value(net, X, y, 0.01))
    assert max_relative_error(g.flat(), central_differences(net, X, y, 0.01)) < 1e-4


def test_zero_gradient_at_perfect_fit():
    net = random_net(7)
    X = random_inputs(net, 16, np.random.default_rng(7))
    g = gradient(net, X, predict_batch(net, X), penalty=0.0)
    assert np.all(g.flat() == 0.0)
    assert g.loss == 0.0


def test_penalty_gradient_isolated():
    lam = 0.3
    net = random_net(8)
    X = random_inputs(net, 16, np.random.default_rng(8))
    g = gradient(net, X, predict_batch(net, X), penalty=lam)
    np.testing.assert_allclose(g.W1, 2 * lam * net.W1, rtol=0, atol=1e-15)
    np.testing.assert_allclose(g.W2, 2 * lam * net.W2, rtol=0, atol=1e-15)
    np.testing.assert_allclose(g.W_out, 2 * lam * net.W_out, rtol=0, atol=1e-15)
    assert np.all(g.b1 == 0) and np.all(g.b2 == 0) and g.b_out == 0


def test_gradient_needs_batch():
    with pytest.raises(ValueError):
        gradient(random_net(0), np.empty((0, 9)), [])


# ---------------------------------------------------------------------------
# persistence


def test_save_load_bit_identical(tmp_path):
    net = random_net(11, scale=1.7).replace(meta={"config_digest": "abc"})
    path = tmp_path / "model.json"
    save_network(net, path)
    back = load_network(path)
    X = random_inputs(net, 500, np.random.default_rng(11))
    assert predict_batch(back, X).tobytes() == predict_batch(net, X).tobytes()
    assert back.meta["config_digest"] == "abc"
    assert back.layers == DEFAULT_SPEC
    d = json.loads(path.read_text())
    assert d["schema_version"] == 1 and d["standardizer"]["std"] == net.standardizer.std.tolist()


def test_load_validates(tmp_path):
    d = network_to_json(random_net(0))
    bad = dict(d, W1=d["W1"][:4])
    with pytest.raises(ValueError, match="W1"):
        network_from_json(bad)
    bad = dict(d, W2=[[float("nan")] * 5] * 5)
    with pytest.raises(ValueError, match="non-finite"):
        network_from_json(bad)
    with pytest.raises(ValueError):
        network_from_json(dict(d, schema_version=99))
    with pytest.raises(FileNotFoundError):
        load_network(tmp_path / "none.json")


@given(arrays(np.float64, 9, elements=st.floats(-1e4, 1e4, allow_nan=False)))
def test_finite_in_finite_out(x):
    assert math.isfinite(forward(random_net(3), x)[0])
