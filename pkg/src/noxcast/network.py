"""The 9-5-5-1 mixed-activation regression network.

Each hidden layer mixes three tanh nodes, one identity node and one Gaussian
node ``exp(-u**2)``; the output node is linear. Predictors are standardized
inside the network and the response stays in mg/m³.

Affine maps are evaluated as a fixed-order sum over inputs instead of a BLAS
matmul, so a prediction does not depend on how many rows are evaluated
together. Backpropagation uses matmul since it has no such requirement.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from noxcast.dataset import PREDICTORS, Standardizer

SCHEMA_VERSION = 1
FORMAT_NAME = "noxcast-network"


class ActivationKind(str, Enum):
    TANH = "TanH"
    LINEAR = "Linear"
    GAUSSIAN = "Gaussian"


DEFAULT_LAYER: tuple[ActivationKind, ...] = (
    ActivationKind.TANH,
    ActivationKind.TANH,
    ActivationKind.TANH,
    ActivationKind.LINEAR,
    ActivationKind.GAUSSIAN,
)
DEFAULT_SPEC = (DEFAULT_LAYER, DEFAULT_LAYER)

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W_out", "b_out")
WEIGHT_NAMES = ("W1", "W2", "W_out")


def model_label(spec=DEFAULT_SPEC) -> str:
    """Model line in the ``NTanH(3)NLinear(1)NGaussian(1)NTanH2(3)...`` style."""
    parts = []
    for depth, layer in enumerate(spec, start=1):
        suffix = "" if depth == 1 else str(depth)
        for kind in ActivationKind:
            n = sum(1 for a in layer if a == kind)
            if n:
                parts.append(f"N{kind.value}{suffix}({n})")
    return "".join(parts)


def _activate(u, kinds):
    out = np.empty_like(u)
    for j, kind in enumerate(kinds):
        col = u[:, j]
        if kind is ActivationKind.TANH:
            out[:, j] = np.tanh(col)
        elif kind is ActivationKind.LINEAR:
            out[:, j] = col
        else:
            out[:, j] = np.exp(-col * col)
    return out


def _activate_deriv(u, h, kinds):
    d = np.empty_like(u)
    for j, kind in enumerate(kinds):
        if kind is ActivationKind.TANH:
            d[:, j] = 1.0 - h[:, j] * h[:, j]
        elif kind is ActivationKind.LINEAR:
            d[:, j] = 1.0
        else:
            d[:, j] = -2.0 * u[:, j] * h[:, j]
    return d


def _affine(a, W, b):
    out = np.tile(b, (a.shape[0], 1))
    for i in range(W.shape[1]):
        out += a[:, i:i + 1] * W[:, i]
    return out


@dataclass(frozen=True, eq=False)
class Network:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W_out: np.ndarray
    b_out: float
    standardizer: Standardizer
    layers: tuple[tuple[ActivationKind, ...], tuple[ActivationKind, ...]] = DEFAULT_SPEC
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        layers = tuple(tuple(ActivationKind(a) for a in layer) for layer in self.layers)
        if len(layers) != 2:
            raise ValueError("the network has exactly two hidden layers")
        object.__setattr__(self, "layers", layers)
        n_in = len(self.standardizer.mean)
        n1, n2 = len(layers[0]), len(layers[1])
        shapes = {"W1": (n1, n_in), "b1": (n1,), "W2": (n2, n1), "b2": (n2,), "W_out": (n2,)}
        for name, shape in shapes.items():
            a = np.array(getattr(self, name), dtype=np.float64)
            if a.shape != shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        b_out = float(self.b_out)
        if not math.isfinite(b_out):
            raise ValueError("b_out is not finite")
        object.__setattr__(self, "b_out", b_out)

    @property
    def n_inputs(self) -> int:
        return len(self.standardizer.mean)

    def params(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def flat(self) -> np.ndarray:
        return np.concatenate([np.ravel(getattr(self, n)) for n in PARAM_NAMES])

    def replace(self, **changes) -> "Network":
        fields = {n: getattr(self, n) for n in PARAM_NAMES}
        fields.update(standardizer=self.standardizer, layers=self.layers, seed=self.seed, meta=dict(self.meta))
        fields.update(changes)
        return Network(**fields)

    def with_flat(self, theta) -> "Network":
        theta = np.asarray(theta, dtype=np.float64)
        changes = {}
        pos = 0
        for name in PARAM_NAMES:
            shape = np.shape(getattr(self, name))
            size = int(np.prod(shape)) if shape else 1
            chunk = theta[pos:pos + size]
            changes[name] = float(chunk[0]) if not shape else chunk.reshape(shape)
            pos += size
        if pos != len(theta):
            raise ValueError("parameter vector has the wrong length")
        return self.replace(**changes)

    def predict(self, X) -> np.ndarray:
        return predict_batch(self, X)


def init_network(seed: int, standardizer: Standardizer, spec=DEFAULT_SPEC) -> Network:
    """Weights uniform on ±1/sqrt(fan_in), biases zero.

    Draws come from ``numpy.random.default_rng(seed)`` (PCG64) in the order
    W1, W2, W_out, row-major, so equal seeds give bit-identical networks.
    """
    rng = np.random.default_rng(seed)
    n_in = len(standardizer.mean)
    n1, n2 = len(spec[0]), len(spec[1])
    W1 = rng.uniform(-1.0, 1.0, size=(n1, n_in)) / math.sqrt(n_in)
    W2 = rng.uniform(-1.0, 1.0, size=(n2, n1)) / math.sqrt(n1)
    W_out = rng.uniform(-1.0, 1.0, size=n2) / math.sqrt(n2)
    return Network(W1, np.zeros(n1), W2, np.zeros(n2), W_out, 0.0, standardizer, spec, seed)


def _forward_all(net: Network, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    z = (X - net.standardizer.mean) / net.standardizer.std
    u1 = _affine(z, net.W1, net.b1)
    h1 = _activate(u1, net.layers[0])
    u2 = _affine(h1, net.W2, net.b2)
    h2 = _activate(u2, net.layers[1])
    yhat = _affine(h2, net.W_out[None, :], np.array([net.b_out]))[:, 0]
    return yhat, {"z": z, "u1": u1, "h1": h1, "u2": u2, "h2": h2}


def forward(net: Network, x):
    """Prediction for one raw 9-vector plus the per-node cache (z, u1, h1, u2, h2)."""
    yhat, cache = _forward_all(net, np.asarray(x, dtype=np.float64).reshape(1, -1))
    return float(yhat[0]), {k: v[0] for k, v in cache.items()}


def predict_batch(net: Network, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        return np.empty(0)
    return _forward_all(net, X.reshape(-1, net.n_inputs))[0]


@dataclass(frozen=True, eq=False)
class Gradient:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W_out: np.ndarray
    b_out: float
    loss: float

    def flat(self) -> np.ndarray:
        return np.concatenate([np.ravel(getattr(self, n)) for n in PARAM_NAMES])


def gradient(net: Network, X, y, penalty: float = 0.0) -> Gradient:
    """Gradient of ``0.5 * sum((yhat - y)**2) + penalty * sum(weights**2)``; biases are not penalized."""
    y = np.asarray(y, dtype=np.float64).ravel()
    X = np.asarray(X, dtype=np.float64).reshape(-1, net.n_inputs)
    if len(y) == 0:
        raise ValueError("gradient needs a non-empty batch")
    yhat, c = _forward_all(net, X)
    r = yhat - y
    loss = 0.5 * float(r @ r) + penalty * sum(float(np.sum(getattr(net, w) ** 2)) for w in WEIGHT_NAMES)

    g_wout = c["h2"].T @ r + 2.0 * penalty * net.W_out
    g_bout = float(r.sum())
    d_u2 = np.outer(r, net.W_out) * _activate_deriv(c["u2"], c["h2"], net.layers[1])
    g_W2 = d_u2.T @ c["h1"] + 2.0 * penalty * net.W2
    g_b2 = d_u2.sum(axis=0)
    d_u1 = (d_u2 @ net.W2) * _activate_deriv(c["u1"], c["h1"], net.layers[0])
    g_W1 = d_u1.T @ c["z"] + 2.0 * penalty * net.W1
    g_b1 = d_u1.sum(axis=0)
    return Gradient(g_W1, g_b1, g_W2, g_b2, g_wout, g_bout, loss)


def loss_value(net: Network, X, y, penalty: float = 0.0) -> float:
    r = predict_batch(net, X) - np.asarray(y, dtype=np.float64).ravel()
    return 0.5 * float(r @ r) + penalty * sum(float(np.sum(getattr(net, w) ** 2)) for w in WEIGHT_NAMES)


def network_to_json(net: Network) -> dict:
    return {
        "format": FORMAT_NAME,
        "schema_version": SCHEMA_VERSION,
        "inputs": list(PREDICTORS[: net.n_inputs]) if net.n_inputs == len(PREDICTORS) else net.n_inputs,
        "layers": [[a.value for a in layer] for layer in net.layers],
        "model": model_label(net.layers),
        "W1": net.W1.tolist(),
        "b1": net.b1.tolist(),
        "W2": net.W2.tolist(),
        "b2": net.b2.tolist(),
        "W_out": net.W_out.tolist(),
        "b_out": net.b_out,
        "standardizer": net.standardizer.to_json(),
        "seed": net.seed,
        **net.meta,
    }


def network_from_json(d: dict) -> Network:
    if d.get("format") != FORMAT_NAME:
        raise ValueError("not a noxcast network file")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version {d.get('schema_version')}")
    known = set(PARAM_NAMES) | {"format", "schema_version", "inputs", "layers", "model", "standardizer", "seed"}
    meta = {k: v for k, v in d.items() if k not in known}
    return Network(
        W1=d["W1"], b1=d["b1"], W2=d["W2"], b2=d["b2"], W_out=d["W_out"], b_out=d["b_out"],
        standardizer=Standardizer.from_json(d["standardizer"]),
        layers=tuple(tuple(layer) for layer in d["layers"]),
        seed=d.get("seed"),
        meta=meta,
    )


def save_network(net: Network, path) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    from noxcast.io import write_text_atomic

    write_text_atomic(path, json.dumps(network_to_json(net), indent=1) + "\n")


def load_network(path) -> Network:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model file not found: {path}")
    return network_from_json(json.loads(path.read_text(encoding="utf-8")))


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def constant_network(value: float, standardizer: Standardizer, spec=DEFAULT_SPEC) -> Network:
    """All weights zero, output bias ``value``: predicts ``value`` everywhere."""
    n_in = len(standardizer.mean)
    n1, n2 = len(spec[0]), len(spec[1])
    return Network(np.zeros((n1, n_in)), np.zeros(n1), np.zeros((n2, n1)), np.zeros(n2),
                   np.zeros(n2), value, standardizer, spec)


def layer_spec(names: Sequence[str]) -> tuple[ActivationKind, ...]:
    return tuple(ActivationKind(n) for n in names)
