"""Minimal dense-network kernel: parameters, layers, forward/backward, Adam.

Everything runs in float64 on numpy.  Layers hold :class:`Param` objects;
installing the same Param pair into several networks gives exact weight
tying (one value array, one gradient accumulator).
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError, ShapeError

ACTIVATIONS = ("relu", "linear")


class Param:
    """A trainable array with an accumulated gradient."""

    __slots__ = ("value", "grad", "name")

    def __init__(self, value, name=""):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.name = name

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Param({self.name or 'unnamed'}, shape={self.value.shape})"


def glorot_uniform(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class DenseLayer:
    """Fully connected layer ``act(x @ w + b)``."""

    def __init__(self, w: Param, b: Param, activation="relu"):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if w.value.ndim != 2 or b.value.shape != (w.value.shape[1],):
            raise ShapeError("weight must be (in, out) and bias (out,)")
        self.w = w
        self.b = b
        self.activation = activation

    @classmethod
    def create(cls, in_dim, out_dim, activation, rng, name=""):
        w = Param(glorot_uniform(rng, in_dim, out_dim), name=f"{name}.w")
        b = Param(np.zeros(out_dim), name=f"{name}.b")
        return cls(w, b, activation)

    @property
    def in_dim(self):
        return self.w.value.shape[0]

    @property
    def out_dim(self):
        return self.w.value.shape[1]

    def forward(self, x):
        z = x @ self.w.value + self.b.value
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return z

    def backward(self, x, out, grad_out):
        """Accumulate parameter grads; return gradient w.r.t. the input.

        ``x`` and ``out`` are the cached input and output of ``forward``.
        """
        if self.activation == "relu":
            grad_out = np.where(out > 0.0, grad_out, 0.0)
        self.w.grad += x.T @ grad_out
        self.b.grad += grad_out.sum(axis=0)
        return grad_out @ self.w.value.T


def shared_layer(in_dim, out_dim, activation, rng, name="shared"):
    """Create a layer whose (weight, bias) pair can be installed in several
    networks.  Re-wrap with :func:`tied_copy` to install elsewhere."""
    return DenseLayer.create(in_dim, out_dim, activation, rng, name=name)


def tied_copy(layer: DenseLayer):
    """A layer sharing the exact Param objects of ``layer``."""
    return DenseLayer(layer.w, layer.b, layer.activation)


class DenseNet:
    """A stack of dense layers with cached-activation forward/backward."""

    def __init__(self, layers):
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ShapeError(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")
        self.layers = list(layers)

    @classmethod
    def build(cls, dims, activations, rng, name="net"):
        if len(activations) != len(dims) - 1:
            raise ShapeError("need one activation per layer")
        layers = [
            DenseLayer.create(dims[i], dims[i + 1], activations[i], rng, name=f"{name}.{i}")
            for i in range(len(activations))
        ]
        return cls(layers)

    @property
    def input_dim(self):
        return self.layers[0].in_dim

    @property
    def output_dim(self):
        return self.layers[-1].out_dim

    def params(self):
        seen = []
        for layer in self.layers:
            for p in (layer.w, layer.b):
                if not any(p is q for q in seen):
                    seen.append(p)
        return seen

    def forward(self, x):
        """Return the list of activations per layer (input first)."""
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise ShapeError(f"input dim {x.shape[1]} != expected {self.input_dim}")
        acts = [x]
        for layer in self.layers:
            acts.append(layer.forward(acts[-1]))
        if squeeze:
            return [a[0] for a in acts]
        return acts

    def __call__(self, x):
        return self.forward(x)[-1]

    def backward(self, acts, grad_out):
        """Backprop through cached activations; returns grad w.r.t. input."""
        g = grad_out
        for i in range(len(self.layers) - 1, -1, -1):
            g = self.layers[i].backward(acts[i], acts[i + 1], g)
        return g


class Adam:
    """Adam optimizer with per-Param state and a step instrumentation count."""

    def __init__(self, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._state = {}
        self.step_counts = {}

    def state_for(self, param):
        key = id(param)
        if key not in self._state:
            self._state[key] = {
                "m": np.zeros_like(param.value),
                "v": np.zeros_like(param.value),
                "t": 0,
            }
        return self._state[key]

    def step(self, params):
        """Apply one Adam update to each param from its accumulated grad."""
        for p in params:
            if not np.isfinite(p.grad).all():
                raise NumericalError(f"non-finite gradient for {p.name or 'param'}")
            st = self.state_for(p)
            st["t"] += 1
            st["m"] = self.beta1 * st["m"] + (1.0 - self.beta1) * p.grad
            st["v"] = self.beta2 * st["v"] + (1.0 - self.beta2) * p.grad**2
            m_hat = st["m"] / (1.0 - self.beta1 ** st["t"])
            v_hat = st["v"] / (1.0 - self.beta2 ** st["t"])
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            self.step_counts[id(p)] = st["t"]

    def steps_taken(self, param):
        return self.step_counts.get(id(param), 0)


def zero_grads(params):
    for p in params:
        p.zero_grad()
