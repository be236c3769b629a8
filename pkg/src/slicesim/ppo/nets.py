"""Minimal dense networks with manual backprop, plus the optimizers.

Forward/backward are written out explicitly so every gradient can be checked
against central finite differences.
"""

from __future__ import annotations

import numpy as np


class Mlp:
    """Fully connected net, tanh hidden layers, linear output."""

    def __init__(self, sizes: list[int], rng: np.random.Generator):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = list(sizes)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            scale = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self._cache = None

    @property
    def layer_count(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """x: (batch, in) -> (batch, out); caches activations for backward."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"input dim {x.shape[1]} != expected {self.sizes[0]}")
        acts = [x]
        h = x
        for i in range(self.layer_count):
            z = h @ self.weights[i] + self.biases[i]
            h = z if i == self.layer_count - 1 else np.tanh(z)
            acts.append(h)
        self._cache = acts
        return h

    def backward(self, dout: np.ndarray):
        """Gradient of a scalar loss wrt parameters, given dL/d(output).

        Returns a list of (dW, db) per layer. Must follow a forward call on
        the same inputs.
        """
        if self._cache is None:
            raise RuntimeError("backward before forward")
        acts = self._cache
        grads = [None] * self.layer_count
        delta = np.asarray(dout, dtype=float)
        for i in range(self.layer_count - 1, -1, -1):
            if i != self.layer_count - 1:
                # undo tanh: acts[i+1] holds tanh(z)
                delta = delta * (1.0 - acts[i + 1] ** 2)
            grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
            if i > 0:
                delta = delta @ self.weights[i].T
        return grads

    def parameters(self):
        for i in range(self.layer_count):
            yield self.weights[i]
            yield self.biases[i]

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_flat(self, flat: np.ndarray) -> None:
        offset = 0
        for p in self.parameters():
            n = p.size
            p[...] = flat[offset : offset + n].reshape(p.shape)
            offset += n
        if offset != flat.size:
            raise ValueError(f"flat vector size {flat.size} != parameter count {offset}")

    def zero_like_grads(self):
        return [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(self.weights, self.biases)]


class Adam:
    """Per-parameter first/second moment smoothing with bias correction."""

    def __init__(self, net: Mlp, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.net = net
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in net.parameters()]
        self.v = [np.zeros_like(p) for p in net.parameters()]

    def step(self, grads) -> None:
        self.t += 1
        flat_grads = []
        for dw, db in grads:
            flat_grads.extend((dw, db))
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.net.parameters(), flat_grads, self.m, self.v):
            m[...] = self.beta1 * m + (1.0 - self.beta1) * g
            v[...] = self.beta2 * v + (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


class Sgd:
    def __init__(self, net: Mlp, lr: float):
        self.net = net
        self.lr = lr

    def step(self, grads) -> None:
        flat_grads = []
        for dw, db in grads:
            flat_grads.extend((dw, db))
        for p, g in zip(self.net.parameters(), flat_grads):
            p -= self.lr * g


def make_optimizer(name: str, net: Mlp, lr: float):
    if name == "adam":
        return Adam(net, lr)
    if name == "sgd":
        return Sgd(net, lr)
    raise ValueError(f"unknown optimizer {name!r}")


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_sigmoid(z: np.ndarray) -> np.ndarray:
    """log(sigmoid(z)) computed stably."""
    return -np.logaddexp(0.0, -z)
