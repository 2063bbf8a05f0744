"""Minimal dense multilayer perceptron with exact reverse-mode gradients.

The networks here are the conditioners inside coupling layers: a fixed stack
of affine layers with an elementwise activation after every layer except the
last.  Gradients are written out by hand (no autodiff framework) and checked
against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimMismatch
from .rng import RngState

LEAKY_SLOPE = 0.01

ACTIVATIONS = ("relu", "leaky_relu", "tanh", "identity")


def _act(name: str, x: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "leaky_relu":
        return np.where(x > 0.0, x, LEAKY_SLOPE * x)
    if name == "tanh":
        return np.tanh(x)
    if name == "identity":
        return x
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name: str, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (pre > 0.0).astype(np.float64)
    if name == "leaky_relu":
        return np.where(pre > 0.0, 1.0, LEAKY_SLOPE)
    if name == "tanh":
        return 1.0 - post * post
    if name == "identity":
        return np.ones_like(pre)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class Mlp:
    """Affine layer stack; ``weights[i]`` has shape (fan_in, fan_out)."""

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    activation: str = "relu"

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def to_dict(self) -> dict:
        return {
            "activation": self.activation,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @staticmethod
    def from_dict(d: dict) -> "Mlp":
        return Mlp(
            weights=[np.asarray(w, dtype=np.float64) for w in d["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in d["biases"]],
            activation=d["activation"],
        )


def build_mlp(dims: list[int], activation: str, rng: RngState,
              zero_last: bool = True) -> Mlp:
    """He-uniform hidden layers; the output layer starts at zero when
    ``zero_last`` so the enclosing coupling begins as the identity map."""
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        last = i == len(dims) - 2
        if last and zero_last:
            w = np.zeros((fan_in, fan_out))
        else:
            limit = np.sqrt(6.0 / fan_in)
            w = (rng.uniform(fan_in * fan_out).reshape(fan_in, fan_out) * 2.0 - 1.0) * limit
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return Mlp(weights=weights, biases=biases, activation=activation)


def mlp_apply(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Batched forward pass; rows of the output align with rows of ``x``."""
    out, _ = mlp_forward_cached(net, x)
    return out


def mlp_forward_cached(net: Mlp, x: np.ndarray):
    """Forward pass returning (output, per-layer caches for backprop)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise DimMismatch(f"input has shape {x.shape}, net expects {net.in_dim} columns")
    h = x
    caches = []
    n_layers = len(net.weights)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        pre = h @ w + b
        post = pre if i == n_layers - 1 else _act(net.activation, pre)
        caches.append((h, pre, post))
        h = post
    return h, caches


def mlp_backprop(net: Mlp, x: np.ndarray, upstream: np.ndarray):
    """Gradients of <upstream, mlp_apply(net, x)> w.r.t. parameters and x.

    Returns (param_grads, input_grad) with ``param_grads`` a list of (dW, db)
    matching the layer order.
    """
    out, caches = mlp_forward_cached(net, x)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != out.shape:
        raise DimMismatch(f"upstream shape {upstream.shape} != output shape {out.shape}")
    return _backprop_from_caches(net, caches, upstream)


def _backprop_from_caches(net: Mlp, caches, upstream: np.ndarray):
    n_layers = len(net.weights)
    param_grads = [None] * n_layers
    grad = upstream
    for i in range(n_layers - 1, -1, -1):
        inp, pre, post = caches[i]
        if i != n_layers - 1:
            grad = grad * _act_grad(net.activation, pre, post)
        param_grads[i] = (inp.T @ grad, grad.sum(axis=0))
        grad = grad @ net.weights[i].T
    return param_grads, grad


def finite_difference_gradient(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``x``."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step.flat[i] = h
        grad.flat[i] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad
