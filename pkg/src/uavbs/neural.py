"""Minimal feed-forward network with hand-written gradients.

Fixed architecture (affine layers, tanh hidden activations, identity
output) is all the learner needs, so gradients are closed-form and the
package carries no autodiff dependency. Backward passes are verified
against finite differences in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class Mlp:
    """Fully connected network; weights[i] has shape (fan_in, fan_out)."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases):
            raise ValueError("weights and biases must pair up")
        for w, b in zip(weights, biases):
            if w.shape[1] != b.shape[0]:
                raise ValueError(f"bias shape {b.shape} does not match weight {w.shape}")
        for w_prev, w_next in zip(weights, weights[1:]):
            if w_prev.shape[1] != w_next.shape[0]:
                raise ValueError("consecutive layer shapes are inconsistent")
        self.weights = weights
        self.biases = biases

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_size(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_size(self) -> int:
        return self.weights[-1].shape[1]

    def params(self) -> list[np.ndarray]:
        """Flat parameter list (weights then biases); aliases, not copies."""
        return list(self.weights) + list(self.biases)


def init_mlp(
    layer_sizes: list[int], rng: np.random.Generator, final_scale: float = 1.0
) -> Mlp:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.

    ``final_scale`` shrinks the last layer; policy heads use 0.01 so the
    initial action distribution is centred.
    """
    if len(layer_sizes) < 2:
        raise ValueError("need at least input and output sizes")
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(layer_sizes, layer_sizes[1:])):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        if i == len(layer_sizes) - 2:
            w *= final_scale
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return Mlp(weights, biases)


def mlp_forward(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, tuple]:
    """Forward pass; returns (output, cache) with the cache feeding backward.

    ``x`` is (batch, input) or a single (input,) vector.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != net.input_size:
        raise ValueError(f"input width {x.shape[1]} != expected {net.input_size}")
    activations = [x]
    h = x
    n_layers = len(net.weights)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if i < n_layers - 1:
            h = np.tanh(h)
        activations.append(h)
    cache = (net, activations)
    out = h[0] if single else h
    return out, cache


def mlp_backward(cache: tuple, output_gradient: np.ndarray) -> list[np.ndarray]:
    """Gradients of a scalar loss given d(loss)/d(output).

    Returns the gradient list in ``Mlp.params()`` order. The cache must
    come from the matching forward call.
    """
    net, activations = cache
    grad = np.asarray(output_gradient, dtype=float)
    if grad.ndim == 1:
        grad = grad[None, :]
    if grad.shape != activations[-1].shape:
        raise ValueError(
            f"output gradient shape {grad.shape} does not match forward output "
            f"{activations[-1].shape}"
        )
    n_layers = len(net.weights)
    grad_w: list[np.ndarray] = [np.empty(0)] * n_layers
    grad_b: list[np.ndarray] = [np.empty(0)] * n_layers
    delta = grad
    for i in range(n_layers - 1, -1, -1):
        grad_w[i] = activations[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (1.0 - activations[i] ** 2)
    return grad_w + grad_b


@dataclass
class AdamState:
    """Adam accumulators matching one parameter list."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def init_adam(params: list[np.ndarray], learning_rate: float) -> AdamState:
    return AdamState(
        learning_rate=learning_rate,
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
    )


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState) -> None:
    """Bias-corrected Adam update; mutates ``params`` and ``state`` in place."""
    if len(params) != len(state.m):
        raise ValueError("parameter list does not match optimizer state")
    state.t += 1
    correction1 = 1.0 - state.beta1**state.t
    correction2 = 1.0 - state.beta2**state.t
    step_scale = state.learning_rate / correction1
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match param {p.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        denom = np.sqrt(v / correction2)
        denom += state.eps
        p -= step_scale * m / denom


def global_norm(grads: list[np.ndarray]) -> float:
    total = 0.0
    for g in grads:
        flat = g.ravel()
        total += float(flat @ flat)
    return math.sqrt(total)


def clip_global_norm(grads: list[np.ndarray], max_norm: float = 1.0) -> float:
    """Scale all gradients in place so their joint L2 norm is <= max_norm.

    Returns the pre-clip norm (a useful training diagnostic).
    """
    if max_norm <= 0:
        raise ValueError("max_norm must be > 0")
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm
