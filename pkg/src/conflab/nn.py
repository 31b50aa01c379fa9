"""Dense ReLU classifier with softmax output, trained by plain SGD.

Everything is float64 numpy. Weight matrices are stored ``(fan_out, fan_in)``
so a layer computes ``h @ W.T + b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_FLOOR = 1e-12


@dataclass
class Network:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("network needs one bias per weight matrix and at least one layer")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ValueError(f"layer {k}: weight {W.shape} and bias {b.shape} do not match")
            if k and W.shape[1] != self.weights[k - 1].shape[0]:
                raise ValueError(
                    f"layer {k}: fan_in {W.shape[1]} != previous fan_out {self.weights[k - 1].shape[0]}"
                )

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def class_count(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def sizes(self) -> list[int]:
        return [self.input_dim] + [W.shape[0] for W in self.weights]

    def params(self) -> list[np.ndarray]:
        """Flat list ``[W0, b0, W1, b1, ...]`` of the live parameter arrays."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def copy(self) -> "Network":
        return Network([W.copy() for W in self.weights], [b.copy() for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.params())


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out


@dataclass
class Batch:
    """A mini-batch as the loss sees it: inputs, target distributions, weights."""

    inputs: np.ndarray
    soft_labels: np.ndarray
    weights: np.ndarray
    example_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.inputs.shape[0]
        if self.soft_labels.shape[0] != n or self.weights.shape != (n,):
            raise ValueError("batch arrays disagree on batch size")
        if self.example_ids is None:
            self.example_ids = np.arange(n)


def init_network(sizes, rng) -> Network:
    """He-normal weights, zero biases. ``sizes`` is ``[input, hidden..., classes]``."""
    if len(sizes) < 2 or any(int(s) <= 0 for s in sizes):
        raise ValueError(f"invalid layer sizes {sizes}")
    if sizes[-1] < 2:
        raise ValueError("need at least two output classes")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Network(weights, biases)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(net: Network, inputs: np.ndarray, return_cache: bool = False):
    """Class probabilities for each row of ``inputs``.

    With ``return_cache`` the layer activations are returned too, in the
    form :func:`backward` accepts.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ValueError(f"input shape {x.shape} does not match network input dim {net.input_dim}")
    if not np.isfinite(x).all():
        raise ValueError("non-finite input to forward")
    acts = [x]
    h = x
    last = len(net.weights) - 1
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ W.T + b
        h = z if k == last else np.maximum(z, 0.0)
        acts.append(h)
    probs = softmax(h)
    if return_cache:
        return probs, acts
    return probs


def weighted_soft_ce(probs: np.ndarray, soft_labels: np.ndarray, weights: np.ndarray) -> float:
    """``-(1/sum w) * sum_i w_i sum_j t_ij log p_ij`` with ``p`` floored at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    soft_labels = np.asarray(soft_labels, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if probs.shape != soft_labels.shape or weights.shape != (probs.shape[0],):
        raise ValueError("probs, soft_labels and weights disagree in shape")
    total = weights.sum()
    if not total > 0:
        raise ValueError("sum of example weights must be positive")
    per_example = -(soft_labels * np.log(np.maximum(probs, PROB_FLOOR))).sum(axis=1)
    return float(max((weights * per_example).sum() / total, 0.0))


def backward(net: Network, batch: Batch, cache=None) -> Gradients:
    """Exact gradient of :func:`weighted_soft_ce` for ``batch``.

    ``cache`` is the ``(probs, activations)`` pair from
    ``forward(..., return_cache=True)``; it is recomputed when omitted.
    """
    if cache is None:
        cache = forward(net, batch.inputs, return_cache=True)
    probs, acts = cache
    w = batch.weights / batch.weights.sum()
    delta = w[:, None] * (probs - batch.soft_labels)
    n_layers = len(net.weights)
    gW = [None] * n_layers
    gb = [None] * n_layers
    for k in range(n_layers - 1, -1, -1):
        gW[k] = delta.T @ acts[k]
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ net.weights[k]) * (acts[k] > 0)
    grads = Gradients(gW, gb)
    if not all(np.isfinite(g).all() for g in grads.params()):
        raise FloatingPointError("non-finite gradient")
    return grads


def sgd_step(net: Network, grads: Gradients, learning_rate: float) -> Network:
    """Return a new network with every parameter moved by ``-learning_rate * grad``."""
    if len(grads.weights) != len(net.weights):
        raise ValueError("gradient structure does not match network")
    weights, biases = [], []
    for W, b, gW, gb in zip(net.weights, net.biases, grads.weights, grads.biases):
        if gW.shape != W.shape or gb.shape != b.shape:
            raise ValueError("gradient shape does not match parameter shape")
        weights.append(W - learning_rate * gW)
        biases.append(b - learning_rate * gb)
    return Network(weights, biases)


def predict(net: Network, inputs: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties go to the lowest index (``np.argmax`` semantics)."""
    return np.argmax(forward(net, inputs), axis=1)
