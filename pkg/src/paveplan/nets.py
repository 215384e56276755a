"""Small dense feedforward approximators with hand-rolled exact gradients.

Everything is float64 numpy. The three planner networks (action values,
policy, state value) share this substrate: rectifier hidden layers with a
linear or softmax head. Reverse-mode gradients are computed explicitly so the
whole stack stays dependency-light and auditable against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

HEAD_LINEAR = "linear"
HEAD_SOFTMAX = "softmax"

_MAGIC = b"PPNET001"


@dataclass
class DenseNet:
    """Weights and biases of a dense net. ``weights[l]`` has shape (out, in)."""

    layer_dims: tuple[int, ...]
    head: str
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.layer_dims) < 2:
            raise ValueError("need at least an input and an output layer")
        if self.head not in (HEAD_LINEAR, HEAD_SOFTMAX):
            raise ValueError(f"unknown head {self.head!r}")
        expected = list(zip(self.layer_dims[1:], self.layer_dims[:-1]))
        got = [w.shape for w in self.weights]
        if got != expected:
            raise ValueError(f"weight shapes {got} do not match dims {self.layer_dims}")
        for (out_dim, _), b in zip(expected, self.biases):
            if b.shape != (out_dim,):
                raise ValueError("bias shape mismatch")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "DenseNet":
        return DenseNet(
            self.layer_dims,
            self.head,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


def init_net(layer_dims: Sequence[int], head: str, rng: np.random.Generator) -> DenseNet:
    """Uniform fan-in initialization, seeded for reproducibility."""
    dims = tuple(int(d) for d in layer_dims)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return DenseNet(dims, head, weights, biases)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward_trace(net: DenseNet, x: np.ndarray):
    """Forward pass keeping pre-activations for the backward sweep."""
    acts = [x]
    pre = []
    h = x
    last = net.n_layers - 1
    for layer, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        pre.append(z)
        if layer < last:
            h = np.maximum(z, 0.0)
            acts.append(h)
    out = pre[-1] if net.head == HEAD_LINEAR else _softmax(pre[-1])
    return acts, pre, out


def _as_batch(net: DenseNet, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.layer_dims[0]:
        raise ValueError(
            f"input of width {net.layer_dims[0]} expected, got shape {x.shape}"
        )
    return x, single


def forward(net: DenseNet, x) -> np.ndarray:
    """Evaluate the net on one input vector or a batch of rows."""
    xb, single = _as_batch(net, x)
    _, _, out = _forward_trace(net, xb)
    return out[0] if single else out


def backward(net: DenseNet, x, output_gradient) -> list[tuple[np.ndarray, np.ndarray]]:
    """Exact reverse-mode gradients of the forward map.

    ``output_gradient`` is the loss gradient with respect to the net OUTPUT
    (post-softmax for a softmax head). Returns one (dW, db) pair per layer,
    summed over the batch.
    """
    xb, single = _as_batch(net, x)
    g = np.asarray(output_gradient, dtype=float)
    if single:
        g = g[None, :]
    if g.shape != (xb.shape[0], net.layer_dims[-1]):
        raise ValueError("output gradient shape mismatch")

    acts, pre, out = _forward_trace(net, xb)
    if net.head == HEAD_SOFTMAX:
        # Jacobian of softmax applied row-wise: p * (g - <g, p>).
        inner = (g * out).sum(axis=1, keepdims=True)
        g = out * (g - inner)

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * net.n_layers
    for layer in range(net.n_layers - 1, -1, -1):
        dw = g.T @ acts[layer]
        db = g.sum(axis=0)
        grads[layer] = (dw, db)
        if layer > 0:
            g = (g @ net.weights[layer]) * (pre[layer - 1] > 0.0)
    return grads


@dataclass
class OptimizerState:
    """Per-net optimizer: plain sgd or adam with bias correction."""

    algorithm: str
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def __post_init__(self):
        if self.algorithm not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.algorithm!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


def make_optimizer(net: DenseNet, algorithm: str, learning_rate: float) -> OptimizerState:
    opt = OptimizerState(algorithm, learning_rate)
    if algorithm == "adam":
        for w, b in zip(net.weights, net.biases):
            opt.m.append((np.zeros_like(w), np.zeros_like(b)))
            opt.v.append((np.zeros_like(w), np.zeros_like(b)))
    return opt


def optimizer_step(
    net: DenseNet,
    grads: Sequence[tuple[np.ndarray, np.ndarray]],
    opt: OptimizerState,
) -> None:
    """Apply one update in place and advance the step counter."""
    if len(grads) != net.n_layers:
        raise ValueError("one gradient pair per layer required")
    opt.step_count += 1
    lr = opt.learning_rate
    if opt.algorithm == "sgd":
        for (w, b), (dw, db) in zip(zip(net.weights, net.biases), grads):
            w -= lr * dw
            b -= lr * db
        return

    t = opt.step_count
    c1 = 1.0 - opt.beta1**t
    c2 = 1.0 - opt.beta2**t
    for layer, (dw, db) in enumerate(grads):
        for param, grad, m, v in (
            (net.weights[layer], dw, opt.m[layer][0], opt.v[layer][0]),
            (net.biases[layer], db, opt.m[layer][1], opt.v[layer][1]),
        ):
            m *= opt.beta1
            m += (1.0 - opt.beta1) * grad
            v *= opt.beta2
            v += (1.0 - opt.beta2) * grad**2
            param -= lr * (m / c1) / (np.sqrt(v / c2) + opt.eps)


def soft_update(target: DenseNet, online: DenseNet, tau: float) -> None:
    """Blend the online parameters into the target copy in place."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    if target.layer_dims != online.layer_dims or target.head != online.head:
        raise ValueError("architecture mismatch between target and online nets")
    for tw, ow in zip(target.weights, online.weights):
        tw *= 1.0 - tau
        tw += tau * ow
    for tb, ob in zip(target.biases, online.biases):
        tb *= 1.0 - tau
        tb += tau * ob


def save_weights(net: DenseNet, path: str | Path) -> None:
    """Versioned binary weight file: magic, JSON header, raw float64 arrays."""
    header = json.dumps({"head": net.head, "layer_dims": list(net.layer_dims)}).encode()
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(len(header).to_bytes(4, "little"))
        f.write(header)
        for w, b in zip(net.weights, net.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_weights(path: str | Path) -> DenseNet:
    """Bit-exact inverse of ``save_weights``; corrupt files raise ValueError."""
    raw = Path(path).read_bytes()
    if raw[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path}: not a weight file (bad magic header)")
    pos = len(_MAGIC)
    if len(raw) < pos + 4:
        raise ValueError(f"{path}: truncated weight file")
    hlen = int.from_bytes(raw[pos : pos + 4], "little")
    pos += 4
    if len(raw) < pos + hlen:
        raise ValueError(f"{path}: truncated weight file")
    try:
        header = json.loads(raw[pos : pos + hlen].decode())
        dims = tuple(int(d) for d in header["layer_dims"])
        head = header["head"]
    except (json.JSONDecodeError, KeyError, UnicodeDecodeError) as exc:
        raise ValueError(f"{path}: corrupt weight file header") from exc
    pos += hlen

    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        nbytes = fan_out * fan_in * 8
        if len(raw) < pos + nbytes + fan_out * 8:
            raise ValueError(f"{path}: truncated weight file")
        weights.append(
            np.frombuffer(raw, dtype="<f8", count=fan_out * fan_in, offset=pos)
            .reshape(fan_out, fan_in)
            .copy()
        )
        pos += nbytes
        biases.append(np.frombuffer(raw, dtype="<f8", count=fan_out, offset=pos).copy())
        pos += fan_out * 8
    if pos != len(raw):
        raise ValueError(f"{path}: trailing bytes in weight file")
    return DenseNet(dims, head, weights, biases)
