"""Minimal dense feed-forward networks with exact backprop and Adam.

Hand-written on purpose: the training algorithms above this layer are
verified against finite differences, which only means something if the
gradients here are analytic rather than borrowed from an autodiff
framework.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

HIDDEN_ACTIVATIONS = ("relu", "softplus", "tanh", "identity")
OUTPUT_TRANSFORMS = ("softmax", "tanh", "identity")


@dataclass(frozen=True)
class DenseNetworkSpec:
    """Layer widths, hidden activations, and the output transform.

    `widths` includes input and output, so (16, 48, 64) is one hidden layer.
    `hidden_activation` is either one name for all hidden layers or a tuple
    with one name per hidden layer.
    """

    widths: tuple[int, ...]
    hidden_activation: str | tuple[str, ...] = "relu"
    output_transform: str = "identity"

    def __post_init__(self):
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise ValueError("need input and output widths, all >= 1")
        for act in self.hidden_activations:
            if act not in HIDDEN_ACTIVATIONS:
                raise ValueError(f"unsupported activation {act!r}")
        if self.output_transform not in OUTPUT_TRANSFORMS:
            raise ValueError(f"unsupported output transform {self.output_transform!r}")

    @property
    def hidden_activations(self) -> tuple[str, ...]:
        n_hidden = len(self.widths) - 2
        if isinstance(self.hidden_activation, str):
            return (self.hidden_activation,) * n_hidden
        if len(self.hidden_activation) != n_hidden:
            raise ValueError("need one activation per hidden layer")
        return tuple(self.hidden_activation)

    @property
    def n_inputs(self) -> int:
        return self.widths[0]

    @property
    def n_outputs(self) -> int:
        return self.widths[-1]


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "softplus":
        return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    if name == "tanh":
        return np.tanh(z)
    return z


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0.0).astype(float)
    if name == "softplus":
        return _sigmoid(z)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class DenseNetwork:
    """Fully-connected network; weights as a list of (fan_in, fan_out) matrices."""

    def __init__(self, spec: DenseNetworkSpec, weights: list[np.ndarray], biases: list[np.ndarray]):
        self.spec = spec
        self.weights = weights
        self.biases = biases

    @classmethod
    def init(cls, spec: DenseNetworkSpec, rng: np.random.Generator) -> "DenseNetwork":
        """Glorot-uniform weights, zero biases."""
        weights, biases = [], []
        for fan_in, fan_out in zip(spec.widths[:-1], spec.widths[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(spec, weights, biases)

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "DenseNetwork":
        return DenseNetwork(self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, x: np.ndarray):
        """Returns (output, cache). Accepts a single vector or a batch."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.spec.n_inputs:
            raise ValueError(f"input width {a.shape[1]} != spec width {self.spec.n_inputs}")
        acts = [a]
        pre = []
        hidden = self.spec.hidden_activations
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = _activate(hidden[layer], z) if layer < len(hidden) else z
            acts.append(a)
        if self.spec.output_transform == "softmax":
            y = softmax(a)
        elif self.spec.output_transform == "tanh":
            y = np.tanh(a)
        else:
            y = a
        cache = (acts, pre, y, single)
        return (y[0] if single else y), cache

    def backward(self, cache, grad_output: np.ndarray):
        """Exact reverse-mode gradients.

        `grad_output` is d(objective)/d(output), matching the forward
        output's shape. Returns ([(dW, db) per layer], d(objective)/d(input));
        parameter gradients are summed over the batch, the input gradient is
        per-sample.
        """
        acts, pre, y, single = cache
        g = np.asarray(grad_output, dtype=float)
        if single:
            g = g[None, :]
        if g.shape != y.shape:
            raise ValueError(f"output gradient shape {g.shape} != output shape {y.shape}")

        if self.spec.output_transform == "softmax":
            gz = y * (g - (g * y).sum(axis=-1, keepdims=True))
        elif self.spec.output_transform == "tanh":
            gz = g * (1.0 - y * y)
        else:
            gz = g

        hidden = self.spec.hidden_activations
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.weights)
        for layer in range(len(self.weights) - 1, -1, -1):
            grads[layer] = (acts[layer].T @ gz, gz.sum(axis=0))
            ga = gz @ self.weights[layer].T
            if layer > 0:
                gz = ga * _activate_grad(hidden[layer - 1], pre[layer - 1], acts[layer])
        grad_input = ga[0] if single else ga
        return grads, grad_input


class Adam:
    """Adam with bias correction; `direction` picks ascent or descent."""

    def __init__(self, net: DenseNetwork, alpha: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.alpha = alpha
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(w) for pair in zip(net.weights, net.biases) for w in pair]
        self.v = [np.zeros_like(w) for pair in zip(net.weights, net.biases) for w in pair]

    def step(self, net: DenseNetwork, grads, direction: str = "descend"):
        if direction not in ("ascend", "descend"):
            raise ValueError("direction must be 'ascend' or 'descend'")
        flat_params = [p for pair in zip(net.weights, net.biases) for p in pair]
        flat_grads = [g for pair in grads for g in pair]
        for i, g in enumerate(flat_grads):
            if not np.all(np.isfinite(g)):
                raise ValueError(f"non-finite gradient in parameter tensor {i}")
        self.t += 1
        sign = 1.0 if direction == "ascend" else -1.0
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(flat_params, flat_grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p += sign * self.alpha * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def soft_update(target: DenseNetwork, live: DenseNetwork, tau: float):
    """Polyak averaging: target <- tau * live + (1 - tau) * target."""
    for t, l in zip(target.weights, live.weights):
        t *= 1.0 - tau
        t += tau * l
    for t, l in zip(target.biases, live.biases):
        t *= 1.0 - tau
        t += tau * l


# --- persistence ---------------------------------------------------------------


def save_networks(path, nets: dict[str, DenseNetwork], metadata: dict | None = None):
    """Write one or more named networks into a single .npz archive.

    Per network `name`, arrays are stored as `{name}_w{i}` / `{name}_b{i}`;
    a JSON `header` records each spec plus caller metadata.
    """
    header = {
        "specs": {
            name: {
                "widths": list(net.spec.widths),
                "hidden_activation": list(net.spec.hidden_activations),
                "output_transform": net.spec.output_transform,
            }
            for name, net in nets.items()
        },
        "metadata": metadata or {},
    }
    arrays = {"header": np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)}
    for name, net in nets.items():
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            arrays[f"{name}_w{i}"] = w
            arrays[f"{name}_b{i}"] = b
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_networks(path) -> tuple[dict[str, DenseNetwork], dict]:
    """Inverse of save_networks. Returns ({name: network}, metadata)."""
    nets = {}
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode())
        for name, fields in header["specs"].items():
            spec = DenseNetworkSpec(
                widths=tuple(fields["widths"]),
                hidden_activation=tuple(fields["hidden_activation"]),
                output_transform=fields["output_transform"],
            )
            weights = [data[f"{name}_w{i}"] for i in range(len(spec.widths) - 1)]
            biases = [data[f"{name}_b{i}"] for i in range(len(spec.widths) - 1)]
            nets[name] = DenseNetwork(spec, weights, biases)
    return nets, header["metadata"]


def save_network(net: DenseNetwork, path, metadata: dict | None = None):
    """Single-network convenience over save_networks."""
    save_networks(path, {"net": net}, metadata)


def load_network(path) -> tuple[DenseNetwork, dict]:
    """Inverse of save_network. Returns (network, metadata)."""
    nets, metadata = load_networks(path)
    return nets["net"], metadata
