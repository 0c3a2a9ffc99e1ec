"""Minimal dense feed-forward networks with manual backprop and Adam.

Layer i computes ``Z_i = phi_i(a_i + W_i @ Z_{i-1})``. Inputs are row batches of
shape (n, width); a 1-D vector is treated as a batch of one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from sydachain import ValidationError

ACTIVATIONS = ("tanh", "identity")


@dataclass(frozen=True)
class LayerSpec:
    input_width: int
    output_width: int
    activation: str = "tanh"

    def __post_init__(self):
        if self.input_width <= 0 or self.output_width <= 0:
            raise ValidationError(f"layer widths must be positive: {self}")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str

    @property
    def spec(self) -> LayerSpec:
        out, inp = self.weights.shape
        return LayerSpec(inp, out, self.activation)


@dataclass
class NetworkParams:
    layers: list[Layer]

    def __post_init__(self):
        for prev, cur in zip(self.layers, self.layers[1:]):
            if prev.weights.shape[0] != cur.weights.shape[1]:
                raise ValidationError("consecutive layer widths do not match")
        for layer in self.layers:
            if layer.biases.shape != (layer.weights.shape[0],):
                raise ValidationError("bias width does not match layer output width")

    @property
    def specs(self) -> list[LayerSpec]:
        return [layer.spec for layer in self.layers]

    @property
    def input_width(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_width(self) -> int:
        return self.layers[-1].weights.shape[0]

    @property
    def n_params(self) -> int:
        return sum(l.weights.size + l.biases.size for l in self.layers)

    def arrays(self) -> list[np.ndarray]:
        """Flat list of parameter arrays (views), ordered W0, b0, W1, b1, ..."""
        out = []
        for layer in self.layers:
            out += [layer.weights, layer.biases]
        return out

    def copy(self) -> "NetworkParams":
        return NetworkParams([Layer(l.weights.copy(), l.biases.copy(), l.activation) for l in self.layers])

    def to_dict(self) -> dict:
        return {
            "layers": [
                {
                    "input_width": l.weights.shape[1],
                    "output_width": l.weights.shape[0],
                    "activation": l.activation,
                    "weights": l.weights.ravel().tolist(),
                    "biases": l.biases.tolist(),
                }
                for l in self.layers
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkParams":
        layers = []
        for d in data["layers"]:
            spec = LayerSpec(int(d["input_width"]), int(d["output_width"]), d["activation"])
            w = np.array(d["weights"], dtype=float)
            if w.size != spec.input_width * spec.output_width:
                raise ValidationError("weight count does not match layer widths")
            b = np.array(d["biases"], dtype=float)
            layers.append(Layer(w.reshape(spec.output_width, spec.input_width), b, spec.activation))
        net = cls(layers)
        if not all(np.all(np.isfinite(a)) for a in net.arrays()):
            raise ValidationError("network parameters must be finite")
        return net


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 32
    epochs: int = 200
    seed: int = 0
    latent_loss_weight: float = 1.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValidationError("Adam betas must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValidationError("batch_size and epochs must be >= 1")
        if not self.latent_loss_weight >= 0:
            raise ValidationError("latent_loss_weight must be >= 0")


def init_network(specs: list[LayerSpec], seed: int) -> NetworkParams:
    """Glorot-uniform weights, zero biases."""
    if not specs:
        raise ValidationError("a network needs at least one layer")
    for prev, cur in zip(specs, specs[1:]):
        if prev.output_width != cur.input_width:
            raise ValidationError(f"layer widths do not chain: {prev.output_width} -> {cur.input_width}")
    rng = np.random.default_rng(seed)
    layers = []
    for s in specs:
        limit = math.sqrt(6.0 / (s.input_width + s.output_width))
        w = rng.uniform(-limit, limit, size=(s.output_width, s.input_width))
        layers.append(Layer(w, np.zeros(s.output_width), s.activation))
    return NetworkParams(layers)


@dataclass
class ForwardCache:
    activations: list[np.ndarray]  # Z_0 (input) .. Z_L (output), all 2-D
    shapes: tuple
    squeeze: bool


def _shapes(net: NetworkParams) -> tuple:
    return tuple(l.weights.shape for l in net.layers)


def forward(net: NetworkParams, x) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    z = np.atleast_2d(x)
    if z.shape[1] != net.input_width:
        raise ValidationError(f"input width {z.shape[1]} does not match network input {net.input_width}")
    acts = [z]
    for layer in net.layers:
        z = z @ layer.weights.T + layer.biases
        if layer.activation == "tanh":
            z = np.tanh(z)
        acts.append(z)
    out = z[0] if squeeze else z
    return out, ForwardCache(acts, _shapes(net), squeeze)


def predict(net: NetworkParams, x) -> np.ndarray:
    return forward(net, x)[0]


def backward(net: NetworkParams, cache: ForwardCache, grad_output) -> tuple[list[np.ndarray], np.ndarray]:
    """Reverse-mode pass.

    Returns parameter gradients in ``net.arrays()`` order and the gradient with
    respect to the network input.
    """
    if cache.shapes != _shapes(net):
        raise ValidationError("forward cache does not belong to this network")
    g = np.atleast_2d(np.asarray(grad_output, dtype=float))
    if g.shape != cache.activations[-1].shape:
        raise ValidationError("upstream gradient shape does not match network output")
    grads: list[np.ndarray] = []
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        z_out, z_in = cache.activations[i + 1], cache.activations[i]
        if layer.activation == "tanh":
            g = g * (1.0 - z_out * z_out)
        grads += [g.sum(axis=0), g.T @ z_in]
        g = g @ layer.weights
    grads.reverse()
    return grads, (g[0] if cache.squeeze else g)


def l1_loss_and_grad(pred, target) -> tuple[float, np.ndarray]:
    """Mean absolute difference and its subgradient (sign(0) = 0)."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(np.abs(diff))), np.sign(diff) / diff.size


@dataclass
class AdamState:
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState, config: TrainConfig):
    """In-place Adam update with bias correction; returns (params, state)."""
    if len(params) != len(grads) or any(p.shape != g.shape for p, g in zip(params, grads)):
        raise ValidationError("parameter and gradient shapes differ")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.adam_epsilon)
    return params, state


def finite_difference_grads(loss_fn, arrays: list[np.ndarray], step: float = 1e-5) -> list[np.ndarray]:
    """Central differences of ``loss_fn()`` with respect to each array, perturbed in place."""
    out = []
    for a in arrays:
        g = np.zeros_like(a)
        flat, gflat = a.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn()
            flat[i] = orig - step
            down = loss_fn()
            flat[i] = orig
            gflat[i] = (up - down) / (2 * step)
        out.append(g)
    return out


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)
