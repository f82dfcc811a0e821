"""Fully connected autoencoder with hand-written backpropagation.

Activations are handled row-wise: a batch is an ``(N, in_dim)`` array and a
layer computes ``X @ W.T + b`` with ``W`` stored ``(out_dim, in_dim)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyInputError, ParameterError, ShapeError

RELU = "relu"
IDENTITY = "identity"
RELU_WIDTH = 128
HIDDEN_LADDER = (128, 128, 29, 17, 7, 5)

PenaltyFn = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = IDENTITY

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ParameterError("layer dimensions must be positive")
        if self.activation not in (RELU, IDENTITY):
            raise ParameterError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class NetworkSpec:
    """A chain of dense layers; ``latent_layer`` indexes the layer whose output is the code.

    ReLU is only accepted on 128-wide layers unless ``allow_any_relu`` is set.
    """

    layers: tuple[LayerSpec, ...]
    latent_layer: int
    allow_any_relu: bool = False

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ParameterError("network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ShapeError(f"layer chain broken: {a.out_dim} -> {b.in_dim}")
        if not 0 <= self.latent_layer < len(layers):
            raise ParameterError("latent_layer out of range")
        if not self.allow_any_relu:
            for ly in layers:
                if ly.activation == RELU and ly.out_dim != RELU_WIDTH:
                    raise ParameterError(
                        f"ReLU on a {ly.out_dim}-wide layer requires allow_any_relu=True"
                    )

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def latent_dim(self) -> int:
        return self.layers[self.latent_layer].out_dim

    @property
    def is_mirrored(self) -> bool:
        enc = [ly.in_dim for ly in self.layers[: self.latent_layer + 1]] + [self.latent_dim]
        dec = [ly.out_dim for ly in self.layers[self.latent_layer + 1:]]
        return enc[::-1][1:] == dec

    def to_dict(self) -> dict:
        return {
            "layers": [[ly.in_dim, ly.out_dim, ly.activation] for ly in self.layers],
            "latent_layer": self.latent_layer,
            "allow_any_relu": self.allow_any_relu,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(
            tuple(LayerSpec(int(a), int(b), str(c)) for a, b, c in d["layers"]),
            int(d["latent_layer"]),
            bool(d.get("allow_any_relu", False)),
        )


def autoencoder_spec(
    input_dim: int = 24,
    latent_dim: int = 3,
    ladder: Sequence[int] = HIDDEN_LADDER,
    relu_width: int = RELU_WIDTH,
) -> NetworkSpec:
    """Mirror-symmetric autoencoder ``input -> ladder -> latent -> reversed ladder -> input``.

    Layers whose width equals ``relu_width`` get ReLU, all others are linear.
    The output layer is always linear.
    """
    widths = [input_dim, *ladder, latent_dim, *reversed(ladder), input_dim]
    layers = []
    for i, (a, b) in enumerate(zip(widths, widths[1:])):
        last = i == len(widths) - 2
        act = RELU if (b == relu_width and not last) else IDENTITY
        layers.append(LayerSpec(a, b, act))
    return NetworkSpec(
        tuple(layers), latent_layer=len(ladder), allow_any_relu=relu_width != RELU_WIDTH
    )


@dataclass(eq=False)
class Weights:
    """Per-layer weight matrices ``(out, in)`` and bias vectors, in ladder order.

    Also used to hold gradients and momentum buffers.
    """

    matrices: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "Weights":
        return Weights([m.copy() for m in self.matrices], [b.copy() for b in self.biases])

    def arrays(self) -> list[np.ndarray]:
        out = []
        for m, b in zip(self.matrices, self.biases):
            out += [m, b]
        return out

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def zeros_like(self) -> "Weights":
        return Weights([np.zeros_like(m) for m in self.matrices],
                       [np.zeros_like(b) for b in self.biases])

    def check(self, spec: NetworkSpec) -> None:
        if len(self.matrices) != len(spec.layers) or len(self.biases) != len(spec.layers):
            raise ShapeError("layer count does not match spec")
        for ly, m, b in zip(spec.layers, self.matrices, self.biases):
            if m.shape != (ly.out_dim, ly.in_dim) or b.shape != (ly.out_dim,):
                raise ShapeError(
                    f"expected W {(ly.out_dim, ly.in_dim)}, b {(ly.out_dim,)}; "
                    f"got {m.shape}, {b.shape}"
                )

    def allclose(self, other: "Weights", atol: float = 0.0) -> bool:
        return all(
            a.shape == b.shape and np.allclose(a, b, rtol=0, atol=atol)
            for a, b in zip(self.arrays(), other.arrays())
        )

    def __eq__(self, other):
        if not isinstance(other, Weights):
            return NotImplemented
        a, b = self.arrays(), other.arrays()
        return len(a) == len(b) and all(np.array_equal(x, y) for x, y in zip(a, b))


def init_weights(spec: NetworkSpec, seed: int) -> Weights:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    mats, biases = [], []
    for ly in spec.layers:
        a = np.sqrt(6.0 / (ly.in_dim + ly.out_dim))
        mats.append(rng.uniform(-a, a, size=(ly.out_dim, ly.in_dim)))
        biases.append(np.zeros(ly.out_dim))
    return Weights(mats, biases)


@dataclass
class ForwardTrace:
    pre: list[np.ndarray]
    post: list[np.ndarray]
    latent: np.ndarray
    reconstruction: np.ndarray
    inputs: np.ndarray = field(repr=False, default=None)


def forward(spec: NetworkSpec, w: Weights, x) -> ForwardTrace:
    """Run the network on one frame (1-D) or a batch of frames (2-D, one per row)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise ShapeError(f"input must have {spec.input_dim} columns, got shape {x.shape}")
    pre, post = [], []
    h = X
    for ly, W, b in zip(spec.layers, w.matrices, w.biases):
        z = h @ W.T + b
        h = np.maximum(z, 0.0) if ly.activation == RELU else z
        pre.append(z)
        post.append(h)
    if single:
        pre = [p[0] for p in pre]
        post = [p[0] for p in post]
    return ForwardTrace(pre, post, post[spec.latent_layer], post[-1], x)


def encode(spec: NetworkSpec, w: Weights, X) -> np.ndarray:
    h = np.asarray(X, dtype=np.float64)
    for ly, W, b in zip(spec.layers[: spec.latent_layer + 1], w.matrices, w.biases):
        h = h @ W.T + b
        if ly.activation == RELU:
            h = np.maximum(h, 0.0)
    return h


def _check_batch(batch, spec: NetworkSpec) -> np.ndarray:
    X = np.asarray(batch, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[0] == 0:
        raise EmptyInputError("empty batch")
    if X.ndim != 2 or X.shape[1] != spec.input_dim or spec.output_dim != spec.input_dim:
        raise ShapeError(f"batch must be (N, {spec.input_dim}), got {X.shape}")
    return X


def reconstruction_loss(batch, spec: NetworkSpec, w: Weights) -> float:
    """Mean over all N*C entries of the squared reconstruction residual."""
    X = _check_batch(batch, spec)
    R = forward(spec, w, X).reconstruction - X
    return float(np.sum(R * R) / R.size)


def loss_and_gradients(
    batch,
    spec: NetworkSpec,
    w: Weights,
    penalty_weight: float = 0.0,
    penalty_fn: PenaltyFn | None = None,
) -> tuple[float, float, Weights]:
    """Return ``(mse, penalty, grads)`` for ``mse + penalty_weight * penalty``.

    ``penalty_fn`` maps the ``(N, L)`` latent batch to ``(value, d value / d latent)``.
    With ``penalty_weight == 0`` it is never called and ``penalty`` is 0.
    """
    if penalty_weight < 0:
        raise ParameterError("penalty_weight must be nonnegative")
    X = _check_batch(batch, spec)
    w.check(spec)
    tr = forward(spec, w, X)
    R = tr.reconstruction - X
    mse = float(np.sum(R * R) / R.size)

    penalty, dZ = 0.0, None
    if penalty_weight > 0:
        if penalty_fn is None:
            from .ortho import penalty_and_gradient as penalty_fn
        penalty, dZ = penalty_fn(tr.latent)
        penalty = float(penalty)

    n_layers = len(spec.layers)
    grads = Weights([None] * n_layers, [None] * n_layers)
    delta = 2.0 * R / R.size  # d mse / d output
    if spec.latent_layer == len(spec.layers) - 1 and dZ is not None:
        delta = delta + penalty_weight * dZ
    for i in range(len(spec.layers) - 1, -1, -1):
        if spec.layers[i].activation == RELU:
            delta = delta * (tr.pre[i] > 0.0)
        h_in = X if i == 0 else tr.post[i - 1]
        grads.matrices[i] = delta.T @ h_in
        grads.biases[i] = delta.sum(axis=0)
        if i == 0:
            break
        delta = delta @ w.matrices[i]
        if i - 1 == spec.latent_layer and dZ is not None:
            delta = delta + penalty_weight * dZ
    return mse, penalty, grads


def gradients(batch, spec, w, penalty_weight=0.0, penalty_fn=None) -> Weights:
    return loss_and_gradients(batch, spec, w, penalty_weight, penalty_fn)[2]


def sgd_step(
    w: Weights, g: Weights, lr: float, momentum: float = 0.0, state: Weights | None = None
) -> tuple[Weights, Weights]:
    """Heavy-ball update ``v <- momentum * v - lr * g; w <- w + v``.

    Returns the new weights and velocity; the inputs are not modified.
    """
    if not lr > 0:
        raise ParameterError("lr must be positive")
    if not 0 <= momentum < 1:
        raise ParameterError("momentum must lie in [0, 1)")
    v = g.zeros_like() if state is None else state
    new_v = Weights(
        [momentum * vm - lr * gm for vm, gm in zip(v.matrices, g.matrices)],
        [momentum * vb - lr * gb for vb, gb in zip(v.biases, g.biases)],
    )
    new_w = Weights(
        [wm + vm for wm, vm in zip(w.matrices, new_v.matrices)],
        [wb + vb for wb, vb in zip(w.biases, new_v.biases)],
    )
    return new_w, new_v
