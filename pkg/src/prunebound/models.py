"""Feed-forward model stacks, forward evaluation, and margin losses.

A model is an ordered list of weight matrices with elementwise activations
between them; the last layer's matrix output is the logit vector. No bias
terms anywhere. Layer l's stored activation is the one applied *after* its
matmul, so the final layer always carries IDENTITY.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, ValidationFailure
from .linalg import require_matrix


class Activation(enum.Enum):
    RELU = "relu"
    IDENTITY = "identity"


def apply_activation(kind: Activation, x: np.ndarray) -> np.ndarray:
    if kind is Activation.RELU:
        return np.maximum(x, 0.0)
    return x


@dataclass(frozen=True)
class LayerSpec:
    """One layer: weight matrix (out_dim x in_dim), activation, Lipschitz constant."""

    weights: np.ndarray
    activation: Activation = Activation.RELU
    lipschitz: float = 1.0

    def __post_init__(self):
        w = require_matrix(self.weights, "layer weights")
        object.__setattr__(self, "weights", w)
        # ReLU and the identity are both exactly 1-Lipschitz with f(0)=0
        if self.lipschitz != 1.0:
            raise ValidationFailure("supported activations are 1-Lipschitz; lipschitz must be 1")

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class ModelStack:
    """Ordered layers forming x -> A_L phi(A_{L-1} ... phi(A_1 x))."""

    layers: tuple[LayerSpec, ...]
    input_dim: int
    num_classes: int

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValidationFailure("model needs at least one layer")
        if layers[0].in_dim != self.input_dim:
            raise DimensionMismatchError(
                f"first layer expects input {layers[0].in_dim}, model declares {self.input_dim}")
        for i in range(1, len(layers)):
            if layers[i].in_dim != layers[i - 1].out_dim:
                raise DimensionMismatchError(
                    f"layer {i} input {layers[i].in_dim} != layer {i - 1} output "
                    f"{layers[i - 1].out_dim}")
        if layers[-1].out_dim != self.num_classes:
            raise DimensionMismatchError(
                f"final layer output {layers[-1].out_dim} != num_classes {self.num_classes}")
        # the last layer's activation is never applied: logits are the raw
        # matrix output, so any declared activation there is inert

    @property
    def depth(self) -> int:
        return len(self.layers)

    def weight_list(self) -> list[np.ndarray]:
        return [layer.weights for layer in self.layers]


@dataclass(frozen=True)
class Dataset:
    """Samples as rows of a (n, input_dim) array plus integer labels in [0, k)."""

    samples: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise ValidationFailure("samples must be a 2-D array")
        if y.ndim != 1 or len(y) != len(x):
            raise ValidationFailure("labels must be 1-D and match the sample count")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return len(self.labels)


def forward(model: ModelStack, x) -> np.ndarray:
    """Logits for a single input vector or a batch of row vectors."""
    single = np.asarray(x, dtype=np.float64).ndim == 1
    out = _batched(x, model.input_dim)
    for i, layer in enumerate(model.layers):
        out = out @ layer.weights.T
        if i < model.depth - 1:
            out = apply_activation(layer.activation, out)
    return out[0] if single else out


def forward_intermediates(model: ModelStack, x) -> list[np.ndarray]:
    """Pre-activation outputs x^1 ... x^L for perturbation measurements."""
    single = np.asarray(x, dtype=np.float64).ndim == 1
    h = _batched(x, model.input_dim)
    pre = []
    for i, layer in enumerate(model.layers):
        z = h @ layer.weights.T
        pre.append(z[0] if single else z)
        if i < model.depth - 1:
            h = apply_activation(layer.activation, z)
    return pre


def _batched(x, input_dim: int) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != input_dim:
        raise DimensionMismatchError(
            f"input of width {a.shape[-1]} fed to model expecting {input_dim}")
    return a


def margins(model: ModelStack, data: Dataset) -> np.ndarray:
    """Per-sample margin: correct-class logit minus the best other logit."""
    logits = forward(model, data.samples)
    n = len(data)
    correct = logits[np.arange(n), data.labels]
    masked = logits.copy()
    masked[np.arange(n), data.labels] = -np.inf
    runner_up = masked.max(axis=1)
    return correct - runner_up


def empirical_margin_loss(model: ModelStack, data: Dataset, gamma: float) -> float:
    """Fraction of samples whose margin falls short of gamma (margin < gamma)."""
    if len(data) == 0:
        raise ValidationFailure("margin loss needs a non-empty dataset")
    return float(np.mean(margins(model, data) < gamma))


def accuracy(model: ModelStack, data: Dataset) -> float:
    """Fraction classified correctly under the strict-margin convention."""
    return 1.0 - empirical_margin_loss(model, data, 0.0)


def mlp_stack(weights: list[np.ndarray]) -> ModelStack:
    """Build a ReLU stack (identity on the last layer) from weight matrices."""
    mats = [require_matrix(w) for w in weights]
    layers = [LayerSpec(w, Activation.RELU) for w in mats[:-1]]
    layers.append(LayerSpec(mats[-1], Activation.IDENTITY))
    return ModelStack(tuple(layers), input_dim=mats[0].shape[1],
                      num_classes=mats[-1].shape[0])
