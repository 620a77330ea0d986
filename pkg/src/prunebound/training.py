"""Minimal from-scratch trainer: softmax cross-entropy + Adam.

Single-threaded over a private copy of the weights; the minibatch order is
fixed by the RngHandle so a (seed, data, hyperparameter) triple always
produces bit-identical weights.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import TrainingDivergedError, ValidationFailure
from .models import Activation, Dataset, LayerSpec, ModelStack, apply_activation, mlp_stack
from .rng import RngHandle


def init_mlp(input_dim: int, hidden_dim: int, depth: int, num_classes: int,
             rng: RngHandle) -> ModelStack:
    """He-style Gaussian init for a ReLU MLP of the given depth (>= 2)."""
    if depth < 1:
        raise ValidationFailure("depth must be at least 1")
    dims = [input_dim] + [hidden_dim] * (depth - 1) + [num_classes]
    gen = rng.generator()
    weights = []
    for i in range(depth):
        fan_in = dims[i]
        w = gen.standard_normal((dims[i + 1], dims[i])) * math.sqrt(2.0 / fan_in)
        weights.append(w)
    return mlp_stack(weights)


def _softmax_xent_grad(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and d(loss)/d(logits) for a batch."""
    z = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(z)
    probs = expz / expz.sum(axis=1, keepdims=True)
    n = len(labels)
    nll = -np.log(probs[np.arange(n), labels] + 1e-300)
    grad = probs
    grad[np.arange(n), labels] -= 1.0
    return float(nll.mean()), grad / n


def train(model: ModelStack, data: Dataset, epochs: int, batch_size: int,
          lr: float, rng: RngHandle) -> ModelStack:
    """Adam with bias-corrected moments on softmax cross-entropy.

    Returns a new stack; the input model is untouched. Raises
    TrainingDivergedError naming the epoch if the loss goes non-finite.
    """
    if len(data) == 0:
        raise ValidationFailure("training needs a non-empty dataset")
    if batch_size <= 0 or lr <= 0:
        raise ValidationFailure("batch_size and lr must be positive")
    if epochs < 0:
        raise ValidationFailure("epochs must be non-negative")
    if epochs == 0:
        return model

    weights = [w.copy() for w in model.weight_list()]
    acts = [layer.activation for layer in model.layers]
    m_t = [np.zeros_like(w) for w in weights]
    v_t = [np.zeros_like(w) for w in weights]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    gen = rng.generator()
    n = len(data)

    for epoch in range(epochs):
        order = gen.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            x = data.samples[idx]
            y = data.labels[idx]

            # forward pass, keeping post-activation inputs of every layer
            inputs = [x]
            h = x
            for li, w in enumerate(weights):
                z = h @ w.T
                if li < len(weights) - 1:
                    h = apply_activation(acts[li], z)
                    inputs.append(h)
                else:
                    logits = z
            loss, dlogits = _softmax_xent_grad(logits, y)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"training loss became non-finite at epoch {epoch}", epoch=epoch)

            # backward pass
            grads = [None] * len(weights)
            delta = dlogits
            for li in range(len(weights) - 1, -1, -1):
                grads[li] = delta.T @ inputs[li]
                if li > 0:
                    delta = delta @ weights[li]
                    if acts[li - 1] is Activation.RELU:
                        delta = delta * (inputs[li] > 0)

            step += 1
            bc1 = 1.0 - beta1 ** step
            bc2 = 1.0 - beta2 ** step
            for li, g in enumerate(grads):
                m_t[li] = beta1 * m_t[li] + (1 - beta1) * g
                v_t[li] = beta2 * v_t[li] + (1 - beta2) * g * g
                weights[li] -= lr * (m_t[li] / bc1) / (np.sqrt(v_t[li] / bc2) + eps)

    layers = tuple(LayerSpec(w, a) for w, a in zip(weights, acts))
    return ModelStack(layers, input_dim=model.input_dim, num_classes=model.num_classes)


def epoch_losses(model: ModelStack, data: Dataset) -> float:
    """Full-dataset cross-entropy of the current weights."""
    from .models import forward

    logits = forward(model, data.samples)
    loss, _ = _softmax_xent_grad(logits, data.labels)
    return loss
