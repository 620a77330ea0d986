"""Randomized magnitude-based pruning and grid discretization.

Each off-diagonal entry is zeroed independently with probability
exp(-a^2 / (d psi)): small-magnitude entries are almost surely dropped,
large ones almost surely kept, and `d` dials the overall aggressiveness.
Diagonal entries (i, i) for i < min(rows, cols) are never pruned, which is
what later makes the sketching step lossless.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InfeasibleGridError, ValidationFailure
from .linalg import require_matrix
from .models import LayerSpec, ModelStack
from .rng import RngHandle


@dataclass(frozen=True)
class PruneParams:
    """Prune strength d, assumed entry variance psi (scalar or per layer),
    and the seed handle that makes the draw reproducible."""

    d: float
    psi: float | Sequence[float]
    seed: RngHandle

    def __post_init__(self):
        if self.d <= 0:
            raise ValidationFailure("prune strength d must be positive")
        for p in self.psi_list(None):
            if p <= 0:
                raise ValidationFailure("psi must be positive")

    def psi_list(self, depth: int | None) -> list[float]:
        if np.isscalar(self.psi):
            return [float(self.psi)] * (depth or 1)
        vals = [float(p) for p in self.psi]
        if depth is not None and len(vals) != depth:
            raise ValidationFailure(f"psi list has {len(vals)} entries for {depth} layers")
        return vals


@dataclass(frozen=True)
class DiscretizeParams:
    """Per-layer grid pitch rho."""

    rho: Sequence[float]

    def __post_init__(self):
        if any(r <= 0 for r in self.rho):
            raise ValidationFailure("every rho must be positive")


@dataclass(frozen=True)
class PruneOutcome:
    pruned: ModelStack
    masks: tuple[np.ndarray, ...]
    nnz: tuple[int, ...]
    max_col_nnz: tuple[int, ...]
    max_row_nnz: tuple[int, ...]
    seed: RngHandle


def prune_matrix(a: np.ndarray, d: float, psi: float, rng: RngHandle) -> np.ndarray:
    """0/1 keep-mask for one matrix (1 = kept).

    Consumes exactly one uniform draw per off-diagonal entry, in row-major
    order, regardless of whether the outcome is certain; the diagonal takes
    no draws and is always kept.
    """
    a = require_matrix(a)
    d1, d2 = a.shape
    off_diag = np.ones(a.shape, dtype=bool)
    k = min(d1, d2)
    off_diag[np.arange(k), np.arange(k)] = False

    prune_prob = np.exp(-(a[off_diag] ** 2) / (d * psi))
    u = rng.generator().random(prune_prob.shape[0])
    pruned = u < prune_prob  # Bernoulli draw: 1 means the entry is dropped

    mask = np.ones(a.shape, dtype=np.float64)
    mask[off_diag] = (~pruned).astype(np.float64)
    return mask


def mbp_prune(model: ModelStack, params: PruneParams) -> PruneOutcome:
    """Prune every layer; layer l uses the derived stream `seed.child(l)`."""
    psis = params.psi_list(model.depth)
    masks, layers, nnz, jr, jc = [], [], [], [], []
    for li, layer in enumerate(model.layers):
        mask = prune_matrix(layer.weights, params.d, psis[li], params.seed.child(li))
        j, j_r, j_c = sparsity_stats(mask)
        masks.append(mask)
        nnz.append(j)
        jr.append(j_r)
        jc.append(j_c)
        layers.append(LayerSpec(layer.weights * mask, layer.activation))
    pruned = ModelStack(tuple(layers), model.input_dim, model.num_classes)
    return PruneOutcome(pruned=pruned, masks=tuple(masks), nnz=tuple(nnz),
                        max_col_nnz=tuple(jr), max_row_nnz=tuple(jc), seed=params.seed)


def snap_to_grid(values: np.ndarray, rho: float) -> np.ndarray:
    """Round to the nearest multiple of rho, ties away from zero.

    Ties are detected with a relative tolerance so that values like 0.25
    at rho = 0.1, whose float quotient lands a few ulps under k + 1/2,
    still round away from zero.
    """
    q = np.abs(values) / rho
    lower = np.floor(q)
    frac = q - lower
    tol = 16 * np.finfo(np.float64).eps * np.maximum(1.0, q)
    units = np.where(frac >= 0.5 - tol, lower + 1.0, lower)
    return np.sign(values) * units * rho


def discretize(outcome: PruneOutcome, params: DiscretizeParams) -> ModelStack:
    """Round every kept entry of the pruned model onto its layer grid."""
    if len(params.rho) != outcome.pruned.depth:
        raise ValidationFailure("need one rho per layer")
    layers = []
    for layer, mask, rho in zip(outcome.pruned.layers, outcome.masks, params.rho):
        w = snap_to_grid(layer.weights, rho) * mask  # pruned zeros stay exact zeros
        layers.append(LayerSpec(w, layer.activation))
    return ModelStack(tuple(layers), outcome.pruned.input_dim, outcome.pruned.num_classes)


def choose_rho(layer_norm: float, L: int, eps_gamma: float, J: int) -> float:
    """Largest permissible grid pitch ((1/L)||A||_2 - eps*Gamma) / J.

    Raises InfeasibleGridError when the pruning term eps*Gamma has already
    consumed the layer's whole error budget ||A||_2 / L.
    """
    if L <= 0 or J <= 0:
        raise ValidationFailure("L and J must be positive")
    value = (layer_norm / L - eps_gamma) / J
    if value <= 0:
        raise InfeasibleGridError(
            f"no positive grid pitch: eps*Gamma = {eps_gamma:.6g} >= "
            f"||A||_2 / L = {layer_norm / L:.6g}")
    return value


def sparsity_stats(mask: np.ndarray) -> tuple[int, int, int]:
    """(total ones, max ones in any column, max ones in any row)."""
    m = require_matrix(mask, "mask")
    if not np.all((m == 0.0) | (m == 1.0)):
        raise ValidationFailure("mask must be 0/1 valued")
    total = int(m.sum())
    col_counts = m.sum(axis=0)
    row_counts = m.sum(axis=1)
    return total, int(col_counts.max()), int(row_counts.max())


def estimate_psi(model: ModelStack) -> list[float]:
    """Per-layer sample variance of the entries, for trained (non-synthetic)
    weights where psi is not known a priori."""
    return [float(np.var(layer.weights)) for layer in model.layers]
