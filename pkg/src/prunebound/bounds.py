"""Generalization-bound calculators and the report assembler.

Conventions shared by every calculator here:

* natural logarithms everywhere;
* upper-bound O(.) constants default to 1 and are exposed as arguments;
* all counting enters in log space -- binomials go through log-gamma and
  covering numbers stay as log quantities, so nothing overflows even at
  10^6 parameters per layer;
* compression-style bounds return `empirical_loss + sqrt(complexity / n)`,
  while the norm-based baselines return only their complexity term on the
  natural-log scale (that is the form the comparison tables use).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .closedform import GammaBound, chi, delta_moments, latala_gamma
from .errors import HypothesisViolationError, ValidationFailure
from .linalg import norm_2_1, spectral_norm
from .models import Dataset, ModelStack, empirical_margin_loss, margins
from .special import log_binomial


@dataclass(frozen=True)
class BoundBudget:
    """Per-layer slack parameters and the global confidence bookkeeping."""

    eps: tuple[float, ...]
    lam: tuple[float, ...]
    delta: float
    n: int
    gamma: float | None = None  # None: derived from the feasibility inequality

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "lam", tuple(float(l) for l in self.lam))
        if any(e <= 0 for e in self.eps) or any(l <= 0 for l in self.lam):
            raise ValidationFailure("eps and lambda values must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValidationFailure("delta must lie in (0, 1)")
        if self.n <= 0:
            raise ValidationFailure("n must be positive")

    @classmethod
    def uniform(cls, depth: int, eps: float, lam: float, delta: float, n: int,
                gamma: float | None = None) -> "BoundBudget":
        return cls(eps=(eps,) * depth, lam=(lam,) * depth, delta=delta, n=n, gamma=gamma)

    def failure_probability(self, p_dims: Sequence[int], c: float = 2.0) -> float:
        """Total failure mass sum_l (1/lam + 1/eps + p_l^{-c})."""
        return float(sum(1.0 / l for l in self.lam) + sum(1.0 / e for e in self.eps)
                     + sum(p ** (-c) for p in p_dims))


@dataclass(frozen=True)
class SubgaussianParams:
    """Tail constants of the per-layer input distribution plus the chosen
    threshold t_l per layer."""

    a: float
    b: float
    t: tuple[float, ...]

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValidationFailure("a and b must be positive")
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))
        if any(v <= 0 for v in self.t):
            raise ValidationFailure("every t must be positive")


class BoundValue(NamedTuple):
    value: float
    probability: float


def subgaussian_kappa(d1: int, d2: int, t: float) -> float:
    """kappa = sqrt(d2) * t when d2 <= d1, else 1 (wide layers get no help)."""
    if t <= 0:
        raise ValidationFailure("t must be positive")
    if d2 <= d1:
        return math.sqrt(d2) * t
    return 1.0


def _stack_norms(model: ModelStack, spectral_norms=None) -> list[float]:
    if spectral_norms is not None:
        norms = [float(s) for s in spectral_norms]
        if len(norms) != model.depth:
            raise ValidationFailure("need one spectral norm per layer")
        return norms
    return [spectral_norm(layer.weights) for layer in model.layers]


def perturbation_bound(model: ModelStack, perturbation_norms: Sequence[float],
                       input_dim: int | None = None,
                       kappas: Sequence[float] | None = None,
                       spectral_norms: Sequence[float] | None = None) -> float:
    """Worst-case output displacement e * d1_0 * prod(kappa_l L_l ||A_l||) *
    sum ||U_l|| / ||A_l|| under the layerwise budget ||U_l|| <= ||A_l|| / L.

    Raises HypothesisViolationError naming the first layer whose
    perturbation exceeds its budget.
    """
    L = model.depth
    if len(perturbation_norms) != L:
        raise ValidationFailure("need one perturbation norm per layer")
    norms = _stack_norms(model, spectral_norms)
    kap = [1.0] * L if kappas is None else [float(k) for k in kappas]
    d0 = model.input_dim if input_dim is None else input_dim

    for l, (u, a) in enumerate(zip(perturbation_norms, norms)):
        # tolerate boundary equality up to float noise: grids chosen by
        # choose_rho land exactly on the budget
        if u > a / L * (1.0 + 1e-9):
            raise HypothesisViolationError(
                f"layer {l}: perturbation norm {u:.6g} exceeds budget "
                f"||A||/L = {a / L:.6g}", layer=l)

    product = 1.0
    for k, layer, a in zip(kap, model.layers, norms):
        product *= k * layer.lipschitz * a
    total = sum(u / a for u, a in zip(perturbation_norms, norms))
    return math.e * d0 * product * total


def pruning_error_bound(model: ModelStack, gammas: Sequence[GammaBound],
                        budget: BoundBudget,
                        rhos: Sequence[float] | None = None,
                        Js: Sequence[int] | None = None,
                        subgaussian: SubgaussianParams | None = None,
                        sample_count: int | None = None,
                        spectral_norms: Sequence[float] | None = None) -> BoundValue:
    """Output error bound for the pruned (optionally discretized) model.

    Per-layer perturbation budget is eps_l * Gamma_l plus rho_l * J_l when a
    discretization grid is supplied. The returned probability is
    1 - sum(1/eps_l), further reduced by the subgaussian tail term
    |S| a exp(-b t^2 d1) per layer when that refinement is enabled.
    """
    L = model.depth
    if len(gammas) != L or len(budget.eps) != L:
        raise ValidationFailure("need one Gamma and one eps per layer")
    if (rhos is None) != (Js is None):
        raise ValidationFailure("rhos and Js must be supplied together")
    norms = _stack_norms(model, spectral_norms)

    perts = []
    for l in range(L):
        term = budget.eps[l] * gammas[l].gamma
        if rhos is not None:
            term += rhos[l] * Js[l]
        perts.append(term)

    kappas = None
    failure = sum(1.0 / e for e in budget.eps)
    if subgaussian is not None:
        if len(subgaussian.t) != L:
            raise ValidationFailure("need one subgaussian t per layer")
        if sample_count is None:
            raise ValidationFailure("subgaussian refinement needs the sample count")
        kappas = []
        for layer, t in zip(model.layers, subgaussian.t):
            d1, d2 = layer.weights.shape
            kappas.append(subgaussian_kappa(d1, d2, t))
            failure += sample_count * subgaussian.a * math.exp(-subgaussian.b * t * t * d1)

    value = perturbation_bound(model, perts, kappas=kappas, spectral_norms=norms)
    return BoundValue(value=value, probability=1.0 - failure)


def compression_bound(ln_J: float, delta: float, n: int, empirical_loss: float) -> float:
    """empirical_loss + sqrt(max(0, (ln J - ln delta) / 2) / n).

    The parameterization count enters only as ln J, so astronomically large
    counts are fine.
    """
    if n <= 0:
        raise ValidationFailure("n must be positive")
    if not 0.0 < delta <= 1.0:
        raise ValidationFailure("delta must lie in (0, 1]")
    inner = max(0.0, 0.5 * (ln_J - math.log(delta)))
    return empirical_loss + math.sqrt(inner / n)


def naive_bound(dims: Sequence[tuple[int, int]], alphas: Sequence[int],
                rhos: Sequence[float], n: int, empirical_loss: float,
                constant: float = 1.0) -> float:
    """Sparse-enumeration bound: counts nonzero-support arrangements plus
    grid values per layer, entirely through log-gamma."""
    if not len(dims) == len(alphas) == len(rhos):
        raise ValidationFailure("dims, alphas, and rhos must align")
    if n <= 0:
        raise ValidationFailure("n must be positive")
    complexity = 0.0
    for (d1, d2), alpha, rho in zip(dims, alphas, rhos):
        total = d1 * d2
        if not 0 <= alpha <= total:
            raise ValidationFailure(f"alpha {alpha} outside [0, {total}]")
        complexity += log_binomial(total, alpha) + alpha * math.log(1.0 / rho)
    return empirical_loss + constant * math.sqrt(complexity / n)


def sketch_gen_bound(layers: Sequence[tuple[int, int, int, float]],
                     budget: BoundBudget, d: float, n: int,
                     empirical_loss: float, constant: float = 1.0,
                     c: float = 2.0) -> BoundValue:
    """Sketch-count bound: complexity sum_l 3 lam_l chi d1 d2 ln^2(p_l)
    ln(1/rho_l), with confidence 1 - sum(1/lam + 1/eps + p^-c)."""
    if len(layers) != len(budget.lam):
        raise ValidationFailure("need one lambda per layer")
    if n <= 0:
        raise ValidationFailure("n must be positive")
    x = chi(d)
    complexity = 0.0
    p_dims = []
    for (d1, d2, p, rho), lam in zip(layers, budget.lam):
        if not 0.0 < rho < 1.0:
            raise ValidationFailure("rho must lie in (0, 1)")
        complexity += 3.0 * lam * x * d1 * d2 * math.log(p) ** 2 * math.log(1.0 / rho)
        p_dims.append(p)
    value = empirical_loss + constant * math.sqrt(complexity / n)
    return BoundValue(value=value, probability=1.0 - budget.failure_probability(p_dims, c))


def imp_bound(n_M: float, d01: float, D_G: float, L: float, rho: float,
              n: int, empirical_loss: float, delta: float = 0.1,
              c: float = 2.0, constant: float = 1.0) -> BoundValue:
    """Bound for a lottery-ticket subnetwork of a width-D_G host network."""
    if D_G <= 1:
        raise ValidationFailure("D_G must exceed 1")
    if not 0.0 < rho < 1.0:
        raise ValidationFailure("rho must lie in (0, 1)")
    if n <= 0:
        raise ValidationFailure("n must be positive")
    log_dg2 = math.log(D_G) ** 2
    inner = (n_M * d01 * log_dg2 + L * n_M * n_M * log_dg2) * math.log(1.0 / rho)
    value = empirical_loss + constant * math.sqrt(inner / n)
    return BoundValue(value=value, probability=1.0 - delta - L * D_G ** (-c))


def bartlett_covering(xnorm: float, W: int, eps: float, s: Sequence[float],
                      rho_lip: Sequence[float], d1: Sequence[int]) -> float:
    """Log covering number of a spectral-norm ball with distance-from-init
    (2,1)-radii 1/d1_l:

        ||X||^2 ln(2 W^2) / eps^2 * prod(s_j^2 rho_j^2)
            * (sum_l (1/(d1_l s_l))^{2/3})^3
    """
    if len(s) != len(rho_lip) or len(s) != len(d1):
        raise ValidationFailure("s, rho_lip, and d1 must align")
    if eps <= 0 or any(v <= 0 for v in s) or W <= 0:
        raise ValidationFailure("eps, W, and all spectral bounds must be positive")
    prod = 1.0
    for sv, rv in zip(s, rho_lip):
        prod *= sv * sv * rv * rv
    ssum = sum((1.0 / (dv * sv)) ** (2.0 / 3.0) for dv, sv in zip(d1, s))
    return (xnorm ** 2) * math.log(2.0 * W * W) / (eps ** 2) * prod * ssum ** 3


def baseline_bounds(model: ModelStack, data: Dataset, gamma: float,
                    spectral_norms: Sequence[float] | None = None) -> dict[str, float]:
    """Three norm-based baselines, complexity term only, natural-log scale.

    The standard statements of the three bounds, with their dimension and
    data-norm factors (B = max sample norm, h = largest hidden width,
    X = the n x d data matrix):

    neyshabur_2015:  2^L prod ||A||_F * B / (gamma sqrt(n))
    bartlett_2017:   prod ||A||_2 * (sum (||A^T||_{2,1}/||A||_2)^{2/3})^{3/2}
                     * ||X||_F / (gamma n)
    neyshabur_2017:  L sqrt(h ln(8h)) * B * prod ||A||_2
                     * sqrt(sum ||A||_F^2/||A||_2^2) / (gamma sqrt(n))
    """
    if len(data) == 0:
        raise ValidationFailure("baselines need a non-empty dataset")
    if gamma <= 0:
        raise ValidationFailure("gamma must be positive")
    norms = _stack_norms(model, spectral_norms)
    if any(s == 0.0 for s in norms):
        raise ValidationFailure("a layer has zero spectral norm")
    L = model.depth
    n = len(data)
    fro = [float(np.linalg.norm(layer.weights)) for layer in model.layers]
    ln_spec_prod = sum(math.log(s) for s in norms)
    hidden = max((layer.out_dim for layer in model.layers[:-1]),
                 default=model.layers[0].out_dim)
    x_fro = float(np.linalg.norm(data.samples))
    b_max = float(np.max(np.linalg.norm(data.samples, axis=1)))

    ln_ney15 = (L * math.log(2.0) + sum(math.log(f) for f in fro)
                + math.log(b_max) - math.log(gamma) - 0.5 * math.log(n))

    ratio_sum = sum((norm_2_1(layer.weights.T) / s) ** (2.0 / 3.0)
                    for layer, s in zip(model.layers, norms))
    ln_bartlett = (ln_spec_prod + 1.5 * math.log(ratio_sum) + math.log(x_fro)
                   - math.log(gamma) - math.log(n))

    stable = sum((f / s) ** 2 for f, s in zip(fro, norms))
    ln_ney17 = (math.log(L) + 0.5 * math.log(hidden * math.log(8.0 * hidden))
                + math.log(b_max) + ln_spec_prod + 0.5 * math.log(stable)
                - math.log(gamma) - 0.5 * math.log(n))

    return {"neyshabur_2015": ln_ney15, "bartlett_2017": ln_bartlett,
            "neyshabur_2017": ln_ney17}


@dataclass(frozen=True)
class LayerSketchInfo:
    """Sketch bookkeeping for one layer, cross-reported in the bound report."""

    d1: int
    d2: int
    p: int
    j: int
    m: int
    param_count: int


@dataclass
class BoundReport:
    """Named bound values plus every intermediate that produced them."""

    methods: dict[str, float]          # method -> bound value (linear scale)
    log_methods: dict[str, float]      # method -> ln(bound value)
    intermediates: dict[str, object]
    probability: float
    config: dict[str, object]
    config_hash: str
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "methods": self.methods,
            "log_methods": self.log_methods,
            "intermediates": self.intermediates,
            "probability": self.probability,
            "log_base": "natural",
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
        }

    def csv_rows(self) -> list[dict[str, object]]:
        rows = []
        for name in sorted(self.log_methods):
            rows.append({
                "method": name,
                "bound": self.methods.get(name, float("nan")),
                "ln_bound": self.log_methods[name],
                "probability": self.probability,
                "config_hash": self.config_hash,
            })
        return rows


def baseline_margin(model: ModelStack, data: Dataset, floor: float = 1e-6) -> float:
    """Margin the norm-based baselines are evaluated at: the median margin
    of the trained model, floored away from zero."""
    med = float(np.median(margins(model, data)))
    return max(med, floor)


def assemble_report(model: ModelStack, train_data: Dataset, test_data: Dataset | None,
                    d: float, psis: Sequence[float], pruned_model: ModelStack,
                    discretized: ModelStack, Js: Sequence[int],
                    rhos: Sequence[float], sketch_infos: Sequence[LayerSketchInfo],
                    budget: BoundBudget, config: dict, config_hash: str, seed: int,
                    constants: dict | None = None,
                    spectral_norms: Sequence[float] | None = None) -> BoundReport:
    """End-to-end bound assembly from a trained model and its prune/sketch
    artifacts. Pure function of its inputs."""
    constants = constants or {}
    c_exponent = float(constants.get("p_exponent_c", 2.0))
    sketch_constant = float(constants.get("sketch_constant", 1.0))
    naive_constant = float(constants.get("naive_constant", 1.0))
    C_latala = float(constants.get("latala_C", 1.0))

    norms = _stack_norms(model, spectral_norms)
    L = model.depth
    n = budget.n
    dims = [layer.weights.shape for layer in model.layers]
    gammas = [latala_gamma(d1, d2, delta_moments(d, psi), C_latala)
              for (d1, d2), psi in zip(dims, psis)]
    Js = [int(j) for j in Js]

    err_bound = pruning_error_bound(model, gammas, budget, rhos=rhos,
                                    Js=Js, spectral_norms=norms)
    gamma = budget.gamma if budget.gamma is not None else err_bound.value
    margin_loss_f = empirical_margin_loss(model, train_data, gamma)

    layer_tuples = [(d1, d2, info.p, rho)
                    for (d1, d2), info, rho in zip(dims, sketch_infos, rhos)]
    ours = sketch_gen_bound(layer_tuples, budget, d, n, margin_loss_f,
                            constant=sketch_constant, c=c_exponent)
    naive = naive_bound(dims, Js, rhos, n, margin_loss_f,
                        constant=naive_constant)

    gamma_b = baseline_margin(model, train_data)
    baselines = baseline_bounds(model, train_data, gamma_b, spectral_norms=norms)

    # covering-number route: spectral ball + distance-from-init radii 1/d1
    xnorm = spectral_norm(train_data.samples)
    W = max(max(dd) for dd in dims)
    covering = bartlett_covering(xnorm, W, gamma_b, norms, [1.0] * L,
                                 [dd[0] for dd in dims])
    ln_J_cov = sum(log_binomial(d1 * d2, j) for (d1, d2), j in zip(dims, Js))
    ln_J_cov += covering
    covering_value = compression_bound(ln_J_cov, budget.delta, n, margin_loss_f)

    n_M = max(max(dd) for dd in dims[:-1]) if L > 1 else dims[0][0]
    d01 = model.input_dim
    D_G = float(constants.get("imp_D_G", d01 * n_M))
    rho_imp = min(rhos)
    imp = imp_bound(n_M, d01, D_G, L, rho_imp, n, margin_loss_f,
                    delta=budget.delta, c=c_exponent)

    methods = {
        "ours_sketch": ours.value,
        "naive": naive,
        "covering_ntk": covering_value,
        "imp": imp.value,
    }
    log_methods = {k: math.log(v) for k, v in methods.items()}
    log_methods.update(baselines)  # baselines are already on the log scale
    for k in baselines:
        methods[k] = math.exp(baselines[k])

    true_errors = {}
    if test_data is not None and len(test_data) > 0:
        true_errors = {
            "test_error_original": empirical_margin_loss(model, test_data, 0.0),
            "test_error_pruned": empirical_margin_loss(pruned_model, test_data, 0.0),
            "test_error_discretized": empirical_margin_loss(discretized, test_data, 0.0),
        }

    intermediates = {
        "d": d,
        "chi": chi(d),
        "psi": list(psis),
        "spectral_norms": norms,
        "gamma_l": [g.gamma for g in gammas],
        "latala_C": C_latala,
        "rho_l": list(rhos),
        "J_l": Js,
        "j_l": [info.j for info in sketch_infos],
        "p_l": [info.p for info in sketch_infos],
        "m_l": [info.m for info in sketch_infos],
        "sketch_param_counts": [info.param_count for info in sketch_infos],
        "gamma_compression": gamma,
        "gamma_baselines": gamma_b,
        "margin_loss_at_gamma": margin_loss_f,
        "train_error_original": empirical_margin_loss(model, train_data, 0.0),
        "pruning_error_bound": err_bound.value,
        "pruning_error_probability": err_bound.probability,
        "data_spectral_norm": xnorm,
        "imp_D_G": D_G,
        "imp_n_M": n_M,
        "n": n,
        **true_errors,
    }

    return BoundReport(methods=methods, log_methods=log_methods,
                       intermediates=intermediates, probability=ours.probability,
                       config=config, config_hash=config_hash, seed=seed)
