"""Monte Carlo verifiers for every closed-form statistic.

Each verifier draws from a seeded stream, recomputes the quantity the
closed form predicts, and returns a CheckResult with the prediction, the
estimate, and a z-score or margin. `run_all` drives the whole battery with
trial counts taken from a config block, so a fixed master seed makes the
entire verification deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .closedform import (balls_bins_bound, binomial_tail_via_beta, chi,
                         delta_moments, distributed_sparsity_bound, latala_gamma)
from .errors import RecoveryError
from .linalg import gaussian_matrix, spectral_norm
from .models import forward
from .pruning import PruneParams, mbp_prune, prune_matrix, sparsity_stats
from .rng import RngHandle
from .sketching import (default_degree, draw_ensemble, make_distributed_sparse,
                        recover, sketch, sketch_dim)
from .special import erf

ERF_ONE = 0.8427007929497149  # erf(1) to double precision


@dataclass
class CheckResult:
    name: str
    passed: bool
    expected: float
    estimate: float
    z: float  # z-score where meaningful, otherwise the margin to the tolerance
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: expected {self.expected:.6g}, "
                f"estimate {self.estimate:.6g}, z/margin {self.z:.3g}")


def sample_delta(d: float, psi: float, count: int, rng: RngHandle) -> np.ndarray:
    """Entries of the pruning difference matrix: A kept with the prune
    probability exp(-A^2/(d psi)), else zero."""
    gen = rng.generator()
    a = gen.standard_normal(count) * math.sqrt(psi)
    u = gen.random(count)
    pruned = u < np.exp(-(a * a) / (d * psi))
    return np.where(pruned, a, 0.0)


def verify_moments(d: float, psi: float, n_samples: int, rng: RngHandle,
                   z_max: float = 3.0, m2_override: float | None = None,
                   m4_override: float | None = None) -> list[CheckResult]:
    """Mean, second, and fourth moment of the difference entries versus the
    closed forms, judged at z_max sample standard errors."""
    delta = sample_delta(d, psi, n_samples, rng)
    moments = delta_moments(d, psi)
    m2_ref = moments.m2 if m2_override is None else m2_override
    m4_ref = moments.m4 if m4_override is None else m4_override
    sq = delta * delta

    results = []
    for name, values, ref in [("mean", delta, 0.0), ("m2", sq, m2_ref),
                              ("m4", sq * sq, m4_ref)]:
        est = float(values.mean())
        se = float(values.std(ddof=1)) / math.sqrt(n_samples)
        z = abs(est - ref) / se if se > 0 else math.inf * (est != ref)
        results.append(CheckResult(
            name=f"moment[{name}] d={d} psi={psi}", passed=bool(z <= z_max),
            expected=ref, estimate=est, z=float(z),
            detail={"n_samples": n_samples, "stderr": se}))
    return results


def verify_chi(d: float, dim: int, rng: RngHandle, tol: float = 0.005) -> CheckResult:
    """Empirical off-diagonal keep rate on a dim x dim Gaussian layer."""
    a = gaussian_matrix(dim, dim, 1.0, rng.child(0))
    mask = prune_matrix(a, d, 1.0, rng.child(1))
    off = ~np.eye(dim, dtype=bool)
    rate = float(mask[off].mean())
    expected = chi(d)
    err = abs(rate - expected)
    return CheckResult(name=f"chi keep-rate d={d}", passed=bool(err <= tol),
                       expected=expected, estimate=rate, z=err / tol,
                       detail={"dim": dim, "tol": tol})


def calibrate_latala_c(d: float, psi: float, d1: int, d2: int, trials: int,
                       rng: RngHandle) -> tuple[float, list[float]]:
    """Smallest C with (Monte Carlo mean of ||delta||_2) <= C * Gamma(C=1)."""
    base = latala_gamma(d1, d2, delta_moments(d, psi), C=1.0).gamma
    norms = []
    for t in range(trials):
        h = rng.child(t)
        a = gaussian_matrix(d1, d2, psi, h.child(0))
        mask = prune_matrix(a, d, psi, h.child(1))
        delta = a * (1.0 - mask)
        norms.append(spectral_norm(delta, max_iter=50000))
    return float(np.mean(norms)) / base, norms


def verify_latala_markov(d: float, psi: float, d1: int, d2: int, trials: int,
                         eps: float, rng: RngHandle) -> CheckResult:
    """Markov coverage: fraction of trials with ||delta||_2 <= eps * Gamma
    must reach 1 - 1/eps (C calibrated on the same trials and reported)."""
    c_cal, norms = calibrate_latala_c(d, psi, d1, d2, trials, rng)
    gamma = latala_gamma(d1, d2, delta_moments(d, psi), C=c_cal).gamma
    covered = float(np.mean(np.asarray(norms) <= eps * gamma))
    required = 1.0 - 1.0 / eps
    return CheckResult(name=f"latala/markov eps={eps} d={d}",
                       passed=bool(covered >= required), expected=required,
                       estimate=covered, z=covered - required,
                       detail={"C_calibrated": c_cal, "gamma": gamma,
                               "mean_norm": float(np.mean(norms)), "trials": trials})


def verify_balls_bins(N: int, n: int, trials: int, rng: RngHandle) -> CheckResult:
    """Empirical P(max bin load <= 3N/n) versus the guarantee 1 - n^{-1/3}."""
    load_bound, prob = balls_bins_bound(N, n)
    gen = rng.generator()
    loads = gen.multinomial(N, [1.0 / n] * n, size=trials).max(axis=1)
    covered = float(np.mean(loads <= load_bound))
    return CheckResult(name=f"balls-bins N={N} n={n}", passed=bool(covered >= prob),
                       expected=prob, estimate=covered, z=covered - prob,
                       detail={"load_bound": load_bound, "trials": trials})


def verify_distributed_sparsity(d1: int, d2: int, lam: float, d: float,
                                trials: int, rng: RngHandle) -> CheckResult:
    """Measured max(j_r, j_c) of pruned Gaussian layers against the bound."""
    j_bound, prob = distributed_sparsity_bound(d1, d2, lam, d)
    hits = 0
    for t in range(trials):
        h = rng.child(t)
        a = gaussian_matrix(d1, d2, 1.0, h.child(0))
        mask = prune_matrix(a, d, 1.0, h.child(1))
        _, j_r, j_c = sparsity_stats(mask)
        hits += max(j_r, j_c) <= j_bound
    covered = hits / trials
    return CheckResult(name=f"distributed sparsity d={d} lam={lam}",
                       passed=bool(covered >= prob), expected=prob,
                       estimate=covered, z=covered - prob,
                       detail={"j_bound": j_bound, "trials": trials})


def binomial_tail_by_summation(trials: int, threshold: int, p: float) -> float:
    """Independent oracle: exact-coefficient summation of the binomial tail."""
    return float(sum(math.comb(trials, k) * p ** k * (1 - p) ** (trials - k)
                     for k in range(threshold, trials + 1)))


def verify_special_functions(max_trials: int = 60, tol: float = 1e-12) -> list[CheckResult]:
    """Beta-function binomial tails against summation, and erf(1)."""
    worst = 0.0
    worst_case = ""
    for n in range(1, max_trials + 1, 3):
        for p in (0.1, 0.25, 0.5, 0.75, 0.9):
            for k in range(0, n + 1, max(1, n // 7)):
                diff = abs(binomial_tail_via_beta(n, k, p)
                           - binomial_tail_by_summation(n, k, p))
                if diff > worst:
                    worst, worst_case = diff, f"n={n} k={k} p={p}"
    beta_check = CheckResult(name="binomial tail via beta vs summation",
                             passed=bool(worst <= tol), expected=0.0,
                             estimate=worst, z=worst / tol,
                             detail={"worst_case": worst_case, "tol": tol})
    erf_err = abs(erf(1.0) - ERF_ONE)
    erf_check = CheckResult(name="erf(1)", passed=bool(erf_err <= 1e-6),
                            expected=ERF_ONE, estimate=erf(1.0), z=erf_err / 1e-6)
    return [beta_check, erf_check]


def verify_perturbation_domination(stacks: int, inputs_per_stack: int, width: int,
                                   depth: int, d: float, eps: float,
                                   rng: RngHandle) -> CheckResult:
    """Pruned-model output error against the layerwise bound, on random
    Gaussian stacks, for every trial where the layerwise budget holds."""
    from .bounds import BoundBudget, pruning_error_bound
    from .models import mlp_stack

    eligible = 0
    dominated = 0
    for s in range(stacks):
        h = rng.child(s)
        weights = [gaussian_matrix(width, width, 1.0, h.child(i)) for i in range(depth)]
        model = mlp_stack(weights)
        params = PruneParams(d=d, psi=1.0, seed=h.child(100))
        outcome = mbp_prune(model, params)

        norms = [spectral_norm(w, max_iter=50000) for w in weights]
        gammas = [latala_gamma(width, width, delta_moments(d, 1.0)) for _ in range(depth)]
        delta_norms = [spectral_norm(l0.weights - l1.weights, max_iter=50000)
                       for l0, l1 in zip(model.layers, outcome.pruned.layers)]

        feasible = all(eps * g.gamma <= a / depth for g, a in zip(gammas, norms))
        realized = all(dn <= eps * g.gamma for dn, g in zip(delta_norms, gammas))
        if not (feasible and realized):
            continue
        eligible += 1

        budget = BoundBudget.uniform(depth, eps=eps, lam=2.0, delta=0.1, n=1)
        bound = pruning_error_bound(model, gammas, budget, spectral_norms=norms).value
        gen = h.child(200).generator()
        x = gen.standard_normal((inputs_per_stack, width))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        err = np.linalg.norm(forward(model, x) - forward(outcome.pruned, x), axis=1)
        dominated += bool(np.all(err <= bound))

    return CheckResult(name=f"perturbation domination d={d} eps={eps}",
                       passed=bool(eligible > 0 and dominated == eligible),
                       expected=float(eligible), estimate=float(dominated),
                       z=float(eligible - dominated),
                       detail={"stacks": stacks, "eligible": eligible})


def verify_recovery(p: int, j: int, trials: int, c_m: float, rng: RngHandle,
                    sup_tol: float = 1e-6, required: float = 0.95) -> CheckResult:
    """Recovery success rate for j-distributed-sparse p x p matrices."""
    m = sketch_dim(j, p, p, p, c_m)
    degree = default_degree(p)
    hits = 0
    for t in range(trials):
        h = rng.child(t)
        x = make_distributed_sparse(p, j, h.child(0))
        a = draw_ensemble(m, p, degree, h.child(1))
        b = draw_ensemble(m, p, degree, h.child(2))
        pair = sketch(x, a, b)
        try:
            xr = recover(pair, tol=1e-8, max_iter=20000)
        except RecoveryError:
            continue
        hits += bool(np.max(np.abs(xr - x)) <= sup_tol)
    rate = hits / trials
    return CheckResult(name=f"sketch recovery p={p} j={j} c_m={c_m}",
                       passed=bool(rate >= required), expected=required,
                       estimate=rate, z=rate - required,
                       detail={"m": m, "degree": degree, "trials": trials})


def smallest_working_c_m(p: int, j: int, trials: int, rng: RngHandle,
                         grid: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5, 0.7, 1.0),
                         required: float = 0.95) -> tuple[float | None, dict[float, float]]:
    """Scan c_m upward and report the smallest value whose recovery success
    rate reaches the requirement, plus all measured rates."""
    rates = {}
    smallest = None
    for c_m in sorted(grid):
        res = verify_recovery(p, j, trials, c_m, rng.child(int(c_m * 1000)),
                              required=required)
        rates[c_m] = res.estimate
        if smallest is None and res.passed:
            smallest = c_m
    return smallest, rates


DEFAULT_TRIALS = {
    "moment_samples": 1_000_000,
    "moment_grid_d": (0.5, 1.0, 2.0, 10.0),
    "moment_grid_psi": (0.25, 1.0, 4.0),
    "chi_dim": 1000,
    "chi_grid_d": (0.5, 2.0, 10.0),
    "latala_trials": 200,
    "latala_dim": 100,
    "balls_bins_trials": 10_000,
    "sparsity_trials": 200,
    "sparsity_dim": 1000,
    "perturbation_stacks": 20,
    "perturbation_inputs": 100,
    "recovery_trials": 30,
    "recovery_p": 64,
    "recovery_j": 4,
}


def run_all(seed: int, trials: dict | None = None,
            include_recovery: bool = True,
            m2_override: float | None = None) -> list[CheckResult]:
    """Full verification battery; deterministic given the seed."""
    cfg = dict(DEFAULT_TRIALS)
    if trials:
        cfg.update(trials)
    root = RngHandle(seed, 7000)
    results: list[CheckResult] = []

    stream = 0
    for d in cfg["moment_grid_d"]:
        for psi in cfg["moment_grid_psi"]:
            results.extend(verify_moments(d, psi, cfg["moment_samples"],
                                          root.child(stream),
                                          m2_override=m2_override))
            stream += 1

    rates = []
    for d in cfg["chi_grid_d"]:
        res = verify_chi(d, cfg["chi_dim"], root.child(stream))
        stream += 1
        rates.append(res.estimate)
        results.append(res)
    monotone = all(rates[i] > rates[i + 1] for i in range(len(rates) - 1))
    results.append(CheckResult(name="chi monotone decreasing in d", passed=monotone,
                               expected=1.0, estimate=float(monotone), z=0.0,
                               detail={"rates": rates, "grid": list(cfg["chi_grid_d"])}))

    results.append(verify_latala_markov(2.0, 1.0, cfg["latala_dim"], cfg["latala_dim"],
                                        cfg["latala_trials"], 2.0, root.child(stream)))
    stream += 1
    results.append(verify_balls_bins(300, 100, cfg["balls_bins_trials"], root.child(stream)))
    stream += 1
    results.append(verify_distributed_sparsity(cfg["sparsity_dim"], cfg["sparsity_dim"],
                                               2.0, 2.0, cfg["sparsity_trials"],
                                               root.child(stream)))
    stream += 1
    results.extend(verify_special_functions())
    results.append(verify_perturbation_domination(cfg["perturbation_stacks"],
                                                  cfg["perturbation_inputs"],
                                                  100, 5, 0.02, 2.0, root.child(stream)))
    stream += 1
    if include_recovery:
        results.append(verify_recovery(cfg["recovery_p"], cfg["recovery_j"],
                                       cfg["recovery_trials"], 1.0, root.child(stream)))
    return results
