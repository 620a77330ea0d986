"""Closed-form statistics of randomized magnitude pruning.

Everything here is a direct formula evaluation: the moments of the
difference matrix left behind by pruning, the off-diagonal survive
fraction chi, the Latala-type spectral bound Gamma, the erf/incomplete-beta
counting probabilities, and the balls-and-bins load bound. Each function is
paired with a Monte Carlo verifier in `verify.py`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationFailure
from .special import betainc, erf


@dataclass(frozen=True)
class MomentSet:
    """Second and fourth moments of a pruned-minus-original entry.

    The entry distribution is A * 1{pruned} for A ~ N(0, psi) and prune
    probability exp(-A^2/(d psi)); its mean is identically zero.
    """

    m2: float
    m4: float
    d: float
    psi: float


@dataclass(frozen=True)
class GammaBound:
    """Spectral-norm bound C * [sqrt(m2)(sqrt(d1)+sqrt(d2)) + (d1 d2 m4)^{1/4}]."""

    gamma: float
    C: float
    d1: int
    d2: int


def delta_moments(d: float, psi: float) -> MomentSet:
    """Closed-form m2 = psi (d/(d+2))^{3/2} and m4 = 3 psi^2 (d/(d+2))^{5/2}."""
    if d <= 0 or psi <= 0:
        raise ValidationFailure("d and psi must be positive")
    ratio = d / (d + 2.0)
    return MomentSet(m2=psi * ratio ** 1.5, m4=3.0 * psi * psi * ratio ** 2.5,
                     d=d, psi=psi)


def chi(d: float) -> float:
    """Off-diagonal survive probability (sqrt(d+2) - sqrt(d)) / sqrt(d+2).

    Equals 1 - E[exp(-A^2/(d psi))] for A ~ N(0, psi), independent of psi.
    """
    if d <= 0:
        raise ValidationFailure("d must be positive")
    return 1.0 - math.sqrt(d / (d + 2.0))


def latala_gamma(d1: int, d2: int, moments: MomentSet, C: float = 1.0) -> GammaBound:
    """Upper bound on E || pruned - original ||_2 for a d1 x d2 layer."""
    if d1 <= 0 or d2 <= 0:
        raise ValidationFailure("dimensions must be positive")
    if C <= 0:
        raise ValidationFailure("C must be positive")
    value = C * (math.sqrt(moments.m2) * (math.sqrt(d1) + math.sqrt(d2))
                 + (d1 * d2 * moments.m4) ** 0.25)
    return GammaBound(gamma=value, C=C, d1=d1, d2=d2)


def kappa_tau_probability(d: float, kappa: float) -> float:
    """Probability erf(sqrt(-d ln(kappa) / 2)) that a Gaussian entry has
    compression probability at least kappa."""
    if d <= 0:
        raise ValidationFailure("d must be positive")
    if not 0.0 < kappa < 1.0:
        raise ValidationFailure("kappa must lie strictly inside (0, 1)")
    return erf(math.sqrt(-d * math.log(kappa) / 2.0))


def binomial_tail_via_beta(trials: int, threshold: int, p: float) -> float:
    """P(Binomial(trials, p) >= threshold) through the regularized
    incomplete beta function: I_p(threshold, trials - threshold + 1)."""
    if trials <= 0:
        raise ValidationFailure("trials must be positive")
    if not 0 <= threshold <= trials:
        raise ValidationFailure("threshold must lie in [0, trials]")
    if not 0.0 <= p <= 1.0:
        raise ValidationFailure("p must lie in [0, 1]")
    if threshold == 0:
        return 1.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    return betainc(float(threshold), float(trials - threshold + 1), p)


def balls_bins_bound(N: int, n: int) -> tuple[float, float]:
    """Max-load bound for N balls in n bins: (3N/n, 1 - n^{-1/3})."""
    if N < 0:
        raise ValidationFailure("N must be non-negative")
    if n <= 0:
        raise ValidationFailure("n must be positive")
    return 3.0 * N / n, 1.0 - n ** (-1.0 / 3.0)


def distributed_sparsity_bound(d1: int, d2: int, lam: float, d: float) -> tuple[float, float]:
    """Bound on max(j_r, j_c) after pruning a d1 x d2 Gaussian layer.

    Returns (3 lam max(d1,d2) chi(d), 1 - 1/lam - d1^{-1/3} - d2^{-1/3}).
    """
    if d1 <= 0 or d2 <= 0:
        raise ValidationFailure("dimensions must be positive")
    if lam < 1.0:
        raise ValidationFailure("lambda must be at least 1")
    j_bound = 3.0 * lam * max(d1, d2) * chi(d)
    prob = 1.0 - 1.0 / lam - d1 ** (-1.0 / 3.0) - d2 ** (-1.0 / 3.0)
    return j_bound, prob
