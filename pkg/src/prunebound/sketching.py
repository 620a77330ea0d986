"""Sparse matrix sketching: bipartite 0/1 ensembles, Y = A X B^T, and
l1-minimization recovery.

A sketch compresses a p1 x p2 distributed-sparse matrix into a dense m x m
matrix. Recovery solves

    min ||X~||_1  subject to  A X~ B^T = Y

with an ADMM scheme whose constraint step is an exact orthogonal projection
(the Gram matrices A A^T and B B^T are only m x m, so the projection is
cheap), plus a least-squares polish on the identified support. A candidate
is accepted early when a dual certificate confirms it is the l1 minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RecoveryError, ValidationFailure
from .linalg import require_matrix
from .rng import RngHandle


@dataclass(frozen=True)
class BipartiteEnsemble:
    """0/1 adjacency (m x p) of a bounded-degree random bipartite graph.

    The graph's left partition is the p signal coordinates and the right
    partition is the m sketch coordinates: column k of the adjacency lists
    the sketch rows that see coordinate k, and every column has at most
    `degree` ones. Putting the degree budget on the signal side guarantees
    every coordinate is measured, which the recovery guarantee needs.
    """

    adjacency: np.ndarray
    degree: int
    seed: RngHandle | None = None

    def __post_init__(self):
        a = require_matrix(self.adjacency, "adjacency")
        if not np.all((a == 0.0) | (a == 1.0)):
            raise ValidationFailure("adjacency must be 0/1 valued")
        if int(a.sum(axis=0).max()) > self.degree:
            raise ValidationFailure("a column exceeds the declared degree")
        object.__setattr__(self, "adjacency", a)

    @property
    def m(self) -> int:
        return self.adjacency.shape[0]

    @property
    def p(self) -> int:
        return self.adjacency.shape[1]


@dataclass(frozen=True)
class SketchPair:
    """The two ensembles plus the dense sketch Y = A X B^T they produced."""

    A: BipartiteEnsemble
    B: BipartiteEnsemble
    Y: np.ndarray


def default_degree(p: int) -> int:
    """Degree scaling ceil(ln p), at least 1."""
    return max(1, math.ceil(math.log(p)))


def sketch_dim(j: int, d1: int, d2: int, p: int, c_m: float = 1.0) -> int:
    """Sketch dimension ceil(c_m * sqrt(max(j d1, j d2)) * ln p), clamped to p."""
    if p != max(d1, d2):
        raise ValidationFailure("p must equal max(d1, d2)")
    if j < 1:
        raise ValidationFailure("j must be at least 1")
    if c_m <= 0:
        raise ValidationFailure("c_m must be positive")
    raw = math.ceil(c_m * math.sqrt(max(j * d1, j * d2)) * math.log(p))
    return min(max(raw, 1), p)


def draw_ensemble(m: int, p: int, degree: int, rng: RngHandle) -> BipartiteEnsemble:
    """Each signal coordinate connects to exactly `degree` sketch rows,
    drawn uniformly without replacement; deterministic given rng."""
    if m <= 0 or p <= 0:
        raise ValidationFailure("m and p must be positive")
    if m > p:
        raise ValidationFailure(f"m = {m} exceeds signal dimension p = {p}")
    if degree > m:
        raise ValidationFailure(f"degree {degree} exceeds sketch dimension m = {m}")
    if degree < 1:
        raise ValidationFailure("degree must be at least 1")
    gen = rng.generator()
    adj = np.zeros((m, p), dtype=np.float64)
    for k in range(p):
        rows = gen.choice(m, size=degree, replace=False)
        adj[rows, k] = 1.0
    return BipartiteEnsemble(adjacency=adj, degree=degree, seed=rng)


def identity_ensemble(p: int) -> BipartiteEnsemble:
    """Diagonal degree-1 ensemble; sketching with it is the identity map."""
    return BipartiteEnsemble(adjacency=np.eye(p), degree=1)


def sketch(X, A: BipartiteEnsemble, B: BipartiteEnsemble) -> SketchPair:
    """Exact product Y = A X B^T (no quantization)."""
    x = require_matrix(X, "X")
    if A.p != x.shape[0] or B.p != x.shape[1]:
        raise ValidationFailure(
            f"sketch dimensions do not compose: X is {x.shape}, A maps {A.p}, B maps {B.p}")
    if A.m != B.m:
        raise ValidationFailure("A and B must share the sketch dimension m")
    return SketchPair(A=A, B=B, Y=A.adjacency @ x @ B.adjacency.T)


def parameter_count(pair: SketchPair) -> int:
    """Dense parameter count m^2 of the sketch."""
    return pair.Y.shape[0] * pair.Y.shape[1]


def _soft(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _support_column(A: np.ndarray, B: np.ndarray, i: int, j: int) -> np.ndarray:
    # column of the vectorized operator for unit entry (i, j)
    return np.kron(B[:, j], A[:, i])


def _polish(A: np.ndarray, B: np.ndarray, Y: np.ndarray, support: np.ndarray):
    """Least-squares solve restricted to the support (zero matrix when the
    support is empty)."""
    idx = np.argwhere(support)
    if len(idx) == 0:
        return np.zeros((A.shape[1], B.shape[1]))
    cols = np.stack([_support_column(A, B, i, j) for i, j in idx], axis=1)
    coef, *_ = np.linalg.lstsq(cols, Y.T.ravel(), rcond=None)
    out = np.zeros((A.shape[1], B.shape[1]))
    out[idx[:, 0], idx[:, 1]] = coef
    return out


def recover(pair: SketchPair, tol: float = 1e-8, max_iter: int = 50000) -> np.ndarray:
    """Solve the l1 recovery problem for a sketch pair.

    Returns the minimizer candidate; always satisfies the sketch constraint
    within tol. Raises RecoveryError (with residual and iteration count)
    when Y is off the range of the sketch operator or the solver stalls.

    When both ensembles are square and well conditioned the constraint pins
    down a single matrix, which is returned directly; otherwise an ADMM
    loop with support polishing does the optimization.
    """
    if tol <= 0:
        raise ValidationFailure("tol must be positive")
    A = pair.A.adjacency
    B = pair.B.adjacency
    Y = require_matrix(pair.Y, "Y")
    if Y.shape != (A.shape[0], B.shape[0]):
        raise ValidationFailure("Y shape does not match the ensembles")
    scale = max(1.0, float(np.linalg.norm(Y)))

    if A.shape[0] == A.shape[1] and B.shape[0] == B.shape[1]:
        # m = p on both sides: if A and B are invertible the feasible set is
        # the single point A^{-1} Y B^{-T}
        try:
            direct = np.linalg.solve(B, np.linalg.solve(A, Y).T).T
        except np.linalg.LinAlgError:
            direct = None
        if direct is not None:
            res = float(np.linalg.norm(A @ direct @ B.T - Y))
            if res <= tol * scale and np.all(np.isfinite(direct)):
                return direct

    PA = np.linalg.pinv(A @ A.T)
    PB = np.linalg.pinv(B @ B.T)

    def project(V):
        return V - A.T @ (PA @ (A @ V @ B.T - Y) @ PB) @ B

    x0 = project(np.zeros((A.shape[1], B.shape[1])))
    feas = float(np.linalg.norm(A @ x0 @ B.T - Y))
    if feas > tol * scale:
        raise RecoveryError(
            f"sketch is infeasible: constraint residual {feas:.3g} exceeds tol",
            residual=feas, iterations=0)

    m2 = A.shape[0] * B.shape[0]

    def polish_feasible(candidate, support):
        nnz = int(support.sum())
        if nnz > m2:  # more unknowns than measurements: cannot be pinned down
            return None
        polished = _polish(A, B, Y, support)
        res = float(np.linalg.norm(A @ polished @ B.T - Y))
        if res > tol * scale:
            return None
        if np.abs(polished).sum() > np.abs(candidate).sum() + tol * scale:
            return None
        return polished

    def dual_certificate_holds(support, u, rho):
        # at an ADMM fixed point rho*u is a subgradient of the l1 norm at z
        # lying in the row space of the sketch operator, i.e. an optimality
        # certificate: sign(z) on the support, magnitude < 1 strictly off it
        cert = rho * u
        off = np.abs(cert[~support])
        if off.size and off.max() > 1.0 - 1e-6:
            return False
        on = cert[support]
        return not on.size or np.abs(np.abs(on) - 1.0).max() <= 1e-4

    rho = 1.0
    z = x0.copy()
    u = np.zeros_like(z)
    val_scale = max(1e-12, float(np.abs(x0).max()))
    last_support = None
    stable_checks = 0
    for it in range(1, max_iter + 1):
        x = project(z - u)
        z_old = z
        z = _soft(x + u, 1.0 / rho)
        u = u + x - z
        primal = float(np.linalg.norm(x - z))
        dual = float(rho * np.linalg.norm(z - z_old))
        zscale = max(val_scale, float(np.abs(z).max()))

        if it % 25 == 0:
            support = np.abs(z) > 1e-10
            if last_support is not None and np.array_equal(support, last_support):
                stable_checks += 1
            else:
                stable_checks = 0
            last_support = support
            if stable_checks >= 1 and int(support.sum()):
                # a certified stable support is decisive immediately; without
                # the certificate wait until the iterates have settled
                if dual_certificate_holds(support, u, rho) or \
                        (stable_checks >= 8 and primal <= 1e-8 * zscale):
                    polished = polish_feasible(z, support)
                    if polished is not None:
                        return polished
        if primal <= 1e-10 * zscale and dual <= 1e-10 * zscale:
            # fully converged: z is the minimizer up to solver precision
            polished = polish_feasible(z, np.abs(z) > 1e-10)
            if polished is not None:
                return polished
            xf = project(z)
            if float(np.linalg.norm(A @ xf @ B.T - Y)) <= tol * scale:
                return xf
        if it % 50 == 0:  # residual balancing keeps the penalty well-scaled
            if primal > 10 * dual:
                rho *= 2.0
                u /= 2.0
            elif dual > 10 * primal:
                rho /= 2.0
                u *= 2.0

    raise RecoveryError(
        f"l1 recovery stalled after {max_iter} iterations "
        f"(primal residual {primal:.3g})", residual=primal, iterations=max_iter)


def make_distributed_sparse(p: int, j: int, rng: RngHandle) -> np.ndarray:
    """Random p x p matrix with nonzero diagonal and at most j nonzeros in
    every row and column: the diagonal plus j-1 random permutation overlays."""
    if j < 1:
        raise ValidationFailure("j must be at least 1")
    gen = rng.generator()
    x = np.zeros((p, p))
    diag = gen.standard_normal(p)
    diag[np.abs(diag) < 1e-3] += 1.0  # keep the diagonal clearly nonzero
    x[np.arange(p), np.arange(p)] = diag
    for _ in range(j - 1):
        perm = gen.permutation(p)
        vals = gen.standard_normal(p)
        vals[np.abs(vals) < 1e-3] += 1.0
        x[np.arange(p), perm] = vals
    return x
