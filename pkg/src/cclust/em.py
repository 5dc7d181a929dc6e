"""EM optimization of a batch of pseudo-labels under the collision self-labeling loss.

The batch loss over pseudo-labels Y (rows y_i) for fixed predictions sigma_i is

    L(Y) = mean_i H2(y_i, sigma_i) + lam * KL(u || ybar),    ybar = mean_i y_i,

with u a prior (uniform by default). Introducing per-cluster support
distributions S^k (columns of S, each summing to 1 over the M points) and
applying Jensen's inequality to the fairness term yields a bound that is
tight at the E-step S_i^k = y_i^k / sum_j y_j^k and separates over data
points. Each per-point subproblem is exactly the mstep objective with
support weights u_k * S_i^k and an effective multiplier lam * M (the 1/M
from the mean over the collision term is absorbed into the multiplier).
Alternating the E-step with per-point M-steps monotonically decreases L.

The sister loss with the divergence order swapped, mean H2 + lam*KL(ybar||u),
is evaluated here too but optimized only by the PGD solver.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from . import mstep
from .errors import ShapeMismatchError
from .simplex import validate, validate_label_matrix


@dataclass
class EmConfig:
    lam: float = 100.0
    prior_u: np.ndarray | None = None  # None means uniform
    max_iters: int = 100
    rel_tol: float = 1e-6
    mstep_eps: float = 1e-10
    track_objective: bool = False

    def __post_init__(self):
        # lam == 0 is the fairness-off limit: labels collapse to argmax predictions
        if not self.lam >= 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam!r}")
        if self.prior_u is not None:
            self.prior_u = validate(self.prior_u)

    def prior(self, K):
        if self.prior_u is None:
            return np.full(K, 1.0 / K)
        if self.prior_u.size != K:
            raise ShapeMismatchError(f"prior has size {self.prior_u.size}, expected {K}")
        return self.prior_u


@dataclass(eq=False)
class SupportMatrix:
    """Column-normalized cluster supports S_i^k; dead marks all-zero source columns."""

    values: np.ndarray  # (M, K), live columns sum to 1
    dead: np.ndarray    # (K,) bool


@dataclass(eq=False)
class EmState:
    Y: np.ndarray
    S: SupportMatrix
    objective: float
    bound: float  # aligned with the objective (Jensen bound minus its constant shift)
    iteration: int

    def __post_init__(self):
        if self.bound < self.objective - 1e-9:
            raise ValueError(f"Jensen bound {self.bound!r} below objective {self.objective!r}")


@dataclass
class SolverReport:
    iterations: int
    wall_time_s: float
    final_objective: float
    converged: bool
    diverged: bool = False
    objective_trace: list = field(default_factory=list)


def e_step(Y):
    """Column-normalize Y into cluster supports; dead columns become uniform, flagged."""
    Y = np.asarray(Y, dtype=np.float64)
    M = Y.shape[0]
    col = Y.sum(axis=0)
    dead = col == 0
    safe = np.where(dead, 1.0, col)
    S = Y / safe
    if np.any(dead):
        S = S.copy()
        S[:, dead] = 1.0 / M
    return SupportMatrix(values=S, dead=dead)


def _check_shapes(Y, predictions):
    Y = np.asarray(Y, dtype=np.float64)
    P = np.asarray(predictions, dtype=np.float64)
    if Y.shape != P.shape or Y.ndim != 2:
        raise ShapeMismatchError(f"labels {Y.shape} vs predictions {P.shape}")
    return Y, P


def mean_collision_cross_entropy(Y, predictions):
    """mean_i H2(y_i, sigma_i); +inf if any row pair has disjoint support."""
    Y, P = _check_shapes(Y, predictions)
    dots = (Y * P).sum(axis=1)
    if np.any(dots == 0):
        return float("inf")
    return float(-np.log(dots).mean())


def loss_cce(Y, predictions, cfg):
    """mean H2 + lam * KL(ybar || u)."""
    Y, P = _check_shapes(Y, predictions)
    if cfg.lam == 0:
        return mean_collision_cross_entropy(Y, P)
    u = cfg.prior(Y.shape[1])
    ybar = Y.mean(axis=0)
    if np.any((ybar > 0) & (u == 0)):
        return float("inf")
    kl = float((xlogy(ybar, ybar) - xlogy(ybar, u)).sum())
    return mean_collision_cross_entropy(Y, P) + cfg.lam * kl


def loss_cce_plus(Y, predictions, cfg):
    """mean H2 + lam * KL(u || ybar)."""
    Y, P = _check_shapes(Y, predictions)
    if cfg.lam == 0:
        return mean_collision_cross_entropy(Y, P)
    u = cfg.prior(Y.shape[1])
    ybar = Y.mean(axis=0)
    if np.any((u > 0) & (ybar == 0)):
        return float("inf")
    kl = float((xlogy(u, u) - xlogy(u, ybar)).sum())
    return mean_collision_cross_entropy(Y, P) + cfg.lam * kl


def jensen_bound(Y, S, predictions, cfg):
    """Jensen upper bound on the shifted loss, with its constant shift.

    Returns (value, shift) where value >= loss_cce_plus(Y, ...) + shift for
    any column-normalized S, with equality at S = e_step(Y). The shift is
    the lam-weighted prior entropy dropped when the fairness divergence is
    rewritten as a cross-entropy.
    """
    Y, P = _check_shapes(Y, predictions)
    M, K = Y.shape
    u = cfg.prior(K)
    Sv = S.values if isinstance(S, SupportMatrix) else np.asarray(S, dtype=np.float64)
    if Sv.shape != Y.shape:
        raise ShapeMismatchError(f"supports {Sv.shape} vs labels {Y.shape}")
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(Sv > 0, np.log(Y) - np.log(Sv * M), 0.0)
    fairness = float(-(u[None, :] * Sv * logs).sum())
    shift = float(cfg.lam * (-xlogy(u, u).sum()))
    return mean_collision_cross_entropy(Y, P) + cfg.lam * fairness, shift


def _newton_rows(sig, wgt, lam, eps, max_iters, x0=None):
    """Vectorized per-row Newton for the interior M-step; all weights positive.

    Mirrors mstep.newton_solve row by row. Rows start at the reachable left
    endpoint, or at the clamped warm start x0 (a point right of the root
    falls back to the left side after one tangent step, by convexity).
    Updates are clamped into [left endpoint, sigma_max]; rows with endpoint
    cancellation or stalled residuals fall back to the scalar solver.
    Returns (y, x) so callers can warm-start the next sweep.
    """
    B, K = sig.shape
    a_all = lam * wgt
    b_all = lam * wgt.sum(axis=1) + 1.0
    y_out = np.empty((B, K))
    x_out = np.empty(B)

    idx = np.arange(B)
    s = sig
    a = a_all
    b = b_all
    left = (s / (b[:, None] - a)).max(axis=1)
    smax = s.max(axis=1)
    if x0 is None:
        x = left.copy()
    else:
        x = np.where(np.isnan(x0), left, np.clip(x0, left, smax))
    fallback = []

    it = 0
    while idx.size:
        D = b[:, None] - s / x[:, None]
        y = a / D
        f = y.sum(axis=1) - 1.0
        # f < -eps at the left endpoint means fp cancellation, not a true sign
        bad = ~np.isfinite(f) | ((f < -eps) & (x == left))
        conv = (np.abs(f) <= eps) & ~bad
        if it >= max_iters:
            bad |= ~conv
        if np.any(conv):
            y_out[idx[conv]] = y[conv]
            x_out[idx[conv]] = x[conv]
        if np.any(bad):
            fallback.extend(idx[bad].tolist())
        keep = ~(conv | bad)
        if not np.any(keep):
            break
        if not np.all(keep):
            idx, s, a, b, x, left, smax, D, f = (
                arr[keep] for arr in (idx, s, a, b, x, left, smax, D, f))
        fp = -(a * s / (D * D)).sum(axis=1) / (x * x)
        x = np.clip(x - f / fp, left, smax)
        it += 1

    for i in fallback:
        inst = mstep.MStepInstance(sigma=sig[i], support_weights=wgt[i], lam=lam)
        sol = mstep.newton_solve(inst, eps=eps)
        y_out[i] = sol.y
        x_out[i] = sol.x
    return y_out, x_out


def _mstep_sweep(P, weights, lam_eff, eps, x0=None):
    """Solve every per-point subproblem; degenerate rows use the scalar branch."""
    has_zero = (weights == 0).any(axis=1)
    Y_new = np.empty_like(P)
    x_new = np.full(P.shape[0], np.nan)
    if np.any(~has_zero):
        live = ~has_zero
        x_start = None if x0 is None else x0[live]
        Y_new[live], x_new[live] = _newton_rows(P[live], weights[live], lam_eff, eps,
                                                mstep.MAX_NEWTON_ITERS, x0=x_start)
    for i in np.flatnonzero(has_zero):
        inst = mstep.MStepInstance(sigma=P[i], support_weights=weights[i], lam=lam_eff)
        sol = mstep.solve(inst, eps=eps)
        Y_new[i] = sol.y
        x_new[i] = sol.x
    return Y_new, x_new


def em_optimize(predictions, warm_start, cfg=None):
    """Alternate E-steps and per-point M-steps until the label change stalls.

    predictions and warm_start are (M, K) row-stochastic matrices. Returns
    the final label matrix and a SolverReport; non-convergence within
    cfg.max_iters is reported through the converged flag, never raised.
    Strictly positive warm starts keep every label entry positive across
    iterations (zero entries can only appear if seeded by the warm start).
    """
    cfg = cfg or EmConfig()
    P = validate_label_matrix(predictions)
    Y = validate_label_matrix(warm_start).copy()
    M, K = P.shape
    if cfg.lam == 0:
        # pure collision term: optimal labels are one-hot at the argmax prediction
        t0 = time.perf_counter()
        Y = np.zeros_like(P)
        Y[np.arange(M), P.argmax(axis=1)] = 1.0
        return Y, SolverReport(iterations=1, wall_time_s=time.perf_counter() - t0,
                               final_objective=loss_cce_plus(Y, P, cfg), converged=True)
    u = cfg.prior(K)
    lam_eff = cfg.lam * M

    trace = []
    t0 = time.perf_counter()
    converged = False
    sweeps = 0
    x_warm = None
    for sweeps in range(1, cfg.max_iters + 1):
        S = e_step(Y)
        weights = u[None, :] * S.values
        Y_new, x_warm = _mstep_sweep(P, weights, lam_eff, cfg.mstep_eps, x0=x_warm)
        delta = float(np.abs(Y_new - Y).max())
        Y = Y_new
        if cfg.track_objective:
            trace.append(loss_cce_plus(Y, P, cfg))
        if delta <= cfg.rel_tol:
            converged = True
            break
    wall = time.perf_counter() - t0
    report = SolverReport(iterations=sweeps, wall_time_s=wall,
                          final_objective=loss_cce_plus(Y, P, cfg),
                          converged=converged, objective_trace=trace)
    return Y, report
