"""Projected gradient descent over pseudo-labels, and PGD/grid verification oracles.

Handles both batch loss variants (fairness as KL(ybar||u) or KL(u||ybar))
with analytic gradients and rowwise Euclidean projection. Serves as the
baseline the EM solver is benchmarked against and as the independent
minimizer used to verify the Newton M-step.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .em import EmConfig, SolverReport, loss_cce, loss_cce_plus
from .errors import BoundaryPointError, ShapeMismatchError
from .simplex import project_simplex_rows, validate, validate_label_matrix

CCE = "cce"
CCE_PLUS = "cce_plus"

_DIVERGENCE_STREAK = 10


@dataclass
class PgdConfig:
    step_size: float
    max_iters: int = 2000
    rel_tol: float = 1e-8
    variant: str = CCE_PLUS
    lam: float = 100.0
    prior_u: np.ndarray | None = None

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError(f"step_size must be positive, got {self.step_size!r}")
        if self.variant not in (CCE, CCE_PLUS):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.prior_u is not None:
            self.prior_u = validate(self.prior_u)

    def prior(self, K):
        if self.prior_u is None:
            return np.full(K, 1.0 / K)
        if self.prior_u.size != K:
            raise ShapeMismatchError(f"prior has size {self.prior_u.size}, expected {K}")
        return self.prior_u


def grad_y(Y, predictions, cfg):
    """Analytic gradient of the selected batch loss with respect to Y.

    Entry (i, k) is -sigma_i^k / (M * sigma_i.y_i) plus the fairness part:
    (lam/M)(ln(ybar_k/u_k) + 1) for the CCE variant, -(lam/M) u_k/ybar_k for
    CCE_PLUS. The CCE_PLUS form requires ybar strictly positive wherever the
    prior is.
    """
    Y = np.asarray(Y, dtype=np.float64)
    P = np.asarray(predictions, dtype=np.float64)
    if Y.shape != P.shape or Y.ndim != 2:
        raise ShapeMismatchError(f"labels {Y.shape} vs predictions {P.shape}")
    M, K = Y.shape
    u = cfg.prior(K)
    ybar = Y.mean(axis=0)
    if cfg.variant == CCE_PLUS and np.any((ybar == 0) & (u > 0)):
        raise BoundaryPointError("mean pseudo-label has a zero entry where the prior is positive")
    return _grad(Y, P, u, cfg.lam, cfg.variant)


def _grad(Y, P, u, lam, variant):
    M = Y.shape[0]
    dots = (Y * P).sum(axis=1)
    G = -(P / dots[:, None]) / M
    ybar = np.maximum(Y.mean(axis=0), 1e-300)  # gradient-only clamp near the boundary
    if variant == CCE:
        G = G + (lam / M) * (np.log(ybar / u) + 1.0)[None, :]
    else:
        G = G - (lam / M) * (u / ybar)[None, :]
    return G


def pgd_optimize(predictions, warm_start, cfg):
    """Rowwise projected gradient descent on the selected loss.

    Iterates Y <- project(Y - eta * grad) until the step's infinity norm
    drops to cfg.rel_tol or the iteration cap. Ten consecutive objective
    increases raise the diverged flag in the report and stop the run.
    """
    P = validate_label_matrix(predictions)
    Y = validate_label_matrix(warm_start).copy()
    K = Y.shape[1]
    u = cfg.prior(K)
    loss = loss_cce if cfg.variant == CCE else loss_cce_plus
    loss_params = EmConfig(lam=cfg.lam, prior_u=cfg.prior_u)

    obj = loss(Y, P, loss_params)
    streak = 0
    converged = False
    diverged = False
    iters = 0
    t0 = time.perf_counter()
    for iters in range(1, cfg.max_iters + 1):
        G = _grad(Y, P, u, cfg.lam, cfg.variant)
        Y_new = project_simplex_rows(Y - cfg.step_size * G)
        step = float(np.abs(Y_new - Y).max())
        obj_new = loss(Y_new, P, loss_params)
        worse = obj_new > obj or not np.isfinite(obj_new)
        streak = streak + 1 if worse else 0
        Y, obj = Y_new, obj_new
        if streak >= _DIVERGENCE_STREAK:
            diverged = True
            break
        if step <= cfg.rel_tol:
            converged = True
            break
    wall = time.perf_counter() - t0
    return Y, SolverReport(iterations=iters, wall_time_s=wall, final_objective=obj,
                           converged=converged, diverged=diverged)


# ---------------------------------------------------------------------------
# Verification oracles for the per-point M-step problem
#    minimize  -ln(sigma.y) - lam * sum_k w_k ln y_k   over the simplex.
# Independent of the Newton solver: the objective is evaluated from scratch
# and minimized by monotone adaptive-step PGD or exhaustive grid search.
# ---------------------------------------------------------------------------

def _mstep_objective_rows(Y, sig, a):
    with np.errstate(divide="ignore", invalid="ignore"):
        barrier = xlogy(a, Y).sum(axis=1)  # -inf where a > 0 and y = 0
        dots = (sig * Y).sum(axis=1)
        vals = -np.log(dots) - barrier
    vals[dots == 0] = np.inf
    vals[np.isnan(vals)] = np.inf
    return vals


def mstep_oracle(sigma, weights, lam, tol=1e-12, max_iters=100000, stall_window=200):
    """Adaptive-step projected gradient descent on a batch of M-step instances.

    sigma and weights are (B, K); returns the (B, K) minimizers. Each row
    keeps its own step size, grown on accepted (descending) steps and halved
    otherwise. A row finishes when its normalized KKT residual (gradient
    constant on the support, no smaller off it) drops to tol, or when the
    residual has stopped improving for stall_window iterations, which is the
    floating-point floor of plain PGD; the best iterate seen is returned.
    """
    sig = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    wgt = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    B, K = sig.shape
    a_all = lam * wgt

    # multi-start: scan the segment from the barrier-only optimum w/W toward
    # the one-hot at argmax sigma (the weak-barrier limit) and keep the best
    # objective; uses nothing but objective values, so it stays independent
    # of the root-finding parametrization
    W = wgt.sum(axis=1)
    base = np.where(W[:, None] > 0, wgt / np.where(W == 0, 1.0, W)[:, None], 1.0 / K)
    zero_rows = (base == 0).any(axis=1)
    base[zero_rows] = 0.5 * base[zero_rows] + 0.5 / K  # keep the start interior
    onehot = np.zeros_like(base)
    onehot[np.arange(B), sig.argmax(axis=1)] = 1.0
    y = base
    best = _mstep_objective_rows(y, sig, a_all)
    for t in np.linspace(0.02, 0.98, 49):
        cand = (1.0 - t) * base + t * onehot
        val = _mstep_objective_rows(cand, sig, a_all)
        better = val < best
        if np.any(better):
            y = np.where(better[:, None], cand, y)
            best = np.where(better, val, best)

    y_out = y.copy()
    idx = np.arange(B)
    s, a = sig, a_all
    obj = _mstep_objective_rows(y, s, a)
    # initial step sized to the barrier curvature at the start point
    with np.errstate(divide="ignore"):
        curv = (a / np.square(y)).max(axis=1)
    eta = 0.5 / (curv + np.square(s.max(axis=1) / (s * y).sum(axis=1)))

    # a row finishes when KKT reaches tol, or when the (monotone) objective
    # has not strictly improved for stall_window iterations: the fp floor
    window_obj = obj.copy()
    since_improve = np.zeros(B, dtype=np.int64)

    for _ in range(max_iters):
        dots = (s * y).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            bar = a / y
        bar[a == 0] = 0.0  # no barrier on unweighted classes
        g = -s / dots[:, None] - bar

        gam = (y * g).sum(axis=1)
        resid = (y * np.abs(g - gam[:, None])).max(axis=1)
        slack = ((gam[:, None] - g) * (y == 0)).max(axis=1, initial=0.0)
        kkt = np.maximum(resid, slack) / (1.0 + np.abs(g).max(axis=1))

        improved = obj < window_obj - 1e-15 * (1.0 + np.abs(window_obj))
        window_obj = np.where(improved, obj, window_obj)
        since_improve = np.where(improved, 0, since_improve + 1)

        done = (kkt <= tol) | (since_improve >= stall_window)
        if np.any(done):
            y_out[idx[done]] = y[done]
        keep = ~done
        if not np.any(keep):
            break
        if not np.all(keep):
            idx, y, s, a, obj, eta, g, window_obj, since_improve = (
                arr[keep] for arr in (idx, y, s, a, obj, eta, g, window_obj, since_improve))

        cand = project_simplex_rows(y - eta[:, None] * g)
        obj_c = _mstep_objective_rows(cand, s, a)
        accept = obj_c <= obj
        y = np.where(accept[:, None], cand, y)
        obj = np.where(accept, obj_c, obj)
        eta = np.where(accept, eta * 1.2, eta * 0.5)
    else:
        y_out[idx] = y
    return y_out


def mstep_grid_oracle(sigma, weights, lam, resolution=1e-4):
    """Exhaustive search over a simplex grid; K = 2 or 3 only."""
    sig = np.asarray(sigma, dtype=np.float64)
    a = lam * np.asarray(weights, dtype=np.float64)
    K = sig.size
    if K == 2:
        t = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)
        grid = np.column_stack([t, 1.0 - t])
    elif K == 3:
        n = int(round(1.0 / resolution))
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        keep = i + j <= n
        i, j = i[keep], j[keep]
        grid = np.column_stack([i, j, n - i - j]) / n
    else:
        raise ValueError(f"grid oracle supports K in {{2, 3}}, got {K}")
    vals = _mstep_objective_rows(grid, sig[None, :], a[None, :])
    return grid[int(np.argmin(vals))]
