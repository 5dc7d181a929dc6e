"""Per-point pseudo-label update: minimize -ln(sigma.y) - lam * sum_k w_k ln(y_k)
over the probability simplex, where w_k >= 0 are per-class support weights.

With all w_k > 0 the log barrier keeps the minimizer interior and the
stationarity conditions reduce to a scalar root-finding problem:

    y_k(x) = lam*w_k / (lam*W + 1 - sigma_k/x),   W = sum_k w_k,

with x the unique root of f(x) = sum_k y_k(x) - 1 on the interval
(sigma_max/(1+lam*W), sigma_max]. f is positive, continuous, convex and
strictly decreasing there, so Newton iterations started from the reachable
left endpoint

    l = max_k sigma_k / (1 + lam*W - lam*w_k)

increase monotonically to the root. Zero weights are handled by closed
forms: all confidence not fixed by the barrier goes to the single best
unweighted class, with a complementary-slackness fallback to a reduced
interior problem when the closed form is infeasible.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .errors import MaxIterationsExceededError, ZeroWeightError
from .simplex import validate

DEFAULT_EPS = 1e-10
MAX_NEWTON_ITERS = 200


@dataclass(eq=False)
class MStepInstance:
    """One per-point subproblem: prediction sigma, weights w_k = u_k * S_k, lam > 0."""

    sigma: np.ndarray
    support_weights: np.ndarray
    lam: float

    def __post_init__(self):
        self.sigma = validate(self.sigma)
        w = np.asarray(self.support_weights, dtype=np.float64)
        if w.shape != self.sigma.shape:
            raise ValueError(f"weights shape {w.shape} != sigma shape {self.sigma.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("support weights must be finite and nonnegative")
        self.support_weights = w
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam!r}")


@dataclass(eq=False)
class MStepSolution:
    y: np.ndarray
    x: float
    newton_iters: int
    residual: float
    branch: str  # "newton" | "closed_form" | "kkt_reduced" | "all_zero"
    iterates: list = field(default_factory=list, repr=False)


def objective(y, inst):
    """Value of -ln(sigma.y) - lam * sum_k w_k ln y_k at y; +inf on the barrier."""
    y = np.asarray(y, dtype=np.float64)
    s = float(np.dot(inst.sigma, y))
    w = inst.support_weights
    if np.any((w > 0) & (y <= 0)) or s <= 0:
        return float("inf")
    return float(-np.log(s) - inst.lam * xlogy(w, y).sum())


def left_endpoint(inst):
    """Lemma-style reachable left endpoint l = max_k sigma_k/(1 + lam*W - lam*w_k).

    Strictly inside (sigma_max/(1+lam*W), sigma_max]; requires all weights > 0.
    """
    w = inst.support_weights
    if np.any(w == 0):
        raise ZeroWeightError("left endpoint undefined with zero weights; use degenerate branch")
    a = inst.lam * w
    b = inst.lam * w.sum() + 1.0
    return float((inst.sigma / (b - a)).max())


def _f_fp(x, sigma, a, b):
    D = b - sigma / x
    y = a / D
    f = float(y.sum() - 1.0)
    fp = float(-(a * sigma / (D * D)).sum() / (x * x))
    return f, fp, y


def newton_solve(inst, eps=DEFAULT_EPS, max_iters=MAX_NEWTON_ITERS, tighten_interval=False,
                 keep_iterates=False):
    """Newton root-finding for the interior pseudo-label solution.

    Starts at the reachable left endpoint (optionally at sigma_min when the
    tightened interval applies) and iterates x <- x - f(x)/f'(x) until
    |f(x)| <= eps. Falls back to bisection on the bracketing interval
    [x, sigma_max] if the iteration cap is hit.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    sigma = inst.sigma
    w = inst.support_weights
    if np.any(w == 0):
        raise ZeroWeightError("zero support weight; use degenerate_solve")
    a = inst.lam * w
    b = inst.lam * w.sum() + 1.0
    sigma_max = float(sigma.max())

    x = left_endpoint(inst)
    if tighten_interval:
        sigma_min = float(sigma.min())
        if sigma_min > sigma_max / b:
            # sum y_k >= 1 at sigma_min, so the root lies in [sigma_min, sigma_max]
            x = max(x, sigma_min)

    iterates = [x] if keep_iterates else []
    f, fp, y = _f_fp(x, sigma, a, b)
    if not np.isfinite(f) or f < -eps:
        # cancellation at the endpoint (tiny weight vs lam*W); bisect from just
        # right of the pole, where f is reliably positive
        lo = np.nextafter(sigma_max / b, np.inf)
        hi = sigma_max
        for _ in range(MAX_NEWTON_ITERS):
            x = 0.5 * (lo + hi)
            f, fp, y = _f_fp(x, sigma, a, b)
            if np.isfinite(f) and abs(f) <= eps:
                break
            if not np.isfinite(f) or f > 0:
                lo = x
            else:
                hi = x
        else:
            raise MaxIterationsExceededError(f"endpoint bisection stalled at |f|={abs(f)!r}")
        return MStepSolution(y=y, x=x, newton_iters=0, residual=abs(f),
                             branch="newton", iterates=iterates)
    iters = 0
    while abs(f) > eps and iters < max_iters:
        x_new = x - f / fp
        if x_new > sigma_max:
            x_new = sigma_max
        x = x_new
        f, fp, y = _f_fp(x, sigma, a, b)
        iters += 1
        if keep_iterates:
            iterates.append(x)

    if abs(f) > eps:
        # residual stalled; bisect the bracket [x, sigma_max] (f >= 0 at x)
        lo, hi = x, sigma_max
        for _ in range(MAX_NEWTON_ITERS):
            mid = 0.5 * (lo + hi)
            f, _, y = _f_fp(mid, sigma, a, b)
            x = mid
            if abs(f) <= eps:
                break
            if f > 0:
                lo = mid
            else:
                hi = mid
        else:
            raise MaxIterationsExceededError(f"Newton+bisection stalled at |f|={abs(f)!r}")

    return MStepSolution(y=y, x=x, newton_iters=iters, residual=abs(f),
                         branch="newton", iterates=iterates)


def degenerate_solve(inst, eps=DEFAULT_EPS):
    """Solution when some support weights are exactly zero.

    Let K_o be the zero-weight classes and c the largest-prediction class in
    K_o (smallest index on ties). If sigma_c strictly dominates all weighted
    predictions and the leftover confidence is positive, the closed forms

        y_k = lam*w_k / ((1 + lam*W)(1 - sigma_k/sigma_c)),  k weighted,
        y_c = 1 - sum of the above,  y = 0 elsewhere,

    solve the problem. Otherwise complementary slackness forces y_k = 0 on
    all of K_o and the interior Newton solve runs on the weighted classes.
    With every weight zero the loss is pure -ln(sigma.y), minimized by the
    one-hot at argmax sigma.
    """
    sigma = inst.sigma
    w = inst.support_weights
    K = sigma.size
    zero = w == 0
    if not np.any(zero):
        raise ValueError("no zero weights; use newton_solve")

    if np.all(zero):
        y = np.zeros(K)
        y[int(np.argmax(sigma))] = 1.0
        return MStepSolution(y=y, x=float(sigma.max()), newton_iters=0,
                             residual=0.0, branch="all_zero")

    pos = ~zero
    zero_idx = np.flatnonzero(zero)
    c = int(zero_idx[np.argmax(sigma[zero_idx])])
    sigma_c = float(sigma[c])
    lamW = inst.lam * w.sum()

    if np.all(sigma[pos] < sigma_c):
        y = np.zeros(K)
        y[pos] = inst.lam * w[pos] / ((1.0 + lamW) * (1.0 - sigma[pos] / sigma_c))
        rest = 1.0 - float(y[pos].sum())
        if rest > 0:
            y[c] = rest
            return MStepSolution(y=y, x=sigma_c / (1.0 + lamW), newton_iters=0,
                                 residual=abs(float(y.sum()) - 1.0), branch="closed_form")

    # KKT fallback: zero-weight classes get no mass; solve the reduced problem
    sub = MStepInstance(sigma=sigma[pos] / float(sigma[pos].sum()),
                        support_weights=w[pos], lam=inst.lam)
    # the reduced stationarity equations are those of the original sigma restricted
    # to the weighted classes; rescaling sigma only rescales x, not y
    sub_sol = newton_solve(sub, eps=eps)
    y = np.zeros(K)
    y[pos] = sub_sol.y
    return MStepSolution(y=y, x=sub_sol.x * float(sigma[pos].sum()),
                         newton_iters=sub_sol.newton_iters,
                         residual=sub_sol.residual, branch="kkt_reduced")


def solve(inst, eps=DEFAULT_EPS, **kwargs):
    """Dispatch to the interior Newton solver or the degenerate closed forms."""
    if np.any(inst.support_weights == 0):
        return degenerate_solve(inst, eps=eps)
    return newton_solve(inst, eps=eps, **kwargs)
