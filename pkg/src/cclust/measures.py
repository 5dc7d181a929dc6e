"""Information measures over simplex points, in nats.

Entropies of Shannon / Renyi type, the order-2 ("collision") entropy and
cross-entropy, KL and Renyi divergences, and a mutual-information loss
estimate for prediction batches. Infinity is a legal return value wherever
the underlying quantity diverges (zero support); it is never an exception.
Inputs are assumed to be validated simplex points (see simplex.validate);
orders alpha -> 1 are not special-cased, use the Shannon forms instead.
"""

import numpy as np
from scipy.special import xlogy

from .errors import EmptyBatchError, InvalidOrderError


def shannon_entropy(p):
    """H(p) = -sum_k p_k ln p_k, with 0 ln 0 = 0. Value in [0, ln K]."""
    p = np.asarray(p, dtype=np.float64)
    return float(-xlogy(p, p).sum())


def shannon_cross_entropy(p, q):
    """H(p, q) = -sum_k p_k ln q_k; +inf if p puts mass where q is zero."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if np.any((p > 0) & (q == 0)):
        return float("inf")
    return float(-xlogy(p, q).sum())


def kl_divergence(p, q):
    """D(p || q) = sum_k p_k ln(p_k / q_k); +inf on support mismatch."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if np.any((p > 0) & (q == 0)):
        return float("inf")
    mask = p > 0
    return float((p[mask] * (np.log(p[mask]) - np.log(q[mask]))).sum())


def renyi_entropy(p, alpha):
    """Order-alpha entropy (1/(1-alpha)) ln sum_k p_k^alpha, alpha > 0, != 1."""
    if not (alpha > 0) or alpha == 1:
        raise InvalidOrderError(f"order must be positive and != 1, got {alpha!r}")
    p = np.asarray(p, dtype=np.float64)
    return float(np.log((p**alpha).sum()) / (1.0 - alpha))


def renyi_divergence(p, q, alpha):
    """Order-alpha divergence (1/(alpha-1)) ln sum_k p_k^alpha q_k^(1-alpha).

    For alpha > 1 the sum diverges (+inf) when p puts mass where q is zero;
    for alpha < 1 only the joint support contributes, and disjoint supports
    give +inf through ln 0.
    """
    if not (alpha > 0) or alpha == 1:
        raise InvalidOrderError(f"order must be positive and != 1, got {alpha!r}")
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if alpha > 1 and np.any((p > 0) & (q == 0)):
        return float("inf")
    mask = (p > 0) & (q > 0)
    s = float((p[mask] ** alpha * q[mask] ** (1.0 - alpha)).sum())
    if s == 0.0:
        return float("inf")
    return float(np.log(s) / (alpha - 1.0))


def collision_entropy(p):
    """H2(p) = -ln sum_k p_k^2. Value in [0, ln K]."""
    p = np.asarray(p, dtype=np.float64)
    return float(-np.log(np.dot(p, p)))


def collision_cross_entropy(p, q):
    """H2(p, q) = -ln sum_k p_k q_k; +inf iff the supports are disjoint.

    Negative log-probability that independent samples from p and q coincide.
    Symmetric in its arguments.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    s = float(np.dot(p, q))
    if s == 0.0:
        return float("inf")
    return float(-np.log(s))


def cce_decomposition(p, q):
    """Split H2(p, q) into an angular part and an entropic part.

    Returns (angular, entropic) with
        angular  = -ln cos(angle between p and q in R^K)
        entropic = (H2(p) + H2(q)) / 2
    whose sum equals collision_cross_entropy(p, q). The angular part is a
    spherical distance: nonnegative, 0 iff p = q (as directions), +inf for
    orthogonal vectors.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    dot = float(np.dot(p, q))
    norm_p = float(np.sqrt(np.dot(p, p)))
    norm_q = float(np.sqrt(np.dot(q, q)))
    entropic = -0.5 * (np.log(np.dot(p, p)) + np.log(np.dot(q, q)))
    if dot == 0.0:
        return float("inf"), float(entropic)
    cos = dot / (norm_p * norm_q)
    return float(-np.log(cos)), float(entropic)


def mi_loss_estimate(predictions):
    """Mutual-information loss estimate for a batch of predictions.

    mean_i H(sigma_i) - H(mean_i sigma_i): the average prediction entropy
    minus the entropy of the average prediction. Signed; equals minus the
    usual MI estimate between input and predicted class. Diagnostic only.
    """
    P = np.asarray(predictions, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] == 0:
        raise EmptyBatchError("need a non-empty (M, K) batch of predictions")
    avg_entropy = float(-xlogy(P, P).sum(axis=1).mean())
    mean_pred = P.mean(axis=0)
    return avg_entropy - shannon_entropy(mean_pred)
