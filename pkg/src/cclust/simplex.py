"""Probability-simplex primitives: validation, softmax, Euclidean projection.

Vectors live in the probability simplex: entries >= 0, summing to 1 within
an absolute tolerance (1e-9 at construction, see CONSTRUCTION_TOL). All
functions are pure and operate on plain float64 numpy arrays; batch variants
treat each row as an independent simplex point.
"""

import numpy as np

from .errors import (
    NegativeEntryError,
    NonFiniteInputError,
    SumOutOfToleranceError,
)

# Construction tolerance for |sum - 1|; identity assertions in tests use 1e-12.
CONSTRUCTION_TOL = 1e-9

# Inputs whose sum is within this slack of 1 (and are nonnegative) are treated
# as already on the simplex by project_simplex. This makes projection exactly
# idempotent in floating point.
_FEASIBLE_SLACK = 1e-12


def validate(v, tol=CONSTRUCTION_TOL, repair=False):
    """Check that v is a point of the probability simplex.

    Parameters
    ----------
    v : array-like, shape (K,)
        Candidate probability vector.
    tol : float
        Absolute tolerance on |sum(v) - 1|.
    repair : bool
        When True, renormalize a vector that passes the sign check but misses
        the sum tolerance only by rounding residue (|sum-1| <= 1e-6). Callers
        must request this explicitly; nothing is normalized silently.

    Returns
    -------
    ndarray, float64, shape (K,)

    Raises
    ------
    NonFiniteInputError, NegativeEntryError, SumOutOfToleranceError
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise NonFiniteInputError(f"expected 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInputError("vector contains NaN or infinity")
    if np.any(v < 0):
        k = int(np.argmin(v))
        raise NegativeEntryError(f"entry {k} is negative: {v[k]!r}")
    s = float(v.sum())
    if abs(s - 1.0) > tol:
        if repair and abs(s - 1.0) <= 1e-6 and s > 0:
            return v / s
        raise SumOutOfToleranceError(f"entries sum to {s!r}, not 1 within {tol!r}")
    return v


def validate_label_matrix(Y, tol=CONSTRUCTION_TOL):
    """Check every row of Y against the simplex invariants. Returns float64 copy."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise NonFiniteInputError(f"expected 2-D matrix, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise NonFiniteInputError("matrix contains NaN or infinity")
    if np.any(Y < 0):
        i, k = np.unravel_index(int(np.argmin(Y)), Y.shape)
        raise NegativeEntryError(f"entry ({i},{k}) is negative: {Y[i, k]!r}")
    sums = Y.sum(axis=1)
    bad = np.abs(sums - 1.0) > tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SumOutOfToleranceError(f"row {i} sums to {sums[i]!r}, not 1 within {tol!r}")
    return Y


def softmax(logits):
    """Softmax of a logit vector, computed with max-subtraction.

    The result is renormalized once more after the exp/sum pass so that the
    rounding residue on sum(sigma) stays within a few ulp.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NonFiniteInputError("logits contain NaN or infinity")
    z = np.exp(logits - logits.max())
    p = z / z.sum()
    return p / p.sum()


def softmax_rows(L):
    """Rowwise softmax of an (M, K) logit matrix; same shift/renormalize scheme."""
    L = np.asarray(L, dtype=np.float64)
    if not np.all(np.isfinite(L)):
        raise NonFiniteInputError("logits contain NaN or infinity")
    Z = np.exp(L - L.max(axis=1, keepdims=True))
    P = Z / Z.sum(axis=1, keepdims=True)
    return P / P.sum(axis=1, keepdims=True)


def project_simplex(v):
    """Euclidean projection of v onto the probability simplex.

    Uses the sort-and-threshold algorithm. A point that already satisfies the
    simplex constraints (within _FEASIBLE_SLACK on the sum) is returned
    unchanged, which makes the projection exactly idempotent.
    """
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInputError("input contains NaN or infinity")
    if np.all(v >= 0) and abs(v.sum() - 1.0) <= _FEASIBLE_SLACK:
        return v.copy()
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u + (1.0 - css) / j > 0)[0][-1])
    theta = (1.0 - css[rho]) / (rho + 1)
    return np.maximum(v + theta, 0.0)


def project_simplex_rows(V):
    """Rowwise simplex projection of an (M, K) matrix (no feasibility fast path).

    Vectorized sort-and-threshold; used by the PGD solvers where iterates are
    infeasible by construction.
    """
    V = np.asarray(V, dtype=np.float64)
    M, K = V.shape
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1)
    j = np.arange(1, K + 1)
    cond = U + (1.0 - css) / j > 0
    # last True index per row; cond[:, 0] is always True since max(v) + 1 - max(v) > 0
    rho = K - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = (1.0 - css[np.arange(M), rho]) / (rho + 1)
    return np.maximum(V + theta[:, None], 0.0)
