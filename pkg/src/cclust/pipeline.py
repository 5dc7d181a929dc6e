"""Alternating self-labeling driver and the noisy-soft-label supervised harness.

The clustering driver loops over epochs and batches: warm-start pseudo-labels
from the current predictions, optimize them (EM on the collision loss with
KL(u||ybar) fairness by default; projected descent for the KL(ybar||u)
variant and for the Shannon-CE baseline), then take one SGD step on the
model. The supervised harness corrupts a fraction of labels, softens them by
mixing with the uniform distribution, and compares collision-CE training
against Shannon-CE training on held-out accuracy.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linear_model as lm
from .em import EmConfig, em_optimize, loss_cce, loss_cce_plus
from .errors import IndexOutOfRangeError, NotADistributionError, ShapeMismatchError
from .metrics import clustering_accuracy
from .pgd import CCE, PgdConfig, pgd_optimize
from .simplex import project_simplex_rows, validate

CCE_PLUS_EM = "cce_plus"   # collision CE + KL(u||ybar), pseudo-labels by EM
CCE_PGD = "cce"            # collision CE + KL(ybar||u), pseudo-labels by PGD
SCE_KL_PGD = "sce_kl"      # Shannon CE + KL(ybar||u) baseline, pseudo-labels by PGD


@dataclass
class PipelineConfig:
    n_clusters: int
    em: EmConfig = field(default_factory=EmConfig)
    train: lm.TrainConfig = field(default_factory=lm.TrainConfig)
    epochs: int = 30
    per_batch_y_update: bool = True
    pseudo_label_loss: str = CCE_PLUS_EM
    pgd: PgdConfig | None = None

    def __post_init__(self):
        if self.n_clusters < 2:
            raise ValueError("need at least two clusters")
        if self.pseudo_label_loss not in (CCE_PLUS_EM, CCE_PGD, SCE_KL_PGD):
            raise ValueError(f"unknown pseudo-label loss {self.pseudo_label_loss!r}")
        if self.em.prior_u is not None and self.em.prior_u.size != self.n_clusters:
            raise ShapeMismatchError("prior size does not match n_clusters")
        if self.pseudo_label_loss != CCE_PLUS_EM and self.pgd is None:
            self.pgd = PgdConfig(step_size=1.0, variant=CCE, lam=self.em.lam,
                                 prior_u=self.em.prior_u, rel_tol=1e-6)


def _solve_labels(P, cfg):
    """Optimize pseudo-labels for a prediction batch under the configured loss."""
    if cfg.pseudo_label_loss == CCE_PLUS_EM:
        return em_optimize(P, P, cfg.em)
    if cfg.pseudo_label_loss == CCE_PGD:
        return pgd_optimize(P, P, cfg.pgd)
    return _sce_kl_labels(P, P, cfg.pgd)


def _sce_kl_labels(P, warm, pgd_cfg):
    """Projected descent on mean H(y, sigma) + lam * KL(ybar || u) over Y."""
    M, K = P.shape
    u = pgd_cfg.prior(K)
    lam = pgd_cfg.lam
    neg_log_p = -np.log(P)
    Y = warm.copy()

    def objective(Y):
        ybar = Y.mean(axis=0)
        nz = ybar > 0
        kl = float((ybar[nz] * (np.log(ybar[nz]) - np.log(u[nz]))).sum())
        return float((Y * neg_log_p).sum(axis=1).mean()) + lam * kl

    obj = objective(Y)
    iters = 0
    converged = False
    diverged = False
    streak = 0
    t0 = time.perf_counter()
    for iters in range(1, pgd_cfg.max_iters + 1):
        ybar = np.maximum(Y.mean(axis=0), 1e-300)
        G = neg_log_p / M + (lam / M) * (np.log(ybar / u) + 1.0)[None, :]
        Y_new = project_simplex_rows(Y - pgd_cfg.step_size * G)
        step = float(np.abs(Y_new - Y).max())
        obj_new = objective(Y_new)
        streak = streak + 1 if obj_new > obj else 0
        Y, obj = Y_new, obj_new
        if streak >= 10:
            diverged = True
            break
        if step <= pgd_cfg.rel_tol:
            converged = True
            break
    from .em import SolverReport
    return Y, SolverReport(iterations=iters, wall_time_s=time.perf_counter() - t0,
                           final_objective=obj, converged=converged, diverged=diverged)


def _batch_loss_value(Y, P, cfg):
    if cfg.pseudo_label_loss == CCE_PLUS_EM:
        return loss_cce_plus(Y, P, cfg.em)
    if cfg.pseudo_label_loss == CCE_PGD:
        return loss_cce(Y, P, EmConfig(lam=cfg.pgd.lam, prior_u=cfg.pgd.prior_u))
    ybar = Y.mean(axis=0)
    nz = ybar > 0
    u = cfg.pgd.prior(Y.shape[1])
    kl = float((ybar[nz] * (np.log(ybar[nz]) - np.log(u[nz]))).sum())
    return float(-(Y * np.log(P)).sum(axis=1).mean()) + cfg.pgd.lam * kl


def self_label_train(X, cfg, true_labels=None, X_test=None, test_labels=None):
    """Run the alternating self-labeling loop on features X.

    Per batch: predictions warm-start the pseudo-labels, the label subproblem
    is solved to convergence, and the model takes one SGD step against the
    solved labels. Returns (model, final full-dataset label matrix, per-epoch
    metrics log). Accuracies are Hungarian-matched against true_labels /
    test_labels when those are given.
    """
    X = np.asarray(X, dtype=np.float64)
    M, N = X.shape
    K = cfg.n_clusters
    if cfg.em.lam == 0:
        warnings.warn("fairness weight is 0: cluster collapse is permitted",
                      UserWarning)

    model = lm.init_model(K, N, seed=cfg.train.seed)
    rng = np.random.default_rng(cfg.train.seed)
    sgd_cfg = cfg.train
    step_loss = lm.SHANNON_CE if cfg.pseudo_label_loss == SCE_KL_PGD else lm.COLLISION_CE
    step_cfg = lm.TrainConfig(learning_rate=sgd_cfg.learning_rate,
                              weight_decay=sgd_cfg.weight_decay,
                              batch_size=sgd_cfg.batch_size, epochs=1,
                              seed=sgd_cfg.seed, loss=step_loss)

    log = []
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(M)
        losses, em_iters = [], []
        if not cfg.per_batch_y_update:
            Y_full, rep = _solve_labels(lm.forward(model, X), cfg)
            em_iters.append(rep.iterations)
        for start in range(0, M, sgd_cfg.batch_size):
            b = order[start:start + sgd_cfg.batch_size]
            Xb = X[b]
            if cfg.per_batch_y_update:
                P = lm.forward(model, Xb)
                Yb, rep = _solve_labels(P, cfg)
                em_iters.append(rep.iterations)
                losses.append(_batch_loss_value(Yb, P, cfg))
            else:
                Yb = Y_full[b]
                losses.append(_batch_loss_value(Yb, lm.forward(model, Xb), cfg))
            lm.sgd_step(model, Xb, Yb, step_cfg)

        record = {
            "epoch": epoch,
            "loss": float(np.mean(losses)),
            "train_acc": None,
            "test_acc": None,
            "em_iters_mean": float(np.mean(em_iters)),
            "wall_ms": 1000.0 * (time.perf_counter() - t0),
        }
        if true_labels is not None:
            pred = lm.forward(model, X).argmax(axis=1)
            record["train_acc"] = clustering_accuracy(pred, true_labels)
        if X_test is not None and test_labels is not None:
            pred = lm.forward(model, X_test).argmax(axis=1)
            record["test_acc"] = clustering_accuracy(pred, test_labels)
        log.append(record)

    Y_final, _ = _solve_labels(lm.forward(model, X), cfg)
    return model, Y_final, log


# ---------------------------------------------------------------------------
# Noisy / soft supervised labels
# ---------------------------------------------------------------------------

def soften_labels(hard, eta, K):
    """Mix one-hot labels with the uniform distribution: eta*u + (1-eta)*onehot."""
    hard = np.asarray(hard, dtype=np.int64)
    if hard.min() < 0 or hard.max() >= K:
        raise IndexOutOfRangeError(f"labels must lie in [0, {K})")
    Y = np.full((hard.size, K), eta / K)
    Y[np.arange(hard.size), hard] += 1.0 - eta
    return Y


def corrupt_labels(true, eta, K, seed=0):
    """Replace a uniformly chosen floor(eta*M) subset with uniform random labels.

    The replacement is drawn over all K classes, so it may coincide with the
    true label. Deterministic given the seed.
    """
    true = np.asarray(true, dtype=np.int64)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta!r}")
    rng = np.random.default_rng(seed)
    out = true.copy()
    count = int(np.floor(eta * true.size))
    if count:
        hit = rng.choice(true.size, size=count, replace=False)
        out[hit] = rng.integers(0, K, size=count)
    return out


def soft_label_from_transition(Q, observed):
    """Row `observed` of the label-noise transition matrix as a soft label."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise NotADistributionError(f"transition matrix must be square, got {Q.shape}")
    if not 0 <= observed < Q.shape[0]:
        raise IndexOutOfRangeError(f"observed label {observed} out of [0, {Q.shape[0]})")
    try:
        return validate(Q[observed])
    except Exception as exc:
        raise NotADistributionError(f"row {observed} is not a distribution: {exc}") from exc


def robustness_experiment(train, test, eta_grid, seeds, train_cfg=None,
                          losses=(lm.COLLISION_CE, lm.SHANNON_CE)):
    """Label-corruption sweep comparing training losses on held-out accuracy.

    For each eta and seed, the same corrupted-and-softened training labels are
    fed to one run per loss; rows are dicts {eta, loss, seed, test_acc}.
    """
    train_cfg = train_cfg or lm.TrainConfig()
    K = train.K
    rows = []
    for eta in eta_grid:
        for seed in seeds:
            noisy = corrupt_labels(train.labels, eta, K, seed=seed)
            Y = soften_labels(noisy, eta, K)
            for loss in losses:
                cfg = lm.TrainConfig(learning_rate=train_cfg.learning_rate,
                                     weight_decay=train_cfg.weight_decay,
                                     batch_size=train_cfg.batch_size,
                                     epochs=train_cfg.epochs, seed=seed, loss=loss)
                model = lm.init_model(K, train.N, seed=seed)
                model, _ = lm.sgd_train(model, train.X, Y, cfg)
                pred = lm.forward(model, test.X).argmax(axis=1)
                acc = float((pred == test.labels).mean())
                rows.append({"eta": eta, "loss": loss, "seed": seed, "test_acc": acc})
    return rows
