"""EM-vs-PGD benchmark: per-iteration time, iterations to convergence, total time.

One EM run and one PGD run per step size for each class count, on a batch of
random softmax predictions with a random positive warm start. Timings use the
monotonic clock; a short warm-up run is discarded and the median over the
configured repetitions is reported. Runs are single-threaded (numpy
elementwise kernels); the convergence definitions of both solvers are part
of the result header so the iteration counts are interpretable.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .em import EmConfig, em_optimize
from .pgd import CCE_PLUS, PgdConfig, pgd_optimize
from .simplex import softmax_rows


@dataclass
class BenchSpec:
    k_values: tuple = (2, 20, 200)
    m: int = 10000
    lam: float = 100.0
    step_sizes: tuple = (0.1, 1.0, 5.0, 20.0)
    repetitions: int = 3
    seed: int = 0
    em_rel_tol: float = 1e-6
    em_max_iters: int = 100
    pgd_rel_tol: float = 1e-8
    pgd_max_iters: int = 2000

    def __post_init__(self):
        if self.m < 1 or self.repetitions < 1 or not self.lam > 0:
            raise ValueError("m, repetitions, and lam must be positive")
        if any(k < 2 for k in self.k_values) or any(s <= 0 for s in self.step_sizes):
            raise ValueError("class counts must be >= 2 and step sizes positive")


def header_lines(spec):
    return [
        f"# M={spec.m} lam={spec.lam} seed={spec.seed} repetitions={spec.repetitions} "
        "threads=1",
        f"# EM convergence: max|dY| <= {spec.em_rel_tol} per sweep, cap {spec.em_max_iters}; "
        "one iteration = E-step + all M-steps (both timed)",
        f"# PGD convergence: projected-step inf-norm <= {spec.pgd_rel_tol}, "
        f"cap {spec.pgd_max_iters}; diverged = 10 consecutive objective increases",
    ]


def _timed(run, repetitions):
    """Median wall time over `repetitions` runs, after one discarded warm-up."""
    run()  # warm-up
    times = []
    result = None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        result = run()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), result


def run_bench(spec=None):
    """Produce one result row per (K, solver[, step size]); see header_lines."""
    spec = spec or BenchSpec()
    rng = np.random.default_rng(spec.seed)
    rows = []
    for K in spec.k_values:
        P = softmax_rows(rng.standard_normal((spec.m, K)))
        warm = softmax_rows(rng.standard_normal((spec.m, K)))

        em_cfg = EmConfig(lam=spec.lam, max_iters=spec.em_max_iters,
                          rel_tol=spec.em_rel_tol)
        total, (Y, rep) = _timed(lambda: em_optimize(P, warm, em_cfg), spec.repetitions)
        rows.append({
            "solver": "em", "K": K, "M": spec.m, "eta": "",
            "sec_per_iter": total / rep.iterations, "iters": rep.iterations,
            "total_sec": total, "final_objective": rep.final_objective,
            "converged": rep.converged, "diverged": False,
        })

        for eta in spec.step_sizes:
            cfg = PgdConfig(step_size=eta, max_iters=spec.pgd_max_iters,
                            rel_tol=spec.pgd_rel_tol, variant=CCE_PLUS, lam=spec.lam)
            total, (Yp, rep) = _timed(lambda: pgd_optimize(P, warm, cfg),
                                      spec.repetitions)
            rows.append({
                "solver": "pgd", "K": K, "M": spec.m, "eta": eta,
                "sec_per_iter": total / rep.iterations, "iters": rep.iterations,
                "total_sec": total, "final_objective": rep.final_objective,
                "converged": rep.converged, "diverged": rep.diverged,
            })
    return rows


def format_summary(spec, rows):
    lines = list(header_lines(spec))
    lines.append(f"{'solver':>8} {'K':>5} {'eta':>7} {'s/iter':>12} {'iters':>7} "
                 f"{'total s':>10} {'objective':>16} {'flags':>10}")
    for r in rows:
        flags = "diverged" if r["diverged"] else ("ok" if r["converged"] else "capped")
        eta = f"{r['eta']}" if r["eta"] != "" else "-"
        lines.append(f"{r['solver']:>8} {r['K']:>5} {eta:>7} {r['sec_per_iter']:>12.3e} "
                     f"{r['iters']:>7} {r['total_sec']:>10.3f} "
                     f"{r['final_objective']:>16.9f} {flags:>10}")
    return "\n".join(lines)
