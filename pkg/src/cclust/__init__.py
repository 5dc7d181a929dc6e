"""Discriminative clustering with the collision cross-entropy loss.

Core pieces: simplex primitives, generalized entropy measures, the Newton
M-step and EM solver for pseudo-labels, a PGD baseline, a linear softmax
discriminator, the alternating self-labeling pipeline, clustering metrics,
and benchmark/robustness harnesses.
"""

__version__ = "0.1.0"

from . import bench, data, em, linear_model, measures, metrics, mstep, pgd, pipeline, simplex

__all__ = [
    "bench",
    "data",
    "em",
    "linear_model",
    "measures",
    "metrics",
    "mstep",
    "pgd",
    "pipeline",
    "simplex",
]
