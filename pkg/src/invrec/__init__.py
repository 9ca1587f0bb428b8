"""Counterfactually-invariant relevance prediction for causally-perceiving
users: exact discrete SCM data generators, distribution-matching penalties
(MMD / CORAL, marginal or conditional), penalized training, and the
synthetic experiment suite."""

from . import choice, divergence, experiments, model, model_io, scm, trainer

__all__ = [
    "choice",
    "divergence",
    "experiments",
    "model",
    "model_io",
    "scm",
    "trainer",
]

__version__ = "0.1.0"
