"""Robust line and subspace fitting by summed (unsquared) Euclidean distances."""

from .direction import DirectionProblem, energy, fit_direction, fit_direction_restarts
from .median import MedianProblem, solve_median
from .subspace import (
    OffsetPolicy,
    SubspaceModel,
    classical_pca,
    distance_histogram,
    fit_subspace,
    pca_l1,
    reconstruct,
    residuals,
)

__all__ = [
    "DirectionProblem",
    "MedianProblem",
    "OffsetPolicy",
    "SubspaceModel",
    "classical_pca",
    "distance_histogram",
    "energy",
    "fit_direction",
    "fit_direction_restarts",
    "fit_subspace",
    "pca_l1",
    "reconstruct",
    "residuals",
    "solve_median",
]
