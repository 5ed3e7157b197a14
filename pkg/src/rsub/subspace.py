"""Successive subspace extraction and the two baselines.

Every method first subtracts an offset, then extracts directions one at a
time, deflating the data by the directions found so far. ``robust_residual``
runs the line-distance fit on each deflated set, ``classical_pca`` takes the
top eigenvector of the deflated scatter and ``pca_l1`` runs the sign-flip
fixed point that maximizes the summed absolute projections.
"""

from dataclasses import dataclass, field

import numpy as np

from .direction import DirectionProblem, energy, fit_direction_restarts
from .geometry import (
    as_points,
    as_vector,
    canonical_sign,
    project_off_basis,
    span_rank,
    sphere_project,
    top_scatter_direction,
)
from .median import MedianProblem, solve_median
from .trace import ANCHOR_LOCAL_MIN, CONVERGED, MAX_ITERS

ROBUST = "robust_residual"
CLASSICAL = "classical_pca"
PCA_L1 = "pca_l1"
METHODS = (ROBUST, CLASSICAL, PCA_L1)

OFFSET_KINDS = ("geometric_median", "mean", "given", "none")


class RankError(ValueError):
    """More directions were requested than the centered data supports."""

    def __init__(self, requested, rank):
        super().__init__(
            f"requested {requested} directions but the centered data has rank {rank}; "
            f"at most {rank} can be extracted"
        )
        self.requested = requested
        self.rank = rank


@dataclass(frozen=True)
class OffsetPolicy:
    kind: str = "geometric_median"
    value: tuple | None = None

    def __post_init__(self):
        if self.kind not in OFFSET_KINDS:
            raise ValueError(f"unknown offset kind {self.kind!r}; expected one of {OFFSET_KINDS}")
        if (self.kind == "given") != (self.value is not None):
            raise ValueError("an offset value is required for kind 'given' and only for it")


@dataclass
class SubspaceModel:
    """Offset plus an ordered orthonormal basis (columns of ``basis``).

    ``energies[k]`` is the summed line distance of the stage-``k`` deflated
    data to direction ``k``, for every method. ``traces`` holds the
    per-stage solver traces of the robust method.
    """

    offset: np.ndarray
    basis: np.ndarray
    energies: list
    method: str
    traces: list = field(default_factory=list, compare=False, repr=False)
    status: str = CONVERGED

    @property
    def k(self):
        return self.basis.shape[1]

    @property
    def directions(self):
        return [self.basis[:, j].copy() for j in range(self.k)]


def compute_offset(points, policy):
    X = as_points(points)
    if policy.kind == "geometric_median":
        return solve_median(MedianProblem(X)).median
    if policy.kind == "mean":
        return X.mean(axis=0)
    if policy.kind == "given":
        b = as_vector(policy.value)
        if b.shape[0] != X.shape[1]:
            raise ValueError(f"offset has dimension {b.shape[0]}, points have {X.shape[1]}")
        return b
    return np.zeros(X.shape[1])


def _prepare(points, k, policy):
    X = as_points(points)
    d = X.shape[1]
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in [1, {d}], got {k}")
    b = compute_offset(X, policy)
    Y = X - b
    if span_rank(Y, max_rank=k) < k:
        raise RankError(k, span_rank(Y))
    return X, b, Y


def _append(B, a):
    # re-orthogonalize against earlier directions to stop drift across stages
    if B.shape[1]:
        a = a - B @ (B.T @ a)
        a = a - B @ (B.T @ a)
    a = canonical_sign(sphere_project(a))
    return np.column_stack([B, a])


def fit_subspace(
    points,
    k=1,
    policy=None,
    tolerance=1e-12,
    max_iters=10_000,
    anchor_eps=1e-9,
    restarts=1,
    rng=None,
):
    """Robust subspace by successive deflated line fits.

    Each stage fits a direction to the data with the earlier directions
    projected out; ``restarts > 1`` adds random starts drawn from ``rng``.
    """
    policy = policy or OffsetPolicy("geometric_median")
    X, b, Y = _prepare(points, k, policy)
    B = np.zeros((X.shape[1], 0))
    energies, traces = [], []
    for _ in range(k):
        Z = project_off_basis(Y, B)
        problem = DirectionProblem(
            Z, tolerance=tolerance, max_iters=max_iters, anchor_eps=anchor_eps, warn=False
        )
        a, trace = fit_direction_restarts(problem, restarts, rng)
        B = _append(B, a)
        energies.append(energy(B[:, -1], problem))
        traces.append(trace)
    statuses = {t.status for t in traces}
    status = next(s for s in (MAX_ITERS, ANCHOR_LOCAL_MIN, CONVERGED) if s in statuses)
    return SubspaceModel(b, B, energies, ROBUST, traces, status)


def _stage_energy(a, Z):
    return float(np.linalg.norm(Z - np.outer(Z @ a, a), axis=1).sum())


def classical_pca(points, k=1, policy=None):
    """Successive top eigenvectors of the deflated scatter (power iteration)."""
    policy = policy or OffsetPolicy("mean")
    X, b, Y = _prepare(points, k, policy)
    B = np.zeros((X.shape[1], 0))
    energies = []
    for _ in range(k):
        Z = project_off_basis(Y, B)
        a, _ = top_scatter_direction(Z)
        B = _append(B, a)
        energies.append(_stage_energy(B[:, -1], Z))
    return SubspaceModel(b, B, energies, CLASSICAL)


def eigen_residual(points, model, stage):
    """``(|S a - lam a|, lam)`` for direction ``stage`` of a classical model."""
    Y = as_points(points) - model.offset
    Z = project_off_basis(Y, model.basis[:, :stage])
    a = model.basis[:, stage]
    Sa = Z.T @ (Z @ a)
    lam = float(a @ Sa)
    return float(np.linalg.norm(Sa - lam * a)), lam


def l1_direction(Z, a0=None, max_rounds=1000):
    """Sign-flip fixed point for ``max_a sum_i |<a, z_i>|``.

    Iterates ``a <- normalize(sum_i sign(<a, z_i>) z_i)``, with sign(0) = +1,
    until the sign pattern repeats or ``max_rounds`` is hit. Returns the
    direction and the objective after each round (the start value first).
    """
    Z = as_points(Z)
    a = top_scatter_direction(Z)[0] if a0 is None else sphere_project(a0)
    proj = Z @ a
    signs = np.where(proj >= 0, 1.0, -1.0)
    history = [float(np.abs(proj).sum())]
    for _ in range(max_rounds):
        a = sphere_project(Z.T @ signs)
        proj = Z @ a
        new_signs = np.where(proj >= 0, 1.0, -1.0)
        history.append(float(np.abs(proj).sum()))
        if np.array_equal(new_signs, signs):
            break
        signs = new_signs
    return a, history


def pca_l1(points, k=1, policy=None, max_rounds=1000):
    """Greedy L1 principal directions, started from the classical direction per stage."""
    policy = policy or OffsetPolicy("geometric_median")
    X, b, Y = _prepare(points, k, policy)
    B = np.zeros((X.shape[1], 0))
    energies = []
    for _ in range(k):
        Z = project_off_basis(Y, B)
        a, _ = l1_direction(Z, max_rounds=max_rounds)
        B = _append(B, a)
        energies.append(_stage_energy(B[:, -1], Z))
    return SubspaceModel(b, B, energies, PCA_L1)


def reconstruct(points, model):
    """Project each point onto the affine subspace ``offset + span(basis)``."""
    X = as_points(points)
    B = model.basis
    return model.offset + ((X - model.offset) @ B) @ B.T


def residuals(points, model):
    return as_points(points) - reconstruct(points, model)


def distances(points, model):
    return np.linalg.norm(residuals(points, model), axis=1)


@dataclass
class DistanceHistogram:
    counts: np.ndarray
    edges: np.ndarray
    distances: np.ndarray

    def gap_threshold(self):
        """Midpoint of the widest run of empty bins between occupied bins, or ``None``."""
        occupied = np.flatnonzero(self.counts)
        if occupied.size < 2:
            return None
        gaps = np.diff(occupied) - 1
        j = int(np.argmax(gaps))
        if gaps[j] == 0:
            return None
        lo = self.edges[occupied[j] + 1]
        hi = self.edges[occupied[j + 1]]
        return 0.5 * (lo + hi)


def distance_histogram(points, model, bins=50):
    """Equal-width histogram of point-to-subspace distances over ``[0, max]``."""
    if bins < 1:
        raise ValueError("bins must be at least 1")
    dist = distances(points, model)
    top = float(dist.max()) if dist.size else 0.0
    counts, edges = np.histogram(dist, bins=bins, range=(0.0, top if top > 0 else 1.0))
    return DistanceHistogram(counts, edges, dist)
