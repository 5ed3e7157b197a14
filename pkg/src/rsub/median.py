"""Geometric median by Weiszfeld's algorithm, stabilized at the data points.

Off the data, the iteration is the reweighted average
``x <- sum(x_i / |x - x_i|) / sum(1 / |x - x_i|)``. At a data point ``x_k``
the objective is not differentiable; there the subgradient test
``|G_k| <= 1`` decides optimality, and otherwise a step along the
minimal-norm subgradient leaves the point.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import ContractError, as_points, as_vector
from .trace import ANCHOR_LOCAL_MIN, CONVERGED, MAX_ITERS, AnchorInfo, FitTrace


class AnchorPointError(ValueError):
    """The Weiszfeld map was evaluated at a data point."""


def _pairwise_scan(X, block=512):
    """Return (diameter, smallest pairwise distance) of the rows of ``X``.

    Squared distances come from the Gram expansion in blocks; pairs that
    look close are recomputed directly to avoid cancellation.
    """
    n = X.shape[0]
    if n < 2:
        return 0.0, np.inf
    sq = np.einsum("ij,ij->i", X, X)
    diam2 = 0.0
    gap = np.inf
    for start in range(0, n, block):
        stop = min(n, start + block)
        D2 = sq[start:stop, None] + sq[None, :] - 2.0 * (X[start:stop] @ X.T)
        rows = np.arange(start, stop)
        D2[rows - start, rows] = np.inf
        finite = np.where(np.isinf(D2), -np.inf, D2)
        diam2 = max(diam2, float(finite.max()))
        suspicious = np.argwhere(D2 <= 1e-6 * max(diam2, float(sq.max()), 1e-300))
        if suspicious.size:
            i, j = suspicious[:, 0] + start, suspicious[:, 1]
            exact = np.linalg.norm(X[i] - X[j], axis=1)
            gap = min(gap, float(exact.min()))
        else:
            gap = min(gap, float(np.sqrt(max(D2.min(), 0.0))))
    return float(np.sqrt(diam2)), gap


@dataclass
class MedianProblem:
    """Points and stopping parameters for :func:`solve_median`.

    ``anchor_eps`` defaults to ``1e-12`` times the data diameter: iterates
    closer than that to a data point are snapped onto it. Duplicate points
    (closer than ``anchor_eps``) are rejected.
    """

    points: np.ndarray
    tolerance: float = 1e-10
    max_iters: int = 100_000
    anchor_eps: float | None = None
    diameter: float = field(init=False)

    def __post_init__(self):
        self.points = as_points(self.points)
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        self.diameter, gap = _pairwise_scan(self.points)
        if self.anchor_eps is None:
            self.anchor_eps = 1e-12 * self.diameter if self.diameter > 0 else 1e-12
        if self.anchor_eps <= 0:
            raise ValueError("anchor_eps must be positive")
        if gap <= self.anchor_eps:
            raise ValueError(
                f"data contains duplicate points (closest pair {gap!r} <= anchor_eps)"
            )

    @property
    def n(self):
        return self.points.shape[0]


@dataclass
class MedianResult:
    median: np.ndarray
    energy: float
    iterations: int
    stopped_at_anchor: bool
    trace: FitTrace
    anchor_index: int | None = None

    @property
    def converged(self):
        return self.trace.status != MAX_ITERS


def objective(x, points):
    """Sum of Euclidean distances from ``x`` to the points."""
    return float(np.linalg.norm(np.asarray(points) - x, axis=1).sum())


def _nearest(x, X):
    dist = np.linalg.norm(X - x, axis=1)
    k = int(np.argmin(dist))
    return k, dist


def weiszfeld_step(x, problem):
    """One reweighted-average step from a point off the data."""
    x = as_vector(x)
    X = problem.points
    k, dist = _nearest(x, X)
    if dist[k] <= problem.anchor_eps:
        raise AnchorPointError(f"x coincides with data point {k}; use anchor_step")
    w = 1.0 / dist
    return (w @ X) / w.sum()


def _anchor_subgradient(k, X):
    diff = X[k] - np.delete(X, k, axis=0)
    dist = np.linalg.norm(diff, axis=1)
    G = (diff / dist[:, None]).sum(axis=0)
    return G, dist


def anchor_minimality(k, problem):
    """Optimality test at data point ``k``: returns ``(is_min, |G_k|)``.

    ``G_k`` sums the unit vectors from the other points to ``x_k``; the point
    is a minimizer exactly when ``|G_k| <= 1``.
    """
    if problem.n == 1:
        return True, 0.0
    G, _ = _anchor_subgradient(k, problem.points)
    g_norm = float(np.linalg.norm(G))
    return g_norm <= 1.0, g_norm


def anchor_step(k, problem):
    """Descent step away from a non-optimal data point ``k``."""
    is_min, g_norm = anchor_minimality(k, problem)
    if is_min:
        raise ContractError(f"data point {k} is a minimizer (|G| = {g_norm!r} <= 1)")
    X = problem.points
    G, dist = _anchor_subgradient(k, X)
    weight = (1.0 / dist).sum()
    return X[k] - (1.0 - 1.0 / g_norm) * G / weight


def _snap(x, X, eps):
    k, dist = _nearest(x, X)
    if dist[k] <= eps:
        return X[k].copy(), k
    return x, None


def solve_median(problem, x0=None, record_iterates=False):
    """Geometric median of ``problem.points``.

    Starts from ``x0`` (default: the coordinate-wise median) and alternates
    Weiszfeld steps and anchor steps until the step norm falls below
    ``problem.tolerance`` or an optimal data point is reached. When the
    iteration stops by step size next to a data point that passes the
    optimality test and has no larger objective, the result is moved onto
    that point.
    """
    X = problem.points
    x = np.median(X, axis=0) if x0 is None else as_vector(x0).copy()
    if x.shape[0] != X.shape[1]:
        raise ValueError(f"x0 has dimension {x.shape[0]}, points have {X.shape[1]}")

    trace = FitTrace(iterates=[] if record_iterates else None)
    x, k = _snap(x, X, problem.anchor_eps)
    trace.energies.append(objective(x, X))
    if trace.iterates is not None:
        trace.iterates.append(x.copy())

    for _ in range(problem.max_iters):
        event = None
        if k is not None:
            is_min, g_norm = anchor_minimality(k, problem)
            if is_min:
                trace.status = ANCHOR_LOCAL_MIN
                trace.terminal_anchor = AnchorInfo((k,), 1.0)
                trace.boundary = abs(g_norm - 1.0) <= 1e-12
                break
            x_new = anchor_step(k, problem)
            event = AnchorInfo((k,), 1.0)
        else:
            x_new = weiszfeld_step(x, problem)
        x_new, k = _snap(x_new, X, problem.anchor_eps)
        step = float(np.linalg.norm(x_new - x))
        x = x_new
        trace.record(objective(x, X), step, event, x)
        if step < problem.tolerance:
            trace.status = CONVERGED
            break
    else:
        trace.status = MAX_ITERS

    if trace.status == CONVERGED:
        j = k if k is not None else _nearest(x, X)[0]
        is_min, _ = anchor_minimality(j, problem)
        if is_min:
            e_anchor = objective(X[j], X)
            if e_anchor <= trace.energies[-1]:
                if k is None:
                    trace.record(e_anchor, float(np.linalg.norm(X[j] - x)), None, X[j])
                x, k = X[j].copy(), j
                trace.status = ANCHOR_LOCAL_MIN
                trace.terminal_anchor = AnchorInfo((j,), 1.0)

    stopped = trace.status == ANCHOR_LOCAL_MIN
    return MedianResult(
        median=x,
        energy=objective(x, X),
        iterations=trace.iterations,
        stopped_at_anchor=stopped,
        trace=trace,
        anchor_index=k if stopped else None,
    )
