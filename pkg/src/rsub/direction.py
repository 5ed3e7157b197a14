"""Best-fit line direction under summed, unsquared Euclidean distances.

Minimizes ``E(a) = sum_i |y_i - a <a, y_i>|`` over unit vectors ``a``. Away
from the anchor directions ``+-y_i / |y_i|`` the update is the reweighted
power step ``a <- C_a a / |C_a a|`` with ``C_a = sum_i y_i y_i^T / |P_a y_i|``.
At an anchor the aligned points are split off: the remaining points give the
projected gradient ``G``, and the anchor is kept when ``|G|`` does not exceed
the summed norm of the aligned points; otherwise a tangent step of length
``(|G| - alpha) / s`` along ``G`` leaves it.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    ContractError,
    DegenerateDirectionError,
    UNDERFLOW,
    as_points,
    as_unit,
    canonical_sign,
    span_basis,
    sphere_project,
    top_scatter_direction,
)
from .trace import ANCHOR_LOCAL_MIN, CONVERGED, MAX_ITERS, AnchorInfo, FitTrace

ZERO_REL = 1e-13


class AnchorDirectionError(ValueError):
    """The smooth update was requested at an anchor direction."""


@dataclass
class DirectionProblem:
    """Centered data and stopping parameters for :func:`fit_direction`.

    Rows whose norm is at most ``ZERO_REL`` times the largest row norm carry
    no information about the direction and are removed; their original
    indices are kept in ``stripped``. ``anchor_eps`` bounds the relative
    residual ``|P_a y_k| / |y_k|`` below which ``a`` counts as aligned
    with ``y_k``.
    """

    points: np.ndarray
    tolerance: float = 1e-12
    max_iters: int = 10_000
    anchor_eps: float = 1e-9
    warn: bool = True
    stripped: tuple = field(init=False, default=())
    norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        Y = as_points(self.points)
        norms = np.linalg.norm(Y, axis=1)
        top = norms.max() if norms.size else 0.0
        keep = norms > ZERO_REL * top
        if not keep.any():
            raise ValueError("direction fit needs at least one nonzero point")
        if not keep.all():
            self.stripped = tuple(int(i) for i in np.flatnonzero(~keep))
            if self.warn:
                warnings.warn(
                    f"removed {len(self.stripped)} zero data vector(s) at rows {list(self.stripped)[:10]}",
                    stacklevel=2,
                )
            Y = Y[keep]
            norms = norms[keep]
        self.points = Y
        self.norms = norms
        if self.tolerance <= 0 or self.anchor_eps <= 0:
            raise ValueError("tolerance and anchor_eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass
class StepInfo:
    """Quantities of the anchor update at ``a``.

    ``scatter_apply`` is ``C_{a,K} a``, ``gradient`` its tangential part
    ``P_a C_{a,K} a`` and ``step_scale`` is ``a^T C_{a,K} a``, or ``None``
    when every point is aligned with ``a`` (or orthogonal to it) so no step
    is defined.
    """

    scatter_apply: np.ndarray
    gradient: np.ndarray
    step_scale: float | None
    anchor: AnchorInfo | None = None

    @property
    def gradient_norm(self):
        return float(np.linalg.norm(self.gradient))


def _residuals(a, Y):
    proj = Y @ a
    R = Y - np.outer(proj, a)
    return proj, np.sqrt(np.einsum("ij,ij->i", R, R))


def energy(a, problem):
    """Summed distance of the data to the line spanned by ``a``."""
    _, res = _residuals(np.asarray(a, dtype=float), problem.points)
    return float(res.sum())


def _anchor_mask(res, problem):
    return res <= problem.anchor_eps * problem.norms


def _anchor_from_mask(mask, problem):
    idx = np.flatnonzero(mask)
    return AnchorInfo(tuple(int(i) for i in idx), float(problem.norms[idx].sum()))


def detect_anchor(a, problem):
    """Indices of points aligned with ``+-a``, or ``None`` if there are none."""
    _, res = _residuals(np.asarray(a, dtype=float), problem.points)
    mask = _anchor_mask(res, problem)
    return _anchor_from_mask(mask, problem) if mask.any() else None


def _smooth_update(a, proj, res, Y):
    v = Y.T @ (proj / res)
    nrm = np.linalg.norm(v)
    if nrm <= UNDERFLOW:
        raise DegenerateDirectionError("scatter operator annihilates the iterate")
    return v / nrm


def step_nonanchor(a, problem):
    """Reweighted update ``C_a a / |C_a a|`` at a non-anchor direction."""
    a = as_unit(a)
    proj, res = _residuals(a, problem.points)
    mask = _anchor_mask(res, problem)
    if mask.any():
        raise AnchorDirectionError(
            f"a is aligned with data rows {list(np.flatnonzero(mask))}; use the anchor step"
        )
    return _smooth_update(a, proj, res, problem.points)


def _anchor_step_info(a, proj, res, mask, anchor, Y):
    free = ~mask
    w = proj[free] / res[free]
    ca = Y[free].T @ w
    G = ca - a * (a @ ca)
    s = float(np.sum(proj[free] * w))
    return StepInfo(ca, G, s if s > 0.0 else None, anchor)


def anchor_gradient(a, K, problem):
    """Split-off gradient ``G = P_a C_{a,K} a`` at an anchor direction.

    The sums run over the points not in ``K``.
    """
    a = as_unit(a)
    proj, res = _residuals(a, problem.points)
    mask = np.zeros(problem.n, dtype=bool)
    mask[list(K.indices)] = True
    return _anchor_step_info(a, proj, res, mask, K, problem.points)


def anchor_local_min_test(a, K, problem):
    """True when ``|G_{a,K}| <= alpha``; the strict inequality certifies a local minimum."""
    info = anchor_gradient(a, K, problem)
    return info.gradient_norm <= K.alpha


def _anchor_update(a, info):
    g = info.gradient_norm
    alpha = info.anchor.alpha
    return sphere_project(a + (1.0 - alpha / g) * info.gradient / info.step_scale)


def step_anchor(a, info, problem):
    """Leave a non-minimal anchor along its split-off gradient."""
    a = as_unit(a)
    if info.anchor is None:
        raise ContractError("step_anchor needs the anchor set of the iterate")
    if info.step_scale is None or info.gradient_norm <= info.anchor.alpha:
        raise ContractError(
            f"anchor passes the minimality test (|G| = {info.gradient_norm!r}, "
            f"alpha = {info.anchor.alpha!r})"
        )
    return _anchor_update(a, info)


def default_start(problem):
    """Leading eigenvector of the (uncentered) scatter of the data."""
    v, _ = top_scatter_direction(problem.points)
    return v


def random_start(problem, rng):
    """Uniform random unit vector in the span of the data."""
    Q = span_basis(problem.points)
    g = rng.standard_normal(Q.shape[1])
    return sphere_project(Q @ g)


def _snap_to_anchor(a, anchor, problem):
    idx = np.asarray(anchor.indices)
    k = int(idx[np.argmax(problem.norms[idx])])
    y = problem.points[k]
    return sphere_project(y if a @ y >= 0 else -y)


def fit_direction(problem, a0=None, record_iterates=False):
    """Minimize the summed line distance over the unit sphere.

    Returns ``(direction, trace)``. The direction is sign-normalized with
    :func:`canonical_sign`. The iteration stops when the step norm drops
    below ``problem.tolerance`` (status ``converged``), at an anchor that
    passes the minimality test (status ``anchor_local_min``), or after
    ``problem.max_iters`` steps. At a passing anchor the iterate is first
    moved exactly onto the anchor direction when that lowers the energy; the
    terminal step itself is recorded with step norm zero.
    """
    if problem.n == 0:
        raise ValueError("empty point set")
    Y = problem.points
    a = default_start(problem) if a0 is None else as_unit(a0)
    if a.shape[0] != problem.dim:
        raise ValueError(f"a0 has dimension {a.shape[0]}, points have {problem.dim}")

    trace = FitTrace(iterates=[] if record_iterates else None)
    proj, res = _residuals(a, Y)
    e = float(res.sum())
    trace.energies.append(e)
    if trace.iterates is not None:
        trace.iterates.append(a.copy())

    for _ in range(problem.max_iters):
        mask = _anchor_mask(res, problem)
        event = None
        if mask.any():
            event = _anchor_from_mask(mask, problem)
            info = _anchor_step_info(a, proj, res, mask, event, Y)
            g = info.gradient_norm
            if info.step_scale is None or g <= event.alpha:
                # move exactly onto the anchor direction if that lowers E, then retest there
                a_hat = _snap_to_anchor(a, event, problem)
                if not np.array_equal(a_hat, a):
                    proj_hat, res_hat = _residuals(a_hat, Y)
                    e_hat = float(res_hat.sum())
                    if e_hat < e:
                        trace.record(e_hat, np.linalg.norm(a_hat - a), event, a_hat)
                        a, proj, res, e = a_hat, proj_hat, res_hat, e_hat
                        continue
                # terminal anchor: the update is the identity
                trace.record(e, 0.0, event, a)
                trace.status = ANCHOR_LOCAL_MIN
                trace.terminal_anchor = event
                trace.boundary = abs(g - event.alpha) <= 1e-12 * event.alpha
                break
            a_new = _anchor_update(a, info)
        else:
            a_new = _smooth_update(a, proj, res, Y)
        proj, res = _residuals(a_new, Y)
        e = float(res.sum())
        step = float(np.linalg.norm(a_new - a))
        a = a_new
        trace.record(e, step, event, a)
        if step < problem.tolerance:
            trace.status = CONVERGED
            break
    else:
        trace.status = MAX_ITERS

    return canonical_sign(a), trace


def fit_direction_restarts(problem, restarts=1, rng=None, a0=None):
    """Best of ``restarts`` fits: the default start plus random starts in the data span.

    Ties in final energy go to the earlier start, so the result never has a
    larger energy than the single default-initialized fit.
    """
    best = fit_direction(problem, a0)
    for _ in range(1, restarts):
        if rng is None:
            raise ValueError("random restarts need an rng")
        cand = fit_direction(problem, random_start(problem, rng))
        if cand[1].final_energy < best[1].final_energy:
            best = cand
    return best


def contraction_limit(anchor, problem):
    """Predicted local contraction factor ``|G| / alpha`` of the smooth update at an anchor."""
    K = detect_anchor(anchor, problem)
    if K is None:
        raise ValueError("direction is not an anchor of the data")
    return anchor_gradient(anchor, K, problem).gradient_norm / K.alpha


def contraction_ratio(a_seq, anchor, K, problem):
    """Empirical ratio ``|T(a) - anchor| / |a - anchor|`` at the last element of ``a_seq``.

    ``T`` is the smooth update; ``anchor`` must align with the points in ``K``.
    """
    anchor = as_unit(anchor)
    _, res = _residuals(anchor, problem.points)
    idx = list(K.indices)
    if not idx or np.any(res[idx] > problem.anchor_eps * problem.norms[idx]):
        raise ValueError("anchor is not aligned with the points in K")
    a = as_unit(a_seq[-1])
    dist = np.linalg.norm(a - anchor)
    if dist == 0.0:
        raise ValueError("sequence element coincides with the anchor")
    T = step_nonanchor(a, problem)
    return float(np.linalg.norm(T - anchor) / dist)
