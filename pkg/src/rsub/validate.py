"""Brute-force oracles and derivative checks for the solvers.

Everything here recomputes its quantities from the raw points instead of
calling the solver internals, so a disagreement points at a real bug rather
than at shared code.
"""

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext

import numpy as np

from .geometry import ContractError, as_points, as_unit, sphere_project
from .median import MedianProblem, objective, solve_median

TANGENT_TOL = 1e-10
ONE_SIDED_STEP = 1e-7
FD_SCALE_FLOOR = 1e-8


class PreconditionError(ValueError):
    """Input violates a hypothesis the check relies on."""


class ValidationError(AssertionError):
    """An oracle disagrees with the solver output."""


@dataclass(frozen=True)
class GridSpec:
    resolution: int = 10_000
    refinement_rounds: int = 0
    refinement_factor: int = 10

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")
        if self.refinement_rounds < 0 or self.refinement_factor < 1:
            raise ValueError("refinement rounds must be >= 0 and the factor >= 1")


def _as_planar(points):
    X = as_points(points)
    if X.shape[1] != 2:
        raise ValueError(f"expected planar points, got dimension {X.shape[1]}")
    return X


def line_energies_2d(points, thetas, chunk=2048):
    """``sum_i |x_i x (cos t, sin t)|`` for every angle ``t``."""
    X = _as_planar(points)
    thetas = np.asarray(thetas, dtype=float)
    out = np.empty(thetas.shape[0])
    for lo in range(0, thetas.shape[0], chunk):
        t = thetas[lo : lo + chunk]
        cross = np.outer(np.sin(t), X[:, 0]) - np.outer(np.cos(t), X[:, 1])
        out[lo : lo + chunk] = np.abs(cross).sum(axis=1)
    return out


def oracle_direction_2d(points, grid=GridSpec()):
    """Grid search for the best line through the origin in the plane.

    Samples ``resolution`` angles in ``[0, pi)``, then repeatedly resamples a
    window around the best angle that is ``refinement_factor`` times
    narrower. Returns ``(angle, energy)``.
    """
    X = _as_planar(points)
    thetas = np.arange(grid.resolution) * (np.pi / grid.resolution)
    E = line_energies_2d(X, thetas)
    j = int(np.argmin(E))
    best_t, best_e = thetas[j], E[j]
    width = np.pi
    for _ in range(grid.refinement_rounds):
        width /= grid.refinement_factor
        thetas = best_t + np.linspace(-width / 2, width / 2, grid.resolution)
        E = line_energies_2d(X, thetas)
        j = int(np.argmin(E))
        if E[j] < best_e:
            best_t, best_e = thetas[j], E[j]
    return float(np.mod(best_t, np.pi)), float(best_e)


def affine_line_energy(points, p, q):
    """Summed distance of the points to the line through ``p`` and ``q``."""
    X = _as_planar(points)
    u = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    n = np.array([-u[1], u[0]]) / np.hypot(u[0], u[1])
    return float(np.abs((X - p) @ n).sum())


def oracle_line_pairs_2d(points):
    """Best affine line through two of the points: ``((i, j), energy)``.

    Pairs of coincident points define no line and are skipped.
    """
    X = _as_planar(points)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    scale = max(float(np.abs(X).max()), 1.0)
    best, best_e = None, np.inf
    for i in range(n - 1):
        U = X[i + 1 :] - X[i]
        L = np.hypot(U[:, 0], U[:, 1])
        ok = L > 1e-12 * scale
        if not ok.any():
            continue
        N = np.column_stack([-U[ok, 1], U[ok, 0]]) / L[ok, None]
        E = np.abs((X - X[i]) @ N.T).sum(axis=0)
        k = int(np.argmin(E))
        if E[k] < best_e:
            best_e = float(E[k])
            best = (i, int(np.flatnonzero(ok)[k]) + i + 1)
    if best is None:
        raise ValueError("all points coincide; no line is defined")
    return best, best_e


@dataclass
class LineGridResult:
    angle: float
    offset: float
    energy: float
    slack: float


def oracle_affine_lines_2d(points, resolution=400, chunk=64):
    """Dense grid over all affine lines meeting the data's bounding disk.

    Lines are ``{x : <n(t), x - c> = o}`` with ``n(t) = (-sin t, cos t)``,
    ``c`` the centroid, ``t`` in ``[0, pi)`` and ``o`` in ``[-diam, diam]``.
    ``slack`` bounds how far the grid minimum can sit above the true one:
    moving a line by half a cell in each parameter changes the distance of
    ``x_i`` by at most ``do/2 + |x_i - c| dt/2``.
    """
    X = _as_planar(points)
    c = X.mean(axis=0)
    R = np.linalg.norm(X - c, axis=1)
    diam = max(float(np.max(np.linalg.norm(X[:, None] - X[None], axis=2))), 1e-300)
    thetas = np.arange(resolution) * (np.pi / resolution)
    offsets = np.linspace(-diam, diam, resolution)
    dt = np.pi / resolution
    do = 2 * diam / (resolution - 1)
    best = (np.inf, 0.0, 0.0)
    for lo in range(0, resolution, chunk):
        t = thetas[lo : lo + chunk]
        P = np.outer(-np.sin(t), X[:, 0] - c[0]) + np.outer(np.cos(t), X[:, 1] - c[1])
        E = np.abs(P[:, None, :] - offsets[None, :, None]).sum(axis=2)
        i, j = np.unravel_index(int(np.argmin(E)), E.shape)
        if E[i, j] < best[0]:
            best = (float(E[i, j]), float(t[i]), float(offsets[j]))
    slack = float(np.sum(do / 2 + R * dt / 2))
    return LineGridResult(best[1], best[2], best[0], slack)


def fermat_point_grid(points, coarse=2000, fine=200, window=4, rounds=2):
    """Minimize the summed distance to the points by nested grids.

    A ``coarse``-by-``coarse`` grid over the bounding box is followed by
    ``rounds`` grids of ``fine``-by-``fine`` points, each spanning ``window``
    cells of the previous grid centered at its argmin.
    """
    X = _as_planar(points)
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    gx = np.linspace(lo[0], hi[0] if hi[0] > lo[0] else lo[0] + span[0], coarse)
    gy = np.linspace(lo[1], hi[1] if hi[1] > lo[1] else lo[1] + span[1], coarse)
    best, cell = _grid_argmin(X, gx, gy), np.array([gx[1] - gx[0], gy[1] - gy[0]])
    for _ in range(rounds):
        half = window * cell / 2
        gx = np.linspace(best[0] - half[0], best[0] + half[0], fine)
        gy = np.linspace(best[1] - half[1], best[1] + half[1], fine)
        best, cell = _grid_argmin(X, gx, gy), np.array([gx[1] - gx[0], gy[1] - gy[0]])
    return best


def _grid_argmin(X, gx, gy, chunk=256):
    best_e, best = np.inf, None
    for lo in range(0, gx.shape[0], chunk):
        xs = gx[lo : lo + chunk]
        E = np.zeros((xs.shape[0], gy.shape[0]))
        for p in X:
            E += np.hypot(xs[:, None] - p[0], gy[None, :] - p[1])
        i, j = np.unravel_index(int(np.argmin(E)), E.shape)
        if E[i, j] < best_e:
            best_e, best = E[i, j], np.array([xs[i], gy[j]])
    return best


@dataclass
class SteinerReport:
    fermat_point: np.ndarray
    grid_point: np.ndarray
    grid_gap: float
    pair: tuple
    line_energy: float
    distance: float


def _triangle_angles(T):
    out = []
    for k in range(3):
        u, v = T[(k + 1) % 3] - T[k], T[(k + 2) % 3] - T[k]
        c = (u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))
        out.append(math.degrees(math.acos(max(-1.0, min(1.0, c)))))
    return out


def steiner_check(triangle, tolerance=1e-9, grid_tolerance=1e-6):
    """Show that the best line of a triangle misses its Fermat point.

    Requires every angle below 120 degrees and a strictly longest side. The
    Fermat point comes from the median solver and is checked against
    :func:`fermat_point_grid`; the best line comes from
    :func:`oracle_line_pairs_2d`.
    """
    T = _as_planar(triangle)
    if T.shape[0] != 3:
        raise PreconditionError("a triangle needs exactly three points")
    angles = _triangle_angles(T)
    for k, ang in enumerate(angles):
        if ang >= 120.0:
            raise PreconditionError(f"angle at vertex {k} is {ang:.4f} degrees; all angles must be below 120")
    sides = sorted(float(np.linalg.norm(T[(k + 1) % 3] - T[(k + 2) % 3])) for k in range(3))
    if sides[2] - sides[1] <= 1e-12 * sides[2]:
        raise PreconditionError(
            f"the two longest sides tie ({sides[1]!r} vs {sides[2]!r}); a strictly longest side is required"
        )

    med = solve_median(MedianProblem(T, tolerance=1e-14)).median
    grid = fermat_point_grid(T)
    gap = float(np.linalg.norm(med - grid))
    if gap > grid_tolerance:
        raise ValidationError(f"median solver and grid search disagree by {gap!r}")
    pair, line_e = oracle_line_pairs_2d(T)
    dist = affine_line_energy(med[None, :], T[pair[0]], T[pair[1]])
    if dist <= 10 * tolerance:
        raise ValidationError(f"Fermat point lies on the best line (distance {dist!r})")
    return SteinerReport(med, grid, gap, pair, line_e, dist)


def _unit_rows(a, Y):
    proj = Y @ a
    R = Y - np.outer(proj, a)
    return proj, R, np.linalg.norm(R, axis=1)


def analytic_gradient(a, points):
    """``-P_a C_a a`` computed directly from the points."""
    a = as_unit(a)
    Y = as_points(points)
    proj, R, res = _unit_rows(a, Y)
    # P_a y_i <a, y_i> / |P_a y_i| summed
    return -(R * (proj / res)[:, None]).sum(axis=0)


def _energy(a, Y):
    return float(np.linalg.norm(Y - np.outer(Y @ a, a), axis=1).sum())


def random_tangent(a, rng):
    h = rng.standard_normal(a.shape[0])
    h -= a * (a @ h)
    return h / np.linalg.norm(h)


def fd_gradient_check(a, problem, increment=1e-6, rng=None, directions=10):
    """Largest gradient error against central differences along random tangents.

    Errors are scaled by ``max(|grad E(a)|, 1e-8 sum_i |y_i|)`` so that a
    vanishing gradient does not divide by zero.
    """
    a = as_unit(a)
    Y = problem.points
    rng = np.random.default_rng(0) if rng is None else rng
    _, _, res = _unit_rows(a, Y)
    norms = np.linalg.norm(Y, axis=1)
    near = np.flatnonzero(res <= 100 * problem.anchor_eps * norms)
    if near.size:
        raise ContractError(
            f"a is within 100*anchor_eps of the anchor directions of rows {list(near)}; "
            "use one_sided_derivative_check"
        )
    grad = analytic_gradient(a, Y)
    scale = max(float(np.linalg.norm(grad)), FD_SCALE_FLOOR * float(norms.sum()))
    worst = 0.0
    for _ in range(directions):
        h = random_tangent(a, rng)
        plus = _energy(sphere_project(a + increment * h), Y)
        minus = _energy(sphere_project(a - increment * h), Y)
        numeric = (plus - minus) / (2 * increment)
        worst = max(worst, abs(grad @ h - numeric) / scale)
    return worst


def _anchor_split(a, Y, anchor_eps):
    proj, R, res = _unit_rows(a, Y)
    norms = np.linalg.norm(Y, axis=1)
    K = res <= anchor_eps * norms
    free = ~K
    G = (R[free] * (proj[free] / res[free])[:, None]).sum(axis=0)
    return K, float(norms[K].sum()), G


def one_sided_derivative(a, h, points, anchor_eps=1e-9):
    """Closed-form one-sided derivative ``alpha |h| - <G, h>`` at an anchor."""
    a = as_unit(a)
    h = np.asarray(h, dtype=float)
    K, alpha, G = _anchor_split(a, as_points(points), anchor_eps)
    if not K.any():
        raise ContractError("a is not an anchor direction of the data")
    return alpha * float(np.linalg.norm(h)) - float(G @ h)


def one_sided_derivative_check(a, h, problem, step=ONE_SIDED_STEP):
    """Return ``(analytic, numeric)`` one-sided derivatives of E at an anchor along ``h``."""
    a = as_unit(a)
    h = np.asarray(h, dtype=float)
    if abs(a @ h) > TANGENT_TOL:
        raise ValueError(f"h is not tangent at a (<a, h> = {a @ h!r})")
    Y = problem.points
    analytic = one_sided_derivative(a, h, Y, problem.anchor_eps)
    numeric = (_energy(sphere_project(a + step * h), Y) - _energy(a, Y)) / step
    return analytic, numeric


def directional_derivatives(a, H, problem):
    """First-order change of E at ``a`` along each row of ``H``.

    Off the anchor set this is ``<grad E, h>``; at an anchor it is the
    one-sided derivative.
    """
    a = as_unit(a)
    Y = problem.points
    K, alpha, G = _anchor_split(a, Y, problem.anchor_eps)
    if K.any():
        return alpha * np.linalg.norm(H, axis=1) - H @ G
    return H @ analytic_gradient(a, Y)


def local_min_certificate(a, problem, samples=1000, rng=None):
    """Sampled first-order test for a strict local minimum.

    True iff the directional derivative is strictly positive along every
    sampled tangent direction. Off the anchor set the derivative is linear
    in ``h``, so the answer there is always false; only anchors can pass.
    """
    a = as_unit(a)
    rng = np.random.default_rng(0) if rng is None else rng
    H = np.array([random_tangent(a, rng) for _ in range(samples)])
    return bool(np.all(directional_derivatives(a, H, problem) > 0))


class ExactEnergy:
    """E at ``a / |a|`` evaluated in ``prec``-digit decimal arithmetic.

    Floats convert to decimals exactly, so the result resolves energy
    differences far below double precision. The points are converted once.
    """

    def __init__(self, points, prec=50):
        self.prec = prec
        with localcontext() as ctx:
            ctx.prec = prec
            self._rows = []
            for y in as_points(points):
                yv = [Decimal(float(v)) for v in y]
                self._rows.append((yv, sum(v * v for v in yv)))

    def __call__(self, a):
        with localcontext() as ctx:
            ctx.prec = self.prec
            av = [Decimal(float(v)) for v in np.asarray(a, dtype=float)]
            nn = sum(v * v for v in av)
            total = Decimal(0)
            for yv, q in self._rows:
                c = sum(p * w for p, w in zip(av, yv))
                r2 = q - c * c / nn
                if r2 > 0:
                    total += r2.sqrt()
        return total


def exact_energy(a, points, prec=50):
    return ExactEnergy(points, prec)(a)


def float_energy_margin(points):
    """Bound on the double-precision error of :func:`rsub.direction.energy`."""
    return 1e-13 * float(np.linalg.norm(as_points(points), axis=1).sum())


def median_grid_gap(points, median):
    """Distance between a 2-D median and the nested-grid minimizer."""
    grid = fermat_point_grid(points)
    return float(np.linalg.norm(np.asarray(median) - grid)), objective(grid, points)
