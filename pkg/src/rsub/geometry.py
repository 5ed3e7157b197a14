"""Vector and sphere primitives shared by the solvers.

Vectors are 1-D float arrays, point sets are ``(N, d)`` arrays with one point
per row, and direction bases are ``(d, K)`` arrays with orthonormal columns.
"""

import numpy as np

UNDERFLOW = 1e-300
UNIT_SLACK = 1e-6
ORTHO_TOL = 1e-10
PIVOT_TOL = 1e-12


class DimensionError(ValueError):
    """Inputs have incompatible dimensions."""


class BasisError(ValueError):
    """A direction basis is not orthonormal."""


class DegenerateDirectionError(ValueError):
    """A vector is too small to be normalized."""


class ContractError(ValueError):
    """An operation was called outside its precondition."""


def as_points(points):
    """Return ``points`` as a finite 2-D float array."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise DimensionError(f"expected an (N, d) point array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point set contains non-finite entries")
    return arr


def as_vector(v):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionError(f"expected a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector contains non-finite entries")
    return arr


def as_unit(v):
    """Validate a unit direction, renormalizing small round-off.

    Vectors whose norm is farther than ``UNIT_SLACK`` from one are rejected
    so that a forgotten normalization surfaces as an error.
    """
    arr = as_vector(v)
    nrm = np.linalg.norm(arr)
    if abs(nrm - 1.0) > UNIT_SLACK:
        raise ValueError(f"expected a unit vector, got norm {nrm!r}")
    return arr / nrm


def as_basis(B, dim=None):
    """Return ``B`` as a ``(d, K)`` array; ``K`` may be zero.

    Accepts a 2-D array with directions as columns or a sequence of
    direction vectors.
    """
    if isinstance(B, np.ndarray) and B.ndim == 2:
        arr = B.astype(float, copy=False)
    else:
        cols = [as_vector(b) for b in B]
        if not cols:
            if dim is None:
                raise DimensionError("cannot infer dimension of an empty basis")
            return np.zeros((dim, 0))
        arr = np.column_stack(cols)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError(f"basis has dimension {arr.shape[0]}, expected {dim}")
    return arr


def check_orthonormal(B, tol=ORTHO_TOL):
    if B.shape[1] == 0:
        return
    gram = B.T @ B
    err = np.max(np.abs(gram - np.eye(B.shape[1])))
    if err > tol:
        raise BasisError(f"basis is not orthonormal (max Gram deviation {err:.3e})")


def _check_dims(y, a):
    if y.shape[-1] != a.shape[0]:
        raise DimensionError(f"dimension mismatch: {y.shape[-1]} vs {a.shape[0]}")


def project_off_direction(y, a):
    """Apply ``I - a a^T`` to a vector or to every row of a point array."""
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    _check_dims(y, a)
    return y - np.multiply.outer(y @ a, a)


def project_off_basis(y, B):
    """Remove from ``y`` (vector or rows) its component in ``span(B)``."""
    y = np.asarray(y, dtype=float)
    B = as_basis(B, dim=y.shape[-1])
    check_orthonormal(B)
    if B.shape[1] == 0:
        return y.copy()
    return y - (y @ B) @ B.T


def sphere_project(v):
    """Normalize ``v`` onto the unit sphere."""
    v = as_vector(v)
    nrm = np.linalg.norm(v)
    if nrm <= UNDERFLOW:
        raise DegenerateDirectionError(f"cannot normalize vector of norm {nrm!r}")
    return v / nrm


def canonical_sign(a):
    """Flip ``a`` so its first largest-magnitude coordinate is positive."""
    a = np.asarray(a, dtype=float)
    k = int(np.argmax(np.abs(a)))
    return -a if a[k] < 0 else a.copy()


def span_basis(points, tol=PIVOT_TOL, max_rank=None):
    """Orthonormal basis of the span of the rows of ``points``.

    Column-pivoted Gram-Schmidt with one re-orthogonalization pass; a
    candidate is accepted while its residual norm exceeds ``tol`` times the
    largest input norm. ``max_rank`` stops early once that many columns are
    found. Returns a ``(d, r)`` array.
    """
    X = as_points(points)
    R = X.copy()
    d = X.shape[1]
    scale = np.max(np.linalg.norm(X, axis=1)) if X.size else 0.0
    Q = np.zeros((d, 0))
    if scale == 0.0:
        return Q
    limit = min(X.shape) if max_rank is None else min(min(X.shape), max_rank)
    for _ in range(limit):
        norms = np.linalg.norm(R, axis=1)
        j = int(np.argmax(norms))
        if norms[j] <= tol * scale:
            break
        q = R[j] / norms[j]
        # second pass against the accepted columns
        q = q - Q @ (Q.T @ q)
        q /= np.linalg.norm(q)
        Q = np.column_stack([Q, q])
        R = R - np.outer(R @ q, q)
    return Q


def span_rank(points, tol=PIVOT_TOL, max_rank=None):
    return span_basis(points, tol, max_rank).shape[1]


def span_residual(v, points, tol=PIVOT_TOL):
    """Norm of the component of ``v`` orthogonal to the span of ``points``."""
    v = as_vector(v)
    X = as_points(points)
    _check_dims(X, v)
    Q = span_basis(X, tol)
    return float(np.linalg.norm(v - Q @ (Q.T @ v)))


def leading_eigvec(matvec, start, rtol=1e-12, max_iter=100_000):
    """Top eigenpair of a symmetric positive semidefinite operator by power iteration.

    ``matvec`` applies the operator to a vector. Iterates from ``start`` until
    ``||S v - lam v|| <= rtol * lam`` or until the iterate stops moving.
    Returns ``(lam, v)``.
    """
    v = sphere_project(start)
    lam = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        lam = float(v @ w)
        if np.linalg.norm(w - lam * v) <= rtol * lam:
            break
        nrm = np.linalg.norm(w)
        if nrm <= UNDERFLOW:
            break
        v_new = w / nrm
        if np.array_equal(v_new, v):
            break
        v = v_new
    return lam, v


def top_scatter_direction(points):
    """Leading eigenvector of ``Y^T Y`` for the rows ``Y`` (no centering).

    Power iteration runs from the largest-norm row, which returns an exact
    axis vector for axis-diagonal scatter, and again from a fixed
    pseudo-random combination of the rows in case the first start is
    orthogonal to the top eigenvector. The larger eigenvalue wins; ties go
    to the first start.
    """
    Y = as_points(points)
    norms = np.linalg.norm(Y, axis=1)
    j = int(np.argmax(norms))
    if norms[j] == 0.0:
        raise DegenerateDirectionError("all points are zero")

    def matvec(u):
        return Y.T @ (Y @ u)

    lam, v = leading_eigvec(matvec, Y[j])
    signs = np.random.default_rng(0x5EED).choice([-1.0, 1.0], size=Y.shape[0])
    alt = Y.T @ (signs * norms)
    if np.linalg.norm(alt) > UNDERFLOW:
        lam2, v2 = leading_eigvec(matvec, alt)
        if lam2 > lam * (1.0 + 1e-12):
            lam, v = lam2, v2
    return v, lam
