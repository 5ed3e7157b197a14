import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsub.geometry import ContractError
from rsub.median import (
    AnchorPointError,
    MedianProblem,
    anchor_minimality,
    anchor_step,
    objective,
    solve_median,
    weiszfeld_step,
)
from rsub.validate import fermat_point_grid

CROSS = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
COLLINEAR = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]])
TRIANGLE = np.array([[0.0, 0.0], [4.0, 0.0], [1.0, 2.0]])


def test_weiszfeld_step_decreases_objective():
    p = MedianProblem(CROSS)
    x = np.array([0.0, 0.1])
    assert objective(weiszfeld_step(x, p), CROSS) < objective(x, CROSS)


def test_weiszfeld_step_fixed_point_at_symmetric_center():
    assert np.allclose(weiszfeld_step([0.0, 0.0], MedianProblem(CROSS)), [0.0, 0.0], atol=1e-16)


def test_weiszfeld_step_keeps_collinear_hull():
    out = weiszfeld_step([2.0, 0.0], MedianProblem(COLLINEAR))
    assert out[1] == 0.0


def test_weiszfeld_step_rejects_anchor():
    with pytest.raises(AnchorPointError):
        weiszfeld_step([1.0, 0.0], MedianProblem(COLLINEAR))


def test_anchor_minimality_examples():
    five = np.vstack([[0.0, 0.0], CROSS])
    assert anchor_minimality(0, MedianProblem(five)) == (True, 0.0)
    p = MedianProblem(COLLINEAR)
    assert anchor_minimality(2, p) == (False, 2.0)
    assert anchor_minimality(1, p) == (True, 0.0)


def test_anchor_step_leaves_nonoptimal_point():
    p = MedianProblem(COLLINEAR)
    x = anchor_step(2, p)
    assert x[1] == 0.0 and x[0] < 5.0
    assert objective(x, COLLINEAR) < objective(COLLINEAR[2], COLLINEAR)
    with pytest.raises(ContractError):
        anchor_step(1, p)


def test_anchor_step_from_apex_of_flat_isoceles():
    pts = np.array([[0.0, 0.0], [-3.0, -2.0], [3.0, -2.0]])
    p = MedianProblem(pts)
    is_min, g = anchor_minimality(0, p)
    assert not is_min and g > 1
    x = anchor_step(0, p)
    assert objective(x, pts) < objective(pts[0], pts)
    assert x[0] == 0.0 and -2.0 < x[1] < 0.0


def test_anchor_step_near_boundary_is_tiny():
    # |G_0| = 2 cos(t) = 1 + 1e-9 for two points symmetric about the x-axis
    t = np.arccos((1 + 1e-9) / 2)
    pts = np.array([[0.0, 0.0], [-np.cos(t), np.sin(t)], [-np.cos(t), -np.sin(t)]])
    p = MedianProblem(pts)
    is_min, g = anchor_minimality(0, p)
    assert not is_min
    x = anchor_step(0, p)
    assert 0 < np.linalg.norm(x) < 1e-8
    assert objective(x, pts) <= objective(pts[0], pts) + 1e-12


def test_solve_symmetric_cross():
    res = solve_median(MedianProblem(CROSS), x0=[0.3, 0.2])
    assert np.linalg.norm(res.median) < 1e-8
    assert res.converged


def test_solve_triangle_matches_grid():
    res = solve_median(MedianProblem(TRIANGLE), x0=TRIANGLE.mean(axis=0))
    grid = fermat_point_grid(TRIANGLE)
    assert np.linalg.norm(res.median - grid) < 1e-6
    # the Fermat point sees every side under 120 degrees
    u = TRIANGLE - res.median
    u /= np.linalg.norm(u, axis=1)[:, None]
    assert np.allclose([u[0] @ u[1], u[1] @ u[2], u[2] @ u[0]], -0.5, atol=1e-8)


def test_solve_collinear_stops_at_anchor():
    res = solve_median(MedianProblem(COLLINEAR), x0=[3.0, 1.0])
    assert np.allclose(res.median, [1.0, 0.0], atol=1e-6)
    assert res.stopped_at_anchor
    assert anchor_minimality(res.anchor_index, MedianProblem(COLLINEAR))[0]


def test_result_energy_matches_objective():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((30, 4))
    res = solve_median(MedianProblem(X))
    assert abs(res.energy - objective(res.median, X)) <= 1e-10


def test_duplicates_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        MedianProblem([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])


def test_single_point():
    res = solve_median(MedianProblem([[2.0, -1.0]]))
    assert np.array_equal(res.median, [2.0, -1.0])
    assert res.stopped_at_anchor


def test_max_iters_flags_nonconvergence():
    rng = np.random.default_rng(0)
    res = solve_median(MedianProblem(rng.standard_normal((20, 3)), max_iters=2))
    assert not res.converged and res.iterations == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 40), st.integers(1, 5))
def test_monotone_descent_and_fixed_point(seed, n, d):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d)) * rng.uniform(0.5, 3.0)
    p = MedianProblem(X)
    res = solve_median(p)
    E = res.trace.energies
    assert all(b <= a + 1e-12 for a, b in zip(E, E[1:]))
    if res.stopped_at_anchor:
        assert anchor_minimality(res.anchor_index, p)[0]
    elif res.converged:
        diff = res.median - X
        dist = np.linalg.norm(diff, axis=1)
        g = np.linalg.norm((diff / dist[:, None]).sum(axis=0))
        assert g < 10 * p.tolerance * (1.0 / dist).sum()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-50, 50), st.floats(-50, 50))
def test_translation_equivariance(seed, cx, cy):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((12, 2))
    c = np.array([cx, cy])
    x0 = rng.standard_normal(2)
    a = solve_median(MedianProblem(X), x0=x0).median
    b = solve_median(MedianProblem(X + c), x0=x0 + c).median
    assert np.allclose(b, a + c, atol=1e-9)
