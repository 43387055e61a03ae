import math

import numpy as np
import pytest

from homcover import lpcore
from homcover.bodies import ConvexBody, random_vrep_body
from homcover.randvol import RngSpec


def test_single_variable_box():
    lp = lpcore.LinearProgram([1.0], [([1.0], "<=", 1.0)], var_bounds=[(0.0, None)])
    out = lpcore.solve(lp)
    assert out.status == lpcore.OPTIMAL
    assert out.solution[0] == pytest.approx(1.0, abs=1e-9)


def test_contradictory_constraints_infeasible():
    lp = lpcore.LinearProgram([0.0], [([1.0], "==", 2.0), ([1.0], "<=", 1.0)])
    assert lpcore.solve(lp).status == lpcore.INFEASIBLE


def test_triangle_objective_matches_vertex_enumeration():
    rows = [([1.0, 1.0], "<=", 1.0), ([-1.0, 0.0], "<=", 0.0), ([0.0, -1.0], "<=", 0.0)]
    out = lpcore.solve(lpcore.LinearProgram([1.0, 1.0], rows))
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert out.status == lpcore.OPTIMAL
    assert out.objective_value == pytest.approx(max(vertices.sum(axis=1)), abs=1e-9)


def test_unbounded_detected():
    lp = lpcore.LinearProgram([1.0, 0.0], [([-1.0, 0.0], "<=", 0.0)])
    assert lpcore.solve(lp).status == lpcore.UNBOUNDED


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        lpcore.LinearProgram([1.0, 2.0], [([1.0], "<=", 1.0)])
    with pytest.raises(ValueError):
        lpcore.LinearProgram([1.0], [([1.0], "<", 1.0)])


def test_chebyshev_square():
    A = np.vstack([np.eye(2), -np.eye(2)])
    b = np.ones(4)
    center, radius = lpcore.chebyshev_center(A, b)
    assert radius == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(center, 0.0, atol=1e-9)


def test_chebyshev_thin_box():
    # [0,2] x [0,1]
    A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    b = np.array([2.0, 0.0, 1.0, 0.0])
    center, radius = lpcore.chebyshev_center(A, b)
    assert radius == pytest.approx(0.5, abs=1e-9)
    assert np.all(A @ center + radius * 1.0 <= b + 1e-9)


def test_chebyshev_right_triangle():
    T = ConvexBody.from_vertices([[0, 0], [1, 0], [0, 1]])
    A, b = T.halfspaces
    _, radius = lpcore.chebyshev_center(A, b)
    assert radius == pytest.approx(1.0 / (2.0 + math.sqrt(2.0)), abs=1e-9)


def test_chebyshev_empty_interior():
    A = np.array([[1.0], [-1.0]])
    b = np.array([0.0, 0.0])  # the single point {0}
    with pytest.raises(lpcore.InradiusZero):
        lpcore.chebyshev_center(A, b)


def test_ray_max_examples():
    cube = ConvexBody.cube(2)
    A, b = cube.halfspaces
    assert lpcore.ray_max(A, b, [0, 0], [1, 0]) == pytest.approx(1.0, abs=1e-9)
    assert lpcore.ray_max(A, b, [0, 0], [1, 1]) == pytest.approx(1.0, abs=1e-9)
    T = ConvexBody.from_vertices([[0, 0], [1, 0], [0, 1]])
    At, bt = T.halfspaces
    assert lpcore.ray_max(At, bt, [0.25, 0.25], [1, 1]) == pytest.approx(0.25, abs=1e-9)


def test_ray_max_rejects_outside_origin():
    cube = ConvexBody.cube(2)
    A, b = cube.halfspaces
    with pytest.raises(ValueError):
        lpcore.ray_max(A, b, [2.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        lpcore.ray_max(A, b, [0.0, 0.0], [0.0, 0.0])


def test_feasible_instances_never_reported_infeasible(np_rng):
    # 1000 random small LPs with a feasible point built in
    for _ in range(1000):
        n = int(np_rng.integers(1, 5))
        m = int(np_rng.integers(1, 8))
        A = np_rng.normal(size=(m, n))
        x0 = np_rng.normal(size=n)
        slack = np_rng.uniform(0.0, 1.0, size=m)
        rows = [(A[i], lpcore.LE, float(A[i] @ x0 + slack[i])) for i in range(m)]
        out = lpcore.solve(lpcore.LinearProgram(np_rng.normal(size=n), rows))
        assert out.status != lpcore.INFEASIBLE


def test_vertex_oracle_equivalence(np_rng):
    # random 2-D polytopes with <= 8 vertices: LP optimum == vertex max
    for trial in range(60):
        body = random_vrep_body(2, int(np_rng.integers(3, 9)),
                                RngSpec(900 + trial).generator())
        A, b = body.halfspaces
        c = np_rng.normal(size=2)
        rows = [(A[i], lpcore.LE, b[i]) for i in range(A.shape[0])]
        out = lpcore.solve(lpcore.LinearProgram(c, rows))
        assert out.status == lpcore.OPTIMAL
        assert out.objective_value == pytest.approx(
            float(np.max(body.vertices @ c)), abs=1e-9)


def test_ray_max_scales_with_body(np_rng):
    body = random_vrep_body(3, 7, RngSpec(17).generator())
    A, b = body.halfspaces
    for _ in range(25):
        d = np_rng.normal(size=3)
        t1 = lpcore.ray_max(A, b, np.zeros(3), d)
        s = float(np_rng.uniform(0.3, 4.0))
        t2 = lpcore.ray_max(A, s * b, np.zeros(3), d)  # scaled body
        assert t2 == pytest.approx(s * t1, rel=1e-9)
