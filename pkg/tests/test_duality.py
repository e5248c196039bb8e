import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.distance import directed_hausdorff

from logvol.arrangement import region_count_generic, row_sign_vectors, sign_vector_count_generic
from logvol.duality import (
    SignVector,
    affine_rank,
    count_components,
    count_no_mle,
    cube_face_G,
    duality_check,
    enumerate_sign_vectors,
    exp_face_H,
    full_sign_vectors,
    hausdorff_distance,
    reparam_map_f,
    reparam_map_f_direct,
    sample_sphere,
    sign_map,
    sign_map_delta,
    sign_vector_count,
)
from logvol.geometry import softening_threshold

HALF_PI = math.pi / 2


def test_sign_vector_type():
    s = SignVector([1, 0, -1, 0])
    assert s.n_s == 2 and s == (1, 0, -1, 0)
    with pytest.raises(ValueError):
        SignVector([2, 0])


def test_softened_signs_zero_small_log_odds():
    X = np.array([[1.0], [0.1], [-1.0]])
    D = softening_threshold(0.1)
    beta = np.array([[D * 1.5]])
    np.testing.assert_array_equal(sign_map(X, beta), [[1, 1, -1]])
    np.testing.assert_array_equal(sign_map_delta(X, beta, 0.1), [[1, 0, -1]])


@given(st.integers(0, 10_000))
def test_two_routes_to_expectation_parameters(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((5, 3))
    B = 5 * rng.standard_normal((10, 3))
    np.testing.assert_allclose(reparam_map_f(X, B), reparam_map_f_direct(X, B), rtol=1e-12, atol=1e-12)


@given(st.integers(0, 10_000))
def test_hausdorff_against_scipy(seed):
    rng = np.random.default_rng(seed)
    A, B = rng.standard_normal((30, 3)), rng.standard_normal((17, 3))
    ref = max(directed_hausdorff(A, B)[0], directed_hausdorff(B, A)[0])
    assert hausdorff_distance(A, B, chunk=7) == pytest.approx(ref, rel=1e-12)
    assert hausdorff_distance(A, A) == 0.0


def test_hausdorff_input_checks():
    with pytest.raises(ValueError):
        hausdorff_distance(np.empty((0, 2)), np.ones((1, 2)))
    with pytest.raises(ValueError):
        hausdorff_distance(np.ones((1, 2)), np.ones((1, 3)))


def test_cube_face_geometry():
    G = cube_face_G([1, 0, -1])
    assert G.dim == 1
    d = G.distance(np.array([[HALF_PI, 0.3, -HALF_PI], [0.0, 0.0, 0.0], [HALF_PI, 2.0, -HALF_PI]]))
    np.testing.assert_allclose(d, [0.0, math.sqrt(2) * HALF_PI, 2.0 - HALF_PI])
    grid = G.grid(5)
    assert grid.shape == (5, 3) and np.all(G.distance(grid) < 1e-15)
    assert cube_face_G([1, -1]).grid().shape == (1, 2)


def test_expectation_face_geometry():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    H = exp_face_H(X, [1, -1, 1])
    np.testing.assert_allclose(H.base, [2.0, 1.0])
    assert H.dim == 0 and H.vertices().shape == (1, 2)
    H1 = exp_face_H(X, [1, 0, -1])
    assert H1.dim == 1
    np.testing.assert_allclose(H1.vertices(), [[1.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(H1.distance(np.array([[1.0, 0.5], [3.0, 0.5], [1.0, 2.0]])), [0.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        exp_face_H(X, [0, 0, 1])
    # the bounded least-squares route for two free rows
    H2 = exp_face_H(X, [0, 0, 1], generic=False)
    assert H2.distance(np.array([[1.5, 1.5]]))[0] == pytest.approx(0.0, abs=1e-9)
    assert H2.distance(np.array([[3.0, 1.0]]))[0] == pytest.approx(1.0, abs=1e-9)


def test_affine_rank():
    assert affine_rank(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])) == 1
    assert affine_rank(np.eye(3)) == 2
    assert affine_rank(np.ones((1, 3))) == 0


@pytest.mark.parametrize("n,q", [(3, 2), (4, 2), (4, 3), (5, 3)])
def test_no_mle_count_equals_region_count(n, q):
    X = np.random.default_rng(7 * n + q).standard_normal((n, q))
    assert count_no_mle(X) == region_count_generic(n, q) == count_components(X)
    assert len(full_sign_vectors(X)) == region_count_generic(n, q)


def test_sign_vector_counts():
    X = np.random.default_rng(3).standard_normal((5, 3))
    assert sign_vector_count(X) == sign_vector_count_generic(5, 3) == 82
    D = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    assert sign_vector_count(D) == len(row_sign_vectors(D)) == 8
    assert count_components(np.array([[0.0, 0.0], [1.0, 0.0]])) == 0
    assert full_sign_vectors(np.array([[0.0, 0.0], [1.0, 0.0]])) == []


def test_sampled_signs_are_exact_signs():
    X = np.random.default_rng(11).standard_normal((4, 3))
    seen = enumerate_sign_vectors(X, 1.0, None, 4000)
    exact = row_sign_vectors(X)
    assert set(seen) <= exact
    # full-sign chambers are all hit by the lattice
    assert {s for s in seen if s.n_s == 0} == set(full_sign_vectors(X))


def test_sphere_samples_lie_on_the_sphere():
    for q in (1, 2, 3, 4):
        X = np.random.default_rng(q).standard_normal((q + 2, q))
        P = sample_sphere(X, 7.0, 500, delta=0.1, seed=1)
        np.testing.assert_allclose(np.linalg.norm(P, axis=1), 7.0, rtol=1e-12)


def test_one_dimensional_faces_converge():
    X = np.array([[1.0], [2.0]])
    reps = duality_check(X, [8.0, 16.0, 24.0, 32.0], delta=1e-3)
    for s in (SignVector([1, 1]), SignVector([-1, -1])):
        rows = sorted((r for r in reps if r.s == s), key=lambda r: r.r)
        # at r = 8 the first row is still inside the softening band
        live = [r for r in rows if r.sample_count > 0]
        assert len(live) == 3
        assert all(a.d_H_phi_G > b.d_H_phi_G for a, b in zip(live, live[1:]))
        assert all(a.d_H_f_H > b.d_H_f_H for a, b in zip(live, live[1:]))
    empty = [r for r in reps if r.sample_count == 0]
    assert all(math.isnan(r.d_H_phi_G) for r in empty)


def test_enumeration_limit():
    with pytest.raises(ValueError):
        count_no_mle(np.ones((25, 1)))
