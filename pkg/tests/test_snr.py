import math

import numpy as np
import pytest

from conftest import random_spd
from errors import EmptyRegion, InvalidInput
from GmmModel import GmmParams, Heterogeneous, Homogeneous, as_heterogeneous, make_sim1, make_sim2, rescale
from snr import (QuadraticBoundary, boundary, grid_oracle, min_center_gap, min_norm_on_boundary, snr_delta_bounds,
                 snr_hetero, snr_homogeneous, snr_prime_bounds)


def random_instance(rng, d, k=2):
    centers = np.zeros((k, d))
    for a in range(1, k):
        direction = rng.standard_normal(d)
        centers[a] = centers[0] + rng.uniform(2.0, 20.0) * direction / np.linalg.norm(direction)
    sigmas = tuple(random_spd(rng, d) for _ in range(k))
    return GmmParams(centers, Heterogeneous(sigmas))


def nonempty_boundary(rng, d):
    while True:
        qb = boundary(random_instance(rng, d), 0, 1)
        try:
            min_norm_on_boundary(qb)
            return qb
        except EmptyRegion:
            continue


def test_min_center_gap_examples():
    assert min_center_gap(make_sim1(seed=3)) == pytest.approx(9.0 * math.sqrt(2.0))
    assert min_center_gap(GmmParams(np.array([[0.0, 0.0], [3.0, 4.0]]), Homogeneous(np.eye(2)))) == 5.0
    three = GmmParams(np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]]), Homogeneous(np.eye(2)))
    assert min_center_gap(three) == 1.0


def test_snr_homogeneous_examples():
    params = GmmParams(np.array([[0.0, 0.0], [3.0, 4.0]]), Homogeneous(np.eye(2)))
    assert snr_homogeneous(params) == pytest.approx(5.0)
    params = GmmParams(np.array([[0.0, 0.0], [4.0, 0.0]]), Homogeneous(np.diag([4.0, 1.0])))
    assert snr_homogeneous(params) == pytest.approx(2.0)


def test_snr_delta_sandwich():
    params = make_sim1(seed=4)
    lower, upper = snr_delta_bounds(params)
    value = snr_homogeneous(params)
    assert lower <= value <= upper


def test_boundary_equal_covariances(rng):
    sigma = random_spd(rng, 3)
    params = GmmParams(np.array([[0.0, 0.0, 0.0], [1.0, 2.0, -1.0]]), Heterogeneous((sigma, sigma)))
    qb = boundary(params, 0, 1)
    np.testing.assert_allclose(qb.a_mat, 0.0, atol=1e-10)


def test_boundary_identity_is_halfspace():
    xi = np.array([3.0, -1.0])
    params = GmmParams(np.vstack([xi, np.zeros(2)]), Heterogeneous((np.eye(2), np.eye(2))))
    qb = boundary(params, 0, 1)
    np.testing.assert_allclose(qb.b_vec, xi)
    assert qb.c == pytest.approx(0.5 * float(xi @ xi))


def test_boundary_one_dimensional_scale_gap():
    params = GmmParams(np.zeros((2, 1)), Heterogeneous((np.array([[4.0]]), np.array([[1.0]]))))
    qb = boundary(params, 0, 1)
    assert qb.a_mat[0, 0] == pytest.approx(3.0)
    assert qb.b_vec[0] == 0.0
    assert qb.c == pytest.approx(-0.5 * math.log(4.0))


def test_min_norm_equal_covariances_matches_snr(rng):
    for _ in range(20):
        d = int(rng.integers(1, 5))
        sigma = random_spd(rng, d)
        centers = rng.standard_normal((2, d)) * 4.0
        params = GmmParams(centers, Heterogeneous((sigma, sigma)))
        _, value = min_norm_on_boundary(boundary(params, 0, 1))
        assert 2.0 * value == pytest.approx(snr_homogeneous(GmmParams(centers, Homogeneous(sigma))), rel=1e-8)


def test_min_norm_large_isotropic_scales():
    gap = np.array([30.0, 0.0, 0.0])
    params = GmmParams(np.vstack([np.zeros(3), gap]), Heterogeneous((100.0 * np.eye(3), 100.0 * np.eye(3))))
    _, value = min_norm_on_boundary(boundary(params, 0, 1))
    assert 2.0 * value == pytest.approx(2.0 * 30.0 / 20.0, rel=0.05)

    params = GmmParams(np.vstack([np.zeros(2), [30.0, 0.0]]), Heterogeneous((100.0 * np.eye(2), 64.0 * np.eye(2))))
    for a, b in ((0, 1), (1, 0)):
        qb = boundary(params, a, b)
        _, value = min_norm_on_boundary(qb)
        assert value == pytest.approx(grid_oracle(qb, 10.0, 201), rel=1e-3)


def test_min_norm_point_is_feasible_and_minimal(rng):
    for _ in range(10):
        d = int(rng.integers(2, 4))
        qb = nonempty_boundary(rng, d)
        x_star, value = min_norm_on_boundary(qb)
        assert float(qb.g(x_star)) <= 1e-10 * max(1.0, abs(qb.c))
        assert np.linalg.norm(x_star) == pytest.approx(value)
        points = rng.standard_normal((10_000, d)) * (value * 3.0 + 1.0)
        feasible = points[qb.contains(points)]
        if feasible.size:
            assert value <= np.min(np.linalg.norm(feasible, axis=1)) + 1e-12


def test_min_norm_zero_when_origin_is_inside():
    qb = QuadraticBoundary(np.diag([1.0, -1.0]), np.array([1.0, 0.0]), -0.1)
    x_star, value = min_norm_on_boundary(qb)
    assert value == 0.0
    np.testing.assert_array_equal(x_star, np.zeros(2))


def test_min_norm_empty_region():
    qb = QuadraticBoundary(np.eye(2), np.array([1.0, 0.0]), 2.0)
    with pytest.raises(EmptyRegion):
        min_norm_on_boundary(qb)


def test_min_norm_hard_case_with_zero_linear_term():
    # b = 0 and a single negative direction: the minimizer lies on that eigenvector
    qb = QuadraticBoundary(np.diag([2.0, -0.5]), np.zeros(2), 1.0)
    x_star, value = min_norm_on_boundary(qb)
    assert value == pytest.approx(2.0)
    assert abs(x_star[0]) < 1e-12


def test_min_norm_rotation_equivariance(rng):
    for _ in range(10):
        qb = nonempty_boundary(rng, 3)
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        rotated = QuadraticBoundary(Q @ qb.a_mat @ Q.T, Q @ qb.b_vec, qb.c)
        assert min_norm_on_boundary(rotated)[1] == pytest.approx(min_norm_on_boundary(qb)[1], rel=1e-9)


def test_solver_agrees_with_grid_oracle():
    rng = np.random.default_rng(77)
    for _ in range(40):
        d = int(rng.integers(2, 4))
        qb = boundary(random_instance(rng, d), 0, 1)
        try:
            _, value = min_norm_on_boundary(qb)
        except EmptyRegion:
            assert grid_oracle(qb, 30.0, 61, polish=False) == math.inf
            continue
        oracle = grid_oracle(qb, max(2.0 * value, 1.0), 121)
        assert abs(value - oracle) <= 1e-3 * oracle + 1e-12


def test_grid_oracle_halfspace():
    b = np.array([3.0, 4.0])
    qb = QuadraticBoundary(np.zeros((2, 2)), b, 10.0)
    resolution = 401
    spacing = 2.0 * 5.0 / (resolution - 1)
    assert grid_oracle(qb, 5.0, resolution, polish=False) == pytest.approx(2.0, abs=2.0 * spacing)


def test_grid_oracle_upper_bound_and_infeasible_box(rng):
    qb = nonempty_boundary(rng, 2)
    _, value = min_norm_on_boundary(qb)
    spacing = 2.0 * 25.0 / 300
    assert grid_oracle(qb, 25.0, 301, polish=False) >= value - 2.0 * spacing

    far = QuadraticBoundary(np.zeros((2, 2)), np.array([1.0, 0.0]), 50.0)
    assert grid_oracle(far, 5.0, 51) == math.inf
    with pytest.raises(InvalidInput):
        grid_oracle(QuadraticBoundary(np.zeros((4, 4)), np.ones(4), 1.0), 1.0, 5)


def test_snr_hetero_reduces_to_homogeneous():
    params = make_sim1(seed=5, d=8, k=4)
    report = snr_hetero(as_heterogeneous(params))
    assert report.snr is None
    assert report.snr_prime == pytest.approx(snr_homogeneous(params), rel=1e-8)
    assert snr_hetero(params).snr_prime == pytest.approx(snr_homogeneous(params), rel=1e-12)


def test_snr_hetero_sim2_within_bounds():
    params = make_sim2(seed=6)
    report = snr_hetero(params)
    assert math.isfinite(report.snr_prime)
    for a in range(3):
        for b in range(3):
            if a != b:
                lower, upper = snr_prime_bounds(params, a, b)
                assert lower <= report.snr_pairs[a, b] <= upper
    assert report.to_dict()["snr_pairs"][0][0] is None


def test_bounds_sandwich_random_instances():
    rng = np.random.default_rng(9)
    for _ in range(100):
        params = random_instance(rng, int(rng.integers(2, 5)), k=3)
        report = snr_hetero(params)
        for a in range(3):
            for b in range(3):
                if a != b and math.isfinite(report.snr_pairs[a, b]):
                    lower, upper = snr_prime_bounds(params, a, b)
                    assert lower <= report.snr_pairs[a, b] <= upper


@pytest.mark.parametrize("sigma", [0.1, 1.0, 13.0])
def test_scale_invariance(sigma, three_cluster_hetero):
    homog = make_sim1(seed=8, d=10, k=5)
    assert snr_homogeneous(rescale(homog, sigma)) == pytest.approx(snr_homogeneous(homog), rel=1e-9)
    base = snr_hetero(three_cluster_hetero).snr_prime
    assert snr_hetero(rescale(three_cluster_hetero, sigma)).snr_prime == pytest.approx(base, rel=1e-9)


@pytest.mark.slow
def test_solver_agrees_with_refined_grid_on_many_instances():
    rng = np.random.default_rng(2025)
    checked = 0
    while checked < 200:
        d = int(rng.integers(2, 4))
        qb = boundary(random_instance(rng, d), 0, 1)
        try:
            _, value = min_norm_on_boundary(qb)
        except EmptyRegion:
            continue
        oracle = grid_oracle(qb, max(2.0 * value, 1.0), 400 if d == 2 else 150)
        assert abs(2.0 * value - 2.0 * oracle) <= 1e-3 * (2.0 * oracle)
        checked += 1


def test_min_norm_with_small_negative_eigenvalue():
    # the root sits close to mu = 0, far below the first pole at mu = 100
    qb = QuadraticBoundary(np.diag([-0.01, 0.0]), np.array([0.0, 2.0]), 1.0)
    x_star, value = min_norm_on_boundary(qb)
    assert value == pytest.approx(0.5, rel=1e-9)
    np.testing.assert_allclose(x_star, [0.0, -0.5], atol=1e-9)
    assert abs(value - grid_oracle(qb, 2.0, 201)) <= 1e-3 * value


def test_snr_hetero_with_nearly_equal_covariances():
    params = GmmParams(np.array([[0.0, 0.0], [3.0, 0.0]]), Heterogeneous((np.diag([0.99, 1.0]), np.eye(2))))
    report = snr_hetero(params)
    for a, b in ((0, 1), (1, 0)):
        qb = boundary(params, a, b)
        oracle = grid_oracle(qb, 4.0, 201)
        assert abs(report.snr_pairs[a, b] - 2.0 * oracle) <= 1e-3 * (2.0 * oracle)
    assert report.snr_prime == pytest.approx(3.0, rel=0.01)


def near_equal_boundary(rng, d):
    """Boundaries whose quadratic part is small and, for half of them, of mixed sign."""
    kind = rng.integers(3)
    if kind == 2:
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        signs = rng.permutation(np.r_[-1.0, 1.0, rng.choice([-1.0, 1.0], d - 2)])
        a_mat = Q @ np.diag(signs * rng.uniform(1e-3, 0.05, d)) @ Q.T
        return QuadraticBoundary((a_mat + a_mat.T) / 2.0, rng.standard_normal(d) * 3.0, rng.uniform(0.5, 5.0))
    centers = np.zeros((2, d))
    direction = rng.standard_normal(d)
    centers[1] = rng.uniform(2.0, 20.0) * direction / np.linalg.norm(direction)
    sigma0 = random_spd(rng, d)
    if kind == 0:
        sigma1 = rng.uniform(0.9, 1.1) * sigma0
    else:
        E = rng.standard_normal((d, d)) * 0.02
        sigma1 = sigma0 + (E + E.T)
    return boundary(GmmParams(centers, Heterogeneous((sigma0, sigma1))), 0, 1)


def test_solver_agrees_with_grid_oracle_for_nearly_equal_covariances():
    rng = np.random.default_rng(1203)
    for _ in range(40):
        d = int(rng.integers(2, 4))
        qb = near_equal_boundary(rng, d)
        try:
            _, value = min_norm_on_boundary(qb)
        except EmptyRegion:
            assert grid_oracle(qb, 30.0, 61, polish=False) == math.inf
            continue
        oracle = grid_oracle(qb, max(2.0 * value, 1.0), 121)
        assert abs(value - oracle) <= 1e-3 * oracle + 1e-12
