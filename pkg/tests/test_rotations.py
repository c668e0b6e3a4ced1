"""Tests for SO(2)/SO(3) charts, grids and covering radii."""

import math

import numpy as np
import pytest

from dilframe import rotations


def test_wrap_angle_range() -> None:
    """Angles are wrapped into (-π, π]."""
    assert rotations.wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert rotations.wrap_angle(3.0 * math.pi) == pytest.approx(math.pi)
    assert rotations.wrap_angle(0.5) == pytest.approx(0.5)


def test_so2_grid_covering_radius() -> None:
    """n uniform angles cover SO(2) with radius π/n."""
    angles = rotations.so2_grid(8)
    assert rotations.so2_covering_radius(angles) == pytest.approx(math.pi / 8)
    assert rotations.angle_distance(angles[0], angles[1]) == pytest.approx(math.pi / 4)


def test_quaternion_matrix_is_homomorphism(rng: np.random.Generator) -> None:
    """R(q₁q₂) = R(q₁)R(q₂) and conjugation inverts."""
    q1, q2 = rotations.random_quaternions(2, rng)
    product = rotations.quaternion_multiply(q1, q2)
    np.testing.assert_allclose(
        rotations.quaternion_to_matrix(product),
        rotations.quaternion_to_matrix(q1) @ rotations.quaternion_to_matrix(q2),
        atol=1e-12,
    )
    ident = rotations.quaternion_multiply(q1, rotations.quaternion_conjugate(q1))
    np.testing.assert_allclose(ident, [1.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_quaternion_distance_is_rotation_angle() -> None:
    """The geodesic distance equals the rotation angle between two rotations."""
    ident = np.array([1.0, 0.0, 0.0, 0.0])
    angle = 0.7
    q = np.array([math.cos(angle / 2), 0.0, 0.0, math.sin(angle / 2)])
    assert rotations.quaternion_distance(ident, q) == pytest.approx(angle)
    assert rotations.quaternion_distance(q, -q) == pytest.approx(0.0, abs=1e-7)


def test_super_fibonacci_is_canonical_and_deterministic() -> None:
    """The spiral returns unit quaternions with w ≥ 0, identical across calls."""
    a = rotations.so3_super_fibonacci(64)
    b = rotations.so3_super_fibonacci(64)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0)
    assert np.all(a[:, 0] >= 0)


def test_so3_covering_radius_shrinks(rng: np.random.Generator) -> None:
    """Denser spirals have smaller estimated covering radii."""
    coarse = rotations.so3_covering_radius(rotations.so3_super_fibonacci(16), rng, 4000)
    fine = rotations.so3_covering_radius(rotations.so3_super_fibonacci(512), rng, 4000)
    assert 0.0 < fine < coarse <= math.pi
