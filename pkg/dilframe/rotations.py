"""SO(2) / SO(3) parameterizations, rotation grids and covering radii.

SO(2) is charted by angles in (-π, π]; SO(3) by unit quaternions (w, x, y, z)
with the sign fixed so that w ≥ 0.
"""

import math

import numpy as np

from dilframe.errors import DimensionError

# Irrational winding constants of the super-Fibonacci spiral
_SF_PHI = math.sqrt(2.0)
_SF_PSI = 1.533751168755204288118041


def wrap_angle(theta: float) -> float:
    """Map an angle to (-π, π]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


def rotation_matrix_2d(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def canonical_quaternion(q: np.ndarray) -> np.ndarray:
    """Normalize q and fix the double-cover sign (w ≥ 0)."""
    q = np.asarray(q, dtype=float)
    norm = float(np.linalg.norm(q))
    if q.shape != (4,) or norm == 0.0:
        raise DimensionError(f"expected a nonzero 4-vector quaternion, got shape {q.shape}")
    q = q / norm
    if q[0] < 0:
        q = -q
    return q


def quaternion_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quaternion_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quaternion_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quaternion_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Axis-angle vector (angle in [0, π]) of a canonical unit quaternion."""
    q = canonical_quaternion(q)
    vec = q[1:]
    sin_half = float(np.linalg.norm(vec))
    if sin_half < 1e-15:
        return 2.0 * vec
    angle = 2.0 * math.atan2(sin_half, q[0])
    return vec / sin_half * angle


def angle_distance(theta1: float, theta2: float) -> float:
    """Geodesic distance on SO(2)."""
    return abs(wrap_angle(theta1 - theta2))


def quaternion_distance(q1: np.ndarray, q2: np.ndarray) -> float:
    """Geodesic distance on SO(3): rotation angle of q1⁻¹q2, in [0, π]."""
    dot = min(1.0, abs(float(np.dot(q1, q2))))
    return 2.0 * math.acos(dot)


def so2_grid(n: int) -> np.ndarray:
    """n uniformly spaced angles; covering radius π/n."""
    if n < 1:
        raise DimensionError("SO(2) grid needs at least one angle")
    return np.array([wrap_angle(2.0 * math.pi * k / n) for k in range(n)])


def so2_covering_radius(angles: np.ndarray) -> float:
    """Exact covering radius of a finite angle set: half the largest circular gap."""
    ordered = np.sort(np.mod(np.asarray(angles, dtype=float), 2.0 * math.pi))
    gaps = np.diff(np.concatenate([ordered, [ordered[0] + 2.0 * math.pi]]))
    return float(gaps.max()) / 2.0


def so3_super_fibonacci(n: int) -> np.ndarray:
    """
    Deterministic super-Fibonacci spiral of n unit quaternions.

    Returns:
        (n, 4) array of canonical quaternions, roughly uniform under Haar measure.
    """
    if n < 1:
        raise DimensionError("SO(3) grid needs at least one rotation")
    s = np.arange(n) + 0.5
    r = np.sqrt(s / n)
    big_r = np.sqrt(1.0 - s / n)
    alpha = 2.0 * np.pi * s / _SF_PHI
    beta = 2.0 * np.pi * s / _SF_PSI
    quats = np.stack(
        [r * np.sin(alpha), r * np.cos(alpha), big_r * np.sin(beta), big_r * np.cos(beta)],
        axis=1,
    )
    return np.array([canonical_quaternion(q) for q in quats])


def random_quaternions(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform random unit quaternions (normalized Gaussian 4-vectors)."""
    quats = rng.standard_normal((n, 4))
    quats /= np.linalg.norm(quats, axis=1, keepdims=True)
    quats[quats[:, 0] < 0] *= -1.0
    return quats


def so3_covering_radius(
    quaternions: np.ndarray, rng: np.random.Generator, n_test: int = 20000
) -> float:
    """
    Monte-Carlo estimate of the covering radius of a quaternion set.

    The estimate is the largest geodesic distance from a Haar-random test rotation
    to its nearest grid rotation; it is a lower bound on the true radius that
    tightens as n_test grows.
    """
    grid = np.asarray(quaternions, dtype=float)
    tests = random_quaternions(n_test, rng)
    # |<q, p>| is monotone in the geodesic distance, so the nearest point maximizes it
    best = np.zeros(n_test)
    for start in range(0, grid.shape[0], 512):
        dots = np.abs(tests @ grid[start : start + 512].T)
        best = np.maximum(best, dots.max(axis=1))
    return float(2.0 * np.arccos(np.clip(best.min(), -1.0, 1.0)))


def so3_grid_with_radius(
    target_radius: float, rng: np.random.Generator, max_points: int = 200000
) -> tuple[np.ndarray, float]:
    """
    Smallest doubling of the super-Fibonacci spiral whose estimated covering radius
    is below target_radius.

    Returns:
        (quaternions, estimated covering radius)
    """
    n = 8
    while True:
        quats = so3_super_fibonacci(n)
        radius = so3_covering_radius(quats, rng)
        if radius <= target_radius or n >= max_points:
            return quats, radius
        n *= 2
