"""Dilation group families, their elements, Haar data, and the affine group law.

Three families are supported:

- similitude  H = ℝ⁺·SO(d), with H = ℝ∖{0} for d = 1
- diagonal    H = invertible diagonal matrices
- shearlet    H_c = {[[a, b], [0, a^c]] : a ≠ 0}, d = 2, with a^c = sign(a)|a|^c

Element parameters:

- similitude d=1: (r,) with r ≠ 0
- similitude d=2: (r, θ) with r > 0, θ ∈ (-π, π]
- similitude d=3: (r, w, x, y, z) with r > 0 and a canonical unit quaternion
- diagonal:       (a₁, ..., a_d), all nonzero
- shearlet:       (a, b), a ≠ 0
"""

import json
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np

from dilframe import rotations
from dilframe.errors import DimensionError, DomainError


class Family(StrEnum):
    SIMILITUDE = "similitude"
    DIAGONAL = "diagonal"
    SHEARLET = "shearlet"


# Largest dimension for which similitude rotations are parameterized
MAX_ROTATION_DIM = 3


@dataclass(frozen=True)
class DilationGroupSpec:
    """A dilation group family together with its dimension (and shear anisotropy c)."""

    family: Family
    dim: int
    # Shear anisotropy c; only meaningful for the shearlet family
    c: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if self.dim < 1:
            raise DimensionError(f"dimension must be positive, got {self.dim}")
        if self.family is Family.SHEARLET and self.dim != 2:
            raise DimensionError(f"shearlet groups require dim = 2, got {self.dim}")

    @property
    def supports_elements(self) -> bool:
        """Whether concrete elements can be built (rotations exist for d ≤ 3)."""
        return self.family is not Family.SIMILITUDE or self.dim <= MAX_ROTATION_DIM

    def to_json(self) -> dict[str, Any]:
        data: dict[str, Any] = {"family": self.family.value, "dim": self.dim}
        if self.family is Family.SHEARLET:
            data["c"] = self.c
        return data

    @classmethod
    def from_json(cls, data: str | dict[str, Any]) -> "DilationGroupSpec":
        """Parse a group descriptor such as {"family": "shearlet", "dim": 2, "c": 0.5}."""
        if isinstance(data, str):
            data = json.loads(data)
        assert isinstance(data, dict)
        try:
            family = Family(str(data["family"]).lower())
        except (KeyError, ValueError) as e:
            raise DomainError(f"invalid group descriptor {data!r}") from e
        dim = int(data.get("dim", 2 if family is Family.SHEARLET else 1))
        return cls(family=family, dim=dim, c=float(data.get("c", 0.0)))

    def identity(self) -> "GroupElement":
        if self.family is Family.SIMILITUDE:
            if self.dim == 1:
                return GroupElement(self, (1.0,))
            if self.dim == 2:
                return GroupElement(self, (1.0, 0.0))
            return GroupElement(self, (1.0, 1.0, 0.0, 0.0, 0.0))
        if self.family is Family.DIAGONAL:
            return GroupElement(self, (1.0,) * self.dim)
        return GroupElement(self, (1.0, 0.0))

    def element(self, params: Any) -> "GroupElement":
        return GroupElement(self, tuple(float(p) for p in params))


def signed_power(a: float, c: float) -> float:
    """The shearlet convention a^c = sign(a)|a|^c."""
    return math.copysign(abs(a) ** c, a)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """
    A dilation h with matrix, determinant, operator norm and modular function
    values computed eagerly at construction.
    """

    spec: DilationGroupSpec
    params: tuple[float, ...]
    matrix: np.ndarray = field(init=False, repr=False)
    det: float = field(init=False, repr=False)
    opnorm: float = field(init=False, repr=False)
    modular_H: float = field(init=False, repr=False)
    modular_G: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        params = _canonical_params(self.spec, tuple(float(p) for p in self.params))
        matrix = _build_matrix(self.spec, params)
        det = float(np.linalg.det(matrix)) if self.spec.dim > 1 else float(matrix[0, 0])
        if self.spec.family is Family.SHEARLET:
            a = params[0]
            det = a * signed_power(a, self.spec.c)
            modular_h = abs(a) ** (self.spec.c - 1.0)
        else:
            modular_h = 1.0
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "det", det)
        object.__setattr__(self, "opnorm", _operator_norm(self.spec, params, matrix))
        object.__setattr__(self, "modular_H", modular_h)
        object.__setattr__(self, "modular_G", modular_h / abs(det))

    @property
    def scale(self) -> float:
        """|det h|^{1/d}, the isotropic scale (equals r for similitudes)."""
        return float(abs(self.det) ** (1.0 / self.spec.dim))

    def to_json(self) -> dict[str, Any]:
        return {"params": list(self.params)}

    def __repr__(self) -> str:
        return f"GroupElement({self.spec.family.value}, params={self.params})"


def _canonical_params(spec: DilationGroupSpec, params: tuple[float, ...]) -> tuple[float, ...]:
    """Validate parameters and bring them to the canonical chart."""
    d = spec.dim
    if spec.family is Family.SIMILITUDE:
        if d > MAX_ROTATION_DIM:
            raise DimensionError(f"similitude elements are only parameterized for d ≤ 3, got {d}")
        expected = {1: 1, 2: 2, 3: 5}[d]
        if len(params) != expected:
            raise DimensionError(f"similitude d={d} expects {expected} parameters")
        r = params[0]
        if r == 0 or (d > 1 and r < 0):
            raise DomainError(f"similitude scale must be {'nonzero' if d == 1 else 'positive'}")
        if d == 2:
            return (r, rotations.wrap_angle(params[1]))
        if d == 3:
            q = rotations.canonical_quaternion(np.array(params[1:]))
            return (r, *(float(v) for v in q))
        return params
    if spec.family is Family.DIAGONAL:
        if len(params) != d:
            raise DimensionError(f"diagonal d={d} expects {d} parameters")
        if any(a == 0 for a in params):
            raise DomainError("diagonal entries must be nonzero")
        return params
    if len(params) != 2:
        raise DimensionError("shearlet elements expect parameters (a, b)")
    if params[0] == 0:
        raise DomainError("shearlet scale a must be nonzero")
    return params


def _build_matrix(spec: DilationGroupSpec, params: tuple[float, ...]) -> np.ndarray:
    if spec.family is Family.SIMILITUDE:
        r = params[0]
        if spec.dim == 1:
            return np.array([[r]])
        if spec.dim == 2:
            return r * rotations.rotation_matrix_2d(params[1])
        return r * rotations.quaternion_to_matrix(np.array(params[1:]))
    if spec.family is Family.DIAGONAL:
        return np.diag(params)
    a, b = params
    return np.array([[a, b], [0.0, signed_power(a, spec.c)]])


def _operator_norm(spec: DilationGroupSpec, params: tuple[float, ...], matrix: np.ndarray) -> float:
    """Largest singular value, via closed forms per family."""
    if spec.family is Family.SIMILITUDE:
        return abs(params[0])
    if spec.family is Family.DIAGONAL:
        return max(abs(a) for a in params)
    # 2x2: σ_max² = (T + sqrt(T² - 4D²)) / 2 with T = ‖M‖_F², D = det M
    frob2 = float(np.sum(matrix * matrix))
    det = float(matrix[0, 0] * matrix[1, 1])
    disc = max(frob2 * frob2 - 4.0 * det * det, 0.0)
    return math.sqrt((frob2 + math.sqrt(disc)) / 2.0)


def _check_same(spec1: DilationGroupSpec, spec2: DilationGroupSpec) -> None:
    if spec1 != spec2:
        raise DimensionError(f"group spec mismatch: {spec1} vs {spec2}")


def multiply(h1: GroupElement, h2: GroupElement) -> GroupElement:
    """Group product h₁h₂ computed in parameters (never by matrix re-fitting)."""
    _check_same(h1.spec, h2.spec)
    spec = h1.spec
    p1, p2 = h1.params, h2.params
    if spec.family is Family.SIMILITUDE:
        if spec.dim == 1:
            return GroupElement(spec, (p1[0] * p2[0],))
        if spec.dim == 2:
            return GroupElement(spec, (p1[0] * p2[0], p1[1] + p2[1]))
        q = rotations.quaternion_multiply(np.array(p1[1:]), np.array(p2[1:]))
        return GroupElement(spec, (p1[0] * p2[0], *q))
    if spec.family is Family.DIAGONAL:
        return GroupElement(spec, tuple(a * b for a, b in zip(p1, p2, strict=True)))
    a1, b1 = p1
    a2, b2 = p2
    return GroupElement(spec, (a1 * a2, a1 * b2 + b1 * signed_power(a2, spec.c)))


def inverse(h: GroupElement) -> GroupElement:
    """Group inverse from parameters."""
    spec, p = h.spec, h.params
    if spec.family is Family.SIMILITUDE:
        if spec.dim == 1:
            return GroupElement(spec, (1.0 / p[0],))
        if spec.dim == 2:
            return GroupElement(spec, (1.0 / p[0], -p[1]))
        q = rotations.quaternion_conjugate(np.array(p[1:]))
        return GroupElement(spec, (1.0 / p[0], *q))
    if spec.family is Family.DIAGONAL:
        return GroupElement(spec, tuple(1.0 / a for a in p))
    a, b = p
    # [[a, b], [0, a^c]]⁻¹ = [[1/a, -b/(a·a^c)], [0, 1/a^c]]
    return GroupElement(spec, (1.0 / a, -b / (a * signed_power(a, spec.c))))


def haar_density(h: GroupElement) -> float:
    """
    Left-Haar density relative to Lebesgue measure in the family's natural
    coordinates: 1/|r| in (r, S), ∏1/|aᵢ| for diagonal, 1/a² in (a, b).
    """
    spec, p = h.spec, h.params
    if spec.family is Family.SIMILITUDE:
        return 1.0 / abs(p[0])
    if spec.family is Family.DIAGONAL:
        return float(np.prod([1.0 / abs(a) for a in p]))
    return 1.0 / (p[0] * p[0])


def dual_action(h: GroupElement, xi: Any) -> np.ndarray:
    """hᵀξ for a single vector or a stack of vectors along the last axis."""
    arr = np.asarray(xi, dtype=float)
    if arr.shape[-1:] != (h.spec.dim,):
        raise DimensionError(f"expected vectors of length {h.spec.dim}, got shape {arr.shape}")
    # (hᵀξ)_j = Σᵢ h_ij ξᵢ
    return arr @ h.matrix


def random_element(
    spec: DilationGroupSpec,
    rng: np.random.Generator,
    log_scale: float = 2.0,
    shear: float = 3.0,
) -> GroupElement:
    """Random element with log-scales uniform in ±log_scale (and |b| ≤ shear)."""
    d = spec.dim
    if spec.family is Family.SIMILITUDE:
        r = math.exp(rng.uniform(-log_scale, log_scale))
        if d == 1:
            return GroupElement(spec, (r * rng.choice([-1.0, 1.0]),))
        if d == 2:
            return GroupElement(spec, (r, rng.uniform(-math.pi, math.pi)))
        q = rotations.random_quaternions(1, rng)[0]
        return GroupElement(spec, (r, *q))
    if spec.family is Family.DIAGONAL:
        signs = rng.choice([-1.0, 1.0], size=d)
        logs = rng.uniform(-log_scale, log_scale, size=d)
        return GroupElement(spec, tuple(signs * np.exp(logs)))
    a = math.exp(rng.uniform(-log_scale, log_scale)) * rng.choice([-1.0, 1.0])
    return GroupElement(spec, (a, rng.uniform(-shear, shear)))


@dataclass(frozen=True, eq=False)
class AffinePoint:
    """An element (x, h) of G = ℝ^d ⋊ H."""

    x: np.ndarray
    h: GroupElement

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if x.shape != (self.h.spec.dim,):
            raise DimensionError(f"translation must have length {self.h.spec.dim}")
        object.__setattr__(self, "x", x)

    @property
    def modular_G(self) -> float:
        return self.h.modular_G

    def to_json(self) -> dict[str, Any]:
        return {"x": self.x.tolist(), "params": list(self.h.params)}

    @classmethod
    def from_json(cls, spec: DilationGroupSpec, data: dict[str, Any]) -> "AffinePoint":
        return cls(np.asarray(data["x"], dtype=float), spec.element(data["params"]))


def compose(g1: AffinePoint, g2: AffinePoint) -> AffinePoint:
    """(x, h)(y, g) = (x + hy, hg)."""
    _check_same(g1.h.spec, g2.h.spec)
    return AffinePoint(g1.x + g1.h.matrix @ g2.x, multiply(g1.h, g2.h))


def invert(g: AffinePoint) -> AffinePoint:
    """(x, h)⁻¹ = (-h⁻¹x, h⁻¹)."""
    h_inv = inverse(g.h)
    return AffinePoint(-(h_inv.matrix @ g.x), h_inv)


def identity_point(spec: DilationGroupSpec) -> AffinePoint:
    return AffinePoint(np.zeros(spec.dim), spec.identity())
