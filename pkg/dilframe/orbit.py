"""Dual-orbit geometry: the open orbit 𝒪, distance to its complement, and the envelope A(ξ)."""

from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np

from dilframe.errors import DimensionError, DomainError
from dilframe.groups import DilationGroupSpec, Family


class Complement(StrEnum):
    ORIGIN = "origin"
    COORDINATE_HYPERPLANES = "coordinate_hyperplanes"
    AXIS_XI1_ZERO = "axis_xi1_zero"


_COMPLEMENTS = {
    Family.SIMILITUDE: Complement.ORIGIN,
    Family.DIAGONAL: Complement.COORDINATE_HYPERPLANES,
    Family.SHEARLET: Complement.AXIS_XI1_ZERO,
}


@dataclass(frozen=True)
class OrbitGeometry:
    spec: DilationGroupSpec

    @property
    def complement_description(self) -> Complement:
        return _COMPLEMENTS[self.spec.family]

    @classmethod
    def for_spec(cls, spec: DilationGroupSpec) -> "OrbitGeometry":
        return cls(spec)


def _as_vectors(geom: OrbitGeometry, xi: Any) -> np.ndarray:
    arr = np.asarray(xi, dtype=float)
    d = geom.spec.dim
    if d == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., np.newaxis]
    if arr.shape[-1] != d:
        raise DimensionError(f"expected vectors of length {d}, got shape {arr.shape}")
    return arr


def _unwrap(values: np.ndarray) -> Any:
    return float(values) if values.ndim == 0 else values


def dist_complement(geom: OrbitGeometry, xi: Any) -> Any:
    """Exact distance of ξ to 𝒪ᶜ (vectorized over leading axes)."""
    arr = _as_vectors(geom, xi)
    complement = geom.complement_description
    if complement is Complement.ORIGIN:
        out = np.linalg.norm(arr, axis=-1)
    elif complement is Complement.COORDINATE_HYPERPLANES:
        out = np.min(np.abs(arr), axis=-1)
    else:
        out = np.abs(arr[..., 0])
    return _unwrap(np.asarray(out))


def in_orbit(geom: OrbitGeometry, xi: Any) -> Any:
    return np.asarray(dist_complement(geom, xi)) > 0


def envelope_A(geom: OrbitGeometry, xi: Any) -> Any:
    """
    A(ξ) = min( dist(ξ,𝒪ᶜ) / (1 + √(|ξ|² − dist²)), 1/(1+|ξ|) ).

    Raises DomainError for ξ ∈ 𝒪ᶜ. Values close to 𝒪ᶜ are returned exactly, never clamped.
    """
    arr = _as_vectors(geom, xi)
    dist = np.asarray(dist_complement(geom, arr))
    if np.any(dist <= 0):
        raise DomainError("A(ξ) is only defined on the open orbit; ξ lies in its complement")
    norm2 = np.sum(arr * arr, axis=-1)
    norm = np.sqrt(norm2)
    # |ξ|² − dist² can round slightly below zero for the similitude family
    transverse = np.sqrt(np.maximum(norm2 - dist * dist, 0.0))
    out = np.minimum(dist / (1.0 + transverse), 1.0 / (1.0 + norm))
    return _unwrap(np.asarray(out))


def envelope_A_closed_form(geom: OrbitGeometry, xi: Any) -> Any:
    """Per-family closed forms of A; agree with envelope_A on 𝒪."""
    arr = _as_vectors(geom, xi)
    norm = np.linalg.norm(arr, axis=-1)
    decay = 1.0 / (1.0 + norm)
    family = geom.spec.family
    if family is Family.SIMILITUDE:
        near = norm
    elif family is Family.DIAGONAL:
        m = np.min(np.abs(arr), axis=-1)
        near = m / (1.0 + np.sqrt(np.maximum(norm * norm - m * m, 0.0)))
    else:
        near = np.abs(arr[..., 0]) / (1.0 + np.abs(arr[..., 1]))
    if np.any(near <= 0):
        raise DomainError("A(ξ) is only defined on the open orbit; ξ lies in its complement")
    return _unwrap(np.asarray(np.minimum(near, decay)))
