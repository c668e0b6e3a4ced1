"""
Discrete sampling sets Z ⊂ G = ℝ^d ⋊ H and their separation / density certificates.

Neighborhoods U = V × W of the identity are a Euclidean ball V of translations and a
box W in chart coordinates of H around the identity component:

- similitude d=1: log|r|              (sign must match)
- similitude d=2: (log r, θ)
- similitude d=3: (log r, rotation angle)
- diagonal:       (log|a₁|, ..., log|a_d|)   (signs must match)
- shearlet:       (log|a|, b)                (sign of a must match)

zU is "z⁻¹g ∈ U"; all tests below work on the chart coordinates of h_z⁻¹h_g and the
translation part h_z⁻¹(x_g - x_z), vectorized over the points of Z.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, NamedTuple

import numpy as np

from dilframe import rotations
from dilframe.errors import DimensionError, DomainError, EmptySetError
from dilframe.groups import (
    AffinePoint,
    DilationGroupSpec,
    Family,
    GroupElement,
    inverse,
)
from dilframe.sampled import GridSpec

logger = logging.getLogger("dilframe.sampling")

# Relative slack on boundary comparisons; open neighborhoods that merely touch are disjoint
_SLACK = 1e-12


def chart_dim(spec: DilationGroupSpec) -> int:
    if spec.family is Family.SIMILITUDE:
        return 1 if spec.dim == 1 else 2
    if spec.family is Family.DIAGONAL:
        return spec.dim
    return 2


@dataclass(frozen=True)
class Neighborhood:
    """U = B(0, translation_radius) × {h : |chart(h)| < h_halfwidths componentwise}."""

    translation_radius: float
    h_halfwidths: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "h_halfwidths", tuple(float(w) for w in self.h_halfwidths))
        if self.translation_radius <= 0 or any(w <= 0 for w in self.h_halfwidths):
            raise DomainError("neighborhood radii must be positive")

    def scaled(self, factor: float) -> "Neighborhood":
        return Neighborhood(
            self.translation_radius * factor, tuple(w * factor for w in self.h_halfwidths)
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "translation_radius": self.translation_radius,
            "h_halfwidths": list(self.h_halfwidths),
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Neighborhood":
        return cls(float(data["translation_radius"]), tuple(data["h_halfwidths"]))


def _check_neighborhood(spec: DilationGroupSpec, nbhd: Neighborhood) -> None:
    if len(nbhd.h_halfwidths) != chart_dim(spec):
        raise DimensionError(
            f"{spec.family} d={spec.dim} needs {chart_dim(spec)} chart halfwidths,"
            f" got {len(nbhd.h_halfwidths)}"
        )


def _product_box(spec: DilationGroupSpec, nbhd: Neighborhood) -> np.ndarray:
    """Halfwidths of a chart box containing W·W⁻¹."""
    w = np.asarray(nbhd.h_halfwidths)
    box = 2.0 * w
    if spec.family is Family.SHEARLET:
        wa, wb = w
        box[1] = wb * math.exp(abs(spec.c) * wa) * (1.0 + math.exp(2.0 * wa))
    return box


def _max_product_norm(spec: DilationGroupSpec, nbhd: Neighborhood) -> float:
    """Upper bound of ‖w w'⁻¹‖ over w, w' ∈ W."""
    w = nbhd.h_halfwidths
    if spec.family is Family.SIMILITUDE:
        return math.exp(2.0 * w[0])
    if spec.family is Family.DIAGONAL:
        return math.exp(2.0 * max(w))
    box = _product_box(spec, nbhd)
    return math.exp(2.0 * w[0] * max(1.0, abs(spec.c))) + float(box[1])


def square_neighborhood(spec: DilationGroupSpec, nbhd: Neighborhood) -> Neighborhood:
    """A neighborhood containing V·V⁻¹ (the "V²" of greedy density arguments)."""
    _check_neighborhood(spec, nbhd)
    radius = nbhd.translation_radius * (1.0 + _max_product_norm(spec, nbhd))
    return Neighborhood(radius, tuple(float(b) for b in _product_box(spec, nbhd)))


def relative_chart(
    spec: DilationGroupSpec, params_z: np.ndarray, params_g: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """
    Chart coordinates of h_z⁻¹h_g for many z against one g.

    Returns:
        (same_component, coords): boolean mask of shape (M,) and |coords| of shape (M, k)
    """
    pz = np.atleast_2d(params_z)
    pg = np.asarray(params_g, dtype=float)
    m = pz.shape[0]
    if spec.family is Family.SIMILITUDE:
        ratio = pg[0] / pz[:, 0]
        same = ratio > 0
        log_r = np.abs(np.log(np.abs(ratio)))
        if spec.dim == 1:
            return same, log_r[:, None]
        if spec.dim == 2:
            dtheta = np.abs(np.angle(np.exp(1j * (pg[1] - pz[:, 1]))))
            return same, np.column_stack([log_r, dtheta])
        dots = np.clip(np.abs(pz[:, 1:] @ pg[1:]), 0.0, 1.0)
        return same, np.column_stack([log_r, 2.0 * np.arccos(dots)])
    if spec.family is Family.DIAGONAL:
        ratio = pg[None, :] / pz
        return np.all(ratio > 0, axis=1), np.abs(np.log(np.abs(ratio)))
    c = spec.c
    a_z, b_z = pz[:, 0], pz[:, 1]
    a_g, b_g = pg
    ratio = a_g / a_z
    pow_g = math.copysign(abs(a_g) ** c, a_g)
    pow_z = np.sign(a_z) * np.abs(a_z) ** c
    b = b_g / a_z - b_z * pow_g / (a_z * pow_z)
    out = np.column_stack([np.abs(np.log(np.abs(ratio))), np.abs(b)])
    return ratio > 0, out.reshape(m, 2)


class CertificateResult(NamedTuple):
    ok: bool
    # Offending pair (i, j) for separation, uncovered test point for density
    witness: Any = None


# Points closer than this in every coordinate (x and chart parameters) count as equal
_DUPLICATE_DECIMALS = 12


def _check_distinct(points: list[AffinePoint]) -> None:
    coords = np.array([np.concatenate([p.x, p.h.params]) for p in points])
    _, first, counts = np.unique(
        np.round(coords, _DUPLICATE_DECIMALS), axis=0, return_index=True, return_counts=True
    )
    if np.any(counts > 1):
        dup = points[int(first[np.argmax(counts > 1)])]
        raise DomainError(f"sampling set repeats the point x={dup.x.tolist()}, h={dup.h!r}")


@dataclass
class SamplingSet:
    """
    Points z = (x, h) of G with their construction record and certificates.

    dilation_index numbers the distinct dilations h in order of first appearance;
    level is the construction's scale index j (equal to dilation_index when the
    construction has no separate scale ladder).
    """

    spec: DilationGroupSpec
    points: list[AffinePoint]
    construction: dict[str, Any] = field(default_factory=dict)
    level: list[int] = field(default_factory=list)
    separation_certificate: Neighborhood | None = None
    density_certificate: Neighborhood | None = None

    def __post_init__(self) -> None:
        if not self.points:
            raise EmptySetError("sampling set has no points")
        if any(p.h.spec != self.spec for p in self.points):
            raise DimensionError("all points must belong to the same group")
        if not self.level:
            self.level = list(self.dilation_index)
        if len(self.level) != len(self.points):
            raise DimensionError("one level per point is required")
        _check_distinct(self.points)

    def __len__(self) -> int:
        return len(self.points)

    @cached_property
    def dilation_index(self) -> list[int]:
        seen: dict[tuple[float, ...], int] = {}
        return [seen.setdefault(p.h.params, len(seen)) for p in self.points]

    @cached_property
    def dilations(self) -> list[GroupElement]:
        """Distinct dilations, indexed by dilation_index."""
        out: dict[int, GroupElement] = {}
        for idx, p in zip(self.dilation_index, self.points, strict=True):
            out.setdefault(idx, p.h)
        return [out[i] for i in range(len(out))]

    @cached_property
    def translations(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @cached_property
    def params(self) -> np.ndarray:
        return np.array([p.h.params for p in self.points])

    @cached_property
    def inverse_matrices(self) -> np.ndarray:
        inv = [inverse(h).matrix for h in self.dilations]
        return np.array([inv[i] for i in self.dilation_index])

    @cached_property
    def opnorms(self) -> np.ndarray:
        return np.array([p.h.opnorm for p in self.points])

    def without(self, indices: list[int]) -> "SamplingSet":
        """Drop points; separation survives, density is no longer certified."""
        drop = set(indices)
        keep = [i for i in range(len(self.points)) if i not in drop]
        if not keep:
            raise EmptySetError("removing these points leaves an empty set")
        return SamplingSet(
            self.spec,
            [self.points[i] for i in keep],
            dict(self.construction),
            [self.level[i] for i in keep],
            self.separation_certificate,
            None,
        )


def certify_separated(z_set: SamplingSet, nbhd: Neighborhood) -> CertificateResult:
    """
    Check that the translates zU, z ∈ Z, are pairwise disjoint.

    Exact for pairs with equal dilation; pairs with different dilations pass when
    their dilation boxes cannot meet or their translation balls B(x, ρ‖h‖) are apart.
    A failing pair may therefore be a false alarm, never a missed overlap.
    """
    _check_neighborhood(z_set.spec, nbhd)
    rho = nbhd.translation_radius
    box = _product_box(z_set.spec, nbhd) * (1.0 - _SLACK)
    x = z_set.translations
    for i in range(len(z_set) - 1):
        rest = slice(i + 1, None)
        same, coords = relative_chart(z_set.spec, z_set.params[rest], z_set.params[i])
        # zⱼ⁻¹zᵢ translation part
        y = np.einsum("mij,mj->mi", z_set.inverse_matrices[rest], x[i][None, :] - x[rest])
        equal_h = same & np.all(coords <= 1e-14, axis=1)
        close = np.linalg.norm(y, axis=1) < 2.0 * rho * (1.0 - _SLACK)
        boxes_meet = same & np.all(coords < box, axis=1) & ~equal_h
        gap = np.linalg.norm(x[rest] - x[i][None, :], axis=1)
        balls_meet = gap < rho * (z_set.opnorms[i] + z_set.opnorms[rest]) * (1.0 - _SLACK)
        bad = (equal_h & close) | (boxes_meet & balls_meet)
        if np.any(bad):
            j = i + 1 + int(np.flatnonzero(bad)[0])
            logger.info("Separation fails for pair (%d, %d)", i, j)
            return CertificateResult(False, (i, j))
    return CertificateResult(True)


@dataclass(frozen=True)
class Region:
    """Compact window of G: a translation box times a chart box of H (identity component)."""

    x_low: tuple[float, ...]
    x_high: tuple[float, ...]
    chart_low: tuple[float, ...]
    chart_high: tuple[float, ...]

    def to_json(self) -> dict[str, Any]:
        return {
            "x_low": list(self.x_low),
            "x_high": list(self.x_high),
            "chart_low": list(self.chart_low),
            "chart_high": list(self.chart_high),
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Region":
        return cls(
            tuple(data["x_low"]),
            tuple(data["x_high"]),
            tuple(data["chart_low"]),
            tuple(data["chart_high"]),
        )


def _region_axes(spec: DilationGroupSpec, region: Region) -> int:
    # SO(3) rotations are sampled over the whole group, not charted
    k = 1 if spec.family is Family.SIMILITUDE and spec.dim == 3 else chart_dim(spec)
    if len(region.x_low) != spec.dim or len(region.x_high) != spec.dim:
        raise DimensionError(f"region translation box must have {spec.dim} axes")
    if len(region.chart_low) != k or len(region.chart_high) != k:
        raise DimensionError(f"region chart box must have {k} axes")
    return k


def chart_params(
    spec: DilationGroupSpec, coords: np.ndarray, quats: np.ndarray | None = None
) -> np.ndarray:
    """Element parameters for rows of chart coordinates (positive component)."""
    c = np.atleast_2d(coords)
    if spec.family is Family.SIMILITUDE:
        r = np.exp(c[:, 0])
        if spec.dim == 1:
            return r[:, None]
        if spec.dim == 2:
            return np.column_stack([r, c[:, 1]])
        assert quats is not None
        return np.column_stack([r, quats])
    if spec.family is Family.DIAGONAL:
        return np.exp(c)
    return np.column_stack([np.exp(c[:, 0]), c[:, 1]])


def region_test_points(
    spec: DilationGroupSpec,
    region: Region,
    n_lattice: int,
    n_random: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Lattice (n_lattice per axis) plus n_random uniform points of the region.

    Returns:
        (translations (N, d), parameters (N, p))
    """
    k = _region_axes(spec, region)
    lo = np.concatenate([region.x_low, region.chart_low]).astype(float)
    hi = np.concatenate([region.x_high, region.chart_high]).astype(float)
    axes = [
        np.linspace(a, b, n_lattice) if b > a else np.array([a])
        for a, b in zip(lo, hi, strict=True)
    ]
    lattice = np.array(list(itertools.product(*axes))) if n_lattice > 0 else np.empty((0, lo.size))
    uniform = lo + (hi - lo) * rng.random((n_random, lo.size))
    pts = np.vstack([lattice, uniform])
    quats = None
    if spec.family is Family.SIMILITUDE and spec.dim == 3:
        n_lat = lattice.shape[0]
        quats = np.vstack(
            [
                rotations.so3_super_fibonacci(max(n_lat, 1))[:n_lat],
                rotations.random_quaternions(n_random, rng),
            ]
        )
    d = spec.dim
    return pts[:, :d], chart_params(spec, pts[:, d : d + k], quats)


def _covered_by(
    spec: DilationGroupSpec,
    nbhd: Neighborhood,
    arrays: tuple[np.ndarray, np.ndarray, np.ndarray],
    x_g: np.ndarray,
    p_g: np.ndarray,
) -> bool:
    """Whether g ∈ zU for some z given as (translations, params, inverse matrices)."""
    xs, params, invs = arrays
    if xs.shape[0] == 0:
        return False
    same, coords = relative_chart(spec, params, p_g)
    y = np.einsum("mij,mj->mi", invs, x_g[None, :] - xs)
    inside_w = same & np.all(coords < np.asarray(nbhd.h_halfwidths), axis=1)
    if not np.any(inside_w):
        return False
    return bool(np.any(np.linalg.norm(y[inside_w], axis=1) < nbhd.translation_radius))


def certify_dense(
    z_set: SamplingSet,
    nbhd: Neighborhood,
    region: Region,
    rng: np.random.Generator,
    n_lattice: int = 5,
    n_random: int = 2000,
) -> CertificateResult:
    """
    Check that ⋃ zU covers the region at a seeded lattice + Monte-Carlo sample.

    A passing result is evidence on the sample, not a proof for the whole region.
    """
    _check_neighborhood(z_set.spec, nbhd)
    xs, ps = region_test_points(z_set.spec, region, n_lattice, n_random, rng)
    arrays = (z_set.translations, z_set.params, z_set.inverse_matrices)
    for x_g, p_g in zip(xs, ps, strict=True):
        if not _covered_by(z_set.spec, nbhd, arrays, x_g, p_g):
            witness = {"x": x_g.tolist(), "params": p_g.tolist()}
            logger.info("Density fails at %s", witness)
            return CertificateResult(False, witness)
    return CertificateResult(True)


def greedy_extend(
    spec: DilationGroupSpec,
    nbhd: Neighborhood,
    region: Region,
    rng: np.random.Generator,
    seed: SamplingSet | None = None,
    n_lattice: int = 5,
    n_random: int = 2000,
) -> SamplingSet:
    """
    Greedy V-separated extension of `seed` over the region's candidate sample.

    A candidate g joins when no current z has z⁻¹g ∈ V·V⁻¹ (taken as
    square_neighborhood(V)); the result is V-separated and square_neighborhood(V)-dense
    on the candidate sample, which certify_dense reproduces from the same seed.
    """
    square = square_neighborhood(spec, nbhd)
    xs, ps = region_test_points(spec, region, n_lattice, n_random, rng)
    points = list(seed.points) if seed is not None else []
    total = len(points) + len(xs)
    acc_x = np.empty((total, spec.dim))
    acc_p = np.empty((total, ps.shape[1]))
    acc_inv = np.empty((total, spec.dim, spec.dim))
    for i, p in enumerate(points):
        acc_x[i], acc_p[i], acc_inv[i] = p.x, p.h.params, inverse(p.h).matrix
    n = len(points)
    for x_g, p_g in zip(xs, ps, strict=True):
        if _covered_by(spec, square, (acc_x[:n], acc_p[:n], acc_inv[:n]), x_g, p_g):
            continue
        h = spec.element(p_g)
        points.append(AffinePoint(x_g, h))
        acc_x[n], acc_p[n], acc_inv[n] = x_g, h.params, inverse(h).matrix
        n += 1
    if not points:
        raise EmptySetError("greedy extension found no candidates")
    logger.info("Greedy extension: %d points from %d candidates", len(points), len(xs))
    return SamplingSet(
        spec,
        points,
        {"kind": "greedy", "neighborhood": nbhd.to_json(), "region": region.to_json()},
        separation_certificate=nbhd,
        density_certificate=square,
    )


def _integer_lattice(dim: int, k_range: range) -> np.ndarray:
    return np.array(list(itertools.product(k_range, repeat=dim)), dtype=float).reshape(-1, dim)


def _window_lattice(dim: int, spacing: float, window: float) -> np.ndarray:
    """Integer vectors k with |spacing·k|∞ ≤ window."""
    reach = int(math.floor(window / spacing + 1e-9))
    return _integer_lattice(dim, range(-reach, reach + 1))


def _default_rotations(spec: DilationGroupSpec, count: int) -> list[tuple[float, ...]]:
    if spec.dim == 1:
        return [(1.0,)]
    if spec.dim == 2:
        return [(float(t),) for t in rotations.so2_grid(count)]
    return [tuple(q) for q in rotations.so3_super_fibonacci(count)]


def build_grid_thm12(
    spec: DilationGroupSpec,
    delta1: float,
    delta2: float,
    levels: range,
    rotation_params: list[tuple[float, ...]] | None = None,
    translations: range | None = None,
    window: float | None = None,
    n_rotations: int = 8,
    certify: bool = True,
) -> SamplingSet:
    """
    Z = {((1+δ₁)^{-j} h_ℓ δ₂ k, (1+δ₁)^{-j} h_ℓ)} for similitude groups.

    rotation_params are angles (d=2), unit quaternions (d=3) or signs (d=1); the
    translation indices k come from `translations` on every axis or, when `window`
    is given, from all k whose point lies in the cube [-window, window]^d.
    """
    if spec.family is not Family.SIMILITUDE:
        raise DomainError("the δ₁/δ₂ grid is defined for similitude groups")
    if delta1 <= 0 or delta2 <= 0:
        raise DomainError("δ₁ and δ₂ must be positive")
    if len(levels) == 0:
        raise EmptySetError("empty scale range")
    if translations is not None and len(translations) == 0:
        raise EmptySetError("empty translation range")
    if translations is None and window is None:
        raise DomainError("give either a translation range or a window")
    rots = rotation_params or _default_rotations(spec, n_rotations)

    points: list[AffinePoint] = []
    level: list[int] = []
    for j in levels:
        r = (1.0 + delta1) ** (-j)
        for rot in rots:
            if spec.dim == 1:
                h = spec.element([r * rot[0]])
            else:
                h = spec.element([r, *rot])
            if window is not None:
                ks = _window_lattice(spec.dim, delta2 * r, window * math.sqrt(spec.dim))
            else:
                assert translations is not None
                ks = _integer_lattice(spec.dim, translations)
            xs = (h.matrix @ (delta2 * ks).T).T
            if window is not None:
                xs = xs[np.all(np.abs(xs) <= window * (1 + 1e-12), axis=1)]
            points.extend(AffinePoint(x, h) for x in xs)
            level.extend([j] * len(xs))
    if not points:
        raise EmptySetError("no grid points inside the window")

    construction = {
        "kind": "thm12",
        "delta1": delta1,
        "delta2": delta2,
        "levels": [levels.start, levels.stop, levels.step],
        "rotations": [list(r) for r in rots],
        "window": window,
    }
    if spec.dim == 2:
        construction["rotation_covering_radius"] = rotations.so2_covering_radius(
            np.array([r[0] for r in rots])
        )
    z_set = SamplingSet(spec, points, construction, level)
    if certify:
        nbhd = _thm12_neighborhood(spec, delta1, delta2, rots)
        if certify_separated(z_set, nbhd).ok:
            z_set.separation_certificate = nbhd
    logger.info("δ-grid with %d points over %d levels", len(points), len(levels))
    return z_set


def _thm12_neighborhood(
    spec: DilationGroupSpec, delta1: float, delta2: float, rots: list[tuple[float, ...]]
) -> Neighborhood:
    log_half = math.log1p(delta1) / 2.0
    if spec.dim == 1:
        return Neighborhood(delta2 / 2.0, (log_half,))
    if len(rots) < 2:
        return Neighborhood(delta2 / 2.0, (log_half, math.pi))
    if spec.dim == 2:
        sep = min(
            rotations.angle_distance(a[0], b[0]) for a, b in itertools.combinations(rots, 2)
        )
    else:
        sep = min(
            rotations.quaternion_distance(np.array(a), np.array(b))
            for a, b in itertools.combinations(rots, 2)
        )
    return Neighborhood(delta2 / 2.0, (log_half, sep / 2.0))


def _separating_halfwidths(
    spec: DilationGroupSpec, dilations: list[GroupElement]
) -> tuple[float, ...]:
    """Half the smallest max-coordinate chart distance between distinct dilations."""
    k = chart_dim(spec)
    if len(dilations) < 2:
        return (1.0,) * k
    params = np.array([h.params for h in dilations])
    best = math.inf
    for i, h in enumerate(dilations[:-1]):
        _, coords = relative_chart(spec, params[i + 1 :], np.asarray(h.params))
        best = min(best, float(coords.max(axis=1).min()))
    return (max(best, 1e-12) / 2.0,) * k


def build_product_grid(
    spec: DilationGroupSpec,
    dilations: list[GroupElement],
    delta: float,
    translations: range | None = None,
    window: float | None = None,
    certify: bool = True,
) -> SamplingSet:
    """
    Z = {(h_j x_k, h_j)} with x_k ∈ δℤ^d, from a separated set of dilations.

    With a window, x_k ranges over all lattice points whose image h_j x_k lies in
    [-window, window]^d.
    """
    if not dilations:
        raise EmptySetError("no dilations given")
    if delta <= 0:
        raise DomainError("δ must be positive")
    if translations is None and window is None:
        raise DomainError("give either a translation range or a window")
    if translations is not None and len(translations) == 0:
        raise EmptySetError("empty translation range")

    points: list[AffinePoint] = []
    level: list[int] = []
    for j, h in enumerate(dilations):
        if window is not None:
            inv_norm = inverse(h).opnorm
            ks = _window_lattice(spec.dim, delta, window * math.sqrt(spec.dim) * inv_norm)
        else:
            assert translations is not None
            ks = _integer_lattice(spec.dim, translations)
        xs = (h.matrix @ (delta * ks).T).T
        if window is not None:
            xs = xs[np.all(np.abs(xs) <= window * (1 + 1e-12), axis=1)]
        points.extend(AffinePoint(x, h) for x in xs)
        level.extend([j] * len(xs))
    if not points:
        raise EmptySetError("no grid points inside the window")

    construction = {
        "kind": "product",
        "delta": delta,
        "dilations": [list(h.params) for h in dilations],
        "window": window,
    }
    z_set = SamplingSet(spec, points, construction, level)
    if certify:
        nbhd = Neighborhood(delta / 2.0, _separating_halfwidths(spec, dilations))
        for _ in range(8):
            if certify_separated(z_set, nbhd).ok:
                z_set.separation_certificate = nbhd
                break
            nbhd = Neighborhood(nbhd.translation_radius, tuple(w / 2 for w in nbhd.h_halfwidths))
    logger.info("Product grid with %d points over %d dilations", len(points), len(dilations))
    return z_set


def build_aligned_grid(
    spec: DilationGroupSpec,
    dilations: list[GroupElement],
    grid: GridSpec,
    delta: float,
) -> SamplingSet:
    """
    Pixel-aligned variant of the product grid: for each h the translations are the
    nodes of `grid` with stride max(1, ⌊δ·‖row_i h‖/Δ_i⌋) along axis i, kept so that
    the grid centre is a node.
    """
    if not dilations:
        raise EmptySetError("no dilations given")
    if grid.dim != spec.dim:
        raise DimensionError("grid and group dimensions differ")
    points: list[AffinePoint] = []
    level: list[int] = []
    strides_out = []
    for j, h in enumerate(dilations):
        row_norms = np.linalg.norm(h.matrix, axis=1)
        strides = [
            max(1, int(math.floor(delta * rn / s + 1e-9)))
            for rn, s in zip(row_norms, grid.spacing, strict=True)
        ]
        strides_out.append(strides)
        axes = []
        for coords, n, st in zip(grid.axes(), grid.extents, strides, strict=True):
            idx = np.arange((n // 2) % st, n, st)
            axes.append(coords[idx])
        for x in itertools.product(*axes):
            points.append(AffinePoint(np.array(x), h))
            level.append(j)
    construction = {
        "kind": "aligned",
        "delta": delta,
        "dilations": [list(h.params) for h in dilations],
        "strides": strides_out,
        "grid": grid.to_json(),
    }
    return SamplingSet(spec, points, construction, level)


def sampling_set_to_json(z_set: SamplingSet) -> dict[str, Any]:
    """Header record (group, construction, certificates) of the JSON-lines format."""
    return {
        "group": z_set.spec.to_json(),
        "construction": z_set.construction,
        "separation_certificate": (
            z_set.separation_certificate.to_json() if z_set.separation_certificate else None
        ),
        "density_certificate": (
            z_set.density_certificate.to_json() if z_set.density_certificate else None
        ),
        "count": len(z_set),
    }


def sampling_set_from_records(
    header: dict[str, Any], rows: list[dict[str, Any]]
) -> SamplingSet:
    spec = DilationGroupSpec.from_json(header["group"])
    points = [AffinePoint.from_json(spec, row) for row in rows]
    level = [int(row.get("level", 0)) for row in rows]
    sep = header.get("separation_certificate")
    dense = header.get("density_certificate")
    return SamplingSet(
        spec,
        points,
        header.get("construction", {}),
        level,
        separation_certificate=Neighborhood.from_json(sep) if sep else None,
        density_certificate=Neighborhood.from_json(dense) if dense else None,
    )
