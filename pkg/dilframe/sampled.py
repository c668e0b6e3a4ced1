"""Sampled functions on rectilinear grids and the Fourier evaluations built on them."""

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate

from dilframe.errors import DimensionError, ResolutionError

# Fewer samples per axis than this cannot carry a compactly supported function
MIN_EXTENT = 4

# Evaluation points per block in direct Fourier sums
_CHUNK = 2048


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: node n has coordinates origin + n·spacing along every axis."""

    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    extents: tuple[int, ...]

    def __post_init__(self) -> None:
        origin = tuple(float(o) for o in self.origin)
        spacing = tuple(float(s) for s in self.spacing)
        extents = tuple(int(n) for n in self.extents)
        if not (len(origin) == len(spacing) == len(extents)):
            raise DimensionError("origin, spacing and extents must have the same length")
        if any(s <= 0 or not math.isfinite(s) for s in spacing):
            raise ResolutionError(f"grid spacing must be positive, got {spacing}")
        if any(n < MIN_EXTENT for n in extents):
            raise ResolutionError(
                f"grid needs at least {MIN_EXTENT} samples per axis, got {extents}"
            )
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "extents", extents)

    @classmethod
    def centered(cls, dim: int, half_width: float, spacing: float) -> "GridSpec":
        """Symmetric grid through 0 covering [-half_width, half_width] on every axis."""
        m = math.ceil(half_width / spacing - 1e-9)
        return cls((-m * spacing,) * dim, (spacing,) * dim, (2 * m + 1,) * dim)

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def size(self) -> int:
        return math.prod(self.extents)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def lengths(self) -> tuple[float, ...]:
        """Period lengths n·Δ of the grid viewed as a torus."""
        return tuple(n * s for n, s in zip(self.extents, self.spacing, strict=True))

    def axes(self) -> list[np.ndarray]:
        return [
            o + s * np.arange(n)
            for o, s, n in zip(self.origin, self.spacing, self.extents, strict=True)
        ]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def frequencies(self) -> list[np.ndarray]:
        """FFT frequencies per axis (cycles per unit length)."""
        return [
            np.fft.fftfreq(n, s) for n, s in zip(self.extents, self.spacing, strict=True)
        ]

    def nyquist(self) -> tuple[float, ...]:
        return tuple(0.5 / s for s in self.spacing)

    def padded(self, factor: int) -> "GridSpec":
        """Same spacing, extents multiplied by factor, original window centred inside."""
        extents = tuple(n * factor for n in self.extents)
        origin = tuple(
            o - ((m - n) // 2) * s
            for o, s, n, m in zip(self.origin, self.spacing, self.extents, extents, strict=True)
        )
        return GridSpec(origin, self.spacing, extents)

    def offset_in(self, outer: "GridSpec") -> tuple[int, ...]:
        """Index of this grid's origin inside a coarser-or-equal outer grid of equal spacing."""
        if not np.allclose(self.spacing, outer.spacing, rtol=1e-12):
            raise DimensionError("grids have different spacing")
        offsets = []
        for o, oo, s in zip(self.origin, outer.origin, self.spacing, strict=True):
            k = (o - oo) / s
            if abs(k - round(k)) > 1e-6:
                raise DimensionError("grids are not aligned")
            offsets.append(round(k))
        return tuple(offsets)

    def to_json(self) -> dict[str, Any]:
        return {
            "origin": list(self.origin),
            "spacing": list(self.spacing),
            "extents": list(self.extents),
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "GridSpec":
        return cls(tuple(data["origin"]), tuple(data["spacing"]), tuple(data["extents"]))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples on a GridSpec plus free-form metadata (kind, support radius, ...)."""

    grid: GridSpec
    samples: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=complex)
        if samples.shape != self.grid.extents:
            raise DimensionError(
                f"samples of shape {samples.shape} do not match grid extents {self.grid.extents}"
            )
        if not np.all(np.isfinite(samples)):
            raise ResolutionError("samples contain non-finite values")
        object.__setattr__(self, "samples", samples)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def with_samples(self, samples: np.ndarray, **metadata: Any) -> "SampledFunction":
        return SampledFunction(self.grid, samples, {**self.metadata, **metadata})

    def integral(self) -> complex:
        """Trapezoidal integral over the grid."""
        value: Any = self.samples
        for axis in reversed(range(self.dim)):
            value = integrate.trapezoid(value, dx=self.grid.spacing[axis], axis=axis)
        return complex(value)

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.samples)) * self.grid.cell_volume)

    def l2_norm(self) -> float:
        return float(math.sqrt(np.sum(np.abs(self.samples) ** 2) * self.grid.cell_volume))

    def inner(self, other: "SampledFunction") -> complex:
        """Discrete L² inner product Δ^d Σ f·conj(g) on a shared grid."""
        if other.grid != self.grid:
            raise DimensionError("inner product needs functions on the same grid")
        return complex(np.vdot(other.samples, self.samples) * self.grid.cell_volume)

    def embed(self, outer: GridSpec) -> "SampledFunction":
        """Zero-extend onto a larger aligned grid of the same spacing."""
        offsets = self.grid.offset_in(outer)
        out = np.zeros(outer.extents, dtype=complex)
        slices = []
        for k, n, m in zip(offsets, self.grid.extents, outer.extents, strict=True):
            if k < 0 or k + n > m:
                raise DimensionError("function does not fit inside the target grid")
            slices.append(slice(k, k + n))
        out[tuple(slices)] = self.samples
        return SampledFunction(outer, out, dict(self.metadata))

    def crop(self, inner: GridSpec) -> "SampledFunction":
        """Restrict to an aligned sub-grid of the same spacing."""
        offsets = inner.offset_in(self.grid)
        slices = tuple(
            slice(k, k + n) for k, n in zip(offsets, inner.extents, strict=True)
        )
        return SampledFunction(inner, self.samples[slices], dict(self.metadata))

    def support_box(self, rel_tol: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Bounding box of the samples with |f| > rel_tol·max|f|."""
        mag = np.abs(self.samples)
        peak = mag.max()
        if peak == 0.0:
            zero = np.zeros(self.dim)
            return zero, zero
        mask = mag > rel_tol * peak
        lo, hi = [], []
        for axis, coords in enumerate(self.grid.axes()):
            other = tuple(a for a in range(self.dim) if a != axis)
            hit = np.flatnonzero(mask.any(axis=other) if other else mask)
            lo.append(coords[hit[0]])
            hi.append(coords[hit[-1]])
        return np.asarray(lo), np.asarray(hi)


def separable_sum(samples: np.ndarray, weights: list[np.ndarray]) -> np.ndarray:
    """
    out[k] = Σ_n samples[n₁, ..., n_d] ∏ᵢ weights[i][k, nᵢ] for a stack of k.

    Every weight matrix has one row per evaluation point; the contraction runs
    axis by axis so its cost is linear in the number of points.
    """
    d = samples.ndim
    if len(weights) != d:
        raise DimensionError(f"expected {d} weight matrices, got {len(weights)}")
    n_points = weights[0].shape[0]
    if d == 1:
        return weights[0] @ samples
    first = (weights[0] @ samples.reshape(samples.shape[0], -1)).reshape(
        n_points, *samples.shape[1:]
    )
    if d == 2:
        return np.einsum("kb,kb->k", first, weights[1])
    if d == 3:
        return np.einsum("kbc,kb,kc->k", first, weights[1], weights[2])
    raise DimensionError(f"separable sums are implemented for d ≤ 3, got {d}")


def fourier_at(
    fn: SampledFunction,
    eta: Any,
    moment: tuple[int, ...] | None = None,
    mask_nyquist: bool = True,
) -> np.ndarray:
    """
    Trigonometric interpolant of f̂ (or of ∂^α f̂ when moment = α) at arbitrary points.

    f̂(η) ≈ Δ^d Σ_n f_n e^{-2πi η·x_n}; points outside the Nyquist box of the grid are
    set to 0 when mask_nyquist is on, which is exact for well-resolved compact atoms.
    """
    pts = np.atleast_2d(np.asarray(eta, dtype=float))
    if pts.shape[1] != fn.dim:
        raise DimensionError(f"expected points of dimension {fn.dim}, got {pts.shape[1]}")
    axes = fn.grid.axes()
    alpha = moment or (0,) * fn.dim
    out = np.empty(pts.shape[0], dtype=complex)
    for start in range(0, pts.shape[0], _CHUNK):
        block = pts[start : start + _CHUNK]
        weights = []
        for i, x in enumerate(axes):
            w = np.exp(-2j * np.pi * np.outer(block[:, i], x))
            if alpha[i]:
                w = w * (-2j * np.pi * x) ** alpha[i]
            weights.append(w)
        out[start : start + block.shape[0]] = separable_sum(fn.samples, weights)
    out *= fn.grid.cell_volume
    if mask_nyquist:
        nyq = np.asarray(fn.grid.nyquist())
        out[np.any(np.abs(pts) > nyq, axis=1)] = 0.0
    return out


def fourier_on_axes(fn: SampledFunction, freq_axes: list[np.ndarray]) -> np.ndarray:
    """f̂ on the tensor grid freq_axes[0] × ... × freq_axes[d-1] (Nyquist-masked)."""
    if len(freq_axes) != fn.dim:
        raise DimensionError(f"expected {fn.dim} frequency axes")
    out = fn.samples
    for axis, (x, xi, nyq) in enumerate(
        zip(fn.grid.axes(), freq_axes, fn.grid.nyquist(), strict=True)
    ):
        mat = np.exp(-2j * np.pi * np.outer(xi, x))
        mat[np.abs(xi) > nyq] = 0.0
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [axis])), 0, axis)
    return out * fn.grid.cell_volume


def spectrum_magnitude(
    fn: SampledFunction, pad_factor: int, moment: tuple[int, ...]
) -> np.ndarray:
    """|∂^α f̂| on the FFT lattice of the zero-padded grid (phases dropped)."""
    weighted = fn.samples.copy()
    for axis, (x, a) in enumerate(zip(fn.grid.axes(), moment, strict=True)):
        if a:
            shape = [1] * fn.dim
            shape[axis] = -1
            weighted = weighted * ((-2j * np.pi * x) ** a).reshape(shape)
    shape = tuple(n * pad_factor for n in fn.grid.extents)
    return np.abs(np.fft.fftn(weighted, s=shape)) * fn.grid.cell_volume


def padded_frequency_mesh(grid: GridSpec, pad_factor: int) -> list[np.ndarray]:
    freqs = [
        np.fft.fftfreq(n * pad_factor, s)
        for n, s in zip(grid.extents, grid.spacing, strict=True)
    ]
    return np.meshgrid(*freqs, indexing="ij")


def multi_indices(dim: int, max_order: int) -> list[tuple[int, ...]]:
    """All α ∈ ℕ^dim with |α| ≤ max_order, graded then lexicographic."""
    if max_order < 0:
        return []
    out: list[tuple[int, ...]] = []
    for order in range(max_order + 1):
        out.extend(_compositions(dim, order))
    return out


def _compositions(dim: int, total: int) -> list[tuple[int, ...]]:
    if dim == 1:
        return [(total,)]
    return [(k, *rest) for k in range(total, -1, -1) for rest in _compositions(dim - 1, total - k)]
