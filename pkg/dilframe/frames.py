"""
Discrete wavelet systems {π(z)ψ : z ∈ Z} on a periodic window, frame bounds,
reconstruction, dual coefficients and coefficient-space norms.

Functions live on the torus `grid` (the signal window, optionally zero-padded).
Test functions are spanned by the torus Fourier modes selected by a SpectralWindow; in
mode coordinates v (F = FFT(f) = sqrt(N/Δ^d)·v) the analysis map is the matrix

    M[z, k] = |det h|^{1/2} conj(ψ̂(hᵀξ_k)) e^{2πi ξ_k·(x - origin)} / sqrt(N Δ^d)

and the frame operator is S = Mᴴ M. Analysis and synthesis are exact adjoints.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import StrEnum
from typing import Any, Protocol

import numpy as np
from scipy import linalg
from scipy.sparse import linalg as sparse_linalg

from dilframe.config import FrameConfig
from dilframe.cwt import dilated_extent, dilated_spectrum, phase_sum
from dilframe.errors import (
    DimensionError,
    DomainError,
    EmptySetError,
    IllConditionedFrameError,
)
from dilframe.phi import WeightSpec, weight_w
from dilframe.sampled import GridSpec, SampledFunction
from dilframe.sampling import SamplingSet

logger = logging.getLogger("dilframe.frames")

# Explicit analysis matrices are built up to this many entries
_MATRIX_ENTRIES = 50_000_000


@dataclass(frozen=True)
class SpectralWindow:
    """Torus modes with low ≤ |ξ| ≤ high and, for d ≥ 2, optionally |ξ_rest|∞ ≤ cone·|ξ₁|."""

    low: float = 0.0
    high: float = math.inf
    cone: float | None = None

    def mask(self, grid: GridSpec) -> np.ndarray:
        mesh = np.meshgrid(*grid.frequencies(), indexing="ij")
        radius = np.sqrt(sum(xi * xi for xi in mesh))
        out = (radius >= self.low) & (radius <= self.high)
        if self.cone is not None and grid.dim > 1:
            rest = np.max(np.abs(np.stack(mesh[1:])), axis=0)
            out &= rest <= self.cone * np.abs(mesh[0])
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "low": self.low,
            "high": None if math.isinf(self.high) else self.high,
            "cone": self.cone,
        }


def mode_mask(grid: GridSpec, test_space: SpectralWindow | None) -> np.ndarray:
    if test_space is None:
        return np.ones(grid.extents, dtype=bool)
    mask = test_space.mask(grid)
    if not mask.any():
        raise EmptySetError("test space contains no torus modes")
    return mask


def to_modes(f: SampledFunction, mask: np.ndarray) -> np.ndarray:
    """Orthonormal mode coordinates of f restricted to the mask."""
    grid = f.grid
    return np.fft.fftn(f.samples)[mask] * math.sqrt(grid.cell_volume / grid.size)


def from_modes(v: np.ndarray, mask: np.ndarray, grid: GridSpec) -> SampledFunction:
    spectrum = np.zeros(grid.extents, dtype=complex)
    spectrum[mask] = v * math.sqrt(grid.size / grid.cell_volume)
    return SampledFunction(grid, np.fft.ifftn(spectrum))


class FrameSystem(Protocol):
    """What frame_bounds, reconstruct and the n-term routines need from a system."""

    grid: GridSpec

    @property
    def size(self) -> int: ...

    def analysis_matrix(self, mask: np.ndarray) -> np.ndarray: ...

    def analyze_modes(self, v: np.ndarray, mask: np.ndarray) -> np.ndarray: ...

    def synthesize_modes(self, c: np.ndarray, mask: np.ndarray) -> np.ndarray: ...


def frame_operator(system: FrameSystem, mask: np.ndarray) -> sparse_linalg.LinearOperator:
    """S restricted to the test space, as a Hermitian LinearOperator on mode coordinates."""
    n = int(mask.sum())

    def matvec(v: np.ndarray) -> np.ndarray:
        return system.synthesize_modes(system.analyze_modes(np.ravel(v), mask), mask)

    return sparse_linalg.LinearOperator((n, n), matvec=matvec, rmatvec=matvec, dtype=complex)


def _spread(c: np.ndarray, grid: GridSpec, points: np.ndarray) -> np.ndarray:
    """T[k] = Σ_m c_m e^{-2πi ξ_k·(x_m - origin)} on the full torus spectrum."""
    pts = points - np.asarray(grid.origin)
    mats = [
        np.exp(-2j * np.pi * np.outer(pts[:, i], xi)) for i, xi in enumerate(grid.frequencies())
    ]
    if grid.dim == 1:
        return c @ mats[0]
    if grid.dim == 2:
        return (mats[0] * c[:, None]).T @ mats[1]
    return np.einsum("m,ma,mb,mc->abc", c, *mats)


@dataclass
class _DilationGroup:
    """Points of Z sharing one dilation h."""

    sqrt_det: float
    spectrum: np.ndarray
    members: np.ndarray
    translations: np.ndarray
    # Flat torus indices when every translation is a grid node, else None
    nodes: tuple[np.ndarray, ...] | None


class WaveletSystem:
    """{π(z)ψ : z ∈ Z} periodized onto `grid`."""

    def __init__(self, psi: SampledFunction, z_set: SamplingSet, grid: GridSpec) -> None:
        if psi.dim != z_set.spec.dim or grid.dim != psi.dim:
            raise DimensionError("atom, sampling set and torus dimensions differ")
        self.psi = psi
        self.z_set = z_set
        self.grid = grid
        freq_axes = grid.frequencies()
        index = np.asarray(z_set.dilation_index)
        origin = np.asarray(grid.origin)
        spacing = np.asarray(grid.spacing)
        self._groups: list[_DilationGroup] = []
        for j, h in enumerate(z_set.dilations):
            members = np.flatnonzero(index == j)
            xs = z_set.translations[members]
            steps = (xs - origin) / spacing
            nodes = None
            if np.allclose(steps, np.round(steps), atol=1e-9):
                ints = np.round(steps).astype(int) % np.asarray(grid.extents)
                nodes = tuple(ints[:, i] for i in range(grid.dim))
            self._groups.append(
                _DilationGroup(
                    math.sqrt(abs(h.det)), dilated_spectrum(psi, h, freq_axes), members, xs, nodes
                )
            )
        self.truncated = self._truncation_mask()
        if self.truncated.any():
            logger.warning("%d atoms wrap around the torus", int(self.truncated.sum()))
        if z_set.separation_certificate is None:
            logger.warning("Sampling set carries no separation certificate")
        logger.info(
            "Wavelet system: %d points, %d dilations, torus %s",
            len(z_set),
            len(self._groups),
            grid.extents,
        )

    @property
    def size(self) -> int:
        return len(self.z_set)

    def _truncation_mask(self) -> np.ndarray:
        """Points whose atom lies outside the window by more than its own reach."""
        lo = np.asarray(self.grid.origin)
        hi = lo + np.asarray(self.grid.lengths) - np.asarray(self.grid.spacing)
        out = np.zeros(self.size, dtype=bool)
        for group, h in zip(self._groups, self.z_set.dilations, strict=True):
            reach = dilated_extent(self.psi, h)
            xs = group.translations
            far = np.any((xs < lo - reach) | (xs > hi + reach), axis=1)
            out[group.members] = far
        if out.any():
            logger.warning("%d sampling points lie beyond the window and wrap around", out.sum())
        return out

    def _coefficients(self, spectrum: np.ndarray) -> np.ndarray:
        """c_z = (1/N) Σ_k F_k conj(A_z[k]) for a full torus spectrum F."""
        c = np.empty(self.size, dtype=complex)
        n = self.grid.size
        for group in self._groups:
            prod = spectrum * np.conj(group.spectrum) * group.sqrt_det
            if group.nodes is not None:
                c[group.members] = np.fft.ifftn(prod)[group.nodes]
            else:
                c[group.members] = phase_sum(prod, self.grid, group.translations) / n
        return c

    def _spectrum(self, c: np.ndarray) -> np.ndarray:
        """Σ_z c_z A_z, so that Σ c_z π(z)ψ = Δ^{-d} IFFT of the result."""
        acc = np.zeros(self.grid.extents, dtype=complex)
        for group in self._groups:
            coeffs = c[group.members]
            if group.nodes is not None:
                spikes = np.zeros(self.grid.extents, dtype=complex)
                np.add.at(spikes, group.nodes, coeffs)
                spread = np.fft.fftn(spikes)
            else:
                spread = _spread(coeffs, self.grid, group.translations)
            acc += group.sqrt_det * group.spectrum * spread
        return acc

    def _on_torus(self, f: SampledFunction) -> SampledFunction:
        if f.grid == self.grid:
            return f
        return f.embed(self.grid)

    def analyze(self, f: SampledFunction) -> "CoefficientArray":
        """c_z = ⟨f, π(z)ψ⟩ for every z ∈ Z."""
        values = self._coefficients(np.fft.fftn(self._on_torus(f).samples))
        return CoefficientArray(values, self.z_set, self.truncated.copy())

    def synthesize(self, c: "CoefficientArray | np.ndarray") -> SampledFunction:
        """Σ c_z π(z)ψ on the torus."""
        values = c.values if isinstance(c, CoefficientArray) else np.asarray(c, dtype=complex)
        if values.shape != (self.size,):
            raise DimensionError(f"expected {self.size} coefficients, got {values.shape}")
        samples = np.fft.ifftn(self._spectrum(values)) / self.grid.cell_volume
        return SampledFunction(self.grid, samples)

    def analyze_modes(self, v: np.ndarray, mask: np.ndarray) -> np.ndarray:
        spectrum = np.zeros(self.grid.extents, dtype=complex)
        spectrum[mask] = v * math.sqrt(self.grid.size / self.grid.cell_volume)
        return self._coefficients(spectrum)

    def synthesize_modes(self, c: np.ndarray, mask: np.ndarray) -> np.ndarray:
        acc = self._spectrum(c)
        return acc[mask] / math.sqrt(self.grid.size * self.grid.cell_volume)

    def analysis_matrix(self, mask: np.ndarray) -> np.ndarray:
        mesh = np.meshgrid(*self.grid.frequencies(), indexing="ij")
        xi = np.stack([m[mask] for m in mesh], axis=1)
        scale = 1.0 / math.sqrt(self.grid.size * self.grid.cell_volume)
        out = np.empty((self.size, xi.shape[0]), dtype=complex)
        origin = np.asarray(self.grid.origin)
        for group in self._groups:
            phases = np.exp(2j * np.pi * (group.translations - origin) @ xi.T)
            out[group.members] = (
                group.sqrt_det * scale * np.conj(group.spectrum[mask])[None, :] * phases
            )
        return out


def haar_matrix(n: int) -> np.ndarray:
    """Orthogonal discrete Haar matrix of size n = 2^J (rows are basis vectors)."""
    if n < 1 or n & (n - 1):
        raise DomainError(f"Haar basis needs a power-of-two length, got {n}")
    mat = np.ones((1, 1))
    while mat.shape[0] < n:
        size = mat.shape[0]
        coarse = np.kron(mat, [1.0, 1.0])
        fine = np.kron(np.eye(size), [1.0, -1.0])
        mat = np.vstack([coarse, fine]) / math.sqrt(2.0)
    return mat


class OrthonormalSystem:
    """Discrete Haar orthonormal basis of a 1-D torus; its frame bounds are A = B = 1."""

    def __init__(self, grid: GridSpec) -> None:
        if grid.dim != 1:
            raise DimensionError("the Haar control system is one-dimensional")
        self.grid = grid
        self._haar = haar_matrix(grid.extents[0])

    @property
    def size(self) -> int:
        return self.grid.size

    def analysis_matrix(self, mask: np.ndarray) -> np.ndarray:
        n = self.grid.size
        k = np.flatnonzero(mask.ravel())
        modes = np.exp(2j * np.pi * np.outer(np.arange(n), k) / n) / math.sqrt(n)
        return self._haar @ modes

    def analyze_modes(self, v: np.ndarray, mask: np.ndarray) -> np.ndarray:
        return self.analysis_matrix(mask) @ v

    def synthesize_modes(self, c: np.ndarray, mask: np.ndarray) -> np.ndarray:
        return self.analysis_matrix(mask).conj().T @ c


def analysis(f: SampledFunction, psi: SampledFunction, z_set: SamplingSet) -> "CoefficientArray":
    """⟨f, π(z)ψ⟩ for z ∈ Z, with f's grid as the torus."""
    return WaveletSystem(psi, z_set, f.grid).analyze(f)


def synthesis(
    c: "CoefficientArray", psi: SampledFunction, grid: GridSpec
) -> SampledFunction:
    """Σ c_z π(z)ψ on `grid`."""
    return WaveletSystem(psi, c.z_set, grid).synthesize(c)


class FrameMethod(StrEnum):
    GRAM_EIGEN = "GramEigen"
    # Krylov (ARPACK Lanczos) extremal eigenvalues of the matrix-free operator
    POWER_ITERATION = "PowerIteration"


@dataclass
class FrameReport:
    lower_bound: float
    upper_bound: float
    method: FrameMethod
    test_space: dict[str, Any]
    test_dimension: int
    is_frame: bool
    # Filled by reconstruct() when this report is passed to it
    reconstruction_error: float | None = None

    @property
    def ratio(self) -> float:
        return self.upper_bound / self.lower_bound if self.lower_bound > 0 else math.inf

    def to_json(self) -> dict[str, Any]:
        data = asdict(self)
        data["method"] = self.method.value
        data["ratio"] = self.ratio
        return data


def frame_bounds(
    system: FrameSystem,
    test_space: SpectralWindow | None = None,
    cfg: FrameConfig | None = None,
) -> FrameReport:
    """Extremal eigenvalues A ≤ B of the frame operator on the test space."""
    cfg = cfg or FrameConfig()
    mask = mode_mask(system.grid, test_space)
    n = int(mask.sum())
    explicit = isinstance(system, OrthonormalSystem) or (
        n <= cfg.gram_threshold and system.size * n <= _MATRIX_ENTRIES
    )
    if explicit:
        m = system.analysis_matrix(mask)
        eig = linalg.eigvalsh(m.conj().T @ m)
        lower, upper = float(eig[0]), float(eig[-1])
        method = FrameMethod.GRAM_EIGEN
    else:
        op = frame_operator(system, mask)
        # fixed Lanczos start vector: ARPACK draws a fresh random one per call otherwise
        v0 = np.random.default_rng(n).standard_normal(n) + 0j
        upper = float(
            sparse_linalg.eigsh(
                op, k=1, which="LA", tol=cfg.eig_tol, v0=v0, return_eigenvectors=False
            )[0]
        )
        shifted = sparse_linalg.LinearOperator(
            (n, n), matvec=lambda v: upper * np.ravel(v) - op.matvec(v), dtype=complex
        )
        top = sparse_linalg.eigsh(
            shifted, k=1, which="LA", tol=cfg.eig_tol, v0=v0, return_eigenvectors=False
        )[0]
        lower = upper - float(top)
        method = FrameMethod.POWER_ITERATION
    lower = max(lower, 0.0)
    report = FrameReport(
        lower_bound=lower,
        upper_bound=upper,
        method=method,
        test_space=test_space.to_json() if test_space else {},
        test_dimension=n,
        is_frame=lower > cfg.frame_ratio_floor * upper,
    )
    logger.info(
        "Frame bounds on %d modes (%s): A=%.4g B=%.4g B/A=%.4g",
        n,
        method.value,
        lower,
        upper,
        report.ratio,
    )
    return report


@dataclass
class ReconstructionResult:
    function: SampledFunction
    relative_error: float
    iterations: int
    residual: float


def reconstruct(
    f: SampledFunction,
    system: FrameSystem,
    test_space: SpectralWindow | None = None,
    bounds: FrameReport | None = None,
    cfg: FrameConfig | None = None,
) -> ReconstructionResult:
    """
    S⁻¹(S f) by conjugate gradients on the test space; the error is measured against
    the projection of f onto the test space.
    """
    cfg = cfg or FrameConfig()
    grid = system.grid
    if f.grid != grid:
        f = f.embed(grid)
    mask = mode_mask(grid, test_space)
    v = to_modes(f, mask)
    norm_v = float(np.linalg.norm(v))
    if norm_v == 0.0:
        return ReconstructionResult(SampledFunction(grid, np.zeros(grid.extents)), 0.0, 0, 0.0)

    op = frame_operator(system, mask)
    rhs = op.matvec(v)
    if bounds is not None and bounds.is_frame:
        maxiter = max(20, 10 * math.ceil(bounds.ratio))
    else:
        maxiter = max(20, 10 * v.size)
    iterations = 0

    def count(_: np.ndarray) -> None:
        nonlocal iterations
        iterations += 1

    solution, info = sparse_linalg.cg(op, rhs, rtol=cfg.cg_tol, maxiter=maxiter, callback=count)
    residual = float(np.linalg.norm(op.matvec(solution) - rhs) / np.linalg.norm(rhs))
    recovered = from_modes(solution, mask, grid)
    if info > 0:
        raise IllConditionedFrameError(
            f"CG stalled after {iterations} iterations (residual {residual:.2e})",
            recovered,
            residual,
        )
    error = float(np.linalg.norm(solution - v) / norm_v)
    if bounds is not None:
        bounds.reconstruction_error = error
    logger.info("Reconstruction: %d CG iterations, relative error %.3e", iterations, error)
    return ReconstructionResult(recovered, error, iterations, residual)


def dual_coefficients(
    f: SampledFunction,
    system: FrameSystem,
    test_space: SpectralWindow | None = None,
    cfg: FrameConfig | None = None,
) -> np.ndarray:
    """
    Canonical dual-frame coefficients ⟨f, S⁻¹π(z)ψ⟩ (the minimal-ℓ² synthesis coefficients),
    explicitly by least squares for small systems and by CG otherwise.
    """
    cfg = cfg or FrameConfig()
    grid = system.grid
    if f.grid != grid:
        f = f.embed(grid)
    mask = mode_mask(grid, test_space)
    v = to_modes(f, mask)
    if system.size <= cfg.gram_threshold and system.size * v.size <= _MATRIX_ENTRIES:
        m = system.analysis_matrix(mask)
        coeffs, *_ = linalg.lstsq(m.conj().T, v)
        return np.asarray(coeffs)
    op = frame_operator(system, mask)
    g, info = sparse_linalg.cg(op, v, rtol=cfg.cg_tol, maxiter=10 * v.size)
    if info > 0:
        raise IllConditionedFrameError("CG stalled computing dual coefficients", g, math.nan)
    return system.analyze_modes(g, mask)


@dataclass
class CoefficientArray:
    """Coefficients indexed like z_set.points; `truncated` marks wrapped atoms."""

    values: np.ndarray
    z_set: SamplingSet
    truncated: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (len(self.z_set),):
            raise DimensionError("one coefficient per sampling point is required")
        if self.truncated.size == 0:
            self.truncated = np.zeros(len(self.z_set), dtype=bool)


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def coefficient_weights(z_set: SamplingSet, p: float, q: float, weight: WeightSpec) -> np.ndarray:
    """v(hⱼxₖ, hⱼ)|det hⱼ|^{1/p-1/q} per point, with v(x, h) = (1+|x|+‖h‖)^s w(h)."""
    out = np.empty(len(z_set))
    for i, point in enumerate(z_set.points):
        h = point.h
        v = (1.0 + float(np.linalg.norm(point.x)) + h.opnorm) ** weight.s
        v *= weight_w(z_set.spec, weight, h)
        out[i] = v * abs(h.det) ** (_inv(p) - _inv(q))
    return out


def _lp(values: np.ndarray, p: float) -> float:
    return float(np.linalg.norm(values, ord=p)) if values.size else 0.0


def coefficient_norm(c: CoefficientArray, p: float, q: float, weight: WeightSpec) -> float:
    """
    (Σⱼ |det hⱼ|^{q/p-1} (Σₖ (|c_{j,k}| v(hⱼxₖ,hⱼ)|det hⱼ|^{1/p-1/q})^p)^{q/p})^{1/q},
    j running over the distinct dilations; p or q = ∞ take the sup form.
    """
    if p < 1 or q < 1:
        raise DomainError(f"p and q must be ≥ 1, got p={p}, q={q}")
    z_set = c.z_set
    weighted = np.abs(c.values) * coefficient_weights(z_set, p, q, weight)
    index = np.asarray(z_set.dilation_index)
    outer = np.empty(len(z_set.dilations))
    for j, h in enumerate(z_set.dilations):
        inner = _lp(weighted[index == j], p)
        outer[j] = abs(h.det) ** (_inv(p) - _inv(q)) * inner
    return _lp(outer, q)


def besov_sequence_norm(
    values: np.ndarray, levels: list[int], alpha: float, p: float, q: float, d: int
) -> float:
    """(Σⱼ (Σₖ (2^{-jα-jd/2+jd/p}|c_{j,k}|)^p)^{q/p})^{1/q}, grouped by level j."""
    vals = np.abs(np.asarray(values))
    lev = np.asarray(levels)
    if vals.shape != lev.shape:
        raise DimensionError("one level per coefficient is required")
    outer = []
    for j in np.unique(lev):
        factor = 2.0 ** (j * (-alpha - d / 2.0 + d * _inv(p)))
        outer.append(_lp(factor * vals[lev == j], p))
    return _lp(np.asarray(outer), q)
