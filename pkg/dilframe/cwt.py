"""
Continuous wavelet transform W_ψ f(x, h) = ⟨f, π(x, h)ψ⟩ on sampled grids.

For a fixed h the slice x ↦ W_ψ f(x, h) is a correlation, computed on the periodized
padded grid as

    W(x_m) = |det h|^{1/2} · IFFT( F · conj(G_h) )[m],   G_h(ξ) = ψ̂(hᵀξ),

where F is the FFT of the zero-padded signal and ψ̂ is the trigonometric interpolant of
the atom's own samples. Diagonal and upper-triangular h take separable fast paths.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from dilframe import rotations
from dilframe.atoms import MomentReport, schwartz_norm_estimate
from dilframe.config import CwtConfig, QuadratureConfig
from dilframe.errors import ContractError, DimensionError, DomainError, ResolutionError
from dilframe.groups import DilationGroupSpec, Family, GroupElement, inverse, multiply
from dilframe.phi import phi_ell, shearlet_required_order
from dilframe.sampled import (
    GridSpec,
    SampledFunction,
    fourier_at,
    fourier_on_axes,
    separable_sum,
)

logger = logging.getLogger("dilframe.cwt")


def dilated_spectrum(
    psi: SampledFunction, h: GroupElement, freq_axes: list[np.ndarray]
) -> np.ndarray:
    """G_h = ψ̂(hᵀξ) on the tensor grid of freq_axes, zero outside ψ's Nyquist box."""
    if psi.dim != h.spec.dim or len(freq_axes) != psi.dim:
        raise DimensionError("atom, dilation and frequency grid dimensions differ")
    mat = h.matrix
    off_diagonal = mat - np.diag(np.diag(mat))
    if not np.any(off_diagonal):
        return fourier_on_axes(psi, [mat[i, i] * xi for i, xi in enumerate(freq_axes)])
    if psi.dim == 2 and mat[1, 0] == 0.0:
        return _upper_triangular_spectrum(psi, mat, freq_axes)

    mesh = np.meshgrid(*freq_axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1) @ mat
    return fourier_at(psi, points).reshape(mesh[0].shape)


def _upper_triangular_spectrum(
    psi: SampledFunction, mat: np.ndarray, freq_axes: list[np.ndarray]
) -> np.ndarray:
    # hᵀξ = (h00·ξ₁, h01·ξ₁ + h11·ξ₂)
    x1, x2 = psi.grid.axes()
    xi1, xi2 = freq_axes
    e1 = np.exp(-2j * np.pi * np.outer(mat[0, 0] * xi1, x1))
    shear = np.exp(-2j * np.pi * np.outer(mat[0, 1] * xi1, x2))
    e2 = np.exp(-2j * np.pi * np.outer(mat[1, 1] * xi2, x2))
    out = ((e1 @ psi.samples) * shear) @ e2.T
    nyq1, nyq2 = psi.grid.nyquist()
    eta1 = mat[0, 0] * xi1[:, None]
    eta2 = mat[0, 1] * xi1[:, None] + mat[1, 1] * xi2[None, :]
    out[(np.abs(eta1) > nyq1) | (np.abs(eta2) > nyq2)] = 0.0
    return out * psi.grid.cell_volume


def dilated_extent(psi: SampledFunction, h: GroupElement) -> np.ndarray:
    """Per-axis width of the bounding box of h·supp ψ."""
    lo, hi = psi.support_box(rel_tol=1e-9)
    box = np.meshgrid(*zip(lo, hi, strict=True), indexing="ij")
    corners = np.array(box).reshape(psi.dim, -1)
    image = h.matrix @ corners
    return np.asarray(image.max(axis=1) - image.min(axis=1))


def phase_sum(
    spectrum: np.ndarray, grid: GridSpec, points: np.ndarray, sign: int = 1
) -> np.ndarray:
    """
    Σ_k spectrum[k] e^{±2πi ξ_k·(x - origin)} for each row x of points, ξ_k the FFT
    frequencies of `grid` (sign=+1 is an inverse DFT evaluated off the lattice).
    """
    pts = np.atleast_2d(points) - np.asarray(grid.origin)
    weights = [
        np.exp(sign * 2j * np.pi * np.outer(pts[:, i], xi))
        for i, xi in enumerate(grid.frequencies())
    ]
    return separable_sum(spectrum, weights)


class SliceTransform:
    """CWT slices of one signal against one atom, sharing the padded signal spectrum."""

    def __init__(
        self, f: SampledFunction, psi: SampledFunction, cfg: CwtConfig | None = None
    ) -> None:
        if f.dim != psi.dim:
            raise DimensionError(f"signal has dimension {f.dim}, atom has {psi.dim}")
        self._cfg = cfg or CwtConfig()
        self.signal = f
        self.atom = psi
        self.padded = f.grid.padded(self._cfg.pad_factor)
        self.signal_spectrum = np.fft.fftn(f.embed(self.padded).samples)

    def _check_padding(self, h: GroupElement) -> None:
        reach = dilated_extent(self.atom, h)
        grid = self.signal.grid
        for axis, (n, m, s) in enumerate(
            zip(grid.extents, self.padded.extents, grid.spacing, strict=True)
        ):
            if (m - n) * s < reach[axis]:
                raise ResolutionError(
                    f"axis {axis}: padding {(m - n) * s:g} shorter than dilated atom width"
                    f" {reach[axis]:g}; raise cwt.pad_factor"
                )

    def spectrum(self, h: GroupElement) -> np.ndarray:
        return dilated_spectrum(self.atom, h, self.padded.frequencies())

    def slice(self, h: GroupElement) -> SampledFunction:
        """x ↦ W_ψ f(x, h) on the signal grid."""
        self._check_padding(h)
        product = self.signal_spectrum * np.conj(self.spectrum(h))
        values = math.sqrt(abs(h.det)) * np.fft.ifftn(product)
        full = SampledFunction(self.padded, values, {"h": list(h.params)})
        return full.crop(self.signal.grid)

    def at(self, h: GroupElement, points: Any) -> np.ndarray:
        """W_ψ f(x, h) at arbitrary translations (trigonometric interpolation)."""
        self._check_padding(h)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.signal.dim:
            raise DimensionError(f"expected points of dimension {self.signal.dim}")
        product = self.signal_spectrum * np.conj(self.spectrum(h))
        return math.sqrt(abs(h.det)) * phase_sum(product, self.padded, pts) / self.padded.size

    def slice_energy(self, h: GroupElement) -> tuple[float, float]:
        """
        (Σ_x |W(x,h)|² Δ^d over the padded grid, |det h| ∫ |f̂|² |ψ̂(hᵀξ)|² dξ).

        The two agree to rounding; a gap flags a broken transform.
        """
        g = self.spectrum(h)
        values = math.sqrt(abs(h.det)) * np.fft.ifftn(self.signal_spectrum * np.conj(g))
        spatial = float(np.sum(np.abs(values) ** 2) * self.padded.cell_volume)
        vol = self.padded.cell_volume
        f_hat = np.abs(self.signal_spectrum) * vol
        d_xi = 1.0 / math.prod(self.padded.lengths)
        spectral = abs(h.det) * float(np.sum(f_hat**2 * np.abs(g) ** 2) * d_xi)
        return spatial, spectral


def analyze_slice(
    f: SampledFunction, psi: SampledFunction, h: GroupElement, cfg: CwtConfig | None = None
) -> SampledFunction:
    """W_ψ f(·, h) sampled on f's translation grid."""
    return SliceTransform(f, psi, cfg).slice(h)


@dataclass
class DecayReport:
    """
    Fitted constant C* with |W_ψψ| ≤ C*·envelope on the sampled (x, h) set.

    The fit is repeated on an x-window twice as wide; `drift` is the relative change
    of C* between the two, and the check passes when C* is finite and the drift stays
    within cwt.decay_drift.
    """

    constant: float
    refined_constant: float
    drift: float
    stable: bool
    passed: bool
    per_element: list[float]
    argmax_x: list[float]
    argmax_element: int
    envelope: str
    parameters: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def _fit_decay(
    psi: SampledFunction,
    elements: list[GroupElement],
    bound: Any,
    window_factor: int,
    cfg: CwtConfig,
) -> tuple[float, list[float], list[float], int]:
    window = psi.embed(psi.grid.padded(window_factor))
    transform = SliceTransform(window, psi, cfg)
    x_mesh = window.grid.mesh()
    x_norm = np.sqrt(sum(x * x for x in x_mesh))
    per_element = []
    best, best_x, best_h = 0.0, [0.0] * psi.dim, 0
    for idx, h in enumerate(elements):
        w = np.abs(transform.slice(h).samples)
        ratio = w / bound(x_norm, h)
        k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
        per_element.append(float(ratio[k]))
        if ratio[k] > best:
            best = float(ratio[k])
            best_x = [float(x[k]) for x in x_mesh]
            best_h = idx
    return best, per_element, best_x, best_h


def _decay_report(
    psi: SampledFunction,
    elements: list[GroupElement],
    bound: Any,
    window_factor: int,
    cfg: CwtConfig | None,
    envelope: str,
    parameters: dict[str, Any],
) -> DecayReport:
    if not elements:
        raise DomainError("no dilations to test")
    cfg = cfg or CwtConfig()
    best, per_element, best_x, best_h = _fit_decay(psi, elements, bound, window_factor, cfg)
    refined = _fit_decay(psi, elements, bound, 2 * window_factor, cfg)[0]
    drift = abs(refined - best) / refined if refined > 0 else 0.0
    stable = drift <= cfg.decay_drift
    passed = stable and math.isfinite(best) and math.isfinite(refined)
    if not stable:
        logger.warning(
            "Decay constant unstable under window refinement: C*=%.4g, refined=%.4g (%.1f%%)",
            best,
            refined,
            100 * drift,
        )
    return DecayReport(
        best, refined, drift, stable, passed, per_element, best_x, best_h, envelope, parameters
    )


def decay_envelope_check(
    psi: SampledFunction,
    elements: list[GroupElement],
    r: int,
    m: float,
    moments: MomentReport | None,
    cwt_cfg: CwtConfig | None = None,
    quad: QuadratureConfig | None = None,
    window_factor: int = 2,
) -> DecayReport:
    """
    Fit C* in |W_ψψ(x,h)| ≤ C*·|ψ̂|²_{r,r}(1+|x|)^{-m}|det h|^{1/2}(1+‖h‖)^m Φ_{r-m}(h).

    The atom's moments must have been verified up to order r first.
    """
    if moments is None or not moments.passed or moments.order_checked < r:
        raise ContractError(f"decay check needs an atom with verified moments of order {r}")
    ell = r - int(math.ceil(m))
    if ell != r - m:
        raise DomainError(f"r - m must be an integer, got r={r}, m={m}")
    norm_sq = schwartz_norm_estimate(psi, r, r) ** 2
    phi_cache: dict[int, float] = {}

    def bound(x_norm: np.ndarray, h: GroupElement) -> np.ndarray:
        key = id(h)
        if key not in phi_cache:
            phi_cache[key] = phi_ell(h, ell, quad).value
        scale = math.sqrt(abs(h.det)) * (1.0 + h.opnorm) ** m * phi_cache[key]
        return norm_sq * scale * (1.0 + x_norm) ** (-m)

    report = _decay_report(psi, elements, bound, window_factor, cwt_cfg, "phi", {"r": r, "m": m})
    logger.info(
        "Decay envelope constant C* = %.4g (r=%d, m=%g, drift %.2e)",
        report.constant,
        r,
        m,
        report.drift,
    )
    return report


def shearlet_decay_check(
    psi: SampledFunction,
    elements: list[GroupElement],
    m: float,
    r1: float,
    r2: float,
    moments: MomentReport | None,
    cwt_cfg: CwtConfig | None = None,
    window_factor: int = 2,
) -> DecayReport:
    """
    Fit C* in |W_ψψ(x,(a,b))| ≤ C*(1+|x|)^{-m}(|a|+|a|⁻¹)^{-r₁}(1+|b|)^{-r₂}.

    The envelope comes from Φ_{t-m} with t the verified moment order, so the moments must
    reach shearlet_required_order(c, r₁, r₂) + ⌈m⌉.
    """
    if not elements:
        raise DomainError("no dilations to test")
    if any(h.spec.family is not Family.SHEARLET for h in elements):
        raise DomainError("shearlet decay check needs shearlet elements")
    required = shearlet_required_order(elements[0].spec.c, r1, r2) + math.ceil(m)
    if moments is None or not moments.passed or moments.order_checked < required:
        raise ContractError(
            f"shearlet decay check needs an atom with verified moments of order {required}"
        )

    def bound(x_norm: np.ndarray, h: GroupElement) -> np.ndarray:
        a, b = h.params
        return (
            (1.0 + x_norm) ** (-m)
            * (abs(a) + 1.0 / abs(a)) ** (-r1)
            * (1.0 + abs(b)) ** (-r2)
        )

    params = {"m": m, "r1": r1, "r2": r2}
    report = _decay_report(psi, elements, bound, window_factor, cwt_cfg, "shearlet", params)
    logger.info(
        "Shearlet decay constant C* = %.4g (m=%g, r1=%g, r2=%g, drift %.2e)",
        report.constant,
        m,
        r1,
        r2,
        report.drift,
    )
    return report


def haar_quadrature(
    spec: DilationGroupSpec,
    log_scales: np.ndarray,
    shears: np.ndarray | None = None,
    n_rotations: int = 1,
    both_signs: bool = True,
) -> list[tuple[GroupElement, float]]:
    """
    Product-rule nodes and left-Haar weights on H over uniform log-scale (and shear) axes.

    SO(d) factors carry unit mass split evenly over n_rotations nodes.
    """
    u = np.asarray(log_scales, dtype=float)
    if u.size < 2:
        raise DomainError("need at least two log-scale nodes")
    du = float(u[1] - u[0])
    signs = [1.0, -1.0] if both_signs else [1.0]
    nodes: list[tuple[GroupElement, float]] = []
    d = spec.dim

    if spec.family is Family.SIMILITUDE:
        if d == 1:
            rots: list[tuple[float, ...]] = [()]
        elif d == 2:
            rots = [(float(t),) for t in rotations.so2_grid(n_rotations)]
        else:
            rots = [tuple(q) for q in rotations.so3_super_fibonacci(n_rotations)]
        for s in u:
            r = math.exp(s)
            if d == 1:
                nodes.extend((spec.element([sign * r]), du) for sign in signs)
            else:
                nodes.extend((spec.element([r, *rot]), du / len(rots)) for rot in rots)
        return nodes

    if spec.family is Family.DIAGONAL:
        for logs in np.array(np.meshgrid(*([u] * d), indexing="ij")).reshape(d, -1).T:
            for sign_vec in np.array(np.meshgrid(*([signs] * d), indexing="ij")).reshape(d, -1).T:
                nodes.append((spec.element(sign_vec * np.exp(logs)), du**d))
        return nodes

    if shears is None or len(shears) < 2:
        raise DomainError("shearlet quadrature needs at least two shear nodes")
    b_axis = np.asarray(shears, dtype=float)
    db = float(b_axis[1] - b_axis[0])
    for s in u:
        a = math.exp(s)
        for sign in signs:
            for b in b_axis:
                # dh = da db / a² and da = a du
                nodes.append((spec.element([sign * a, b]), du * db / a))
    return nodes


@dataclass
class ContinuousReconstruction:
    function: SampledFunction
    relative_error: float
    admissibility_constant: float
    admissibility_drift: float
    stable: bool


def reconstruct_continuous(
    f: SampledFunction,
    psi: SampledFunction,
    nodes: list[tuple[GroupElement, float]],
    cfg: CwtConfig | None = None,
) -> ContinuousReconstruction:
    """
    f ≈ (1/c_ψ) Σ_h w_h ∫ W_ψ f(x,h) π(x,h)ψ dx/|det h| with the translation integral
    done exactly on the padded grid.

    c_ψ is the energy-weighted mean of Σ_h w_h |ψ̂(hᵀξ)|² over f's spectrum; its drift
    against the every-other-node quadrature is reported (warning above the configured drift).
    """
    cfg = cfg or CwtConfig()
    transform = SliceTransform(f, psi, cfg)
    power = np.abs(transform.signal_spectrum) ** 2
    total_power = float(power.sum())
    if total_power == 0.0:
        zero = SampledFunction(f.grid, np.zeros(f.grid.extents), dict(f.metadata))
        return ContinuousReconstruction(zero, 0.0, 0.0, 0.0, True)
    if not nodes:
        raise DomainError("empty dilation quadrature")

    kernel = np.zeros(transform.padded.extents)
    coarse = np.zeros(transform.padded.extents)
    for idx, (h, weight) in enumerate(nodes):
        g2 = np.abs(transform.spectrum(h)) ** 2
        kernel += weight * g2
        if idx % 2 == 0:
            coarse += 2.0 * weight * g2

    c_psi = float(np.sum(power * kernel) / total_power)
    c_coarse = float(np.sum(power * coarse) / total_power)
    if c_psi <= 0.0:
        raise DomainError("atom has no energy on the signal spectrum")
    drift = abs(c_psi - c_coarse) / c_psi
    stable = drift <= cfg.admissibility_drift
    if not stable:
        logger.warning(
            "Admissibility constant unstable under refinement: c=%.4g, coarse=%.4g (drift %.1f%%)",
            c_psi,
            c_coarse,
            100 * drift,
        )

    rec = np.fft.ifftn(transform.signal_spectrum * kernel / c_psi)
    if not np.any(f.samples.imag):
        rec = rec.real
    full = SampledFunction(transform.padded, rec, dict(f.metadata))
    out = full.crop(f.grid)
    err = float(np.linalg.norm(out.samples - f.samples) / np.linalg.norm(f.samples))
    logger.info("Continuous reconstruction over %d nodes: rel. error %.3e", len(nodes), err)
    return ContinuousReconstruction(out, err, c_psi, drift, stable)


def check_dilation_covariance(
    f: SampledFunction,
    psi: SampledFunction,
    g: GroupElement,
    h: GroupElement,
    f_dilated: SampledFunction,
    cfg: CwtConfig | None = None,
) -> float:
    """
    max_x |W(π(0,g)f)(x, h) - W f(g⁻¹x, g⁻¹h)| / max|W f| over f_dilated's grid.

    f_dilated must sample π(0,g)f = |det g|^{-1/2} f(g⁻¹·) on its own grid.
    """
    g_inv = inverse(g)
    lhs = analyze_slice(f_dilated, psi, h, cfg).samples.ravel()
    x_pts = np.stack([m.ravel() for m in f_dilated.grid.mesh()], axis=1)
    rhs = SliceTransform(f, psi, cfg).at(multiply(g_inv, h), x_pts @ g_inv.matrix.T)
    scale = np.abs(rhs).max()
    return float(np.abs(lhs - rhs).max() / scale) if scale > 0 else 0.0
