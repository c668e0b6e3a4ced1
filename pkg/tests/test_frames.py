"""Tests for wavelet systems, frame bounds, reconstruction and coefficient norms."""

import math

import numpy as np
import pytest

from dilframe.atoms import BumpKind, build_atom, build_bump
from dilframe.config import AtomConfig, FrameConfig
from dilframe.errors import DimensionError, DomainError, EmptySetError
from dilframe.frames import (
    CoefficientArray,
    FrameMethod,
    OrthonormalSystem,
    SpectralWindow,
    WaveletSystem,
    analysis,
    besov_sequence_norm,
    coefficient_norm,
    dual_coefficients,
    frame_bounds,
    frame_operator,
    from_modes,
    haar_matrix,
    mode_mask,
    reconstruct,
    synthesis,
    to_modes,
)
from dilframe.groups import AffinePoint, DilationGroupSpec
from dilframe.phi import WeightSpec
from dilframe.sampled import GridSpec, SampledFunction
from dilframe.sampling import SamplingSet, build_product_grid

BAND = SpectralWindow(low=0.5, high=4.0)


@pytest.fixture
def torus() -> GridSpec:
    return GridSpec.centered(1, 4.0, 1.0 / 16)


@pytest.fixture
def atom(sim1: DilationGroupSpec) -> SampledFunction:
    grid = GridSpec.centered(1, 0.75, 1.0 / 16)
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 0.5, grid)
    return build_atom(rho, sim1, 2, AtomConfig(derivative="finite_difference"))


@pytest.fixture
def three_scales(sim1: DilationGroupSpec) -> SamplingSet:
    dilations = [sim1.element([0.5]), sim1.identity(), sim1.element([2.0])]
    return build_product_grid(sim1, dilations, 0.25, window=4.0)


@pytest.fixture
def system(atom: SampledFunction, three_scales: SamplingSet, torus: GridSpec) -> WaveletSystem:
    return WaveletSystem(atom, three_scales, torus)


def _random_function(grid: GridSpec, rng: np.random.Generator) -> SampledFunction:
    return SampledFunction(
        grid, rng.standard_normal(grid.extents) + 1j * rng.standard_normal(grid.extents)
    )


def _smooth_signal(grid: GridSpec) -> SampledFunction:
    x = grid.axes()[0]
    return SampledFunction(grid, np.exp(-np.pi * x * x) * np.cos(4.0 * np.pi * x))


def test_haar_basis_has_unit_bounds() -> None:
    """An orthonormal basis has A = B = 1 on every test space."""
    grid = GridSpec((0.0,), (1.0 / 16,), (64,))
    onb = OrthonormalSystem(grid)
    for space in (None, SpectralWindow(low=0.5, high=8.0)):
        report = frame_bounds(onb, space)
        assert report.method is FrameMethod.GRAM_EIGEN
        assert report.lower_bound == pytest.approx(1.0)
        assert report.upper_bound == pytest.approx(1.0)
        assert report.ratio == pytest.approx(1.0)


def test_haar_matrix() -> None:
    """The Haar matrix is orthogonal and needs a power-of-two size."""
    mat = haar_matrix(8)
    np.testing.assert_allclose(mat @ mat.T, np.eye(8), atol=1e-14)
    with pytest.raises(DomainError):
        haar_matrix(6)


def test_analysis_and_synthesis_are_adjoint(system: WaveletSystem, torus, rng) -> None:
    """⟨T f, c⟩ = ⟨f, T* c⟩ on the torus."""
    f = _random_function(torus, rng)
    c = rng.standard_normal(system.size) + 1j * rng.standard_normal(system.size)
    lhs = np.vdot(c, system.analyze(f).values)
    rhs = f.inner(system.synthesize(c))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_off_grid_translations(
    atom: SampledFunction, three_scales: SamplingSet, torus: GridSpec, rng
) -> None:
    """Translations between grid nodes use the direct phase sums with the same results."""
    shifted = SamplingSet(
        three_scales.spec,
        [AffinePoint(p.x + 1.0 / 32, p.h) for p in three_scales.points],
        separation_certificate=three_scales.separation_certificate,
    )
    system = WaveletSystem(atom, shifted, torus)
    f = _random_function(torus, rng)
    c = rng.standard_normal(system.size) + 0j
    assert np.vdot(c, system.analyze(f).values) == pytest.approx(
        f.inner(system.synthesize(c)), rel=1e-10
    )
    mask = mode_mask(torus, None)
    np.testing.assert_allclose(
        system.analysis_matrix(mask) @ to_modes(f, mask), system.analyze(f).values, atol=1e-10
    )


def test_analysis_matrix_matches_fast_path(system: WaveletSystem, torus, rng) -> None:
    """The explicit matrix in mode coordinates reproduces analyze()."""
    f = _random_function(torus, rng)
    mask = mode_mask(torus, None)
    np.testing.assert_allclose(
        system.analysis_matrix(mask) @ to_modes(f, mask), system.analyze(f).values, atol=1e-10
    )


def test_analysis_is_linear(system: WaveletSystem, torus, rng) -> None:
    """T(af + bg) = aTf + bTg."""
    f, g = _random_function(torus, rng), _random_function(torus, rng)
    a, b = 2.0 - 1.0j, 0.5
    combined = f.with_samples(a * f.samples + b * g.samples)
    np.testing.assert_allclose(
        system.analyze(combined).values,
        a * system.analyze(f).values + b * system.analyze(g).values,
        atol=1e-10,
    )


def test_zero_signal(system: WaveletSystem, torus) -> None:
    """The zero function has zero coefficients and reconstructs trivially."""
    zero = SampledFunction(torus, np.zeros(torus.extents))
    assert not np.any(system.analyze(zero).values)
    result = reconstruct(zero, system, BAND)
    assert result.relative_error == 0.0
    assert result.iterations == 0


def test_frame_bounds_on_band(system: WaveletSystem) -> None:
    """Three dyadic scales form a frame on a band away from ξ = 0."""
    report = frame_bounds(system, BAND)
    assert report.method is FrameMethod.GRAM_EIGEN
    assert report.test_dimension == 56
    assert 0.0 < report.lower_bound <= report.upper_bound
    assert report.is_frame
    assert report.to_json()["test_space"] == {"low": 0.5, "high": 4.0, "cone": None}


def test_frame_inequality_on_random_band_functions(system: WaveletSystem, torus, rng) -> None:
    """A‖f‖² ≤ Σ|⟨f, π(z)ψ⟩|² ≤ B‖f‖² for functions in the band."""
    report = frame_bounds(system, BAND)
    mask = mode_mask(torus, BAND)
    n = int(mask.sum())
    for _ in range(100):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        f = from_modes(v, mask, torus)
        energy = float(np.sum(np.abs(system.analyze(f).values) ** 2))
        norm_sq = f.l2_norm() ** 2
        assert report.lower_bound * (1 - 1e-4) * norm_sq <= energy
        assert energy <= report.upper_bound * (1 + 1e-4) * norm_sq


def test_frame_operator_is_self_adjoint(system: WaveletSystem, torus, rng) -> None:
    """⟨Sf, g⟩ = ⟨f, Sg⟩ and ⟨Sf, f⟩ ≥ 0 in mode coordinates."""
    mask = mode_mask(torus, BAND)
    op = frame_operator(system, mask)
    n = int(mask.sum())
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    gap = abs(np.vdot(g, op.matvec(f)) - np.vdot(op.matvec(g), f))
    assert gap <= 1e-8 * np.linalg.norm(f) * np.linalg.norm(g)
    assert np.vdot(f, op.matvec(f)).real >= 0.0


def test_iterative_bounds_agree(system: WaveletSystem) -> None:
    """The matrix-free eigensolver reproduces the Gram eigenvalues."""
    exact = frame_bounds(system, BAND)
    iterative = frame_bounds(system, BAND, FrameConfig(gram_threshold=1, eig_tol=1e-10))
    assert iterative.method is FrameMethod.POWER_ITERATION
    scale = exact.upper_bound
    assert iterative.upper_bound == pytest.approx(exact.upper_bound, rel=1e-6)
    assert iterative.lower_bound == pytest.approx(exact.lower_bound, abs=1e-4 * scale)


def test_iterative_bounds_are_repeatable(system: WaveletSystem) -> None:
    """Two Lanczos runs on the same system return the same bounds bit for bit."""
    cfg = FrameConfig(gram_threshold=1)
    first = frame_bounds(system, BAND, cfg)
    second = frame_bounds(system, BAND, cfg)
    assert (first.lower_bound, first.upper_bound) == (second.lower_bound, second.upper_bound)


def test_removing_a_scale_lowers_the_lower_bound(
    atom: SampledFunction, three_scales: SamplingSet, torus: GridSpec
) -> None:
    """Dropping one scale never raises A, and the three drops together lose at least A/3."""
    full = frame_bounds(WaveletSystem(atom, three_scales, torus), BAND).lower_bound
    scales = sorted({p.h.params[0] for p in three_scales.points})
    assert len(scales) == 3
    reduced = []
    for scale in scales:
        drop = [i for i, p in enumerate(three_scales.points) if p.h.params[0] == scale]
        system = WaveletSystem(atom, three_scales.without(drop), torus)
        reduced.append(frame_bounds(system, BAND).lower_bound)
    assert all(a <= full * (1 + 1e-10) for a in reduced)
    # the three reduced operators sum to twice the full one
    assert min(reduced) <= 2.0 * full / 3.0 * (1 + 1e-9)


def test_empty_test_space(system: WaveletSystem) -> None:
    """A band with no torus modes is rejected."""
    with pytest.raises(EmptySetError):
        frame_bounds(system, SpectralWindow(low=100.0, high=200.0))


def test_reconstruct_recovers_projection(system: WaveletSystem, torus) -> None:
    """S⁻¹S f equals the band projection of f."""
    f = _smooth_signal(torus)
    bounds = frame_bounds(system, BAND)
    cfg = FrameConfig(cg_tol=1e-10)
    result = reconstruct(f, system, BAND, bounds, cfg)
    assert result.relative_error < 1e-5
    assert bounds.reconstruction_error == result.relative_error
    assert result.iterations > 0


def test_dual_coefficients_synthesize_the_signal(system: WaveletSystem, torus) -> None:
    """Σ dual_z π(z)ψ reproduces f on the test space."""
    f = _smooth_signal(torus)
    mask = mode_mask(torus, BAND)
    dual = dual_coefficients(f, system, BAND)
    np.testing.assert_allclose(
        system.synthesize_modes(dual, mask), to_modes(f, mask), atol=1e-8
    )


def test_truncated_points_are_flagged(atom: SampledFunction, sim1, torus) -> None:
    """A translation far outside the window is marked as wrapped."""
    h = sim1.identity()
    z_set = SamplingSet(sim1, [AffinePoint([100.0], h), AffinePoint([0.0], h)])
    system = WaveletSystem(atom, z_set, torus)
    assert system.truncated.tolist() == [True, False]


def test_cone_test_space() -> None:
    """The cone keeps modes with |ξ₂| ≤ cone·|ξ₁|."""
    grid = GridSpec.centered(2, 1.0, 1.0 / 4)
    mask = SpectralWindow(cone=0.5).mask(grid)
    xi1, xi2 = np.meshgrid(*grid.frequencies(), indexing="ij")
    assert np.array_equal(mask, np.abs(xi2) <= 0.5 * np.abs(xi1))


def test_coefficient_norm_is_l2_for_p_q_2(system: WaveletSystem, torus, rng) -> None:
    """With p = q = 2 and no weight the mixed norm is the ℓ² norm."""
    c = system.analyze(_random_function(torus, rng))
    assert coefficient_norm(c, 2, 2, WeightSpec()) == pytest.approx(np.linalg.norm(c.values))


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_coefficient_norm_matches_besov(sim1, rng, p: float) -> None:
    """On dyadic dilations the weighted norm is the Besov sequence norm."""
    dilations = [sim1.element([2.0**j]) for j in range(3)]
    z_set = build_product_grid(sim1, dilations, 1.0, translations=range(-2, 3))
    values = rng.standard_normal(len(z_set))
    c = CoefficientArray(values, z_set)
    alpha = 0.7
    expected = besov_sequence_norm(values, z_set.level, alpha, p, p, 1)
    weight = WeightSpec(besov_alpha=alpha, p=p, q=p)
    assert coefficient_norm(c, p, p, weight) == pytest.approx(expected, rel=1e-12)


def test_coefficient_norm_is_a_norm(three_scales: SamplingSet, rng) -> None:
    """Homogeneity and the triangle inequality hold for mixed weighted norms."""
    weight = WeightSpec(s=1.0)
    n = len(three_scales)
    for p, q in [(1.0, 2.0), (2.0, 1.0), (1.5, math.inf)]:
        a = CoefficientArray(rng.standard_normal(n), three_scales)
        b = CoefficientArray(rng.standard_normal(n), three_scales)
        na, nb = coefficient_norm(a, p, q, weight), coefficient_norm(b, p, q, weight)
        scaled = CoefficientArray(-3.0 * a.values, three_scales)
        assert coefficient_norm(scaled, p, q, weight) == pytest.approx(3.0 * na)
        total = CoefficientArray(a.values + b.values, three_scales)
        assert coefficient_norm(total, p, q, weight) <= na + nb + 1e-12


def test_coefficient_norm_validation(three_scales: SamplingSet) -> None:
    """Exponents below 1 and misshapen arrays are rejected."""
    c = CoefficientArray(np.ones(len(three_scales)), three_scales)
    with pytest.raises(DomainError):
        coefficient_norm(c, 0.5, 2.0, WeightSpec())
    with pytest.raises(DimensionError):
        CoefficientArray(np.ones(3), three_scales)
    with pytest.raises(DimensionError):
        besov_sequence_norm(np.ones(3), [0, 1], 1.0, 2.0, 2.0, 1)


def test_analysis_of_a_single_atom(atom: SampledFunction, three_scales: SamplingSet, torus) -> None:
    """f = π(z₀)ψ has coefficient ‖f‖² at z₀."""
    i0 = len(three_scales) // 2
    unit = np.zeros(len(three_scales))
    unit[i0] = 1.0
    f = synthesis(CoefficientArray(unit, three_scales), atom, torus)
    coeffs = analysis(f, atom, three_scales)
    assert coeffs.values[i0] == pytest.approx(f.l2_norm() ** 2, rel=1e-8)
