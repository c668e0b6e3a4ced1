"""Tests for bumps, vanishing-moment atoms and the moment check."""

import numpy as np
import pytest

from dilframe.atoms import (
    BumpKind,
    build_atom,
    build_bump,
    check_moments,
    complement_test_points,
    moment_operator,
    schwartz_norm_estimate,
)
from dilframe.config import AtomConfig
from dilframe.errors import DimensionError, DomainError, ResolutionError
from dilframe.groups import DilationGroupSpec
from dilframe.sampled import GridSpec

FD = AtomConfig(derivative="finite_difference")


def test_bump_is_normalized_and_supported(line_grid: GridSpec) -> None:
    """A smooth bump has unit integral and vanishes outside its radius."""
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, line_grid)
    assert rho.integral().real == pytest.approx(1.0)
    x = line_grid.axes()[0]
    assert np.all(rho.samples[np.abs(x) >= 1.0] == 0.0)
    assert np.all(rho.samples.real >= 0.0)
    assert rho.metadata["smoothness"] == "inf"


def test_spline_bump_smoothness(line_grid: GridSpec) -> None:
    """A degree-k spline bump records C^{k-1} smoothness."""
    rho = build_bump("polynomial_spline", 1.0, line_grid, AtomConfig(spline_degree=5))
    assert rho.metadata["smoothness"] == 4
    assert rho.integral().real == pytest.approx(1.0)
    x = line_grid.axes()[0]
    assert np.all(rho.samples[np.abs(x) >= 1.0] == 0.0)


def test_bump_resolution_checks(line_grid: GridSpec) -> None:
    """Too few samples, a support outside the grid and a bad radius are rejected."""
    with pytest.raises(ResolutionError):
        build_bump(BumpKind.SMOOTH_EXPONENTIAL, 0.1, line_grid)
    with pytest.raises(ResolutionError):
        build_bump(BumpKind.SMOOTH_EXPONENTIAL, 3.0, line_grid)
    with pytest.raises(DomainError):
        build_bump(BumpKind.SMOOTH_EXPONENTIAL, -1.0, line_grid)


def test_moment_operators(sim2, diag2, shear) -> None:
    """Each family gets its own vanishing operator."""
    assert moment_operator(shear, 3).label == "d1^3"
    assert moment_operator(diag2, 3).label == "mixed^3"
    lap = moment_operator(sim2, 3)
    assert lap.label == "laplacian^2"
    assert sorted(lap.terms) == [(1.0, (0, 4)), (1.0, (4, 0)), (2.0, (2, 2))]
    with pytest.raises(DomainError):
        moment_operator(sim2, -1)


def test_laplacian_symbol(sim2) -> None:
    """Δ has symbol -(2π)²|ξ|²."""
    xi = [np.array([0.5]), np.array([1.0])]
    symbol = moment_operator(sim2, 2).symbol(xi)
    assert symbol[0] == pytest.approx(-(2 * np.pi) ** 2 * 1.25)


def test_finite_difference_atom_passes_moment_check(sim1, line_grid: GridSpec) -> None:
    """Stencil derivatives annihilate discrete moments below the order."""
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, line_grid)
    psi = build_atom(rho, sim1, 3, FD)
    assert psi.grid.extents[0] == line_grid.extents[0] + 2 * 4 * 3
    assert psi.metadata["moment_order"] == 3
    report = check_moments(psi, sim1, 3, FD)
    assert report.passed
    assert report.max_residual_on_complement < 1e-10
    assert report.test_points == 1


def test_spectral_atom_matches_finite_difference(sim1) -> None:
    """On a fine grid both derivative routes give the same ρ''."""
    grid = GridSpec.centered(1, 1.25, 1.0 / 512)
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, grid)
    cfg = AtomConfig(truncation_tol=1e-8)
    spectral = build_atom(rho, sim1, 2, cfg)
    fd = build_atom(rho, sim1, 2, AtomConfig(derivative="finite_difference")).crop(grid)
    scale = np.abs(fd.samples).max()
    np.testing.assert_allclose(spectral.samples, fd.samples, atol=1e-5 * scale)
    report = check_moments(spectral, sim1, 2, AtomConfig(moment_tol=1e-6))
    assert report.passed


def test_spectral_atom_rejects_coarse_grid(sim1) -> None:
    """A high-order spectral derivative on a coarse grid is unresolved."""
    grid = GridSpec.centered(1, 1.5, 1.0 / 16)
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, grid)
    with pytest.raises(ResolutionError):
        build_atom(rho, sim1, 4)


def test_moment_check_fails_below_order(sim1, line_grid: GridSpec) -> None:
    """An atom of order 1 does not have vanishing moments of order 3."""
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, line_grid)
    psi = build_atom(rho, sim1, 1, FD)
    report = check_moments(psi, sim1, 3, FD)
    assert not report.passed
    assert report.max_residual_on_complement > 1e-3


def test_shearlet_atom_vanishes_on_axis(shear) -> None:
    """∂₁^t ρ has vanishing moments along ξ₁ = 0."""
    grid = GridSpec.centered(2, 1.25, 1.0 / 16)
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, grid)
    cfg = AtomConfig(derivative="finite_difference", lattice_points=17)
    psi = build_atom(rho, shear, 2, cfg)
    points = complement_test_points(shear, psi.grid, cfg)
    assert np.all(points[:, 0] == 0.0)
    assert check_moments(psi, shear, 2, cfg).passed


def test_diagonal_complement_points(diag2) -> None:
    """Diagonal test points lie on the coordinate axes."""
    grid = GridSpec.centered(2, 1.0, 1.0 / 8)
    points = complement_test_points(diag2, grid, AtomConfig(lattice_points=9))
    assert points.shape == (18, 2)
    assert np.all(np.min(np.abs(points), axis=1) == 0.0)


def test_atom_dimension_mismatch(sim2, line_grid: GridSpec) -> None:
    """A 1-D bump cannot carry a 2-D atom."""
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, line_grid)
    with pytest.raises(DimensionError):
        build_atom(rho, sim2, 2)


def test_schwartz_norm_estimate(sim1, line_grid: GridSpec) -> None:
    """The lattice norm grows with r and m, starts at most ‖ψ‖₁, and is stable under padding."""
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, line_grid)
    psi = build_atom(rho, sim1, 2, FD)
    base = schwartz_norm_estimate(psi, 0, 0.0)
    assert 0.0 < base <= psi.l1_norm() * (1 + 1e-12)
    values = [[schwartz_norm_estimate(psi, r, m) for m in (0.0, 1.0, 2.5)] for r in range(3)]
    for row in values:
        assert row == sorted(row)
    for column in zip(*values, strict=True):
        assert list(column) == sorted(column)
    # the doubled lattice contains the coarse one
    coarse = schwartz_norm_estimate(psi, 2, 2.0, pad_factor=4)
    fine = schwartz_norm_estimate(psi, 2, 2.0, pad_factor=8)
    assert coarse <= fine * (1 + 1e-12)
    assert fine <= coarse * 1.05
