"""Tests for continuous wavelet transform slices, decay fits and reconstruction."""

import math

import numpy as np
import pytest

from dilframe.atoms import BumpKind, build_atom, build_bump, check_moments
from dilframe.config import AtomConfig
from dilframe.cwt import (
    SliceTransform,
    analyze_slice,
    check_dilation_covariance,
    decay_envelope_check,
    haar_quadrature,
    reconstruct_continuous,
    shearlet_decay_check,
)
from dilframe.errors import ContractError, DomainError, ResolutionError
from dilframe.groups import DilationGroupSpec, Family
from dilframe.sampled import GridSpec, SampledFunction

FD = AtomConfig(derivative="finite_difference")


@pytest.fixture
def atom(sim1: DilationGroupSpec) -> SampledFunction:
    """ψ = ρ'' for a unit bump on [-1, 1]."""
    grid = GridSpec.centered(1, 1.25, 1.0 / 32)
    return build_atom(build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, grid), sim1, 2, FD)


@pytest.fixture
def signal() -> SampledFunction:
    """Derivative of a Gaussian on [-8, 8]: smooth, mean zero."""
    grid = GridSpec.centered(1, 8.0, 1.0 / 32)
    x = grid.axes()[0]
    return SampledFunction(grid, -2.0 * np.pi * x * np.exp(-np.pi * x * x))


def test_identity_slice_is_correlation(
    atom: SampledFunction, signal: SampledFunction, sim1
) -> None:
    """W f(x, id) equals Δ Σ f(y) ψ(y - x) at a grid node."""
    w = analyze_slice(signal, atom, sim1.identity())
    x = signal.grid.axes()[0]
    k = int(np.argmin(np.abs(x - 0.5)))
    shifted = atom.embed(atom.grid.padded(20))
    psi_at = np.interp(x - x[k], shifted.grid.axes()[0], shifted.samples.real)
    direct = float(np.sum(signal.samples.real * psi_at) * signal.grid.cell_volume)
    assert w.samples[k].real == pytest.approx(direct, rel=1e-8, abs=1e-12)


def test_slice_energy_matches_plancherel(
    atom: SampledFunction, signal: SampledFunction, sim1
) -> None:
    """Spatial and spectral energies of one slice agree."""
    transform = SliceTransform(signal, atom)
    for scale in (0.5, 1.0, 2.0):
        spatial, spectral = transform.slice_energy(sim1.element([scale]))
        assert spatial == pytest.approx(spectral, rel=1e-10)


def test_at_interpolates_slice(atom: SampledFunction, signal: SampledFunction, sim1) -> None:
    """Off-lattice evaluation reproduces the slice at lattice points."""
    h = sim1.element([1.5])
    transform = SliceTransform(signal, atom)
    grid_values = transform.slice(h).samples
    x = signal.grid.axes()[0]
    idx = [100, 256, 300]
    np.testing.assert_allclose(
        transform.at(h, x[idx][:, None]), grid_values[idx], rtol=1e-9, atol=1e-12
    )


def test_padding_check(atom: SampledFunction, signal: SampledFunction, sim1) -> None:
    """A dilated atom wider than the padding is rejected."""
    transform = SliceTransform(signal, atom)
    with pytest.raises(ResolutionError):
        transform.slice(sim1.element([100.0]))


def test_dilation_covariance(atom: SampledFunction, sim1) -> None:
    """W(π(0,g)f)(x, h) = W f(g⁻¹x, g⁻¹h)."""
    grid = GridSpec.centered(1, 10.0, 1.0 / 32)
    x = grid.axes()[0]
    f = SampledFunction(grid, np.exp(-np.pi * x * x))
    g = sim1.element([2.0])
    f_dilated = SampledFunction(grid, 2.0**-0.5 * np.exp(-np.pi * (x / 2.0) ** 2))
    assert check_dilation_covariance(f, atom, g, sim1.element([1.0]), f_dilated) < 1e-6


def test_haar_quadrature_weights(shear) -> None:
    """Shearlet nodes carry du·db/a."""
    nodes = haar_quadrature(
        shear, np.array([0.0, math.log(2.0)]), np.array([0.0, 1.0]), both_signs=False
    )
    assert len(nodes) == 4
    for h, weight in nodes:
        assert weight == pytest.approx(math.log(2.0) / h.params[0])
    with pytest.raises(DomainError):
        haar_quadrature(shear, np.array([0.0, 1.0]))


def test_continuous_reconstruction(atom: SampledFunction, signal: SampledFunction, sim1) -> None:
    """Σ_h w_h W f(·,h) * ψ_h / c_ψ recovers a mean-zero signal."""
    nodes = haar_quadrature(sim1, np.arange(-5.0, 7.0 + 1e-9, 0.05))
    result = reconstruct_continuous(signal, atom, nodes)
    assert result.stable
    assert result.admissibility_constant > 0
    assert result.relative_error < 1e-2


def test_reconstruct_zero_signal(atom: SampledFunction, sim1) -> None:
    """A zero signal reconstructs to zero without touching the nodes."""
    grid = GridSpec.centered(1, 2.0, 1.0 / 32)
    zero = SampledFunction(grid, np.zeros(grid.extents))
    result = reconstruct_continuous(zero, atom, [])
    assert result.relative_error == 0.0
    assert not np.any(result.function.samples)


def test_decay_check_needs_verified_moments(atom: SampledFunction, sim1) -> None:
    """The decay fit refuses atoms whose moments were not checked to order r."""
    elements = [sim1.element([0.5]), sim1.element([2.0])]
    with pytest.raises(ContractError):
        decay_envelope_check(atom, elements, 2, 1.0, None)
    report = check_moments(atom, sim1, 1, FD)
    with pytest.raises(ContractError):
        decay_envelope_check(atom, elements, 2, 1.0, report)


def test_decay_check_fits_constant(sim1) -> None:
    """With verified moments the fitted constant is finite and positive."""
    grid = GridSpec.centered(1, 1.25, 1.0 / 32)
    psi = build_atom(build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, grid), sim1, 4, FD)
    report = check_moments(psi, sim1, 4, FD)
    elements = [sim1.element([s]) for s in (0.5, 1.0, 2.0)]
    decay = decay_envelope_check(psi, elements, 4, 2.0, report)
    assert 0 < decay.constant < math.inf
    assert len(decay.per_element) == 3
    assert decay.envelope == "phi"
    assert decay.stable and decay.passed
    assert decay.drift < 0.1
    assert decay.refined_constant == pytest.approx(decay.constant, rel=0.1)


SHEAR_FD = AtomConfig(derivative="finite_difference", lattice_points=17)


@pytest.fixture
def plane_grid() -> GridSpec:
    return GridSpec.centered(2, 1.25, 1.0 / 16)


def test_shearlet_decay_refuses_unverified_atoms(shear, plane_grid: GridSpec) -> None:
    """A bare bump, or an atom verified below the required order, is a contract error."""
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, plane_grid)
    elements = [shear.element([1.0, 0.0]), shear.element([0.5, 1.0])]
    bare = check_moments(rho, shear, 2, SHEAR_FD)
    assert not bare.passed
    with pytest.raises(ContractError):
        shearlet_decay_check(rho, elements, 2.0, 1.0, 2.0, bare)
    with pytest.raises(ContractError):
        shearlet_decay_check(rho, elements, 2.0, 1.0, 2.0, None)

    psi = build_atom(rho, shear, 2, SHEAR_FD)
    low = check_moments(psi, shear, 2, SHEAR_FD)
    assert low.passed
    with pytest.raises(ContractError, match="order 22"):
        shearlet_decay_check(psi, elements, 2.0, 1.0, 2.0, low)


def test_shearlet_decay_is_window_stable(plane_grid: GridSpec) -> None:
    """With c = 0, r₁ = r₂ = 1/2 and m = 1 an order-6 atom suffices and C* is stable."""
    spec = DilationGroupSpec(Family.SHEARLET, 2, c=0.0)
    rho = build_bump(BumpKind.SMOOTH_EXPONENTIAL, 1.0, plane_grid)
    psi = build_atom(rho, spec, 6, SHEAR_FD)
    moments = check_moments(psi, spec, 6, SHEAR_FD)
    assert moments.passed
    elements = [spec.element(p) for p in ([1.0, 0.0], [0.5, 0.0], [2.0, 0.5], [0.5, -1.0])]
    decay = shearlet_decay_check(psi, elements, 1.0, 0.5, 0.5, moments)
    assert decay.envelope == "shearlet"
    assert 0 < decay.constant < math.inf
    assert decay.stable and decay.passed
    assert decay.to_json()["parameters"] == {"m": 1.0, "r1": 0.5, "r2": 0.5}


def test_shearlet_decay_rejects_other_families(atom: SampledFunction, sim1) -> None:
    """Only shearlet elements have an (a, b) envelope."""
    moments = check_moments(atom, sim1, 2, FD)
    with pytest.raises(DomainError):
        shearlet_decay_check(atom, [sim1.element([1.0])], 1.0, 0.5, 0.5, moments)
