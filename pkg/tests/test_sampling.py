"""Tests for sampling sets and their separation and density certificates."""

import math

import numpy as np
import pytest

from dilframe.errors import DimensionError, DomainError, EmptySetError
from dilframe.groups import AffinePoint, DilationGroupSpec
from dilframe.sampled import GridSpec
from dilframe.sampling import (
    Neighborhood,
    Region,
    SamplingSet,
    build_aligned_grid,
    build_grid_thm12,
    build_product_grid,
    certify_dense,
    certify_separated,
    greedy_extend,
    relative_chart,
    sampling_set_from_records,
    sampling_set_to_json,
    square_neighborhood,
)

LINE = Region((-10.0,), (10.0,), (0.0,), (0.0,))


def _lattice(spec: DilationGroupSpec, step: float) -> SamplingSet:
    return build_product_grid(spec, [spec.identity()], step, translations=range(-11, 12))


def test_integers_are_dense(sim1, rng: np.random.Generator) -> None:
    """ℤ × {id} covers [-10, 10] with U = (-0.6, 0.6) × W."""
    nbhd = Neighborhood(0.6, (0.1,))
    assert certify_dense(_lattice(sim1, 1.0), nbhd, LINE, rng).ok


def test_even_integers_are_not_dense(sim1, rng: np.random.Generator) -> None:
    """2ℤ leaves odd integers uncovered; the first witness is x = -5."""
    nbhd = Neighborhood(0.6, (0.1,))
    result = certify_dense(_lattice(sim1, 2.0), nbhd, LINE, rng)
    assert not result.ok
    assert result.witness["x"] == [-5.0]


def test_product_grid_is_separated(sim1) -> None:
    """A single-dilation lattice is separated with radius δ/2."""
    z_set = _lattice(sim1, 1.0)
    assert z_set.separation_certificate is not None
    assert z_set.separation_certificate.translation_radius == 0.5
    assert certify_separated(z_set, z_set.separation_certificate).ok


def test_overlapping_points_fail_separation(sim1) -> None:
    """Two points closer than 2ρ at the same dilation overlap."""
    h = sim1.identity()
    z_set = SamplingSet(sim1, [AffinePoint(np.array([0.0]), h), AffinePoint(np.array([0.5]), h)])
    result = certify_separated(z_set, Neighborhood(0.5, (0.1,)))
    assert not result.ok
    assert result.witness == (0, 1)


def test_grid_thm12_is_separated(sim2) -> None:
    """The δ₁/δ₂ similitude grid certifies its own separation."""
    z_set = build_grid_thm12(sim2, 0.5, 0.5, range(-1, 2), window=2.0, n_rotations=4)
    assert z_set.separation_certificate is not None
    assert set(z_set.level) == {-1, 0, 1}
    assert z_set.construction["rotation_covering_radius"] == pytest.approx(math.pi / 4)
    assert np.all(np.abs(z_set.translations) <= 2.0 + 1e-9)


def test_grid_thm12_levels_scale(sim1) -> None:
    """Level j uses scale (1+δ₁)^{-j}."""
    z_set = build_grid_thm12(sim1, 1.0, 1.0, range(0, 3), translations=range(-1, 2))
    scales = sorted({abs(h.params[0]) for h in z_set.dilations})
    assert scales == pytest.approx([0.25, 0.5, 1.0])
    assert len(z_set) == 9


def test_grid_thm12_validation(sim1, diag2) -> None:
    """Bad parameters raise domain and empty-set errors."""
    with pytest.raises(DomainError):
        build_grid_thm12(diag2, 0.5, 0.5, range(1), translations=range(1))
    with pytest.raises(DomainError):
        build_grid_thm12(sim1, 0.0, 0.5, range(1), translations=range(1))
    with pytest.raises(EmptySetError):
        build_grid_thm12(sim1, 0.5, 0.5, range(0), translations=range(1))
    with pytest.raises(DomainError):
        build_grid_thm12(sim1, 0.5, 0.5, range(1))


def test_greedy_extension_is_separated_and_dense(sim1) -> None:
    """Greedy V-separated sets are V²-dense on the same candidate sample."""
    nbhd = Neighborhood(0.5, (0.25,))
    region = Region((-3.0,), (3.0,), (-1.0,), (1.0,))
    z_set = greedy_extend(sim1, nbhd, region, np.random.default_rng(5), n_random=500)
    assert certify_separated(z_set, nbhd).ok
    square = square_neighborhood(sim1, nbhd)
    assert z_set.density_certificate == square
    assert certify_dense(z_set, square, region, np.random.default_rng(5), n_random=500).ok


def test_removing_points_drops_density(sim1) -> None:
    """without() keeps the separation certificate and clears the density one."""
    nbhd = Neighborhood(0.5, (0.25,))
    region = Region((-2.0,), (2.0,), (0.0,), (0.0,))
    z_set = greedy_extend(sim1, nbhd, region, np.random.default_rng(1), n_random=50)
    smaller = z_set.without([0])
    assert len(smaller) == len(z_set) - 1
    assert smaller.separation_certificate == nbhd
    assert smaller.density_certificate is None
    with pytest.raises(EmptySetError):
        z_set.without(list(range(len(z_set))))


def test_relative_chart_shearlet(shear) -> None:
    """Relative to the identity, the chart of (a, b) is (|log a|, |b|)."""
    same, coords = relative_chart(shear, np.array([[1.0, 0.0]]), np.array([2.0, -0.5]))
    assert same[0]
    np.testing.assert_allclose(coords[0], [math.log(2.0), 0.5])
    same, _ = relative_chart(shear, np.array([[1.0, 0.0]]), np.array([-2.0, 0.0]))
    assert not same[0]


def test_neighborhood_validation(sim2) -> None:
    """Halfwidth counts must match the chart dimension."""
    with pytest.raises(DomainError):
        Neighborhood(0.0, (0.1,))
    z_set = build_grid_thm12(sim2, 0.5, 0.5, range(1), translations=range(1))
    with pytest.raises(DimensionError):
        certify_separated(z_set, Neighborhood(0.1, (0.1,)))


def test_aligned_grid_contains_centre(sim1, line_grid: GridSpec) -> None:
    """Strides follow δ‖h‖/Δ and the grid centre stays a node."""
    z_set = build_aligned_grid(sim1, [sim1.element([2.0])], line_grid, 0.25)
    assert z_set.construction["strides"] == [[16]]
    assert len(z_set) == 9
    assert 0.0 in z_set.translations[:, 0]


def test_json_records_round_trip(sim1) -> None:
    """Header and rows rebuild the same set."""
    z_set = _lattice(sim1, 1.0)
    header = sampling_set_to_json(z_set)
    rows = [
        {**p.to_json(), "level": lvl} for p, lvl in zip(z_set.points, z_set.level, strict=True)
    ]
    again = sampling_set_from_records(header, rows)
    assert len(again) == len(z_set)
    assert again.separation_certificate == z_set.separation_certificate
    np.testing.assert_array_equal(again.translations, z_set.translations)


def test_empty_set_is_rejected(sim1) -> None:
    """A sampling set needs at least one point."""
    with pytest.raises(EmptySetError):
        SamplingSet(sim1, [])


def test_repeated_points_are_rejected(sim1) -> None:
    """The same (x, h) twice, also up to rounding noise, is not a sampling set."""
    h = sim1.element([2.0])
    with pytest.raises(DomainError, match="repeats"):
        SamplingSet(sim1, [AffinePoint([0.5], h), AffinePoint([0.5 + 1e-15], h)])
    with pytest.raises(DomainError):
        build_product_grid(sim1, [h, sim1.element([2.0])], 0.5, translations=range(-1, 2))
    # same translation under different dilations is fine
    assert len(SamplingSet(sim1, [AffinePoint([0.5], h), AffinePoint([0.5], sim1.identity())])) == 2


def test_thm12_grids_have_distinct_points(sim2) -> None:
    """Scales, rotations and translations of the δ-grid never coincide."""
    z_set = build_grid_thm12(sim2, 0.5, 0.5, range(-1, 2), window=1.0, n_rotations=6)
    keys = {(tuple(np.round(p.x, 9)), tuple(np.round(p.h.params, 9))) for p in z_set.points}
    assert len(keys) == len(z_set)
