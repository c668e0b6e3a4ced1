"""Tests for Φ_ℓ, its envelopes, embedding indices and weights."""

import math

import numpy as np
import pytest
from scipy import integrate

from dilframe.config import QuadratureConfig
from dilframe.errors import ConditionError, DivergenceError, DomainError
from dilframe.groups import DilationGroupSpec, Family, inverse, random_element
from dilframe.phi import (
    WeightSpec,
    amalgam_norm_estimate,
    chart_element,
    control_weight_majorant,
    embedding_index,
    fit_envelope_constant,
    local_maximum,
    loglog_slope,
    moment_order_for_besov,
    moment_order_for_besov_composed,
    phi_bound_shearlet,
    phi_bound_shearlet_small_scale,
    phi_bound_similitude,
    phi_ell,
    phi_product_bound,
    product_envelope_gap,
    shearlet_intermediate_exponents,
    shearlet_required_order,
    sphere_area,
    weight_w,
)

QUAD = QuadratureConfig(rel_tol=1e-8)


def test_embedding_index_similitude(sim2) -> None:
    """d=2, β=4, s=0 gives ℓ=12 and t=16."""
    report = embedding_index(sim2, WeightSpec(beta=4, s=0))
    assert report.index_ell == 12
    assert report.moment_order_t == 16
    assert report.quoted_moment_order is None


def test_embedding_index_diagonal(diag2) -> None:
    """d=2, α=3, s=0 gives ℓ=17."""
    report = embedding_index(diag2, WeightSpec(alpha_exp=3, s=0))
    assert report.index_ell == 17
    assert report.moment_order_t == 21


def test_embedding_index_shearlet_with_quoted_value(shear) -> None:
    """c=1/2, u₁=2, u₂=0, s=0 gives ℓ=125; the quoted 127 is reported next to t=129."""
    report = embedding_index(shear, WeightSpec(u1=2, u2=0, s=0))
    assert report.index_ell == 125
    assert report.moment_order_t == 129
    assert report.quoted_moment_order == 127
    assert "127" in (report.discrepancy_note or "")
    data = report.to_json()
    assert data["r1"] == pytest.approx(2 + 6.5 * 0.5 + 18.5)
    assert data["r2"] == pytest.approx(8.0)


def test_shearlet_exponents_reproduce_index() -> None:
    """3r₁ + (3+6|c|)r₂ + 6|c| + 2 equals the uncapped shearlet index bound."""
    c, u1, u2, s = 0.5, 2.0, 1.0, 0.5
    r1, r2 = shearlet_intermediate_exponents(c, u1, u2, s)
    lhs = 3 * r1 + (3 + 6 * c) * r2 + 6 * c + 2
    rhs = 3 * u1 + (9 + 9 * c) * u2 + 18 * (1 + c) * s + 73.5 * c + 81.5
    assert lhs == pytest.approx(rhs)


def test_embedding_index_needs_family_parameters(sim2, shear) -> None:
    """Missing majorant parameters are a domain error."""
    with pytest.raises(DomainError):
        embedding_index(sim2, WeightSpec(s=1))
    with pytest.raises(DomainError):
        embedding_index(shear, WeightSpec(u1=1))


def test_weight_spec_validation() -> None:
    """Exponent ranges and unknown keys are rejected."""
    with pytest.raises(DomainError):
        WeightSpec(p=0.5)
    with pytest.raises(DomainError):
        WeightSpec(s=-1)
    with pytest.raises(DomainError):
        WeightSpec.from_json({"gamma": 1})
    assert WeightSpec.from_json({"alpha": 2, "u_1": 1}) == WeightSpec(alpha_exp=2, u1=1)


def test_besov_moment_orders() -> None:
    """The quoted Besov order and the composed order differ by one."""
    assert moment_order_for_besov(1, 0.5, 2.0) == 10
    assert moment_order_for_besov_composed(1, 0.5, 2.0) == 11
    with pytest.raises(DomainError):
        moment_order_for_besov(1, 0.5, math.inf)


def test_phi_divergence_and_domain(sim2) -> None:
    """2ℓ ≤ d diverges; ℓ < 1 is outside the domain."""
    with pytest.raises(DivergenceError):
        phi_ell(sim2.identity(), 1)
    with pytest.raises(DomainError):
        phi_ell(sim2.identity(), 0)


def test_phi_identity_closed_form() -> None:
    """Φ_ℓ(id) in d=1 matches an independent fine Riemann sum."""
    spec = DilationGroupSpec(Family.SIMILITUDE, 1)
    value = phi_ell(spec.identity(), 3, QUAD).value
    s = np.linspace(1e-6, 2000.0, 4_000_001)
    g = np.minimum(s, 1.0 / (1.0 + s))
    reference = 2.0 * integrate.trapezoid(g**6, s)
    assert value == pytest.approx(reference, rel=1e-4)


@pytest.mark.parametrize(
    "spec",
    [
        DilationGroupSpec(Family.SIMILITUDE, 1),
        DilationGroupSpec(Family.SIMILITUDE, 2),
        DilationGroupSpec(Family.DIAGONAL, 2),
        DilationGroupSpec(Family.SHEARLET, 2, c=0.5),
    ],
    ids=lambda s: f"{s.family.value}{s.dim}",
)
def test_phi_monotone_and_det_symmetric(spec: DilationGroupSpec, rng: np.random.Generator) -> None:
    """Φ_{ℓ+1} ≤ Φ_ℓ and Φ_ℓ(h⁻¹) = |det h|·Φ_ℓ(h)."""
    ell = 3
    for _ in range(3):
        h = random_element(spec, rng, log_scale=1.5, shear=2.0)
        low = phi_ell(h, ell, QUAD).value
        high = phi_ell(h, ell + 1, QUAD).value
        assert high <= low * (1 + 1e-6)
        inv = phi_ell(inverse(h), ell, QUAD).value
        assert inv == pytest.approx(abs(h.det) * low, rel=1e-4)


def test_phi_tensor_matches_nested(diag2) -> None:
    """Both quadrature methods agree on a diagonal element."""
    h = diag2.element([2.0, 0.5])
    nested = phi_ell(h, 3, QuadratureConfig(method="nested", rel_tol=1e-8)).value
    tensor = phi_ell(h, 3, QuadratureConfig(method="tensor", rel_tol=1e-8)).value
    assert tensor == pytest.approx(nested, rel=1e-4)


@pytest.mark.parametrize(("d", "ell"), [(1, 3), (2, 4)])
def test_similitude_envelope_slope(d: int, ell: int) -> None:
    """log-log slope of Φ_ℓ(r) on [1e-3, 1e-1] is ℓ - d within 0.25."""
    spec = DilationGroupSpec(Family.SIMILITUDE, d)
    r = np.geomspace(1e-3, 1e-1, 9)
    values = [phi_ell(chart_element(spec, (math.log(x),)), ell, QUAD).value for x in r]
    assert loglog_slope(r, values) == pytest.approx(ell - d, abs=0.25)
    bounds = [phi_bound_similitude(chart_element(spec, (math.log(x),)), ell) for x in r]
    fit = fit_envelope_constant(values, bounds)
    assert 0 < fit.constant < math.inf


def test_similitude_envelope_needs_ell_above_d(sim2) -> None:
    """The similitude envelope is stated for ℓ > d."""
    with pytest.raises(DomainError):
        phi_bound_similitude(sim2.identity(), 2)


def test_shearlet_envelope_order_condition(shear) -> None:
    """The shearlet envelope enforces t ≥ 3r₁ + (3+6|c|)r₂ + 6|c| + 2."""
    assert shearlet_required_order(0.5, 1, 2) == 20
    h = shear.element([0.5, 1.0])
    with pytest.raises(ConditionError) as exc:
        phi_bound_shearlet(h, 19, 1, 2)
    assert exc.value.required == 20
    assert phi_bound_shearlet(h, 20, 1, 2) == pytest.approx(2.5**-1 * 2.0**-2)
    small = phi_bound_shearlet_small_scale(h, 20, 1, 2)
    # u = 1 + 2·2 + 1 = 6; exponent 6 - 0.5·3 = 4.5
    assert small == pytest.approx(0.5**4.5 * 2.0**-2)
    with pytest.raises(DomainError):
        phi_bound_shearlet_small_scale(shear.element([2.0, 0.0]), 20, 1, 2)


def test_product_envelope_gap(diag2, rng: np.random.Generator) -> None:
    """A(ξ)^d ≤ ∏ Aⱼ(ξⱼ) for the diagonal group."""
    xi = rng.standard_normal((1000, 2)) * np.exp(rng.uniform(-3, 3, (1000, 1)))
    assert np.all(product_envelope_gap(diag2, xi) <= 1.0 + 1e-12)


def test_product_bound_dominates(diag2) -> None:
    """∏ Φ^{(1)}_ℓ(aⱼ) dominates Φ_{2ℓ}(h)."""
    h = diag2.element([3.0, 0.25])
    assert phi_ell(h, 4, QUAD).value <= phi_product_bound(h, 2, QUAD) * (1 + 1e-6)


def test_weights_and_majorant(sim2) -> None:
    """Besov weight r^{-α-d/2+d/q}; w₀ ≥ 2·w at the identity."""
    w = WeightSpec(besov_alpha=1.0, p=2, q=2)
    h = sim2.element([4.0, 0.0])
    assert weight_w(sim2, w, h) == pytest.approx(4.0 ** (-1.0 - 1.0 + 1.0))
    assert weight_w(sim2, WeightSpec(), h) == 1.0
    assert control_weight_majorant(sim2, WeightSpec(), sim2.identity()) == pytest.approx(4.0)


def test_local_maximum_and_amalgam(sim2) -> None:
    """The local maximum dominates its input; the amalgam estimate grows with the window."""
    values = np.array([0.0, 1.0, 0.0, 2.0, 0.0])
    np.testing.assert_array_equal(local_maximum(values, 3), [1.0, 1.0, 2.0, 2.0, 2.0])
    w = WeightSpec(beta=0.0, s=0.0)
    narrow = amalgam_norm_estimate(sim2, w, 12, [np.linspace(-1, 1, 9)], QUAD)
    wide = amalgam_norm_estimate(sim2, w, 12, [np.linspace(-2, 2, 17)], QUAD)
    assert 0 < narrow <= wide


def test_sphere_area() -> None:
    """|S⁰| = 2, |S¹| = 2π, |S²| = 4π."""
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
