"""
Φ_ℓ(h) = ∫ A(ξ)^ℓ A(hᵀξ)^ℓ dξ, its analytic envelopes, embedding indices and control weights.

Quadrature strategy per family:

- similitude (and diagonal d=1): A depends on |ξ| only, so Φ reduces to a radial
  1-D integral, evaluated in s = e^u with breakpoints at the envelope kinks.
- diagonal d=2: iterated adaptive passes in log-coordinates on the positive orthant
  (the integrand is even in every coordinate), with breakpoints on the kink lines.
- shearlet: log-coordinate in ξ₁ > 0 (the integrand is even under ξ ↦ -ξ) and an
  algebraic tail map on ξ₂ ∈ ℝ, split at 0 and at the sheared zero -bξ₁/a^c.
- "tensor" method (always used for diagonal d ≥ 3): panel Gauss-Legendre with level doubling.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from scipy import ndimage, special

from dilframe import quadrature
from dilframe.config import QuadratureConfig
from dilframe.errors import (
    AccuracyError,
    ConditionError,
    DimensionError,
    DivergenceError,
    DomainError,
)
from dilframe.groups import (
    DilationGroupSpec,
    Family,
    GroupElement,
    haar_density,
    inverse,
    signed_power,
)

logger = logging.getLogger("dilframe.phi")

# Positive root of s = 1/(1+s): where min(s, 1/(1+s)) switches branch
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# Extra log-units kept around the feature region before the analytic tail margin
_FEATURE_PAD = 3.0

# Coarse samples per axis used to size the absolute tolerance
_PEAK_SAMPLES = 48


class PhiEstimate(NamedTuple):
    value: float
    error: float


def sphere_area(d: int) -> float:
    """|S^{d-1}|; equals 2 for d = 1."""
    return 2.0 * math.pi ** (d / 2.0) / special.gamma(d / 2.0)


def _effective_epsabs(cfg: QuadratureConfig, peak: float, width: float) -> float:
    """abs_tol capped relative to the integrand size, so that tiny Φ values are resolved."""
    return min(cfg.abs_tol, cfg.rel_tol * 1e-3 * peak * width) if peak > 0 else cfg.abs_tol


# --- scalar envelopes (hot loops of the nested quadrature) ---


def _radial_env(s: float) -> float:
    return min(s, 1.0 / (1.0 + s))


def _diag2_env(x: float, y: float) -> float:
    lo, hi = (x, y) if x <= y else (y, x)
    return min(lo / (1.0 + hi), 1.0 / (1.0 + math.hypot(x, y)))


def _shear_env(x1: float, x2: float) -> float:
    return min(abs(x1) / (1.0 + abs(x2)), 1.0 / (1.0 + math.hypot(x1, x2)))


# --- vectorized envelopes (tensor quadrature and tolerance sizing) ---


def _radial_env_vec(s: np.ndarray) -> np.ndarray:
    return np.minimum(s, 1.0 / (1.0 + s))


def _diag_env_vec(coords: list[np.ndarray]) -> np.ndarray:
    stacked = np.stack(np.broadcast_arrays(*coords), axis=0)
    m = np.min(stacked, axis=0)
    norm2 = np.sum(stacked * stacked, axis=0)
    near = m / (1.0 + np.sqrt(np.maximum(norm2 - m * m, 0.0)))
    return np.minimum(near, 1.0 / (1.0 + np.sqrt(norm2)))


def _shear_env_vec(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    near = np.abs(x1) / (1.0 + np.abs(x2))
    return np.minimum(near, 1.0 / (1.0 + np.hypot(x1, x2)))


# --- family integrals ---


def _radial_phi(d: int, r: float, ell: int, cfg: QuadratureConfig) -> PhiEstimate:
    """|S^{d-1}| ∫₀^∞ g(s)^ℓ g(rs)^ℓ s^{d-1} ds with g(s) = min(s, 1/(1+s)), in u = log s."""
    log_r = math.log(r)
    kinks = [math.log(GOLDEN), math.log(GOLDEN) - log_r]
    lo = min(kinks) - _FEATURE_PAD - quadrature.tail_margin(2 * ell + d)
    hi = max(kinks) + _FEATURE_PAD + quadrature.tail_margin(2 * ell - d)

    def integrand(u: float) -> float:
        s = math.exp(u)
        return (_radial_env(s) * _radial_env(r * s)) ** ell * math.exp(d * u)

    def integrand_vec(u: np.ndarray) -> np.ndarray:
        s = np.exp(u)
        return (_radial_env_vec(s) * _radial_env_vec(r * s)) ** ell * np.exp(d * u)

    grid = np.linspace(lo, hi, _PEAK_SAMPLES * 8)
    epsabs = _effective_epsabs(cfg, float(integrand_vec(grid).max()), hi - lo)
    breaks = [lo, *kinks, hi]
    if cfg.method == "tensor":
        result = quadrature.tensor_gauss(integrand_vec, [breaks], cfg, epsabs)
    else:
        result = quadrature.require(quadrature.piecewise_quad(integrand, breaks, cfg, epsabs), "Φ")
    area = sphere_area(d)
    return PhiEstimate(area * result.value, area * result.error)


def _log_box(a_abs: list[float], ell: int, d: int, extra: float = 0.0) -> list[tuple[float, float]]:
    """Per-coordinate log-ranges: the feature region padded by the analytic tail margins."""
    ranges = []
    for a in a_abs:
        feature_lo, feature_hi = min(0.0, -math.log(a)), max(0.0, -math.log(a))
        lo = feature_lo - _FEATURE_PAD - extra - quadrature.tail_margin(2 * ell + 1)
        hi = feature_hi + _FEATURE_PAD + extra + quadrature.tail_margin(2 * ell - d)
        ranges.append((lo, hi))
    return ranges


def _diagonal_tensor(a_abs: list[float], ell: int, cfg: QuadratureConfig) -> PhiEstimate:
    d = len(a_abs)
    box = _log_box(a_abs, ell, d)
    scales = np.asarray(a_abs)

    def integrand(*us: np.ndarray) -> np.ndarray:
        xs = [np.exp(u) for u in us]
        env = _diag_env_vec(xs) * _diag_env_vec([a * x for a, x in zip(scales, xs, strict=True)])
        jac = np.exp(sum(us))
        return np.asarray(env**ell * jac)

    breaks = []
    for (lo, hi), a in zip(box, a_abs, strict=True):
        inner = [v for v in (0.0, -math.log(a)) if lo < v < hi]
        breaks.append([lo, *inner, hi])
    coarse = [np.linspace(lo, hi, _PEAK_SAMPLES) for lo, hi in box]
    peak = float(integrand(*np.meshgrid(*coarse, indexing="ij")).max())
    volume = float(np.prod([hi - lo for lo, hi in box]))
    result = quadrature.tensor_gauss(integrand, breaks, cfg, _effective_epsabs(cfg, peak, volume))
    factor = 2.0**d
    return PhiEstimate(factor * result.value, factor * result.error)


def _diagonal2_nested(a1: float, a2: float, ell: int, cfg: QuadratureConfig) -> PhiEstimate:
    (lo1, hi1), (lo2, hi2) = _log_box([a1, a2], ell, 2)
    log_ratio = math.log(a1) - math.log(a2)

    def inner_integrand(u2: float, x1: float) -> float:
        x2 = math.exp(u2)
        return (_diag2_env(x1, x2) * _diag2_env(a1 * x1, a2 * x2)) ** ell * x2

    coarse1 = np.linspace(lo1, hi1, _PEAK_SAMPLES)
    coarse2 = np.linspace(lo2, hi2, _PEAK_SAMPLES)
    peak = max(
        inner_integrand(u2, math.exp(u1)) * math.exp(u1) for u1 in coarse1 for u2 in coarse2
    )
    epsabs = _effective_epsabs(cfg, peak, (hi1 - lo1) * (hi2 - lo2))
    inner_eps = epsabs / (hi1 - lo1)
    trouble: list[float] = []

    def outer_integrand(u1: float) -> float:
        x1 = math.exp(u1)
        breaks = [lo2, hi2] + [
            v for v in (u1, u1 + log_ratio, 0.0, -math.log(a2)) if lo2 < v < hi2
        ]
        part = quadrature.piecewise_quad(
            lambda u2: inner_integrand(u2, x1), breaks, cfg, inner_eps
        )
        if not part.converged:
            trouble.append(part.error)
        return part.value * x1

    outer_breaks = [lo1, hi1] + [v for v in (0.0, -math.log(a1)) if lo1 < v < hi1]
    outer = quadrature.piecewise_quad(outer_integrand, outer_breaks, cfg, epsabs)
    error = outer.error + (max(trouble) * (hi1 - lo1) if trouble else 0.0)
    if not outer.converged or error > quadrature.ACCEPT_SLACK * quadrature.tolerance(
        cfg, outer.value, epsabs
    ):
        raise AccuracyError(
            "Φ (diagonal): iterated quadrature did not reach tolerance",
            partial=4.0 * outer.value,
            error=4.0 * error,
        )
    return PhiEstimate(4.0 * outer.value, 4.0 * error)


def _shearlet_nested(a: float, b: float, c: float, ell: int, cfg: QuadratureConfig) -> PhiEstimate:
    ac = signed_power(a, c)
    extra = math.log1p(abs(b))
    ((lo, hi),) = _log_box([abs(a)], ell, 2, extra)

    def inner_integrand(x2: float, x1: float) -> float:
        return (_shear_env(x1, x2) * _shear_env(a * x1, b * x1 + ac * x2)) ** ell

    # Tolerance sizing: peak over a coarse grid of (log ξ₁, ξ₂)
    u_grid = np.linspace(lo, hi, _PEAK_SAMPLES)
    peak = 0.0
    for u in u_grid:
        x1 = math.exp(u)
        for x2 in (0.0, -b * x1 / ac, 1.0, -1.0):
            peak = max(peak, inner_integrand(x2, x1) * x1)
    epsabs = _effective_epsabs(cfg, peak, (hi - lo))
    inner_eps = epsabs / (hi - lo)
    trouble: list[float] = []

    def outer_integrand(u: float) -> float:
        x1 = math.exp(u)
        p0, p1 = sorted((0.0, -b * x1 / ac))
        breaks = [-math.inf, p0, p1, math.inf]
        part = quadrature.piecewise_quad(lambda x2: inner_integrand(x2, x1), breaks, cfg, inner_eps)
        if not part.converged:
            trouble.append(part.error)
        return part.value * x1

    outer_breaks = [lo, hi] + [v for v in (0.0, -math.log(abs(a))) if lo < v < hi]
    outer = quadrature.piecewise_quad(outer_integrand, outer_breaks, cfg, epsabs)
    error = outer.error + (max(trouble) * (hi - lo) if trouble else 0.0)
    if not outer.converged or error > quadrature.ACCEPT_SLACK * quadrature.tolerance(
        cfg, outer.value, epsabs
    ):
        raise AccuracyError(
            "Φ (shearlet): iterated quadrature did not reach tolerance",
            partial=2.0 * outer.value,
            error=2.0 * error,
        )
    return PhiEstimate(2.0 * outer.value, 2.0 * error)


def _shearlet_tensor(a: float, b: float, c: float, ell: int, cfg: QuadratureConfig) -> PhiEstimate:
    """ξ₁ = e^u, ξ₂ = sinh(v): both tails become exponentially decaying in (u, v)."""
    ac = signed_power(a, c)
    extra = math.log1p(abs(b))
    ((lo, hi),) = _log_box([abs(a)], ell, 2, extra)
    v_span = math.asinh(math.exp(hi) * (1.0 + abs(b)) / abs(ac)) + _FEATURE_PAD
    v_span += quadrature.tail_margin(2 * ell - 1)

    def integrand(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        x1, x2 = np.exp(u), np.sinh(v)
        env = _shear_env_vec(x1, x2) * _shear_env_vec(a * x1, b * x1 + ac * x2)
        return np.asarray(env**ell * x1 * np.cosh(v))

    coarse = np.meshgrid(
        np.linspace(lo, hi, _PEAK_SAMPLES), np.linspace(-v_span, v_span, 4 * _PEAK_SAMPLES),
        indexing="ij",
    )
    peak = float(integrand(*coarse).max())
    epsabs = _effective_epsabs(cfg, peak, (hi - lo) * 2.0 * v_span)
    u_breaks = [lo, hi] + [v for v in (0.0, -math.log(abs(a))) if lo < v < hi]
    result = quadrature.tensor_gauss(integrand, [u_breaks, [-v_span, 0.0, v_span]], cfg, epsabs)
    return PhiEstimate(2.0 * result.value, 2.0 * result.error)


def phi_ell(h: GroupElement, ell: int, quad: QuadratureConfig | None = None) -> PhiEstimate:
    """
    Evaluate Φ_ℓ(h) by quadrature.

    Args:
        h: dilation
        ell: exponent ℓ ≥ 1
        quad: tolerances and method (defaults: abs 1e-8, rel 1e-6, nested)

    Returns:
        PhiEstimate(value, error estimate)

    Raises:
        DivergenceError: 2ℓ ≤ d, where A(ξ)^ℓA(hᵀξ)^ℓ ~ |ξ|^{-2ℓ} is not integrable
        AccuracyError: quadrature failed; carries the partial value
    """
    cfg = quad or QuadratureConfig()
    spec = h.spec
    d = spec.dim
    if ell < 1:
        raise DomainError(f"ℓ must be a positive integer, got {ell}")
    if 2 * ell <= d:
        raise DivergenceError(
            f"Φ_{ell} diverges for d={d}: the integrand decays like |ξ|^(-{2 * ell}) at infinity"
        )

    if spec.family is Family.SIMILITUDE:
        result = _radial_phi(d, abs(h.params[0]), ell, cfg)
    elif spec.family is Family.DIAGONAL:
        a_abs = [abs(a) for a in h.params]
        if d == 1:
            result = _radial_phi(1, a_abs[0], ell, cfg)
        elif d == 2 and cfg.method == "nested":
            result = _diagonal2_nested(a_abs[0], a_abs[1], ell, cfg)
        else:
            result = _diagonal_tensor(a_abs, ell, cfg)
    else:
        a, b = h.params
        if cfg.method == "tensor":
            result = _shearlet_tensor(a, b, spec.c, ell, cfg)
        else:
            result = _shearlet_nested(a, b, spec.c, ell, cfg)

    logger.debug("Φ_%d(%s) = %.10g ± %.2g", ell, h.params, result.value, result.error)
    return result


def phi_ell_task(
    group: dict[str, Any], params: list[float], ell: int, quad: QuadratureConfig
) -> tuple[float, float]:
    """Picklable entry point for process-pool sweeps."""
    spec = DilationGroupSpec.from_json(group)
    est = phi_ell(spec.element(params), ell, quad)
    return est.value, est.error


# --- analytic envelopes ---


def phi_bound_similitude(h: GroupElement, ell: int) -> float:
    """min(r^{ℓ-d}, r^{d-ℓ}); Φ_ℓ is bounded by a constant multiple of it."""
    d = h.spec.dim
    if h.spec.family is not Family.SIMILITUDE:
        raise DimensionError("phi_bound_similitude needs a similitude element")
    if ell <= d:
        raise DomainError(f"the similitude envelope needs ℓ > d, got ℓ={ell}, d={d}")
    r = h.scale
    return min(r ** (ell - d), r ** (d - ell))


def shearlet_required_order(c: float, r1: float, r2: float) -> int:
    """Smallest t with t ≥ 3r₁ + (3+6|c|)r₂ + 6|c| + 2."""
    bound = 3.0 * r1 + (3.0 + 6.0 * abs(c)) * r2 + 6.0 * abs(c) + 2.0
    return math.ceil(bound - 1e-9)


def _check_shearlet_condition(h: GroupElement, t: int, r1: int, r2: int) -> None:
    if h.spec.family is not Family.SHEARLET:
        raise DimensionError("shearlet bounds need a shearlet element")
    if r2 <= 1:
        raise DomainError(f"the shearlet envelope needs r₂ > 1, got {r2}")
    required = shearlet_required_order(h.spec.c, r1, r2)
    if t < required:
        raise ConditionError(
            f"shearlet envelope needs t ≥ {required} for c={h.spec.c}, r1={r1}, r2={r2}; got t={t}",
            required=required,
        )


def phi_bound_shearlet(h: GroupElement, t: int, r1: int, r2: int) -> float:
    """(|a|+|a|⁻¹)^{-r₁}(1+|b|)^{-r₂}, valid for Φ_t under the order condition on t."""
    _check_shearlet_condition(h, t, r1, r2)
    a, b = h.params
    return (abs(a) + 1.0 / abs(a)) ** (-r1) * (1.0 + abs(b)) ** (-r2)


def phi_bound_shearlet_small_scale(h: GroupElement, t: int, r1: int, r2: int) -> float:
    """
    Sharper envelope for |a| ≤ 1: |a|^{u - |c|(1+r₂)}(1+|b|)^{-r₂},
    with u = r₁ + (1+2|c|)r₂ + 2|c|.
    """
    _check_shearlet_condition(h, t, r1, r2)
    a, b = h.params
    if abs(a) > 1.0:
        raise DomainError(f"the small-scale envelope needs |a| ≤ 1, got a={a}")
    c = abs(h.spec.c)
    u = r1 + (1.0 + 2.0 * c) * r2 + 2.0 * c
    return abs(a) ** (u - c * (1.0 + r2)) * (1.0 + abs(b)) ** (-r2)


@dataclass
class EnvelopeFit:
    """Empirical constant C* = sup values/bounds and where it is attained."""

    constant: float
    argmax: int
    ratios: np.ndarray = field(repr=False)


def fit_envelope_constant(values: Any, bounds: Any) -> EnvelopeFit:
    values = np.asarray(values, dtype=float)
    bounds = np.asarray(bounds, dtype=float)
    if values.shape != bounds.shape or values.size == 0:
        raise DimensionError("values and bounds must be non-empty and of equal shape")
    ratios = values / bounds
    idx = int(np.argmax(ratios))
    return EnvelopeFit(float(ratios.flat[idx]), idx, ratios)


def loglog_slope(r: Any, values: Any) -> float:
    """Least-squares slope of log Φ against log r."""
    return float(np.polyfit(np.log(np.asarray(r)), np.log(np.asarray(values)), 1)[0])


def product_envelope_gap(spec: DilationGroupSpec, xi: Any) -> np.ndarray:
    """
    A(ξ)^d / ∏ⱼ Aⱼ(ξⱼ) for the diagonal group, where Aⱼ(s) = min(|s|, 1/(1+|s|)) is the
    one-dimensional envelope. The ratio is at most 1 on the orbit.
    """
    if spec.family is not Family.DIAGONAL:
        raise DimensionError("the product envelope inequality is stated for the diagonal group")
    arr = np.abs(np.atleast_2d(np.asarray(xi, dtype=float)))
    env = _diag_env_vec(list(np.moveaxis(arr, -1, 0)))
    factors = np.prod(_radial_env_vec(arr), axis=-1)
    return np.asarray(env**spec.dim / factors)


def phi_product_bound(h: GroupElement, ell: int, quad: QuadratureConfig | None = None) -> float:
    """∏ⱼ Φ^{(1)}_ℓ(aⱼ), which dominates Φ_{ℓd}(h) for a diagonal h."""
    if h.spec.family is not Family.DIAGONAL:
        raise DimensionError("phi_product_bound needs a diagonal element")
    cfg = quad or QuadratureConfig()
    one_d = DilationGroupSpec(Family.DIAGONAL, 1)
    return float(np.prod([phi_ell(one_d.element([a]), ell, cfg).value for a in h.params]))


# --- weights and embedding indices ---


@dataclass(frozen=True)
class WeightSpec:
    """
    Weight v(x,h) = (1+|x|+‖h‖)^s w(h) on G, the exponents of Y = L^{p,q}_v(G),
    and the family-specific majorant parameters of w₀.
    """

    # Translation-weight exponent s ≥ 0
    s: float = 0.0
    # Integrability exponents in [1, ∞]
    p: float = 2.0
    q: float = 2.0
    # Besov smoothness α; when set, w(rS) = r^{-α-d/2+d/q} (similitude only)
    besov_alpha: float | None = None
    # similitude: w₀(h) ≤ (r + r⁻¹)^β
    beta: float | None = None
    # diagonal: w₀(h) ≤ ∏ (|aⱼ| + |aⱼ|⁻¹)^α
    alpha_exp: float | None = None
    # shearlet: w₀(h) = (|a|+|a|⁻¹)^{u₁}(|a|+|a|⁻¹+|a^c b|)^{u₂}
    u1: float | None = None
    u2: float | None = None

    def __post_init__(self) -> None:
        if self.s < 0:
            raise DomainError(f"s must be ≥ 0, got {self.s}")
        for name in ("p", "q"):
            value = getattr(self, name)
            if not value >= 1:
                raise DomainError(f"{name} must lie in [1, ∞], got {value}")
        for name in ("beta", "alpha_exp", "u1", "u2"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise DomainError(f"{name} must be ≥ 0, got {value}")

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "WeightSpec":
        aliases = {"alpha": "alpha_exp", "u_1": "u1", "u_2": "u2"}
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            name = aliases.get(key, key)
            if name not in cls.__dataclass_fields__:
                raise DomainError(f"unknown weight parameter {key!r}")
            kwargs[name] = float(value) if value is not None else None
        return cls(**kwargs)

    def to_json(self) -> dict[str, Any]:
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        return {k: v for k, v in values.items() if v is not None}


@dataclass
class EmbeddingReport:
    index_ell: int
    moment_order_t: int
    weight: WeightSpec
    embedding_weight_m_description: str
    # Moment order printed in the source for this parameter set, when it differs
    quoted_moment_order: int | None = None
    discrepancy_note: str | None = None
    # Shearlet only: decay exponents used to establish the embedding
    r1: float | None = None
    r2: float | None = None

    def to_json(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "index_ell": self.index_ell,
            "moment_order_t": self.moment_order_t,
            "weight": self.weight.to_json(),
            "embedding_weight_m": self.embedding_weight_m_description,
        }
        for key in ("quoted_moment_order", "discrepancy_note", "r1", "r2"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        return data


def _ceil(x: float) -> int:
    return math.ceil(x - 1e-9)


def smallest_integer_above(x: float) -> int:
    return math.floor(x + 1e-12) + 1


# Quoted shearlet moment order for L^p coorbit spaces (c = 1/2, u₁ = 2, u₂ = s = 0)
_QUOTED_SHEARLET = ((0.5, 2.0, 0.0, 0.0), 127)


def shearlet_intermediate_exponents(
    c: float, u1: float, u2: float, s: float
) -> tuple[float, float]:
    """
    Decay exponents (r₁, r₂) of the shearlet envelope that make the index formula work:
    r₂ = u₂ + 2s + 8, r₁ = u₁ + u₂(2+|c|) + 2(2+|c|)s + 13|c|/2 + 37/2.
    With these, 3r₁ + (3+6|c|)r₂ + 6|c| + 2 equals the uncapped index bound exactly.
    """
    ac = abs(c)
    r2 = u2 + 2.0 * s + 8.0
    r1 = u1 + u2 * (2.0 + ac) + 2.0 * (2.0 + ac) * s + 6.5 * ac + 18.5
    return r1, r2


def embedding_index(spec: DilationGroupSpec, w: WeightSpec) -> EmbeddingReport:
    """
    Index ℓ of strong temperate embeddedness and the sufficient moment order t > ℓ+s+d+1.

    similitude: ℓ = β + 2s + 5d/2 + 3
    diagonal:   ℓ = d(α + 2s + 11/2)
    shearlet:   ℓ = ⌈3u₁ + (9+9|c|)u₂ + 18(1+|c|)s + 147|c|/2 + 163/2⌉
    """
    d, s = spec.dim, w.s
    r1 = r2 = None
    quoted = note = None
    if spec.family is Family.SIMILITUDE:
        if w.beta is None:
            raise DomainError("similitude weights need beta")
        ell = _ceil(w.beta + 2.0 * s + 2.5 * d + 3.0)
    elif spec.family is Family.DIAGONAL:
        if w.alpha_exp is None:
            raise DomainError("diagonal weights need alpha")
        ell = _ceil(d * (w.alpha_exp + 2.0 * s + 5.5))
    else:
        if w.u1 is None or w.u2 is None:
            raise DomainError("shearlet weights need u1 and u2")
        c = abs(spec.c)
        ell = _ceil(
            3.0 * w.u1 + (9.0 + 9.0 * c) * w.u2 + 18.0 * (1.0 + c) * s + 73.5 * c + 81.5
        )
        r1, r2 = shearlet_intermediate_exponents(spec.c, w.u1, w.u2, s)

    t = smallest_integer_above(ell + s + d + 1)

    if spec.family is Family.SHEARLET:
        key, value = _QUOTED_SHEARLET
        assert w.u1 is not None and w.u2 is not None
        if np.allclose((abs(spec.c), w.u1, w.u2, s), key) and value != t:
            quoted = value
            note = (
                f"composed formulas give ℓ={ell} and t={t}; the source quotes k ≥ {value} for "
                "this parameter set. Both values are reported; neither is claimed optimal."
            )

    m_desc = f"m(h) = w0(h) * |det h|^(-1/2) * (1 + ||h||)^{2 * (s + d + 1):g}"
    report = EmbeddingReport(ell, t, w, m_desc, quoted, note, r1, r2)
    logger.info("embedding index for %s: ℓ=%d, t=%d", spec.family.value, ell, t)
    return report


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def weight_w(spec: DilationGroupSpec, w: WeightSpec, h: GroupElement) -> float:
    """The dilation part w(h) of v(x,h); identically 1 unless a Besov weight is set."""
    if w.besov_alpha is None:
        return 1.0
    if spec.family is not Family.SIMILITUDE:
        raise DomainError("Besov weights are defined for the similitude family")
    d = spec.dim
    return h.scale ** (-w.besov_alpha - d / 2.0 + d * _inv(w.q))


def control_weight_majorant(spec: DilationGroupSpec, w: WeightSpec, h: GroupElement) -> float:
    """
    w₀(h) = (w(h)+w(h⁻¹))·max(Δ_G^{-1/q}, Δ_G^{1/q-1})·(|det h|^{1/q-1/p}+|det h|^{1/p-1/q})
            ·(1+‖h‖+‖h⁻¹‖)^s, with 1/∞ = 0.
    """
    if h.spec != spec:
        raise DimensionError("element does not belong to the given group")
    h_inv = inverse(h)
    inv_p, inv_q = _inv(w.p), _inv(w.q)
    delta = h.modular_G
    det = abs(h.det)
    return (
        (weight_w(spec, w, h) + weight_w(spec, w, h_inv))
        * max(delta ** (-inv_q), delta ** (inv_q - 1.0))
        * (det ** (inv_q - inv_p) + det ** (inv_p - inv_q))
        * (1.0 + h.opnorm + h_inv.opnorm) ** w.s
    )


def besov_majorant_exponent(d: int, alpha: float, q: float) -> float:
    """Exponent e with w₀(rS) ≼ (r + r⁻¹)^e for the Besov weight: 2d + |α - d/2 + d/q|."""
    return 2.0 * d + abs(alpha - d / 2.0 + d * _inv(q))


def family_weight(spec: DilationGroupSpec, w: WeightSpec, h: GroupElement) -> float:
    """The family majorant of w₀ described by beta / alpha / (u₁, u₂)."""
    if spec.family is Family.SIMILITUDE:
        r = h.scale
        return float((r + 1.0 / r) ** (w.beta or 0.0))
    if spec.family is Family.DIAGONAL:
        return float(np.prod([(abs(a) + 1.0 / abs(a)) ** (w.alpha_exp or 0.0) for a in h.params]))
    a, b = h.params
    base = abs(a) + 1.0 / abs(a)
    return float(base ** (w.u1 or 0.0) * (base + abs(signed_power(a, spec.c) * b)) ** (w.u2 or 0.0))


def moment_order_for_besov(d: int, alpha: float, q: float) -> int:
    """Smallest integer t > |α - d/2 + d/q| + 11d/2 + 3."""
    if not 1 <= q < math.inf:
        raise DomainError(f"q must lie in [1, ∞), got {q}")
    return smallest_integer_above(abs(alpha - d / 2.0 + d / q) + 5.5 * d + 3.0)


def moment_order_for_besov_composed(d: int, alpha: float, q: float) -> int:
    """
    The order obtained by composing the similitude index (β = 2d + |α-d/2+d/q|, s = 0)
    with t > ℓ + d + 1; one more than moment_order_for_besov.
    """
    if not 1 <= q < math.inf:
        raise DomainError(f"q must lie in [1, ∞), got {q}")
    ell = _ceil(besov_majorant_exponent(d, alpha, q) + 2.5 * d + 3.0)
    return smallest_integer_above(ell + d + 1)


# --- amalgam diagnostic ---


def embedding_weight_m(spec: DilationGroupSpec, w: WeightSpec, h: GroupElement) -> float:
    """m(h) = w₀(h)|det h|^{-1/2}(1+‖h‖)^{2(s+d+1)}."""
    d = spec.dim
    return (
        control_weight_majorant(spec, w, h)
        * abs(h.det) ** -0.5
        * (1.0 + h.opnorm) ** (2.0 * (w.s + d + 1))
    )


def local_maximum(values: Any, footprint: int | tuple[int, ...] = 3) -> np.ndarray:
    """Sliding-window maximum over a grid of Φ values (nearest-edge extension)."""
    grid = np.asarray(values, dtype=float)
    return np.asarray(ndimage.maximum_filter(grid, size=footprint, mode="nearest"))


def chart_element(spec: DilationGroupSpec, coords: tuple[float, ...]) -> GroupElement:
    """
    Element with positive scales at log-chart coordinates: log r for similitudes,
    (log a₁, ..., log a_d) for diagonal, (log a, b) for shearlet.
    """
    if spec.family is Family.SIMILITUDE:
        r = math.exp(coords[0])
        return spec.element({1: (r,), 2: (r, 0.0), 3: (r, 1.0, 0.0, 0.0, 0.0)}[spec.dim])
    if spec.family is Family.DIAGONAL:
        return spec.element([math.exp(u) for u in coords])
    return spec.element([math.exp(coords[0]), coords[1]])


def amalgam_norm_estimate(
    spec: DilationGroupSpec,
    w: WeightSpec,
    ell: int,
    axes: list[np.ndarray],
    quad: QuadratureConfig | None = None,
    footprint: int = 3,
) -> float:
    """
    Riemann-sum estimate of ∫_H (local max of Φ_ℓ)(h) m(h) dh on a finite chart window.

    Φ and m depend on sign and rotation components only through the chart coordinates,
    so those components contribute a constant factor (sign count; SO(d) has unit mass).
    Growth of this number under window enlargement signals a failing embedding index.
    """
    expected = {Family.SIMILITUDE: 1, Family.DIAGONAL: spec.dim, Family.SHEARLET: 2}
    if len(axes) != expected[spec.family]:
        raise DimensionError(f"expected {expected[spec.family]} chart axes")
    cfg = quad or QuadratureConfig()
    mesh = np.meshgrid(*axes, indexing="ij")
    phi_vals = np.empty(mesh[0].shape)
    m_vals = np.empty(mesh[0].shape)
    density = np.empty(mesh[0].shape)
    for idx in np.ndindex(*mesh[0].shape):
        coords = tuple(float(g[idx]) for g in mesh)
        h = chart_element(spec, coords)
        phi_vals[idx] = phi_ell(h, ell, cfg).value
        m_vals[idx] = embedding_weight_m(spec, w, h)
        # Haar density in chart coordinates: dh = haar_density · |∂params/∂chart|
        if spec.family is Family.DIAGONAL:
            jac = float(np.prod([math.exp(u) for u in coords]))
        elif spec.family is Family.SIMILITUDE:
            jac = h.scale
        else:
            jac = abs(h.params[0])
        density[idx] = haar_density(h) * jac
    cell = float(np.prod([ax[1] - ax[0] for ax in axes]))
    signs = {Family.SIMILITUDE: 2.0 if spec.dim == 1 else 1.0, Family.DIAGONAL: 2.0**spec.dim}
    factor = signs.get(spec.family, 2.0)
    return float(factor * cell * np.sum(local_maximum(phi_vals, footprint) * m_vals * density))
