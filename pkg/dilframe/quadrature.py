"""Adaptive and panel Gauss-Legendre quadrature helpers."""

import logging
import math
from collections.abc import Callable, Sequence
from typing import NamedTuple

import numpy as np
from scipy import integrate

from dilframe.config import QuadratureConfig
from dilframe.errors import AccuracyError

logger = logging.getLogger("dilframe.quadrature")

# QUADPACK flags roundoff well before its estimate exceeds the target; accept within this factor
ACCEPT_SLACK = 10.0


class QuadResult(NamedTuple):
    value: float
    error: float
    # False when QUADPACK reported a problem and the error estimate missed the target
    converged: bool


def tolerance(cfg: QuadratureConfig, value: float, epsabs: float | None = None) -> float:
    eps = cfg.abs_tol if epsabs is None else epsabs
    return max(eps, cfg.rel_tol * abs(value))


def adaptive_quad(
    f: Callable[[float], float],
    a: float,
    b: float,
    cfg: QuadratureConfig,
    epsabs: float | None = None,
) -> QuadResult:
    """One QUADPACK pass on [a, b] (infinite ends use the algebraic tail map of QAGI)."""
    eps = cfg.abs_tol if epsabs is None else epsabs
    out = integrate.quad(f, a, b, epsabs=eps, epsrel=cfg.rel_tol, limit=cfg.limit, full_output=1)
    value, error = float(out[0]), float(out[1])
    converged = len(out) <= 3 or error <= ACCEPT_SLACK * tolerance(cfg, value, eps)
    if len(out) > 3:
        logger.debug("quad on [%g, %g]: %s (err %.3g)", a, b, str(out[3]).split("\n")[0], error)
    return QuadResult(value, error, converged)


def piecewise_quad(
    f: Callable[[float], float],
    breaks: Sequence[float],
    cfg: QuadratureConfig,
    epsabs: float | None = None,
) -> QuadResult:
    """Sum of adaptive passes over consecutive segments of sorted breakpoints."""
    points = sorted(set(breaks))
    total, error, converged = 0.0, 0.0, True
    for lo, hi in zip(points[:-1], points[1:], strict=True):
        part = adaptive_quad(f, lo, hi, cfg, epsabs)
        total += part.value
        error += part.error
        converged = converged and part.converged
    return QuadResult(total, error, converged)


def require(result: QuadResult, what: str) -> QuadResult:
    """Raise AccuracyError (carrying the partial value) for an unconverged result."""
    if not result.converged:
        raise AccuracyError(
            f"{what}: quadrature did not reach tolerance (value {result.value:.6g}, "
            f"error estimate {result.error:.3g})",
            partial=result.value,
            error=result.error,
        )
    return result


def _gauss_panels(breaks: np.ndarray, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive panels."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = breaks[:-1, np.newaxis], breaks[1:, np.newaxis]
    half = (hi - lo) / 2.0
    pts = (lo + hi) / 2.0 + half * x[np.newaxis, :]
    wts = half * w[np.newaxis, :]
    return pts.reshape(-1), wts.reshape(-1)


def _tensor_sum(
    func: Callable[..., np.ndarray], axes: list[tuple[np.ndarray, np.ndarray]]
) -> float:
    """Σ f(x) w(x) over a tensor grid; slabs along the first axis keep memory bounded."""
    if len(axes) == 1:
        pts, wts = axes[0]
        return float(np.sum(func(pts) * wts))
    rest = axes[1:]
    grids = np.meshgrid(*[p for p, _ in rest], indexing="ij")
    weights = rest[0][1]
    for _, w in rest[1:]:
        weights = np.multiply.outer(weights, w)
    total = 0.0
    first_pts, first_wts = axes[0]
    for x0, w0 in zip(first_pts, first_wts, strict=True):
        total += w0 * float(np.sum(func(x0, *grids) * weights))
    return total


def tensor_gauss(
    func: Callable[..., np.ndarray],
    breaks: list[Sequence[float]],
    cfg: QuadratureConfig,
    epsabs: float | None = None,
) -> QuadResult:
    """
    Panel Gauss-Legendre over a box with level doubling.

    Args:
        func: vectorized integrand taking one array per axis (broadcastable)
        breaks: initial panel boundaries per axis (integrand features should sit on them)
        cfg: tolerances; tensor_nodes per panel, tensor_max_panels per axis

    Every level halves all panels; the difference of consecutive levels is the error
    estimate. Raises AccuracyError with the last value once the panel cap is reached.
    """
    current = [np.asarray(sorted(set(b)), dtype=float) for b in breaks]
    previous: float | None = None
    while True:
        axes = [_gauss_panels(b, cfg.tensor_nodes) for b in current]
        value = _tensor_sum(func, axes)
        if previous is not None:
            error = abs(value - previous)
            if error <= tolerance(cfg, value, epsabs):
                return QuadResult(value, error, True)
            if max(len(b) - 1 for b in current) * 2 > cfg.tensor_max_panels:
                raise AccuracyError(
                    f"tensor quadrature stalled at {max(len(b) - 1 for b in current)} panels",
                    partial=value,
                    error=error,
                )
        previous = value
        current = [_halve(b) for b in current]


def _halve(b: np.ndarray) -> np.ndarray:
    mids = (b[:-1] + b[1:]) / 2.0
    out = np.empty(2 * len(b) - 1)
    out[0::2] = b
    out[1::2] = mids
    return out


def tail_margin(rate: float) -> float:
    """Distance in log-coordinates after which e^{-rate·u} drops below e^{-40}."""
    return 40.0 / rate if rate > 0 else math.inf
