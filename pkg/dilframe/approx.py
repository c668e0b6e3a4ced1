"""Greedy n-term approximation in a wavelet frame and the summability diagnostic."""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np
from scipy import linalg

from dilframe.config import ApproxConfig, FrameConfig
from dilframe.errors import DimensionError, DomainError
from dilframe.frames import (
    CoefficientArray,
    FrameSystem,
    SpectralWindow,
    dual_coefficients,
    mode_mask,
    to_modes,
)
from dilframe.sampled import SampledFunction

logger = logging.getLogger("dilframe.approx")


class Strategy(StrEnum):
    LARGEST_DUAL = "largest_dual"
    OMP_LITE = "omp_lite"


@dataclass
class ApproxCurve:
    """E_n for n = 1..n_max (upper bounds from the greedy selection, in L² units)."""

    n_values: list[int]
    errors: list[float]
    p: float
    strategy: str
    signal_norm: float
    selection: list[int] = field(default_factory=list)
    summability_lhs: float = 0.0
    coeff_p_norm: float | None = None

    def truncated(self, n_max: int) -> "ApproxCurve":
        keep = [i for i, n in enumerate(self.n_values) if n <= n_max]
        curve = ApproxCurve(
            [self.n_values[i] for i in keep],
            [self.errors[i] for i in keep],
            self.p,
            self.strategy,
            self.signal_norm,
            self.selection[:n_max],
        )
        curve.summability_lhs = summability_lhs(curve.n_values, curve.errors, self.p)
        return curve

    def to_rows(self) -> list[dict[str, Any]]:
        return [{"n": n, "E_n": e} for n, e in zip(self.n_values, self.errors, strict=True)]


def summability_lhs(n_values: list[int], errors: list[float], p: float) -> float:
    """(Σ n^{-p/2} E_n^p)^{1/p} over the computed range."""
    if not n_values:
        return 0.0
    n = np.asarray(n_values, dtype=float)
    e = np.asarray(errors, dtype=float)
    return float(np.sum(n ** (-p / 2.0) * e**p) ** (1.0 / p))


class _Dictionary:
    """Atoms of a frame system as columns in the orthonormal mode coordinates of a test space."""

    def __init__(
        self,
        f: SampledFunction,
        system: FrameSystem,
        test_space: SpectralWindow | None,
        cfg: ApproxConfig,
    ) -> None:
        grid = system.grid
        if f.grid != grid:
            f = f.embed(grid)
        mask = mode_mask(grid, test_space)
        self.target = to_modes(f, mask)
        self.atoms = system.analysis_matrix(mask).conj().T
        self.norms = np.linalg.norm(self.atoms, axis=0)
        self.cfg = cfg

    def residual(self, selection: list[int], warn: bool = True) -> tuple[float, np.ndarray]:
        """Least-squares refit on the selected atoms; returns (‖residual‖, residual)."""
        if not selection:
            return float(np.linalg.norm(self.target)), self.target
        sub = self.atoms[:, selection]
        coeffs, _, rank, _ = linalg.lstsq(sub, self.target, cond=self.cfg.lstsq_tol)
        if warn and rank < len(selection):
            logger.warning(
                "Rank-deficient selection (%d atoms, rank %d); using the regularized solution",
                len(selection),
                rank,
            )
        res = self.target - sub @ coeffs
        return float(np.linalg.norm(res)), res


def _largest_dual_order(
    f: SampledFunction,
    system: FrameSystem,
    test_space: SpectralWindow | None,
    frame_cfg: FrameConfig,
) -> list[int]:
    dual = dual_coefficients(f, system, test_space, frame_cfg)
    # Stable sort keeps ascending index order among equal magnitudes
    return [int(i) for i in np.argsort(-np.abs(dual), kind="stable")]


def greedy_n_term(
    f: SampledFunction,
    system: FrameSystem,
    n_max: int,
    strategy: Strategy | str = Strategy.LARGEST_DUAL,
    p: float = 1.5,
    test_space: SpectralWindow | None = None,
    cfg: ApproxConfig | None = None,
    frame_cfg: FrameConfig | None = None,
) -> ApproxCurve:
    """
    Nested greedy selections S₁ ⊂ S₂ ⊂ ... with a least-squares refit at every n.

    largest_dual ranks atoms once by the magnitude of their canonical dual coefficient;
    omp_lite adds the atom of largest normalized correlation with the current residual.
    Ties go to the smaller index.
    """
    cfg = cfg or ApproxConfig()
    strategy = Strategy(strategy)
    if not 1 <= n_max <= system.size:
        raise DomainError(f"n_max must lie in [1, {system.size}], got {n_max}")
    dictionary = _Dictionary(f, system, test_space, cfg)
    signal_norm = float(np.linalg.norm(dictionary.target))

    selection: list[int] = []
    errors: list[float] = []
    if strategy is Strategy.LARGEST_DUAL:
        order = _largest_dual_order(f, system, test_space, frame_cfg or FrameConfig())
        for n in range(1, n_max + 1):
            selection = order[:n]
            errors.append(dictionary.residual(selection)[0])
    else:
        available = np.ones(system.size, dtype=bool)
        norms = np.where(dictionary.norms > 0, dictionary.norms, np.inf)
        residual = dictionary.target
        for _ in range(n_max):
            scores = np.abs(dictionary.atoms.conj().T @ residual) / norms
            scores[~available] = -1.0
            pick = int(np.argmax(scores))
            available[pick] = False
            selection.append(pick)
            error, residual = dictionary.residual(selection)
            errors.append(error)

    # Selections are nested, so E_n is nonincreasing up to rounding
    errors = list(np.minimum.accumulate(errors))
    n_values = list(range(1, n_max + 1))
    curve = ApproxCurve(n_values, [float(e) for e in errors], p, strategy.value, signal_norm)
    curve.selection = list(selection)
    curve.summability_lhs = summability_lhs(n_values, curve.errors, p)
    logger.info(
        "Greedy %s: n_max=%d, E_1=%.3e, E_n_max=%.3e",
        strategy.value,
        n_max,
        curve.errors[0],
        curve.errors[-1],
    )
    return curve


def exhaustive_n_term(
    f: SampledFunction,
    system: FrameSystem,
    test_space: SpectralWindow | None = None,
    cfg: ApproxConfig | None = None,
) -> list[float]:
    """Exact E_n for n = 1..|Z| by trying every subset; only for |Z| ≤ exhaustive_limit."""
    cfg = cfg or ApproxConfig()
    if system.size > cfg.exhaustive_limit:
        raise DomainError(
            f"exhaustive search is limited to {cfg.exhaustive_limit} atoms, got {system.size}"
        )
    dictionary = _Dictionary(f, system, test_space, cfg)
    out = []
    for n in range(1, system.size + 1):
        best = min(
            dictionary.residual(list(subset), warn=False)[0]
            for subset in itertools.combinations(range(system.size), n)
        )
        out.append(best)
    logger.debug("Exhaustive E_n over %d atoms: %s", system.size, out)
    return out


@dataclass
class SummabilityReport:
    lhs: float
    rhs_norm: float
    fitted_C: float
    # Fitted C on the first half of the n-range, for the stability check
    fitted_C_half: float
    drift: float
    stable: bool
    passed: bool

    def to_json(self) -> dict[str, Any]:
        return dict(self.__dict__)


def _ratio(lhs: float, rhs: float) -> float:
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else math.inf
    return lhs / rhs


def summability_check(
    curve: ApproxCurve,
    coeffs: CoefficientArray | np.ndarray,
    p: float,
    cfg: ApproxConfig | None = None,
) -> SummabilityReport:
    """
    Compare (Σ n^{-p/2}E_n^p)^{1/p} with ‖c‖_p for the expansion coefficients c of the
    same signal; C = lhs/rhs is stable when it moves by less than stability_tol between
    the first half of the n-range and the whole range.
    """
    cfg = cfg or ApproxConfig()
    if not 1.0 <= p < 2.0:
        raise DomainError(f"p must lie in [1, 2), got {p}")
    values = coeffs.values if isinstance(coeffs, CoefficientArray) else np.asarray(coeffs)
    if values.ndim != 1:
        raise DimensionError("coefficients must be a flat array")
    rhs = float(np.linalg.norm(values, ord=p))
    lhs = summability_lhs(curve.n_values, curve.errors, p)
    half = curve.truncated(max(1, curve.n_values[-1] // 2)) if curve.n_values else curve
    half_lhs = summability_lhs(half.n_values, half.errors, p)
    fitted = _ratio(lhs, rhs)
    fitted_half = _ratio(half_lhs, rhs)
    if fitted == 0.0:
        drift = 0.0
    elif math.isinf(fitted):
        drift = math.inf
    else:
        drift = abs(fitted - fitted_half) / fitted
    stable = drift < cfg.stability_tol
    curve.coeff_p_norm = rhs
    report = SummabilityReport(
        lhs, rhs, fitted, fitted_half, drift, stable, math.isfinite(lhs) and stable
    )
    logger.info("Summability p=%.3g: lhs=%.4g, ‖c‖_p=%.4g, C=%.4g", p, lhs, rhs, fitted)
    return report


def batch_constant(reports: list[SummabilityReport]) -> float:
    """Single constant C for a batch of signals in one frame (the largest fitted ratio)."""
    if not reports:
        raise DomainError("no summability reports given")
    return max(r.fitted_C for r in reports)
