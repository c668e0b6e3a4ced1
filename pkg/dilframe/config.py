"""Configuration loading from TOML file."""

import hashlib
import json
import os
import tomllib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from dilframe.errors import ConfigError

# Environment variable that overrides [cache].dir
CACHE_DIR_ENV = "DILFRAME_CACHE_DIR"


@dataclass(frozen=True)
class QuadratureConfig:
    """Adaptive quadrature settings for the Φ_ℓ integrals."""

    # Absolute error target per integral (0 means purely relative)
    abs_tol: float = 1e-8
    # Relative error target per integral
    rel_tol: float = 1e-6
    # Max subintervals per adaptive 1-D pass (QUADPACK limit)
    limit: int = 200
    # "nested": iterated adaptive 1-D passes; "tensor": panel Gauss-Legendre with level doubling
    method: str = "nested"
    # Gauss-Legendre nodes per panel for the tensor method
    tensor_nodes: int = 16
    # Panel count per axis at which tensor refinement gives up
    tensor_max_panels: int = 64


@dataclass
class AtomConfig:
    """Vanishing-moment atom construction and verification."""

    # "spectral" (FFT on a padded grid) or "finite_difference" (order-8 central stencil)
    derivative: str = "spectral"
    # Zero-padding factor for spectral differentiation
    pad_factor: int = 4
    # Max spectral content tolerated in the top band and outside the support
    truncation_tol: float = 1e-10
    # Minimum samples across the bump support per axis
    min_samples_across_support: int = 16
    # Degree of the polynomial spline bump
    spline_degree: int = 9
    # Full-moment operator for similitude atoms: "laplacian" or "mixed"
    similitude_operator: str = "laplacian"
    # Test points per complement hyperplane / axis
    lattice_points: int = 64
    # Largest |ξ₂| on the shearlet axis lattice
    max_shear_frequency: float = 1e3
    # Moment residual tolerance, relative to ‖ψ‖₁
    moment_tol: float = 1e-8


@dataclass
class CwtConfig:
    """Continuous wavelet transform settings."""

    # Periodization padding factor per axis
    pad_factor: int = 4
    # Relative drift of the admissibility constant that triggers a warning
    admissibility_drift: float = 0.1
    # Relative drift of a fitted decay constant under x-window doubling still counted stable
    decay_drift: float = 0.1


@dataclass
class FrameConfig:
    """Discrete frame analysis, bounds, and reconstruction."""

    # Zero-padding of the signal window before periodization (1: the window itself is the torus)
    pad_factor: int = 1
    # Rayleigh quotient tolerance of the iterative eigensolver
    eig_tol: float = 1e-6
    # Conjugate gradient relative residual tolerance
    cg_tol: float = 1e-8
    # Explicit Gram/dual computations are used up to this many points
    gram_threshold: int = 4000
    # A below this fraction of B is reported as "not a frame"
    frame_ratio_floor: float = 1e-12


@dataclass
class ApproxConfig:
    """Nonlinear n-term approximation."""

    # "largest_dual" or "omp_lite"
    strategy: str = "largest_dual"
    # Relative singular value cutoff of the least-squares refit
    lstsq_tol: float = 1e-10
    # Exhaustive subset search is allowed up to this many points
    exhaustive_limit: int = 16
    # Allowed relative drift of the fitted summability constant
    stability_tol: float = 0.2


@dataclass
class RunConfig:
    """Run-level settings shared by every CLI command."""

    # Seed for every randomized step (test signals, Monte-Carlo certificates)
    seed: int = 0
    # Concurrent Φ evaluations in sweeps
    workers: int = 1
    # Parent directory of run outputs
    output_dir: str = "data/runs"


@dataclass
class CacheConfig:
    """Φ value cache; DILFRAME_CACHE_DIR overrides dir."""

    # Directory holding phi.db (parent dirs created automatically)
    dir: str = "data/cache"
    # Set to false to bypass the cache entirely
    enabled: bool = True


@dataclass
class LoggingConfig:
    """Logging configuration."""

    # Console log level (file handler always captures DEBUG)
    level: str = "INFO"
    # Directory for log files
    dir: str = "data/logs"
    # Number of days to keep rotated log files
    keep_days: int = 30
    # Total log size cap in MB; oldest files are deleted when exceeded
    max_total_mb: int = 100


@dataclass
class DilframeConfig:
    """Top-level dilframe configuration, aggregating all sub-configs."""

    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    atoms: AtomConfig = field(default_factory=AtomConfig)
    cwt: CwtConfig = field(default_factory=CwtConfig)
    frames: FrameConfig = field(default_factory=FrameConfig)
    approx: ApproxConfig = field(default_factory=ApproxConfig)
    run: RunConfig = field(default_factory=RunConfig)
    cache: CacheConfig = field(default_factory=CacheConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)


# Allowed values of string-valued enum fields, keyed by dotted path
_CHOICES: dict[str, tuple[str, ...]] = {
    "quadrature.method": ("nested", "tensor"),
    "atoms.derivative": ("spectral", "finite_difference"),
    "atoms.similitude_operator": ("laplacian", "mixed"),
    "approx.strategy": ("largest_dual", "omp_lite"),
    "logging.level": ("DEBUG", "INFO", "WARNING", "ERROR"),
}

# Numeric fields that must be strictly positive
_POSITIVE = {
    "quadrature.rel_tol",
    "quadrature.limit",
    "quadrature.tensor_nodes",
    "quadrature.tensor_max_panels",
    "atoms.pad_factor",
    "atoms.truncation_tol",
    "atoms.min_samples_across_support",
    "atoms.spline_degree",
    "atoms.lattice_points",
    "atoms.max_shear_frequency",
    "atoms.moment_tol",
    "cwt.pad_factor",
    "frames.pad_factor",
    "frames.eig_tol",
    "frames.cg_tol",
    "approx.lstsq_tol",
    "run.workers",
}


def _build_section[T](cls: type[T], raw: Any, name: str) -> T:
    """Validate one TOML table against a config dataclass and build it."""
    if not isinstance(raw, dict):
        raise ConfigError(name, f"expected table, got {type(raw).__name__}")

    known = {f.name: f for f in fields(cls)}  # type: ignore[arg-type]
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        path = f"{name}.{key}"
        if key not in known:
            raise ConfigError(path, "unknown key")
        expected = known[key].type
        # bool is an int subclass; ints are accepted where floats are expected
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if expected is int and isinstance(value, bool):
            raise ConfigError(path, "expected int, got bool")
        if not isinstance(value, expected):  # type: ignore[arg-type]
            want = getattr(expected, "__name__", str(expected))
            raise ConfigError(path, f"expected {want}, got {type(value).__name__}")
        if path in _CHOICES and value not in _CHOICES[path]:
            raise ConfigError(path, f"expected one of {', '.join(_CHOICES[path])}, got {value!r}")
        if path in _POSITIVE and value <= 0:
            raise ConfigError(path, f"must be positive, got {value}")
        if isinstance(value, float) and value < 0:
            raise ConfigError(path, f"must be non-negative, got {value}")
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(raw: dict[str, Any]) -> DilframeConfig:
    """Build a validated configuration from a parsed TOML/JSON mapping."""
    sections = {f.name: f for f in fields(DilframeConfig)}
    for name in raw:
        if name not in sections:
            raise ConfigError(name, "unknown section")

    built: dict[str, Any] = {}
    for name, f in sections.items():
        section_cls = f.default_factory  # type: ignore[misc]
        built[name] = _build_section(section_cls, raw.get(name, {}), name)  # type: ignore[arg-type]
    return DilframeConfig(**built)


def load_config(path: str | Path = "config.toml") -> DilframeConfig:
    """
    Load configuration from a TOML file.

    Falls back to defaults for any missing fields.
    Raises FileNotFoundError if the file does not exist and ConfigError
    (naming the offending dotted field) on schema violations.
    """
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    with open(config_path, "rb") as f:
        try:
            raw = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError("<file>", str(e)) from e

    return config_from_dict(raw)


def resolve_cache_dir(config: CacheConfig) -> Path:
    """Cache directory, honouring the DILFRAME_CACHE_DIR override."""
    override = os.environ.get(CACHE_DIR_ENV)
    return Path(override) if override else Path(config.dir)


def config_hash(config: DilframeConfig) -> str:
    """Stable SHA-256 of the full configuration, recorded in run manifests."""
    payload = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
