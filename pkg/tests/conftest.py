"""Shared pytest fixtures for dilframe tests."""

from pathlib import Path

import numpy as np
import pytest
import pytest_asyncio

from dilframe.cache import PhiCache
from dilframe.groups import DilationGroupSpec, Family
from dilframe.sampled import GridSpec


@pytest.fixture
def tmp_config(tmp_path: Path) -> Path:
    """Create a temporary config.toml for testing."""
    config = tmp_path / "config.toml"
    config.write_text(
        "[quadrature]\n"
        "rel_tol = 1e-7\n"
        'method = "nested"\n\n'
        "[frames]\n"
        "cg_tol = 1e-10\n"
        "gram_threshold = 2000\n\n"
        "[run]\n"
        "seed = 7\n"
        'output_dir = "' + str(tmp_path / "runs").replace("\\", "/") + '"\n\n'
        "[cache]\n"
        'dir = "' + str(tmp_path / "cache").replace("\\", "/") + '"\n\n'
        "[logging]\n"
        'level = "DEBUG"\n'
        'dir = "' + str(tmp_path / "logs").replace("\\", "/") + '"\n'
        "keep_days = 7\n"
    )
    return config


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so randomized checks are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def sim1() -> DilationGroupSpec:
    return DilationGroupSpec(Family.SIMILITUDE, 1)


@pytest.fixture
def sim2() -> DilationGroupSpec:
    return DilationGroupSpec(Family.SIMILITUDE, 2)


@pytest.fixture
def diag2() -> DilationGroupSpec:
    return DilationGroupSpec(Family.DIAGONAL, 2)


@pytest.fixture
def shear() -> DilationGroupSpec:
    return DilationGroupSpec(Family.SHEARLET, 2, c=0.5)


@pytest.fixture
def line_grid() -> GridSpec:
    """[-2, 2] sampled at 1/32."""
    return GridSpec.centered(1, 2.0, 1.0 / 32)


@pytest_asyncio.fixture
async def phi_cache(tmp_path: Path) -> PhiCache:
    """Create a PhiCache with a temporary database."""
    cache = PhiCache(str(tmp_path / "phi.db"))
    await cache.init()
    yield cache
    await cache.close()
