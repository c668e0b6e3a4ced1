"""
On-disk formats: the binary sample container with its JSON sidecar, JSON-lines sampling
sets, coefficient arrays, CSV tables, JSON reports and the per-run manifest.

Container layout (little-endian):

    magic "DLFR" | version u16 | dim u16 | extents u64[dim] | origin f64[dim]
    | spacing f64[dim] | samples complex128[prod(extents)] in C order
"""

import csv
import json
import logging
import math
import struct
from dataclasses import asdict
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np

from dilframe.config import DilframeConfig, config_hash
from dilframe.errors import FormatError
from dilframe.frames import CoefficientArray
from dilframe.sampled import GridSpec, SampledFunction
from dilframe.sampling import SamplingSet, sampling_set_from_records, sampling_set_to_json

logger = logging.getLogger("dilframe.container")

MAGIC = b"DLFR"
FORMAT_VERSION = 1

_HEAD = struct.Struct("<4sHH")
_SAMPLE_DTYPE = np.dtype("<c16")

# Libraries whose versions are recorded in every manifest
_VERSIONED = ("dilframe", "numpy", "scipy", "aiosqlite")


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _write_raw(
    path: Path,
    origin: tuple[float, ...],
    spacing: tuple[float, ...],
    samples: np.ndarray,
) -> None:
    dim = samples.ndim
    header = _HEAD.pack(MAGIC, FORMAT_VERSION, dim)
    header += struct.pack(f"<{dim}Q", *samples.shape)
    header += struct.pack(f"<{dim}d", *origin)
    header += struct.pack(f"<{dim}d", *spacing)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(samples, dtype=_SAMPLE_DTYPE).tobytes())


def _read_raw(path: Path) -> tuple[tuple[float, ...], tuple[float, ...], np.ndarray]:
    data = path.read_bytes()
    if len(data) < _HEAD.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, dim = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: not a dilframe container (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    offset = _HEAD.size
    try:
        extents = struct.unpack_from(f"<{dim}Q", data, offset)
        offset += 8 * dim
        origin = struct.unpack_from(f"<{dim}d", data, offset)
        offset += 8 * dim
        spacing = struct.unpack_from(f"<{dim}d", data, offset)
        offset += 8 * dim
    except struct.error as e:
        raise FormatError(f"{path}: truncated header") from e
    count = math.prod(extents)
    expected = offset + count * _SAMPLE_DTYPE.itemsize
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    samples = np.frombuffer(data, dtype=_SAMPLE_DTYPE, count=count, offset=offset)
    return origin, spacing, samples.reshape(extents).astype(complex)


def _read_sidecar(path: Path) -> dict[str, Any]:
    side = sidecar_path(path)
    if not side.exists():
        return {}
    try:
        return dict(json.loads(side.read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise FormatError(f"{side}: {e}") from e


def write_function(path: str | Path, fn: SampledFunction) -> Path:
    """Write samples to the container and metadata to the JSON sidecar."""
    path = Path(path)
    _write_raw(path, fn.grid.origin, fn.grid.spacing, fn.samples)
    write_json(sidecar_path(path), {"grid": fn.grid.to_json(), "metadata": fn.metadata})
    logger.debug("Wrote %s (%s samples)", path, fn.grid.extents)
    return path


def read_function(path: str | Path) -> SampledFunction:
    path = Path(path)
    origin, spacing, samples = _read_raw(path)
    side = _read_sidecar(path)
    grid = GridSpec(origin, spacing, samples.shape)
    return SampledFunction(grid, samples, side.get("metadata", {}))


def write_sampling_set(path: str | Path, z_set: SamplingSet) -> Path:
    """JSON lines: a header record, then one {"x", "params", "level"} line per point."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(sampling_set_to_json(z_set), default=_json_default) + "\n")
        for point, level in zip(z_set.points, z_set.level, strict=True):
            row = {**point.to_json(), "level": level}
            f.write(json.dumps(row) + "\n")
    logger.debug("Wrote %d sampling points to %s", len(z_set), path)
    return path


def read_sampling_set(path: str | Path) -> SamplingSet:
    path = Path(path)
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise FormatError(f"{path}: empty sampling-set file")
    try:
        header = json.loads(lines[0])
        rows = [json.loads(line) for line in lines[1:]]
        return sampling_set_from_records(header, rows)
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise FormatError(f"{path}: {e}") from e


def write_coefficients(
    path: str | Path, c: CoefficientArray, weights: np.ndarray | None = None
) -> Path:
    """Values in a 1-D container; the sidecar indexes them back to the sampling set."""
    path = Path(path)
    _write_raw(path, (0.0,), (1.0,), c.values)
    index = []
    dilation_index = c.z_set.dilation_index
    for i in range(len(c.z_set)):
        entry: dict[str, Any] = {
            "point": i,
            "level": c.z_set.level[i],
            "dilation": dilation_index[i],
            "truncated": bool(c.truncated[i]),
        }
        if weights is not None:
            entry["weight"] = float(weights[i])
        index.append(entry)
    write_json(sidecar_path(path), {"count": len(index), "index": index})
    return path


def read_coefficients(path: str | Path, z_set: SamplingSet) -> CoefficientArray:
    path = Path(path)
    _, _, values = _read_raw(path)
    if values.ndim != 1 or values.size != len(z_set):
        raise FormatError(f"{path}: {values.size} coefficients for {len(z_set)} points")
    side = _read_sidecar(path)
    truncated = np.array([bool(e.get("truncated")) for e in side.get("index", [])], dtype=bool)
    if truncated.size != values.size:
        truncated = np.zeros(values.size, dtype=bool)
    return CoefficientArray(values, z_set, truncated)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(path: str | Path, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(data, indent=2, ensure_ascii=False, default=_json_default)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_csv(path: str | Path, rows: list[dict[str, Any]]) -> Path:
    """Plot-ready CSV; the column order is that of the first row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        if rows:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return path


def library_versions() -> dict[str, str]:
    out = {}
    for name in _VERSIONED:
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = "unknown"
    return out


def write_manifest(
    out_dir: str | Path,
    config: DilframeConfig,
    argv: list[str],
    extra: dict[str, Any] | None = None,
) -> Path:
    """manifest.json: config hash, library versions, seed, tolerances and argv."""
    manifest = {
        "config_hash": config_hash(config),
        "versions": library_versions(),
        "seed": config.run.seed,
        "tolerances": {
            "quadrature": asdict(config.quadrature),
            "atoms": asdict(config.atoms),
            "frames": asdict(config.frames),
            "approx": asdict(config.approx),
        },
        "argv": list(argv),
        **(extra or {}),
    }
    return write_json(Path(out_dir) / "manifest.json", manifest)
