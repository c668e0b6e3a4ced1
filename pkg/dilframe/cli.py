"""Command-line entry point: `dilframe <group> <command> [options]`."""

import argparse
import asyncio
import json
import logging
import math
import sys
from collections.abc import Callable
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np

from dilframe import approx, atoms, cwt, frames, phi, sampling
from dilframe.cache import PhiCache
from dilframe.config import DilframeConfig, load_config, resolve_cache_dir
from dilframe.container import (
    read_function,
    read_sampling_set,
    write_coefficients,
    write_csv,
    write_function,
    write_json,
    write_manifest,
    write_sampling_set,
)
from dilframe.errors import ConfigError, DilframeError, DomainError, EmptySetError
from dilframe.groups import DilationGroupSpec, Family, GroupElement
from dilframe.log import setup_logging
from dilframe.sampled import GridSpec
from dilframe.sweep import PhiSweeper

logger = logging.getLogger("dilframe.cli")

# Exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class Outputs:
    """Artifacts collected during a command and written only after it succeeds."""

    def __init__(self) -> None:
        self._writers: list[Callable[[Path], Path]] = []
        self.summary: dict[str, Any] = {}

    def json(self, name: str, data: Any) -> None:
        self._writers.append(lambda out: write_json(out / name, data))

    def csv(self, name: str, rows: list[dict[str, Any]]) -> None:
        self._writers.append(lambda out: write_csv(out / name, rows))

    def add(self, writer: Callable[[Path], Path]) -> None:
        self._writers.append(writer)

    def flush(self, out_dir: Path) -> list[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        return [writer(out_dir) for writer in self._writers]


def _json_arg(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise DomainError(f"invalid JSON argument {text!r}: {e}") from e


def _group(args: argparse.Namespace) -> DilationGroupSpec:
    return DilationGroupSpec.from_json(_json_arg(args.group))


# --- embed ---


def cmd_embed_index(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    spec = _group(args)
    report = phi.embedding_index(spec, phi.WeightSpec.from_json(_json_arg(args.weights)))
    data = {"group": spec.to_json(), **report.to_json()}
    print(json.dumps(data, ensure_ascii=False))
    out.json("embed_index.json", data)
    out.summary = data


# --- phi ---


def _elements(args: argparse.Namespace, spec: DilationGroupSpec) -> list[GroupElement]:
    if args.params is not None:
        elements = [spec.element(p) for p in _json_arg(args.params)]
    elif args.log_r is not None:
        start, stop, num = args.log_r
        logs = np.linspace(start, stop, int(num))
        if spec.family is Family.SHEARLET:
            shears = _json_arg(args.shears) if args.shears else [0.0]
            elements = [phi.chart_element(spec, (u, b)) for u in logs for b in shears]
        else:
            elements = [phi.chart_element(spec, (u,) * _chart_axes(spec)) for u in logs]
    else:
        raise DomainError("give --params or --log-r")
    if not elements:
        raise EmptySetError("empty element grid")
    return elements


def _chart_axes(spec: DilationGroupSpec) -> int:
    return spec.dim if spec.family is Family.DIAGONAL else 1


async def _sweep(
    cfg: DilframeConfig, elements: list[GroupElement], ell: int
) -> list[phi.PhiEstimate]:
    cache = None
    if cfg.cache.enabled:
        cache_dir = resolve_cache_dir(cfg.cache)
        cache_dir.mkdir(parents=True, exist_ok=True)
        cache = PhiCache(str(cache_dir / "phi.db"))
        await cache.init()
    sweeper = PhiSweeper(cfg.quadrature, cfg.run.workers, cache)
    try:
        return await sweeper.sweep(elements, ell)
    finally:
        sweeper.close()
        if cache is not None:
            await cache.close()


def cmd_phi_compute(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    spec = _group(args)
    elements = _elements(args, spec)
    results = asyncio.run(_sweep(cfg, elements, args.ell))
    rows = [
        {"params": json.dumps(list(h.params)), "phi": r.value, "error": r.error}
        for h, r in zip(elements, results, strict=True)
    ]
    out.csv("phi.csv", rows)
    out.summary = {"ell": args.ell, "count": len(rows)}


def _envelope(
    spec: DilationGroupSpec, args: argparse.Namespace, cfg: DilframeConfig
) -> tuple[int, Callable[[GroupElement], float]]:
    """Φ index and analytic bound: similitude, diagonal product, or shearlet envelope."""
    if spec.family is Family.SIMILITUDE:
        ell = args.ell
        return ell, lambda h: phi.phi_bound_similitude(h, ell)
    if spec.family is Family.DIAGONAL:
        if args.ell % spec.dim:
            raise DomainError(f"diagonal envelope needs ℓ divisible by d={spec.dim}")
        per_axis = args.ell // spec.dim
        return args.ell, lambda h: phi.phi_product_bound(h, per_axis, cfg.quadrature)
    if args.t is None or args.r1 is None or args.r2 is None:
        raise DomainError("shearlet envelope needs --t, --r1 and --r2")
    return args.t, lambda h: phi.phi_bound_shearlet(h, args.t, args.r1, args.r2)


def cmd_phi_envelope(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    spec = _group(args)
    elements = _elements(args, spec)
    ell, bound = _envelope(spec, args, cfg)
    bounds = [bound(h) for h in elements]
    results = asyncio.run(_sweep(cfg, elements, ell))
    values = [r.value for r in results]
    fit = phi.fit_envelope_constant(values, bounds)
    summary: dict[str, Any] = {
        "group": spec.to_json(),
        "ell": ell,
        "constant": fit.constant,
        "argmax_params": list(elements[fit.argmax].params),
    }
    if spec.family is Family.SIMILITUDE:
        small = [(h.scale, v) for h, v in zip(elements, values, strict=True) if h.scale < 1.0]
        if len(small) >= 2:
            r, v = zip(*small, strict=True)
            summary["small_scale_slope"] = phi.loglog_slope(r, v)
            summary["expected_slope"] = ell - spec.dim
    rows = [
        {"params": json.dumps(list(h.params)), "phi": v, "bound": b, "ratio": v / b}
        for h, v, b in zip(elements, values, bounds, strict=True)
    ]
    out.csv("phi_envelope.csv", rows)
    out.json("phi_envelope.json", summary)
    out.summary = summary


# --- atom ---


def cmd_atom_build(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    spec = _group(args)
    grid = GridSpec.centered(spec.dim, args.half_width, args.spacing)
    rho = atoms.build_bump(args.bump, args.radius, grid, cfg.atoms)
    psi = atoms.build_atom(rho, spec, args.t, cfg.atoms)
    report = atoms.check_moments(psi, spec, args.t, cfg.atoms)
    out.add(lambda d: write_function(d / "atom.dlfr", psi))
    out.json("moments.json", report.to_json())
    out.summary = report.to_json()


def cmd_atom_check(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    spec = _group(args)
    psi = read_function(args.atom)
    report = atoms.check_moments(psi, spec, args.t, cfg.atoms)
    out.json("moments.json", report.to_json())
    out.summary = report.to_json()


# --- cwt ---


def cmd_cwt_slice(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    spec = _group(args)
    f = read_function(args.signal)
    psi = read_function(args.atom)
    h = spec.element(_json_arg(args.params))
    values = cwt.analyze_slice(f, psi, h, cfg.cwt)
    out.add(lambda d: write_function(d / "slice.dlfr", values))
    out.summary = {"params": list(h.params), "max_abs": float(np.abs(values.samples).max())}


def cmd_cwt_decay(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    """Fit the decay constant of W_ψψ: shearlet (a, b) envelope or the Φ_{t-m} envelope."""
    spec = _group(args)
    psi = read_function(args.atom)
    elements = _elements(args, spec)
    shearlet = spec.family is Family.SHEARLET
    if shearlet and (args.r1 is None or args.r2 is None):
        raise DomainError("shearlet decay needs --r1 and --r2")
    moments = atoms.check_moments(psi, spec, args.t, cfg.atoms)
    if shearlet:
        report = cwt.shearlet_decay_check(
            psi, elements, args.m, args.r1, args.r2, moments, cfg.cwt, args.window_factor
        )
    else:
        report = cwt.decay_envelope_check(
            psi, elements, args.t, args.m, moments, cfg.cwt, cfg.quadrature, args.window_factor
        )
    rows = [
        {"params": json.dumps(list(h.params)), "ratio": ratio}
        for h, ratio in zip(elements, report.per_element, strict=True)
    ]
    data = {"group": spec.to_json(), "moments": moments.to_json(), **report.to_json()}
    out.csv("decay.csv", rows)
    out.json("decay_report.json", data)
    out.summary = {
        "constant": report.constant,
        "drift": report.drift,
        "stable": report.stable,
        "passed": report.passed,
    }


def cmd_cwt_reconstruct(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    spec = _group(args)
    f = read_function(args.signal)
    psi = read_function(args.atom)
    start, stop, num = args.log_r
    shears = np.asarray(_json_arg(args.shears), dtype=float) if args.shears else None
    nodes = cwt.haar_quadrature(
        spec,
        np.linspace(start, stop, int(num)),
        shears,
        n_rotations=args.rotations,
        both_signs=not args.positive_only,
    )
    result = cwt.reconstruct_continuous(f, psi, nodes, cfg.cwt)
    data = {
        "nodes": len(nodes),
        "relative_error": result.relative_error,
        "admissibility_constant": result.admissibility_constant,
        "admissibility_drift": result.admissibility_drift,
        "stable": result.stable,
    }
    out.add(lambda d: write_function(d / "reconstruction.dlfr", result.function))
    out.json("reconstruction.json", data)
    out.summary = data


# --- sample ---


def _finish_set(z_set: sampling.SamplingSet, out: Outputs) -> None:
    out.add(lambda d: write_sampling_set(d / "sampling_set.jsonl", z_set))
    out.summary = {
        "count": len(z_set),
        "separated": z_set.separation_certificate is not None,
    }


def cmd_sample_thm12(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    spec = _group(args)
    z_set = sampling.build_grid_thm12(
        spec,
        args.delta1,
        args.delta2,
        range(args.levels[0], args.levels[1]),
        window=args.window,
        n_rotations=args.rotations,
    )
    _finish_set(z_set, out)


def cmd_sample_product(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    spec = _group(args)
    dilations = [spec.element(p) for p in _json_arg(args.dilations)]
    z_set = sampling.build_product_grid(spec, dilations, args.delta, window=args.window)
    _finish_set(z_set, out)


def cmd_sample_certify(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    z_set = read_sampling_set(args.set)
    nbhd = sampling.Neighborhood(args.radius, tuple(_json_arg(args.halfwidths)))
    result: dict[str, Any] = {"neighborhood": nbhd.to_json()}
    sep = sampling.certify_separated(z_set, nbhd)
    result["separated"] = sep.ok
    result["separation_witness"] = sep.witness
    if args.region is not None:
        region = sampling.Region.from_json(_json_arg(args.region))
        rng = np.random.default_rng(cfg.run.seed)
        dense = sampling.certify_dense(z_set, nbhd, region, rng, n_random=args.n_random)
        result["dense"] = dense.ok
        result["density_witness"] = dense.witness
    out.json("certificate.json", result)
    out.summary = result


# --- frame ---


def _frame(
    args: argparse.Namespace, cfg: DilframeConfig
) -> tuple[Any, frames.WaveletSystem, frames.SpectralWindow]:
    f = read_function(args.signal)
    psi = read_function(args.atom)
    z_set = read_sampling_set(args.set)
    grid = f.grid.padded(cfg.frames.pad_factor) if cfg.frames.pad_factor > 1 else f.grid
    high = math.inf if args.band[1] <= 0 else args.band[1]
    test_space = frames.SpectralWindow(args.band[0], high, args.cone)
    return f, frames.WaveletSystem(psi, z_set, grid), test_space


def cmd_frame_bounds(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    _, system, test_space = _frame(args, cfg)
    report = frames.frame_bounds(system, test_space, cfg.frames)
    row = {
        "A": report.lower_bound,
        "B": report.upper_bound,
        "B/A": report.ratio,
        "points": system.size,
        "is_frame": report.is_frame,
    }
    out.csv("frame_bounds.csv", [row])
    out.json("frame_report.json", report.to_json())
    out.summary = report.to_json()


def cmd_frame_reconstruct(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    f, system, test_space = _frame(args, cfg)
    report = frames.frame_bounds(system, test_space, cfg.frames)
    if not report.is_frame:
        raise DomainError("the system is not a frame on the test space; nothing to invert")
    result = frames.reconstruct(f, system, test_space, report, cfg.frames)
    row = {
        "A": report.lower_bound,
        "B": report.upper_bound,
        "B/A": report.ratio,
        "error": result.relative_error,
        "iterations": result.iterations,
    }
    out.add(lambda d: write_function(d / "reconstruction.dlfr", result.function))
    out.csv("reconstruction.csv", [row])
    out.json("frame_report.json", report.to_json())
    out.summary = row


def cmd_frame_coeff_norm(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    f, system, _ = _frame(args, cfg)
    weight = phi.WeightSpec.from_json({"p": args.p, "q": args.q, **_json_arg(args.weights)})
    coeffs = system.analyze(f)
    norm = frames.coefficient_norm(coeffs, weight.p, weight.q, weight)
    per_point = frames.coefficient_weights(coeffs.z_set, weight.p, weight.q, weight)
    data = {
        "p": weight.p,
        "q": weight.q,
        "weight": weight.to_json(),
        "norm": norm,
        "truncated": int(coeffs.truncated.sum()),
    }
    out.add(lambda d: write_coefficients(d / "coefficients.dlfr", coeffs, per_point))
    out.json("coeff_norm.json", data)
    out.summary = data


# --- approx ---


def cmd_approx_curve(args: argparse.Namespace, cfg: DilframeConfig, out: Outputs) -> None:
    f, system, test_space = _frame(args, cfg)
    strategy = args.strategy or cfg.approx.strategy
    curve = approx.greedy_n_term(
        f, system, args.nmax, strategy, args.p, test_space, cfg.approx, cfg.frames
    )
    dual = frames.dual_coefficients(f, system, test_space, cfg.frames)
    report = approx.summability_check(curve, dual, args.p, cfg.approx)
    out.csv("en_curve.csv", curve.to_rows())
    summary = {
        "p": args.p,
        "strategy": curve.strategy,
        "n_max": args.nmax,
        "signal_norm": curve.signal_norm,
        **report.to_json(),
    }
    out.json("en_summary.json", summary)
    out.summary = summary


# --- parser ---


def _add_frame_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--signal", required=True, help="signal container (its grid is the window)")
    p.add_argument("--atom", required=True, help="atom container")
    p.add_argument("--set", required=True, help="sampling set (JSON lines)")
    p.add_argument(
        "--band",
        nargs=2,
        type=float,
        default=(0.0, 0.0),
        metavar=("LOW", "HIGH"),
        help="test space low ≤ |ξ| ≤ high (HIGH ≤ 0: no cap)",
    )
    p.add_argument("--cone", type=float, default=None, help="cone |ξ_rest| ≤ cone·|ξ₁| (d ≥ 2)")


_GRID_HELP = """\
The element grid is given one of two ways:
  --params  JSON list of parameter lists, one element each, e.g. [[0.5], [1], [2]]
            (similitude d=2: [r, θ]; diagonal: [a1, ..., ad]; shearlet: [a, b]).
  --log-r START STOP NUM
            NUM log-scales u = linspace(START, STOP, NUM) through the chart:
            similitude r = e^u, diagonal a_i = e^u on every axis, shearlet a = e^u
            crossed with every shear in --shears (default [0]).
"""


def _add_elements_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--group", required=True, help='group descriptor, e.g. {"family":"shearlet"}')
    p.add_argument("--params", default=None, help="JSON list of element parameter lists")
    p.add_argument(
        "--log-r",
        nargs=3,
        type=float,
        default=None,
        metavar=("START", "STOP", "NUM"),
        help="log-scale chart axis (same scale on every diagonal axis)",
    )
    p.add_argument("--shears", default=None, help="JSON list of shears (shearlet)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dilframe", description="Wavelet frames over matrix dilation groups"
    )
    parser.add_argument("--config", default=None, help="TOML configuration file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument(
        "--log-level", default=None, choices=("DEBUG", "INFO", "WARNING", "ERROR")
    )
    groups = parser.add_subparsers(dest="topic", required=True)

    embed = groups.add_parser("embed").add_subparsers(dest="command", required=True)
    p = embed.add_parser("index", help="index ℓ and moment order t")
    p.add_argument("--group", required=True)
    p.add_argument("--weights", required=True, help='e.g. {"beta": 4, "s": 0}')
    p.set_defaults(handler=cmd_embed_index)

    phi_cmds = groups.add_parser("phi").add_subparsers(dest="command", required=True)
    p = phi_cmds.add_parser(
        "compute",
        help="Φ_ℓ over an element grid",
        description=_GRID_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_elements_args(p)
    p.add_argument("--ell", type=int, required=True)
    p.set_defaults(handler=cmd_phi_compute)
    p = phi_cmds.add_parser(
        "envelope",
        help="Φ against its analytic envelope",
        description=_GRID_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_elements_args(p)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--r1", type=int, default=None)
    p.add_argument("--r2", type=int, default=None)
    p.set_defaults(handler=cmd_phi_envelope)

    atom = groups.add_parser("atom").add_subparsers(dest="command", required=True)
    p = atom.add_parser("build", help="ψ = Lρ with vanishing moments")
    p.add_argument("--group", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument(
        "--bump", default="smooth_exponential", choices=[k.value for k in atoms.BumpKind]
    )
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--half-width", type=float, default=2.0)
    p.add_argument("--spacing", type=float, default=1.0 / 32)
    p.set_defaults(handler=cmd_atom_build)
    p = atom.add_parser("check-moments")
    p.add_argument("--group", required=True)
    p.add_argument("--atom", required=True)
    p.add_argument("--t", type=int, required=True)
    p.set_defaults(handler=cmd_atom_check)

    cwt_cmds = groups.add_parser("cwt").add_subparsers(dest="command", required=True)
    p = cwt_cmds.add_parser("slice", help="W_ψ f(·, h)")
    p.add_argument("--group", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--atom", required=True)
    p.add_argument("--params", required=True, help="JSON parameters of h")
    p.set_defaults(handler=cmd_cwt_slice)
    p = cwt_cmds.add_parser(
        "decay",
        help="fit the decay constant of W_ψψ over an element grid",
        description=_GRID_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_elements_args(p)
    p.add_argument("--atom", required=True)
    p.add_argument("--t", type=int, required=True, help="moment order verified on the atom")
    p.add_argument("--m", type=float, required=True, help="spatial decay exponent m < t")
    p.add_argument("--r1", type=float, default=None, help="scale exponent (shearlet)")
    p.add_argument("--r2", type=float, default=None, help="shear exponent (shearlet)")
    p.add_argument("--window-factor", type=int, default=2, help="x-window in atom widths")
    p.set_defaults(handler=cmd_cwt_decay)
    p = cwt_cmds.add_parser("reconstruct", help="continuous inversion over a Haar quadrature")
    p.add_argument("--group", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--atom", required=True)
    p.add_argument(
        "--log-r", nargs=3, type=float, required=True, metavar=("START", "STOP", "NUM")
    )
    p.add_argument("--shears", default=None, help="JSON list of equispaced shears (shearlet)")
    p.add_argument("--rotations", type=int, default=1, help="SO(d) nodes (similitude d ≥ 2)")
    p.add_argument("--positive-only", action="store_true", help="skip negative scales")
    p.set_defaults(handler=cmd_cwt_reconstruct)

    sample = groups.add_parser("sample").add_subparsers(dest="command", required=True)
    p = sample.add_parser("build-thm12", help="δ₁/δ₂ similitude grid")
    p.add_argument("--group", required=True)
    p.add_argument("--delta1", type=float, required=True)
    p.add_argument("--delta2", type=float, required=True)
    p.add_argument("--levels", nargs=2, type=int, required=True, metavar=("START", "STOP"))
    p.add_argument("--window", type=float, required=True)
    p.add_argument("--rotations", type=int, default=8)
    p.set_defaults(handler=cmd_sample_thm12)
    p = sample.add_parser("build-product", help="{(h_j x_k, h_j)} from given dilations")
    p.add_argument("--group", required=True)
    p.add_argument("--dilations", required=True, help="JSON list of parameter lists")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--window", type=float, required=True)
    p.set_defaults(handler=cmd_sample_product)
    p = sample.add_parser("certify", help="separation and density certificates")
    p.add_argument("--set", required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--halfwidths", required=True, help="JSON list of chart half-widths")
    p.add_argument("--region", default=None, help="JSON region for the density check")
    p.add_argument("--n-random", type=int, default=2000)
    p.set_defaults(handler=cmd_sample_certify)

    frame = groups.add_parser("frame").add_subparsers(dest="command", required=True)
    p = frame.add_parser("bounds")
    _add_frame_args(p)
    p.set_defaults(handler=cmd_frame_bounds)
    p = frame.add_parser("reconstruct")
    _add_frame_args(p)
    p.set_defaults(handler=cmd_frame_reconstruct)
    p = frame.add_parser("coeff-norm")
    _add_frame_args(p)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--weights", default="{}", help='e.g. {"besov_alpha": 0.5}')
    p.set_defaults(handler=cmd_frame_coeff_norm)

    approx_cmds = groups.add_parser("approx").add_subparsers(dest="command", required=True)
    p = approx_cmds.add_parser("en-curve", help="greedy E_n curve and summability")
    _add_frame_args(p)
    p.add_argument("--p", type=float, default=1.5)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--strategy", default=None, choices=[s.value for s in approx.Strategy])
    p.set_defaults(handler=cmd_approx_curve)
    return parser


def _configure(args: argparse.Namespace) -> DilframeConfig:
    cfg = load_config(args.config) if args.config else DilframeConfig()
    run = cfg.run
    if args.seed is not None:
        run = replace(run, seed=args.seed)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("run.workers", f"must be positive, got {args.workers}")
        run = replace(run, workers=args.workers)
    cfg.run = run
    if args.log_level is not None:
        cfg.logging = replace(cfg.logging, level=args.log_level)
    return cfg


def main(argv: list[str] | None = None) -> int:
    """Run one command; artifacts and manifest.json are written only on success."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        cfg = _configure(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(str(e), file=sys.stderr)
        return EXIT_CONFIG

    setup_logging(cfg.logging)
    name = f"{args.topic} {args.command}"
    logger.info("dilframe %s (seed %d)", name, cfg.run.seed)
    default_dir = Path(cfg.run.output_dir) / f"{args.topic}-{args.command}"
    out_dir = Path(args.out) if args.out else default_dir
    outputs = Outputs()
    try:
        args.handler(args, cfg, outputs)
    except DilframeError as e:
        logger.error("%s failed: %s", name, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except (FileNotFoundError, ValueError) as e:
        logger.error("%s failed: %s", name, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE

    written = outputs.flush(out_dir)
    write_manifest(out_dir, cfg, argv, {"command": name, "summary": outputs.summary})
    logger.info("%s finished: %d artifacts in %s", name, len(written) + 1, out_dir)
    return EXIT_OK
