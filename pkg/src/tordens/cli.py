"""Command-line pipeline: generate | estimate | evaluate | moments.

generate   draw a seeded synthetic dataset and write the sample CSV
estimate   compute empirical moments from a sample CSV (or load a moments
           JSON directly) and solve for the coefficient field
evaluate   write the density estimate on a uniform grid as CSV plus a JSON
           sidecar with mass, mean and covariance
moments    print and write mean/covariance/mass of a coefficient file

Exit codes: 0 success, 2 invalid input, 3 numerical failure (solver did not
converge, or the density estimate is degenerate).

Every artifact embeds the run manifest that produced it.  JSON artifacts
carry the full manifest including the creation timestamp; CSV artifacts
embed the manifest as a leading ``#`` comment line without the timestamp,
so equal seeds yield byte-identical data files.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import CoefficientField, Window, dumps_json, format_float
from .density import (
    DegenerateDensityError,
    DensityEstimate,
    GridSpec,
    density_grid,
    integrate_grid_values,
    normalized_moments,
    product_density_grid,
)
from .empirical import Dataset, MomentField, axis_moments, empirical_moments
from .solver import SolverConfig, newton_solve, solve_independent
from .synth import GaussianSpec, sample_truncated_gaussian, sample_uniform

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

DEFAULT_CONFIG = SolverConfig(n1=5, n2=3)


class NumericalFailure(Exception):
    """Raised for failures that map to exit code 3."""


def _manifest(command: str, args, config=None, input_path=None, outputs=(), with_time=True):
    manifest = {
        "tool": "tordens",
        "version": __version__,
        "command": command,
        "input": str(input_path) if input_path is not None else None,
        "outputs": [str(p) for p in outputs],
        "seed": getattr(args, "seed", None),
    }
    if config is not None:
        manifest["config"] = config.to_json_dict()
    if with_time:
        manifest["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return manifest


def _write_json(path: Path, payload: dict, manifest: dict):
    payload = dict(payload)
    payload["manifest"] = manifest
    path.write_text(dumps_json(payload) + "\n", encoding="utf-8")


def _parse_float_list(text: str, what: str):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"could not parse {what} {text!r} as comma-separated floats") from None


def _cov_from_upper(values, dim: int):
    expected = dim * (dim + 1) // 2
    if len(values) != expected:
        raise ValueError(
            f"covariance needs the {expected} upper-triangle entries for dimension {dim}, "
            f"got {len(values)}"
        )
    cov = np.zeros((dim, dim))
    it = iter(values)
    for i in range(dim):
        for j in range(i, dim):
            cov[i, j] = cov[j, i] = next(it)
    return cov


def cmd_generate(args) -> int:
    if args.gaussian:
        if args.mean is None or args.cov is None:
            raise ValueError("--gaussian requires --mean and --cov")
        mean = _parse_float_list(args.mean, "--mean")
        cov = _cov_from_upper(_parse_float_list(args.cov, "--cov"), len(mean))
        spec = GaussianSpec(tuple(mean), tuple(map(tuple, cov)))
        data = sample_truncated_gaussian(spec, args.m, args.seed)
    else:
        data = sample_uniform(args.dim, args.m, args.seed)

    out = Path(args.output) / args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest = _manifest(
        "generate", args, input_path=None, outputs=[out.name], with_time=False
    )
    manifest["count"] = data.count
    data.to_csv(out, manifest=manifest)
    print(f"wrote {data.count} samples to {out}")
    return EXIT_OK


def _load_config(args) -> SolverConfig:
    if args.config is None:
        return DEFAULT_CONFIG
    text = Path(args.config).read_text(encoding="utf-8")
    return SolverConfig.from_json_dict(json.loads(text))


def _load_moments_input(path: Path, config: SolverConfig):
    """A .json input is a precomputed moment field; anything else is a sample CSV."""
    if path.suffix == ".json":
        moments = MomentField.from_json(path.read_text(encoding="utf-8"))
        return moments, None
    data = Dataset.from_csv(path)
    return None, data

def cmd_estimate(args) -> int:
    config = _load_config(args)
    input_path = Path(args.input)
    moments, data = _load_moments_input(input_path, config)

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    coeff_path = outdir / "coefficients.json"
    report_path = outdir / "report.json"
    manifest = _manifest(
        "estimate", args, config=config,
        input_path=input_path, outputs=[coeff_path.name, report_path.name],
    )

    if config.mode == "independent":
        if data is None:
            raise ValueError("independent mode requires a sample CSV input")
        results = solve_independent(axis_moments(data, config.n1), config)
        coeff_payload = {
            "mode": "independent",
            "axes": [f.to_json_dict() for f, _ in results],
        }
        report_payload = {"axes": [r.to_json_dict() for _, r in results]}
        converged = all(r.termination == "converged" for _, r in results)
        final_norms = [r.final_residual_norm for _, r in results]
    else:
        if moments is None:
            moments = empirical_moments(data, Window(data.dim, config.n1))
        field, report = newton_solve(moments, config)
        coeff_payload = field.to_json_dict()
        report_payload = report.to_json_dict()
        converged = report.termination == "converged"
        final_norms = [report.final_residual_norm]

    _write_json(coeff_path, coeff_payload, manifest)
    _write_json(report_path, report_payload, manifest)
    print(f"wrote {coeff_path} and {report_path}")
    if not converged:
        raise NumericalFailure(
            f"solver did not converge (final residual norms {final_norms})"
        )
    return EXIT_OK


def _load_coefficients(path: Path):
    """Returns (axis_fields or None, full_field or None) from a coefficient file."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("mode") == "independent":
        fields = [CoefficientField.from_json_dict(a) for a in obj["axes"]]
        return fields, None
    return None, CoefficientField.from_json_dict(obj)


def _grid_and_density(path: Path, points_per_axis: int):
    """Shifted density values e^{-E} - 1 of a coefficient file on a grid."""
    axes, full = _load_coefficients(path)
    if full is not None:
        grid = GridSpec(full.dim, points_per_axis)
        est = DensityEstimate(full, shift_mode=True)
        return grid, density_grid(est, grid)
    grid = GridSpec(len(axes), points_per_axis)
    return grid, product_density_grid(axes, True, grid)


def _moment_summary(values, grid: GridSpec):
    mean, cov = normalized_moments(values, grid)
    return {
        "mass": integrate_grid_values(values, grid),
        "mean": [float(v) for v in mean],
        "covariance": [[float(v) for v in row] for row in cov],
    }


def cmd_evaluate(args) -> int:
    coeff_path = Path(args.input)
    grid, values = _grid_and_density(coeff_path, args.grid)

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "density_grid.csv"
    json_path = outdir / "density_grid.json"
    manifest_csv = _manifest(
        "evaluate", args, input_path=coeff_path,
        outputs=[csv_path.name, json_path.name], with_time=False,
    )
    manifest = dict(manifest_csv)
    manifest["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")

    summary = _moment_summary(values, grid)

    axis_pts = grid.axis_points()
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("# " + dumps_json(manifest_csv) + "\n")
        fh.write(",".join(f"x{k + 1}" for k in range(grid.dim)) + ",density\n")
        for pos in np.ndindex(*values.shape):  # row-major: last axis fastest
            coords = [axis_pts[p] for p in pos]
            fh.write(
                ",".join(format_float(c) for c in coords)
                + ","
                + format_float(values[pos])
                + "\n"
            )
    _write_json(json_path, {"grid": grid.to_json_dict(), **summary}, manifest)
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_moments(args) -> int:
    coeff_path = Path(args.input)
    grid, values = _grid_and_density(coeff_path, args.grid)
    summary = _moment_summary(values, grid)

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    json_path = outdir / "moments.json"
    manifest = _manifest("moments", args, input_path=coeff_path, outputs=[json_path.name])
    _write_json(json_path, {"grid": grid.to_json_dict(), **summary}, manifest)
    print(dumps_json(summary))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="solver config JSON file")
    shared.add_argument("--output", default=".", help="output directory (default: .)")
    shared.add_argument("--seed", type=int, default=None, help="RNG seed for synthetic data")
    shared.add_argument(
        "--grid", type=int, default=128, help="grid points per axis (default: 128)"
    )

    parser = argparse.ArgumentParser(
        prog="tordens",
        description="Density estimation on a torus window from sample moments",
    )
    parser.add_argument("--version", action="version", version=f"tordens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[shared], help="write a synthetic sample CSV")
    family = p.add_mutually_exclusive_group(required=True)
    family.add_argument("--gaussian", action="store_true", help="truncated Gaussian family")
    family.add_argument("--uniform", action="store_true", help="uniform on the window")
    p.add_argument("--mean", help="comma-separated mean vector (gaussian)")
    p.add_argument("--cov", help="comma-separated covariance upper triangle (gaussian)")
    p.add_argument("--dim", type=int, default=2, help="dimension (uniform)")
    p.add_argument("--m", type=int, required=True, help="sample count")
    p.add_argument("--out", default="samples.csv", help="output file name")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("estimate", parents=[shared], help="solve for coefficients")
    p.add_argument("input", help="sample CSV (or precomputed moments JSON)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", parents=[shared], help="density grid CSV + sidecar")
    p.add_argument("input", help="coefficients JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("moments", parents=[shared], help="mean/covariance/mass")
    p.add_argument("input", help="coefficients JSON")
    p.set_defaults(func=cmd_moments)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None:
        args.seed = 0
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"tordens: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DegenerateDensityError as exc:
        print(f"tordens: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"tordens: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
