"""Reproducible experiment harness.

Subcommands: ``distribution``, ``corr``, ``unfold``, ``moments``,
``density-trace``.  Every run writes a CSV with a fixed header plus a JSON
sidecar echoing the full effective configuration; feeding the sidecar back
through ``--config`` reproduces the CSV byte for byte.

Config precedence: CLI flags > WINDINGRMT_WORKERS (worker count only) >
``--config`` file > built-in defaults.  All randomness flows from ``--seed``.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

import argparse
import csv
import json
import math
import os
import subprocess
import sys
import time

import numpy as np

from . import __version__
from .analytic import (
    c1,
    c2,
    ck_assemble,
    gaussian_approx,
    moment_quadrature,
    rescaled_c2,
    unfolded_f2,
    variance_analytic,
    winding_distribution,
)
from .ensemble import ParametricField, sample_field, substream
from .errors import CoincidentPointsError, SingularFieldError, WindingError
from .montecarlo import RunConfig, estimate_ck, estimate_distribution
from .spectral import circle_spectrum, winding_contour, winding_density, winding_from_count

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_CONFIG_DEFAULTS = {
    "n": 4,
    "samples": 10_000,
    "seed": 1,
    "workers": 1,
    "epsilon_circle": 1e-9,
    "condition_threshold": 1e12,
    "analytic_only": False,
}

_FIG_NLIST_SMALL_ALPHA = [5, 10, 20, 50, 100, 150, 200, 300, 1000]
_FIG_NLIST_HALF_ALPHA = [2, 5, 7, 10, 15, 20, 50, 100]


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# plumbing


def _build_id() -> str:
    try:
        proc = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True,
            text=True,
            check=False,
        )
        rev = proc.stdout.strip()
        if proc.returncode == 0 and rev:
            return rev
    except OSError:
        pass
    return f"windingrmt-{__version__}"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _sidecar_path(out_path: str) -> str:
    if out_path.endswith(".csv"):
        return out_path[:-4] + ".json"
    return out_path + ".json"


def _write_sidecar(command: str, config: dict, outputs: list, summary: dict, elapsed: float) -> str:
    record = {
        "command": command,
        "config": config,
        "git_or_build_id": _build_id(),
        "outputs": outputs,
        "wall_time_s": elapsed,
        "summary": summary,
    }
    path = _sidecar_path(outputs[0])
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _load_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    # accept a previously written sidecar directly
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return data


def _merge_config(args: argparse.Namespace, extra_defaults: dict) -> dict:
    merged = dict(_CONFIG_DEFAULTS)
    merged.update(extra_defaults)
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - set(merged)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    env_workers = os.environ.get("WINDINGRMT_WORKERS")
    if env_workers is not None:
        try:
            merged["workers"] = int(env_workers)
        except ValueError:
            raise UsageError("WINDINGRMT_WORKERS must be an integer") from None
    for key in merged:
        flag_value = getattr(args, key, None)
        if flag_value is not None and flag_value is not False:
            merged[key] = flag_value
    return merged


def _run_config(cfg: dict) -> RunConfig:
    try:
        return RunConfig(
            N=cfg["n"],
            samples=cfg["samples"],
            seed=cfg["seed"],
            workers=cfg["workers"],
            epsilon_circle=cfg["epsilon_circle"],
            condition_threshold=cfg["condition_threshold"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse_float_list(text: str, name: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"{name} must be a comma-separated list of numbers") from None


def _parse_int_list(text: str, name: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"{name} must be a comma-separated list of integers") from None


def _parse_psi_grid(text: str) -> list:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError("psi grid must be start:stop:count or a comma list")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError("psi grid must be start:stop:count or a comma list") from None
        if count < 1:
            raise UsageError("psi grid needs at least one point")
        return list(np.linspace(start, stop, count))
    return _parse_float_list(text, "psi grid")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_distribution(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    cfg = _merge_config(args, {"out": "distribution.csv"})
    if cfg["n"] < 1:
        raise UsageError("--n must be >= 1")
    analytic = winding_distribution(cfg["n"])
    estimate = None
    if not cfg["analytic_only"]:
        estimate = estimate_distribution(_run_config(cfg))
    rows = []
    for m, w in enumerate(analytic.support):
        rows.append(
            [
                int(w),
                analytic.probs[m],
                None if estimate is None else estimate.probs[m],
                None if estimate is None else estimate.stderr[m],
                gaussian_approx(cfg["n"], int(w)),
            ]
        )
    out = cfg.pop("out")
    _write_csv(out, ["W", "p_analytic", "p_empirical", "stderr", "gaussian_approx"], rows)
    summary = {
        "N": cfg["n"],
        "samples": 0 if estimate is None else cfg["samples"],
        "seed": cfg["seed"],
        "variance_analytic": variance_analytic(cfg["n"]),
        "variance_empirical": None if estimate is None else estimate.second_moment(),
        "rejection_count": 0 if estimate is None else estimate.samples_rejected,
    }
    if estimate is not None and estimate.warning:
        summary["warning"] = estimate.warning
    cfg["out"] = out
    sidecar = _write_sidecar("distribution", cfg, [out], summary, time.monotonic() - t0)
    print(f"wrote {out} and {sidecar}")
    return EXIT_OK


def _corr_points(cfg: dict, k: int) -> list:
    points = []
    if cfg["points"]:
        for entry in cfg["points"]:
            values = _parse_float_list(entry, "--points") if isinstance(entry, str) else list(entry)
            if len(values) != k:
                raise UsageError(f"--points entries must have exactly k={k} angles")
            points.append(tuple(values))
    if k == 2 and cfg["sep"]:
        points.extend((float(s), 0.0) for s in cfg["sep"])
    if k == 1 and cfg["p"]:
        points.extend((float(p),) for p in cfg["p"])
    if points:
        return points
    if k == 1:
        return [(0.7,)]
    if k == 2:
        return [(0.5, 0.0), (1.0, 0.0), (math.pi / 2, 0.0)]
    return [(0.4, 1.3, 2.1)]


def _corr_analytic(point: tuple, n: int):
    k = len(point)
    try:
        if k == 1:
            return c1(point[0])
        if k == 2:
            return c2(point[0], point[1], n)
        return ck_assemble(list(point), n)
    except (CoincidentPointsError, ValueError):
        return None


def _cmd_corr(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    cfg = _merge_config(args, {"out": "corr.csv", "k": 2, "sep": None, "p": None, "points": None})
    k = cfg["k"]
    if k not in (1, 2, 3):
        raise UsageError("correlation order capped at k in {1, 2, 3}; higher orders blow up combinatorially")
    if cfg["n"] < 1:
        raise UsageError("--n must be >= 1")
    points = _corr_points(cfg, k)
    grid = None
    if not cfg["analytic_only"]:
        grid = estimate_ck(_run_config(cfg), points)
    rows = []
    for j, pt in enumerate(points):
        rows.append(
            list(pt)
            + [
                _corr_analytic(pt, cfg["n"]),
                None if grid is None else grid.mean[j].real,
                None if grid is None else grid.mean[j].imag,
                None if grid is None else grid.stderr[j],
            ]
        )
    out = cfg.pop("out")
    header = [f"p{i + 1}" for i in range(k)] + ["analytic", "mc_mean_re", "mc_mean_im", "stderr"]
    _write_csv(out, header, rows)
    # echo the resolved points only, so replaying the sidecar cannot double them
    cfg["points"] = [list(pt) for pt in points]
    cfg["sep"] = None
    cfg["p"] = None
    summary = {
        "N": cfg["n"],
        "k": k,
        "samples": 0 if grid is None else cfg["samples"],
        "samples_used": None if grid is None else grid.samples_used,
        "rejection_count": 0 if grid is None else grid.samples_rejected,
    }
    cfg["out"] = out
    sidecar = _write_sidecar("corr", cfg, [out], summary, time.monotonic() - t0)
    print(f"wrote {out} and {sidecar}")
    return EXIT_OK


def _cmd_unfold(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    cfg = _merge_config(args, {"out": "unfold.csv", "alpha": 0.5, "n_list": None, "psi_grid": "0.1:5:50"})
    alpha = float(cfg["alpha"])
    if alpha <= 0:
        raise UsageError("--alpha must be positive")
    if cfg["n_list"] is None:
        n_list = _FIG_NLIST_SMALL_ALPHA if alpha < 0.5 else _FIG_NLIST_HALF_ALPHA
    elif isinstance(cfg["n_list"], str):
        n_list = _parse_int_list(cfg["n_list"], "--n-list")
    else:
        n_list = [int(v) for v in cfg["n_list"]]
    psi_grid = cfg["psi_grid"]
    psi_values = _parse_psi_grid(psi_grid) if isinstance(psi_grid, str) else [float(v) for v in psi_grid]
    rows = []
    for n in n_list:
        if n < 1:
            raise UsageError("--n-list entries must be >= 1")
        for dpsi in psi_values:
            try:
                value = rescaled_c2(alpha, n, dpsi, 0.0)
            except (CoincidentPointsError, ValueError):
                value = None
            rows.append([alpha, n, dpsi, value, unfolded_f2(alpha, dpsi, 0.0)])
    out = cfg.pop("out")
    _write_csv(out, ["alpha", "N", "psi_delta", "rescaled_c2", "f2_limit"], rows)
    cfg["n_list"] = list(n_list)
    cfg["psi_grid"] = [float(v) for v in psi_values]
    summary = {"alpha": alpha, "rows": len(rows)}
    cfg["out"] = out
    sidecar = _write_sidecar("unfold", cfg, [out], summary, time.monotonic() - t0)
    print(f"wrote {out} and {sidecar}")
    return EXIT_OK


def _cmd_moments(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    cfg = _merge_config(args, {"out": "moments.csv", "n_max": 50})
    n_max = int(cfg["n_max"])
    if n_max < 1:
        raise UsageError("--n-max must be >= 1")
    rows = []
    for n in range(1, n_max + 1):
        quadrature = moment_quadrature(n) if n <= 1000 else None
        rows.append([n, variance_analytic(n), quadrature, 2.0 * math.sqrt(n / math.pi)])
    out = cfg.pop("out")
    _write_csv(out, ["N", "variance_analytic", "variance_quadrature", "asymptotic_2sqrtNpi"], rows)
    summary = {"n_max": n_max}
    cfg["out"] = out
    sidecar = _write_sidecar("moments", cfg, [out], summary, time.monotonic() - t0)
    print(f"wrote {out} and {sidecar}")
    return EXIT_OK


def _cmd_density_trace(args: argparse.Namespace) -> int:
    t0 = time.monotonic()
    cfg = _merge_config(args, {"out": "density-trace.csv", "grid_size": 256, "debug_fixed_field": False})
    grid_size = int(cfg["grid_size"])
    if grid_size < 16:
        raise UsageError("--grid-size must be at least 16")
    if cfg["n"] < 1:
        raise UsageError("--n must be >= 1")
    angles = 2 * math.pi * np.arange(grid_size) / grid_size
    resamples = 0
    if cfg["debug_fixed_field"]:
        field = ParametricField(np.eye(2, dtype=complex), 1j * np.eye(2, dtype=complex))
        stream_used = None
    else:
        stream_used = 0
        field = None
        while field is None:
            candidate = sample_field(cfg["n"], substream(cfg["seed"], stream_used))
            try:
                for p in angles:
                    winding_density(candidate, p)
            except SingularFieldError:
                stream_used += 1
                resamples += 1
                if resamples > 8:
                    raise WindingError("could not draw a nonsingular field in 8 attempts") from None
                continue
            field = candidate
    trace = [winding_density(field, p) for p in angles]
    rows = [[p, w.real, w.imag] for p, w in zip(angles, trace)]
    out = cfg.pop("out")
    _write_csv(out, ["p", "re_w", "im_w"], rows)
    sample = winding_from_count(circle_spectrum(field, cfg["condition_threshold"]), cfg["epsilon_circle"])
    summary = {
        "N": field.n,
        "W_count": sample.W,
        "W_contour": winding_contour(field),
        "flags": sorted(sample.flags),
        "resamples": resamples,
        "stream_used": stream_used,
    }
    cfg["out"] = out
    sidecar = _write_sidecar("density-trace", cfg, [out], summary, time.monotonic() - t0)
    print(f"wrote {out} and {sidecar}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--n", type=int, default=None, help="matrix dimension N")
    sub.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
    sub.add_argument("--seed", type=int, default=None, help="master seed; all randomness derives from it")
    sub.add_argument("--workers", type=int, default=None, help="parallel workers (identical output for any value)")
    sub.add_argument("--epsilon-circle", dest="epsilon_circle", type=float, default=None,
                     help="flag eigenvalues this close to the unit circle")
    sub.add_argument("--condition-threshold", dest="condition_threshold", type=float, default=None,
                     help="reject samples whose solve exceeds this condition estimate")
    sub.add_argument("--out", type=str, default=None, help="output CSV path (JSON sidecar lands beside it)")
    sub.add_argument("--config", type=str, default=None, help="JSON config file (a sidecar works directly)")
    sub.add_argument("--analytic-only", dest="analytic_only", action="store_const", const=True,
                     default=None, help="skip Monte Carlo, emit closed forms only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windingrmt",
        description="Winding-number statistics of a parametric chiral random-matrix field",
    )
    sub = parser.add_subparsers(dest="subcommand")

    p_dist = sub.add_parser("distribution", help="exact vs empirical winding-number distribution")
    _add_common(p_dist)
    p_dist.set_defaults(func=_cmd_distribution)

    p_corr = sub.add_parser("corr", help="winding-density correlators, closed form vs Monte Carlo")
    _add_common(p_corr)
    p_corr.add_argument("--k", type=int, default=None, help="correlator order (1, 2 or 3)")
    p_corr.add_argument("--sep", type=float, action="append", default=None,
                        help="k=2 separation; point is (sep, 0); repeatable")
    p_corr.add_argument("--p", type=float, action="append", default=None,
                        help="k=1 evaluation point; repeatable")
    p_corr.add_argument("--points", type=str, action="append", default=None,
                        help="comma-separated angle tuple of length k; repeatable")
    p_corr.set_defaults(func=_cmd_corr)

    p_unfold = sub.add_parser("unfold", help="rescaled two-point correlator and its limit")
    _add_common(p_unfold)
    p_unfold.add_argument("--alpha", type=float, default=None, help="rescaling exponent (> 0)")
    p_unfold.add_argument("--n-list", dest="n_list", type=str, default=None,
                          help="comma-separated dimensions (defaults depend on alpha)")
    p_unfold.add_argument("--psi-grid", dest="psi_grid", type=str, default=None,
                          help="rescaled separations, start:stop:count or comma list")
    p_unfold.set_defaults(func=_cmd_unfold)

    p_mom = sub.add_parser("moments", help="winding-number variance: exact, quadrature, asymptotic")
    _add_common(p_mom)
    p_mom.add_argument("--n-max", dest="n_max", type=int, default=None, help="emit rows for N = 1..n_max")
    p_mom.set_defaults(func=_cmd_moments)

    p_trace = sub.add_parser("density-trace", help="winding density along the circle for one sample")
    _add_common(p_trace)
    p_trace.add_argument("--grid-size", dest="grid_size", type=int, default=None, help="number of angles (>= 16)")
    p_trace.add_argument("--debug-fixed-field", dest="debug_fixed_field", action="store_const", const=True,
                         default=None, help="use the fixed 2x2 field with winding number 2")
    p_trace.set_defaults(func=_cmd_density_trace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (WindingError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
