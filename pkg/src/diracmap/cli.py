"""Command line entry point: ``diracmap {simulate,map,verify,reproduce-fig1}``.

Exit codes: 0 success, 1 verification FAIL, 2 usage/config error,
3 runtime/numerical error.  Errors print one line
``diracmap: error[<tag>]: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from diracmap.errors import ConfigError, DiracMapError
from diracmap.fields import EvolutionRecord, GridSpec, SpinorField, max_norm
from diracmap.flat import GaussianPacket, evolve_spectral, flat_record, gaussian_initial
from diracmap.io import (OutputTable, RunConfig, apply_pairs, read_config_file, read_csv, write_csv,
                         write_json)
from diracmap.mapping import map_to_curved, map_to_flat
from diracmap.metric import flat_conformal_factor, wormhole_conformal_factor
from diracmap.oracle import SolverConfig, evolve_curved, half_log_derivative, residual, weighted_norm
from diracmap.svg import write_heatmap

SIMULATE_DEFAULTS = RunConfig()
VERIFY_DEFAULTS = RunConfig(x0=30.0, grid="2:130:4096", t_end=10.0, stride=1.0)

NORM_DRIFT_TOL = 1e-8
CONVERGENCE_RATIO = 8.0
CONVERGENCE_FLOOR = 1e-10

FIG1_B0 = 10.0
FIG1_SIGMA = 5.0
FIG1_X0 = (-10.0, 1.0, 5.0)
FIG1_WINDOW = (-60.0, 60.0)
FIG1_T_END = 40.0
FIG1_COMPUTE_GRID = (-100.0, 100.0)
FOCUS_FACTOR = 2.0


# --- simulate / map ------------------------------------------------------------

def _write_table(cfg: RunConfig, table: OutputTable, metadata: Optional[dict] = None):
    if cfg.out is None:
        return
    if cfg.format == "json":
        write_json(cfg.out, table, cfg, metadata)
    else:
        write_csv(cfg.out, table)
    with open(cfg.out + ".cfg", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cfg.to_text())


def cmd_simulate(cfg: RunConfig) -> OutputTable:
    """Free packet (closed form or spectral) mapped onto the configured metric."""
    cf, grid, packet, times = cfg.validate()
    record = flat_record(packet, grid, times, method=cfg.method)
    table = OutputTable.from_flat(record.fields, cf, record.provenance)
    _write_table(cfg, table, {"metric": cf.label})
    return table


def cmd_map(in_path: str, cfg: RunConfig) -> OutputTable:
    """Re-map the flat spinor columns of an existing record onto the configured metric."""
    times, x, up, dn, provenance = read_csv(in_path)
    dx = np.diff(x)
    if len(x) < 16 or not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
        raise ConfigError(f"{in_path}: x column is not a uniform grid of at least 16 points")
    grid = GridSpec(float(x[0]), float(x[0] + dx[0] * len(x)), len(x))
    cfg = replace(cfg, grid=str(grid))
    cf = cfg.conformal_factor()
    fields_ = [SpinorField(grid, up[i], dn[i], t) for i, t in enumerate(times)]
    table = OutputTable.from_flat(fields_, cf, provenance)
    _write_table(cfg, table, {"metric": cf.label, "source": os.path.basename(in_path)})
    return table


# --- verify ---------------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = f" ({self.note})" if self.note else ""
        return f"check {self.name:<22} {self.value:.3e}  limit {self.threshold:.3e}  {verdict}{extra}"


@dataclass
class VerifyReport:
    checks: List[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failing(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]


def _reference(cfg: RunConfig, packet: GaussianPacket, grid: GridSpec, t: float) -> SpinorField:
    if cfg.method == "spectral":
        return evolve_spectral(gaussian_initial(packet, grid), t)
    return flat_record(packet, grid, [t], method="closed")[0]


def _oracle_run(cfg, cf, packet, grid: GridSpec):
    phi0 = gaussian_initial(packet, grid)
    psi0 = phi0 if cfg.skip_map else map_to_curved(phi0, cf).curved
    solver = SolverConfig.for_grid(grid, cfg.t_end, scheme=cfg.scheme)
    solver = replace(solver, stride=max(1, solver.steps // 10))
    record = evolve_curved(psi0, cf, solver)
    expected = map_to_curved(_reference(cfg, packet, grid, cfg.t_end), cf).curved
    error = max_norm(record[-1], expected)
    w0 = weighted_norm(record[0], cf)
    drift = max(abs(weighted_norm(f, cf) - w0) for f in record.fields)
    return record, error, drift, solver


def cmd_verify(cfg: RunConfig) -> VerifyReport:
    """Cross-check the flat->curved map against direct integration of the curved equation."""
    cf, grid, packet, _ = cfg.validate()
    if len(cf.singular_points) > 1:
        raise ConfigError("verify supports metrics with at most one singular point")
    if cfg.scheme == "spectral" and not grid.is_power_of_two:
        raise ConfigError(f"spectral scheme needs a power-of-two grid, got n={grid.n}")
    try:
        half_log_derivative(cf, grid)
    except DiracMapError as exc:
        raise ConfigError(str(exc)) from exc

    report = VerifyReport()
    record, error, drift, solver = _oracle_run(cfg, cf, packet, grid)
    report.info.update(metric=cf.label, grid=str(grid), dt=solver.dt, steps=solver.steps,
                       scheme=cfg.scheme, mapped_initial=not cfg.skip_map)
    report.checks.append(Check("max_error", error, cfg.tol, error <= cfg.tol))
    report.checks.append(Check("weighted_norm_drift", drift, NORM_DRIFT_TOL, drift <= NORM_DRIFT_TOL))

    errors = []
    for div in (4, 2):
        n = grid.n // div
        if n < 16:
            continue
        g = GridSpec(grid.x_min, grid.x_max, n)
        errors.append(_oracle_run(cfg, cf, packet, g)[1])
    errors.append(error)
    for k in range(len(errors) - 1):
        coarse, fine = errors[k], errors[k + 1]
        ratio = coarse / fine if fine > 0 else math.inf
        at_floor = fine <= CONVERGENCE_FLOOR
        ok = ratio >= CONVERGENCE_RATIO or at_floor
        report.checks.append(Check(f"convergence_ratio_{k + 1}", ratio, CONVERGENCE_RATIO, ok,
                                   "at floor" if at_floor and ratio < CONVERGENCE_RATIO else ""))
    report.info["refinement_errors"] = errors

    # direct substitution of the mapped exact solution into the curved equation
    h = solver.dt
    t0 = max(cfg.t_end - h, 0.0)
    slices = [map_to_curved(_reference(cfg, packet, grid, t0 + i * h), cf).curved for i in range(3)]
    report.info["mapped_solution_residual"] = residual(EvolutionRecord(slices, "closed-form"), cf, cfg.scheme)

    if cfg.out is not None:
        table = OutputTable.from_flat([map_to_flat(f, cf) for f in record.fields], cf, "fd-oracle")
        _write_table(cfg, table, {"metric": cf.label, "report": [c.line() for c in report.checks]})
    return report


# --- figure reproduction -------------------------------------------------------------

def fig1_tables(n: int = 1024, t_step: float = 1.0):
    """Closed-form tables for the six panels, clipped to the display window.

    Keys are (x0, "flat" | "curved").  The packets are computed on a wider grid
    than the window so that no packet is clipped at late times.
    """
    grid = GridSpec(FIG1_COMPUTE_GRID[0], FIG1_COMPUTE_GRID[1], n)
    k = FIG1_T_END / t_step
    if abs(k - round(k)) > 1e-9:
        raise ConfigError(f"t-step {t_step} does not divide the figure time span {FIG1_T_END}")
    times = t_step * np.arange(int(round(k)) + 1)
    wormhole = wormhole_conformal_factor(FIG1_B0)
    flat = flat_conformal_factor()
    tables = {}
    for x0 in FIG1_X0:
        record = flat_record(GaussianPacket(x0, FIG1_SIGMA), grid, times, method="closed")
        tables[(x0, "flat")] = OutputTable.from_flat(record.fields, flat, record.provenance).window(*FIG1_WINDOW)
        tables[(x0, "curved")] = OutputTable.from_flat(record.fields, wormhole, record.provenance).window(*FIG1_WINDOW)
    return tables


def distortion(table: OutputTable) -> float:
    """max over t of (peak curved density on x > 0) / (peak flat density on x > 0)."""
    right = (table.x > 0) & ~table.mask
    best = 0.0
    for i in range(len(table.times)):
        rf = table.density_flat[i, right].max()
        if rf > 0:
            best = max(best, table.density_curved[i, right].max() / rf)
    return best


def fig1_metrics(tables) -> dict:
    dx = float(tables[(FIG1_X0[0], "flat")].x[1] - tables[(FIG1_X0[0], "flat")].x[0])
    peak = 2.0 / math.sqrt(2.0 * math.pi * FIG1_SIGMA**2)
    sampling = 1.0 - math.exp(-2.0 * (0.5 * dx) ** 2 / FIG1_SIGMA**2)
    translation = {}
    for x0 in FIG1_X0:
        tab = tables[(x0, "flat")]
        pos_err = amp_err = 0.0
        for i, t in enumerate(tab.times):
            c = x0 + t
            if not (tab.x[0] + 3 * FIG1_SIGMA <= c <= tab.x[-1] - 3 * FIG1_SIGMA):
                continue
            j = int(np.argmax(tab.density_flat[i]))
            pos_err = max(pos_err, abs(tab.x[j] - c))
            amp_err = max(amp_err, abs(tab.density_flat[i, j] - peak) / peak)
        translation[str(x0)] = {
            "max_peak_offset": float(pos_err),
            "max_peak_relative_change": float(amp_err),
            "rigid": bool(pos_err <= 0.5 * dx + 1e-9 and amp_err <= sampling + 1e-12),
        }

    b_flat = tables[(FIG1_X0[0], "flat")]
    b = tables[(FIG1_X0[0], "curved")]
    curved_vals = np.where(b.mask[None, :], -np.inf, b.density_curved)
    i, j = np.unravel_index(int(np.argmax(curved_vals)), curved_vals.shape)
    focus = float(curved_vals[i, j] / b_flat.density_flat.max())
    dist = {str(x0): float(distortion(tables[(x0, "curved")])) for x0 in FIG1_X0[1:]}
    return {
        "dx": dx,
        "translation": translation,
        "throat_focusing": {
            "max_curved_over_max_flat": focus,
            "at_x": float(b.x[j]),
            "at_t": float(b.times[i]),
            "throat_column_masked": bool(np.any(b.mask & (np.abs(b.x) < 1e-12))),
            "focused": bool(focus > FOCUS_FACTOR and abs(b.x[j]) <= FIG1_SIGMA),
        },
        "distortion": dist,
        "distortion_ordered": bool(dist[str(FIG1_X0[1])] > dist[str(FIG1_X0[2])]),
    }


def cmd_reproduce_fig1(outdir: str, n: int = 1024, t_step: float = 1.0, fmt: str = "csv") -> dict:
    os.makedirs(outdir, exist_ok=True)
    tables = fig1_tables(n, t_step)
    letters = {(FIG1_X0[0], "flat"): "a", (FIG1_X0[0], "curved"): "b",
               (FIG1_X0[1], "flat"): "c", (FIG1_X0[1], "curved"): "d",
               (FIG1_X0[2], "flat"): "e", (FIG1_X0[2], "curved"): "f"}
    files = {}
    for key in sorted(tables, key=lambda k: letters[k]):
        x0, kind = key
        tab = tables[key]
        stem = f"panel_{letters[key]}_{kind}_x0_{x0:g}"
        data_path = os.path.join(outdir, f"{stem}.{fmt}")
        if fmt == "json":
            write_json(data_path, tab, None, {"panel": letters[key], "x0": x0, "kind": kind})
        else:
            write_csv(data_path, tab)
        if kind == "flat":
            values, mask = tab.density_flat, None
        else:
            values, mask = tab.density_curved, tab.mask
        title = f"({letters[key]}) {kind}, x0={x0:g}, sigma={FIG1_SIGMA:g}" + (
            f", b0={FIG1_B0:g}" if kind == "curved" else "")
        svg_path = os.path.join(outdir, f"{stem}.svg")
        write_heatmap(svg_path, values, tab.x, tab.times, title=title, mask=mask)
        files[letters[key]] = {"data": os.path.basename(data_path), "svg": os.path.basename(svg_path)}
    summary = {
        "b0": FIG1_B0,
        "sigma": FIG1_SIGMA,
        "x0": list(FIG1_X0),
        "window": {"x": list(FIG1_WINDOW), "t": [0.0, FIG1_T_END], "t_step": t_step},
        "compute_grid": {"x": list(FIG1_COMPUTE_GRID), "n": n},
        "colour_scale": "per-panel, normalised to the panel maximum over unmasked cells",
        "distortion_metric": "max over t of peak curved density / peak flat density on x > 0",
        "files": files,
        "checks": fig1_metrics(tables),
    }
    with open(os.path.join(outdir, "summary.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return summary


# --- argument handling -----------------------------------------------------------------

def _add_run_options(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file mirroring these flags")
    p.add_argument("--metric", choices=["wormhole", "flat", "expr"])
    p.add_argument("--b0", type=float, help="wormhole throat radius")
    p.add_argument("--omega-expr", help="expression for Omega(x); implies --metric expr")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                   help="parameter binding for --omega-expr (repeatable)")
    p.add_argument("--singular", metavar="X1,X2", help="declared singular points of --omega-expr")
    p.add_argument("--x0", type=float, help="packet centre")
    p.add_argument("--sigma", type=float, help="packet width")
    p.add_argument("--grid", metavar="XMIN:XMAX:N")
    p.add_argument("--t-end", type=float)
    p.add_argument("--stride", type=float, help="time between output slices")
    p.add_argument("--method", choices=["closed", "spectral"], help="flat evolution method")
    p.add_argument("--out", help="output path")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--tol", type=float, help="verification tolerance on the max-norm error")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diracmap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="evolve a free packet and map it onto a curved metric")
    _add_run_options(p)

    p = sub.add_parser("map", help="map the flat spinor columns of a CSV record onto a metric")
    p.add_argument("input", help="CSV record produced by simulate")
    _add_run_options(p)

    p = sub.add_parser("verify", help="check the map against direct integration of the curved equation")
    _add_run_options(p)
    p.add_argument("--scheme", choices=["spectral", "fd4"], help="space derivative of the integrator")
    p.add_argument("--skip-map", action="store_true", default=None,
                   help="negative control: evolve the unmapped flat packet")

    p = sub.add_parser("reproduce-fig1", help="six density panels for the wormhole figure")
    p.add_argument("outdir")
    p.add_argument("--n", type=int, default=1024, help="points on the compute grid [-100, 100)")
    p.add_argument("--t-step", type=float, default=1.0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def config_from_args(args: argparse.Namespace, defaults: RunConfig) -> RunConfig:
    cfg = defaults
    if getattr(args, "config", None):
        try:
            cfg = apply_pairs(cfg, read_config_file(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    pairs = []
    for key in ("metric", "b0", "omega_expr", "x0", "sigma", "grid", "t_end", "stride", "method",
                "out", "format", "tol", "scheme"):
        v = getattr(args, key, None)
        if v is not None:
            pairs.append((key.replace("_", "-"), v if isinstance(v, str) else repr(v)))
    if getattr(args, "omega_expr", None) and getattr(args, "metric", None) is None:
        pairs.append(("metric", "expr"))
    for binding in getattr(args, "param", []) or []:
        pairs.append(("param", binding))
    if getattr(args, "singular", None) is not None:
        pairs.append(("singular", args.singular))
    if getattr(args, "skip_map", None):
        pairs.append(("skip-map", "1"))
    return apply_pairs(cfg, pairs)


def _fail(exc: DiracMapError) -> int:
    msg = str(exc).replace("\n", " ")
    print(f"diracmap: error[{exc.tag}]: {msg}", file=sys.stderr)
    return exc.code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            cfg = config_from_args(args, SIMULATE_DEFAULTS)
            table = cmd_simulate(cfg)
            print(f"simulate: {len(table.times)} slices x {len(table.x)} points, provenance {table.provenance}"
                  + (f", wrote {cfg.out}" if cfg.out else ""))
        elif args.command == "map":
            cfg = config_from_args(args, SIMULATE_DEFAULTS)
            table = cmd_map(args.input, cfg)
            print(f"map: {len(table.times)} slices x {len(table.x)} points" + (f", wrote {cfg.out}" if cfg.out else ""))
        elif args.command == "verify":
            cfg = config_from_args(args, VERIFY_DEFAULTS)
            report = cmd_verify(cfg)
            for k, v in report.info.items():
                print(f"info {k} = {v}")
            for c in report.checks:
                print(c.line())
            if report.passed:
                print("PASS")
                return 0
            print(f"FAIL: {', '.join(report.failing)}")
            return 1
        elif args.command == "reproduce-fig1":
            summary = cmd_reproduce_fig1(args.outdir, n=args.n, t_step=args.t_step, fmt=args.format)
            checks = summary["checks"]
            print(f"reproduce-fig1: wrote 6 panels and summary.json to {args.outdir}")
            print(f"throat focusing factor {checks['throat_focusing']['max_curved_over_max_flat']:.3f}")
            print("distortion " + ", ".join(f"x0={k}: {v:.3f}" for k, v in checks["distortion"].items()))
    except DiracMapError as exc:
        return _fail(exc)
    except OSError as exc:
        print(f"diracmap: error[io]: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
