"""Run configuration, key=value config files, and CSV/JSON record output."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from diracmap.dsl import compile_conformal_factor
from diracmap.errors import ConfigError, DiracMapError
from diracmap.fields import GridSpec, SpinorField, density
from diracmap.flat import GaussianPacket
from diracmap.mapping import curved_density
from diracmap.metric import ConformalFactor, flat_conformal_factor, wormhole_conformal_factor

CSV_HEADER = "t,x,re_up,im_up,re_dn,im_dn,density_flat,density_curved,masked,provenance"
PROVENANCES = ("closed-form", "spectral", "fd-oracle")


@dataclass
class RunConfig:
    metric: str = "wormhole"
    b0: float = 10.0
    omega_expr: Optional[str] = None
    params: Dict[str, float] = field(default_factory=dict)
    singular: Tuple[float, ...] = ()
    x0: float = -10.0
    sigma: float = 5.0
    grid: str = "-60:60:1024"
    t_end: float = 20.0
    stride: float = 1.0
    method: str = "closed"
    scheme: str = "spectral"
    out: Optional[str] = None
    format: str = "csv"
    tol: float = 5e-6
    skip_map: bool = False

    def conformal_factor(self) -> ConformalFactor:
        if self.metric == "wormhole":
            return wormhole_conformal_factor(self.b0)
        if self.metric == "flat":
            return flat_conformal_factor()
        if self.metric == "expr":
            if not self.omega_expr:
                raise ConfigError("metric 'expr' needs --omega-expr")
            g = self.grid_spec()
            return compile_conformal_factor(
                self.omega_expr, self.params, self.singular, domain=(g.x_min, g.x_max)
            )
        raise ConfigError(f"unknown metric {self.metric!r}; expected wormhole, flat or expr")

    def grid_spec(self) -> GridSpec:
        try:
            return GridSpec.parse(self.grid)
        except DiracMapError as exc:
            raise ConfigError(str(exc)) from exc

    def packet(self) -> GaussianPacket:
        try:
            return GaussianPacket(self.x0, self.sigma)
        except DiracMapError as exc:
            raise ConfigError(str(exc)) from exc

    def output_times(self) -> np.ndarray:
        if not self.t_end >= 0:
            raise ConfigError(f"t-end must be non-negative, got {self.t_end}")
        if not self.stride > 0:
            raise ConfigError(f"stride must be positive, got {self.stride}")
        k = self.t_end / self.stride
        if abs(k - round(k)) > 1e-9 * max(1.0, k):
            raise ConfigError(f"t-end={self.t_end} is not a whole number of strides ({self.stride})")
        return self.stride * np.arange(int(round(k)) + 1)

    def validate(self):
        """Check every precondition before computing anything; raises on the first violation."""
        if self.method not in ("closed", "spectral"):
            raise ConfigError(f"unknown method {self.method!r}; expected closed or spectral")
        if self.scheme not in ("spectral", "fd4"):
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected spectral or fd4")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}; expected csv or json")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigError(f"tolerance must be positive, got {self.tol}")
        grid = self.grid_spec()
        packet = self.packet()
        times = self.output_times()
        if self.method == "spectral" and not grid.is_power_of_two:
            raise ConfigError(f"spectral method needs a power-of-two grid, got n={grid.n}")
        for c in (packet.x0, packet.x0 + times[-1]):
            try:
                packet.check_support(grid, c)
            except DiracMapError as exc:
                raise ConfigError(str(exc)) from exc
        cf = self.conformal_factor()
        return cf, grid, packet, times

    # --- key=value round trip --------------------------------------------------

    def to_pairs(self) -> List[Tuple[str, str]]:
        pairs = [
            ("metric", self.metric),
            ("b0", repr(float(self.b0))),
        ]
        if self.omega_expr is not None:
            pairs.append(("omega-expr", self.omega_expr))
        for name in sorted(self.params):
            pairs.append(("param", f"{name}={float(self.params[name])!r}"))
        if self.singular:
            pairs.append(("singular", ",".join(repr(float(s)) for s in self.singular)))
        pairs += [
            ("x0", repr(float(self.x0))),
            ("sigma", repr(float(self.sigma))),
            ("grid", self.grid),
            ("t-end", repr(float(self.t_end))),
            ("stride", repr(float(self.stride))),
            ("method", self.method),
            ("scheme", self.scheme),
            ("format", self.format),
            ("tol", repr(float(self.tol))),
            ("skip-map", "1" if self.skip_map else "0"),
        ]
        if self.out is not None:
            pairs.append(("out", self.out))
        return pairs

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.to_pairs())

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["singular"] = list(self.singular)
        d["params"] = dict(sorted(self.params.items()))
        return d


_FLOAT_KEYS = {"b0": "b0", "x0": "x0", "sigma": "sigma", "t-end": "t_end", "stride": "stride", "tol": "tol"}
_STR_KEYS = {"metric": "metric", "omega-expr": "omega_expr", "grid": "grid", "method": "method",
             "scheme": "scheme", "out": "out", "format": "format"}


def parse_param(text: str) -> Tuple[str, float]:
    name, sep, value = text.partition("=")
    name = name.strip()
    if not sep or not name:
        raise ConfigError(f"parameter binding must look like name=value, got {text!r}")
    try:
        return name, float(value)
    except ValueError:
        raise ConfigError(f"parameter {name!r} has non-numeric value {value.strip()!r}") from None


def parse_singular(text: str) -> Tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(sorted(float(s) for s in text.split(",")))
    except ValueError:
        raise ConfigError(f"singular points must be a comma separated list of numbers, got {text!r}") from None


def apply_pairs(cfg: RunConfig, pairs: Sequence[Tuple[str, str]]) -> RunConfig:
    updates = {}
    params = dict(cfg.params)
    for key, value in pairs:
        key = key.strip().lstrip("-")
        value = value.strip()
        if key in _FLOAT_KEYS:
            try:
                updates[_FLOAT_KEYS[key]] = float(value)
            except ValueError:
                raise ConfigError(f"{key} must be a number, got {value!r}") from None
        elif key in _STR_KEYS:
            updates[_STR_KEYS[key]] = value
        elif key == "param":
            name, v = parse_param(value)
            params[name] = v
        elif key == "singular":
            updates["singular"] = parse_singular(value)
        elif key == "skip-map":
            updates["skip_map"] = value.lower() in ("1", "true", "yes", "on")
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return replace(cfg, params=params, **updates)


def read_config_file(path: str) -> List[Tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            pairs.append((key.strip(), value.strip()))
    return pairs


# --- records ---------------------------------------------------------------

def _fmt(v: float) -> str:
    return "%.17g" % v


@dataclass
class OutputTable:
    """Per-time flat and curved densities plus the flat spinor components, shaped (nt, nx)."""

    x: np.ndarray
    times: np.ndarray
    up: np.ndarray
    down: np.ndarray
    density_flat: np.ndarray
    density_curved: np.ndarray
    mask: np.ndarray
    provenance: str

    @classmethod
    def from_flat(cls, flat: Sequence[SpinorField], cf: ConformalFactor, provenance: str) -> "OutputTable":
        grid = flat[0].grid
        rho = np.array([density(f) for f in flat])
        curved = curved_density(rho, cf, grid)
        return cls(
            x=grid.x,
            times=np.array([f.time for f in flat]),
            up=np.array([f.up for f in flat]),
            down=np.array([f.down for f in flat]),
            density_flat=rho,
            density_curved=curved.filled(0.0),
            mask=cf.singular_mask(grid.x),
            provenance=provenance,
        )

    def window(self, x_lo: float, x_hi: float) -> "OutputTable":
        keep = (self.x >= x_lo) & (self.x <= x_hi)
        return OutputTable(self.x[keep], self.times, self.up[:, keep], self.down[:, keep],
                           self.density_flat[:, keep], self.density_curved[:, keep], self.mask[keep],
                           self.provenance)


def write_csv(path: str, table: OutputTable) -> None:
    lines = [CSV_HEADER]
    prov = table.provenance
    for i, t in enumerate(table.times):
        up, dn = table.up[i], table.down[i]
        ts = _fmt(t)
        rf = table.density_flat[i]
        rc = table.density_curved[i]
        for j, xj in enumerate(table.x):
            u, d = up[j], dn[j]
            if table.mask[j]:
                dc, m = "", "1"
            else:
                dc, m = _fmt(rc[j]), "0"
            lines.append(
                f"{ts},{_fmt(xj)},{_fmt(u.real)},{_fmt(u.imag)},{_fmt(d.real)},{_fmt(d.imag)},"
                f"{_fmt(rf[j])},{dc},{m},{prov}"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: str, table: OutputTable, config: Optional[RunConfig] = None, metadata: Optional[dict] = None):
    mask = table.mask
    doc = {
        "config": config.as_dict() if config is not None else None,
        "metadata": metadata or {},
        "provenance": table.provenance,
        "x": table.x.tolist(),
        "t": table.times.tolist(),
        "masked": mask.astype(int).tolist(),
        "density_flat": table.density_flat.tolist(),
        "density_curved": [[None if m else float(v) for v, m in zip(row, mask)] for row in table.density_curved],
        "re_up": table.up.real.tolist(),
        "im_up": table.up.imag.tolist(),
        "re_dn": table.down.real.tolist(),
        "im_dn": table.down.imag.tolist(),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_csv(path: str):
    """Parse a record CSV into (times, x, up, down, provenance) with up/down shaped (nt, nx)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected CSV header {header!r}")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    t = np.array([float(r[0]) for r in rows])
    x = np.array([float(r[1]) for r in rows])
    times = np.unique(t)
    xs = x[t == times[0]]
    nt, nx = len(times), len(xs)
    if nt * nx != len(rows):
        raise ConfigError(f"{path}: rows do not form a full (t, x) table")
    comp = np.array([[float(v) for v in r[2:6]] for r in rows]).reshape(nt, nx, 4)
    up = comp[..., 0] + 1j * comp[..., 1]
    dn = comp[..., 2] + 1j * comp[..., 3]
    provenance = rows[0][9]
    return times, xs, up, dn, provenance
