"""Direct integration of the static massless curved Dirac equation.

    i d_t psi = (-i sigma_x d_x + V(x) sigma_x) psi,   V = -i Omega'/(2 Omega)

i.e. d_t psi = -sigma_x (d_x + g) psi with g = Omega'/(2 Omega).  The only
metric input is the sampled log-derivative g; the flat/curved amplitude map
is never used here, which keeps this solver an independent check of it.
Time stepping is classic RK4; space derivatives are Fourier-spectral or
fourth-order central, both periodic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from diracmap import kernels
from diracmap.errors import CFLError, ContainmentError, DiracMapError, DomainStraddleError, GridError
from diracmap.fields import EvolutionRecord, GridSpec, SpinorField, density
from diracmap.metric import ConformalFactor, log_derivative

SCHEMES = ("spectral", "fd4")
CFL_LIMIT = 0.5
CONTAINMENT = 1e-8
EDGE_CELLS = 3


@dataclass(frozen=True)
class SolverConfig:
    """Time step ``dt`` up to ``t_end`` on spacing ``dx``; a slice is recorded every ``stride`` steps."""

    dt: float
    t_end: float
    dx: float
    scheme: str = "spectral"
    stride: int = 1
    check_containment: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise CFLError(f"time step must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise CFLError(f"end time must be non-negative, got {self.t_end}")
        if self.dt > CFL_LIMIT * self.dx * (1 + 1e-12):
            raise CFLError(f"dt={self.dt:g} violates the CFL bound dt <= {CFL_LIMIT}*dx = {CFL_LIMIT * self.dx:g}")
        if self.scheme not in SCHEMES:
            raise DiracMapError(f"unknown derivative scheme {self.scheme!r}; expected one of {SCHEMES}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise DiracMapError(f"output stride must be a positive integer, got {self.stride}")

    @classmethod
    def for_grid(cls, grid: GridSpec, t_end: float, cfl: float = CFL_LIMIT, **kw) -> "SolverConfig":
        """Largest dt <= cfl*dx that divides ``t_end`` into a whole number of steps."""
        steps = max(1, math.ceil(t_end / (cfl * grid.dx) - 1e-9))
        return cls(dt=t_end / steps if t_end > 0 else cfl * grid.dx, t_end=t_end, dx=grid.dx, **kw)

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


def _check_one_branch(grid: GridSpec, cf: ConformalFactor):
    lo = grid.x_min - cf.exclusion_radius
    hi = grid.x_max + cf.exclusion_radius
    for p in cf.singular_points:
        if lo <= p <= hi:
            raise DomainStraddleError(
                f"grid [{grid.x_min:g}, {grid.x_max:g}] contains singular point {p:g}; "
                "evolve on one branch only"
            )


def half_log_derivative(cf: ConformalFactor, grid: GridSpec) -> np.ndarray:
    """g(x) = Omega'/(2 Omega) sampled on ``grid`` (must avoid singular points)."""
    _check_one_branch(grid, cf)
    return 0.5 * np.asarray(log_derivative(cf, grid.x), dtype=float)


def spectral_derivative(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    if not grid.is_power_of_two:
        raise GridError(f"spectral derivative needs a power-of-two grid, got n={grid.n}")
    k = grid.wavenumbers()
    if grid.n % 2 == 0:
        k[grid.n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(f))


def _rhs_arrays(up, dn, g, grid, scheme):
    if scheme == "fd4":
        return kernels.curved_rhs_fd4(up, dn, g, grid.dx)
    dup = spectral_derivative(up, grid)
    ddn = spectral_derivative(dn, grid)
    return -(ddn + g * dn), -(dup + g * up)


def rhs(field: SpinorField, cf: ConformalFactor, scheme: str = "spectral") -> SpinorField:
    """d_t psi = -sigma_x d_x psi - i V sigma_x psi on a one-branch periodic grid."""
    if scheme not in SCHEMES:
        raise DiracMapError(f"unknown derivative scheme {scheme!r}")
    g = half_log_derivative(cf, field.grid)
    rup, rdn = _rhs_arrays(field.up, field.down, g, field.grid, scheme)
    return field.with_components(rup, rdn)


def _containment(up, dn, t):
    rho = kernels.density(up, dn)
    peak = rho.max()
    if peak == 0:
        return
    edge = max(rho[0], rho[-1])
    if edge > CONTAINMENT**2 * peak:
        raise ContainmentError(
            t, f"packet reached the grid boundary (edge amplitude {math.sqrt(edge / peak):.2e} of peak)"
        )


def evolve_curved(initial: SpinorField, cf: ConformalFactor, config: SolverConfig) -> EvolutionRecord:
    grid = initial.grid
    if abs(grid.dx - config.dx) > 1e-12 * grid.dx:
        raise CFLError(f"solver configured for dx={config.dx:g} but grid has dx={grid.dx:g}")
    if config.scheme == "spectral" and not grid.is_power_of_two:
        raise GridError(f"spectral scheme needs a power-of-two grid, got n={grid.n}")
    g = half_log_derivative(cf, grid)
    up = initial.up.copy()
    dn = initial.down.copy()
    t0 = initial.time
    y = np.concatenate([up, dn])
    n = grid.n
    dt = config.dt
    scheme = config.scheme

    def f(state):
        a, b = _rhs_arrays(state[:n], state[n:], g, grid, scheme)
        return np.concatenate([a, b])

    fields = [initial]
    if config.check_containment:
        _containment(up, dn, t0)
    for step in range(1, config.steps + 1):
        k1 = f(y)
        k2 = f(y + (0.5 * dt) * k1)
        k3 = f(y + (0.5 * dt) * k2)
        k4 = f(y + dt * k3)
        y = kernels.rk4_combine(y, k1, k2, k3, k4, dt)
        t = t0 + step * dt
        if config.check_containment:
            _containment(y[:n], y[n:], t)
        if step % config.stride == 0 or step == config.steps:
            fields.append(SpinorField(grid, y[:n].copy(), y[n:].copy(), t))
    return EvolutionRecord(fields, provenance="fd-oracle", metric_label=cf.label,
                           meta={"dt": dt, "scheme": scheme, "steps": config.steps})


def weighted_norm(field: SpinorField, cf: ConformalFactor) -> float:
    """Integral of Omega |psi|^2, conserved by the curved evolution (masked points skipped)."""
    x = field.grid.x
    mask = cf.singular_mask(x)
    w = np.zeros_like(x)
    w[~mask] = cf.omega(x[~mask])
    return float(np.sum(w * density(field)) * field.grid.dx)


def residual(record: EvolutionRecord, cf: ConformalFactor, scheme: str = "spectral") -> float:
    """Max-norm residual of the curved equation over the interior slices of ``record``.

    Uses central differences in time.  In space, ``"spectral"`` needs a
    one-branch power-of-two grid; ``"fd4"`` is evaluated pointwise and may
    straddle a singular point.  Masked points, the EDGE_CELLS cells next to
    the mask and the EDGE_CELLS cells at each end of the grid are skipped.
    """
    if len(record) < 3:
        raise DiracMapError(f"residual needs at least 3 time slices, got {len(record)}")
    times = record.times
    steps = np.diff(times)
    h = steps[0]
    if not np.allclose(steps, h, rtol=1e-9, atol=0):
        raise DiracMapError("residual needs uniformly spaced time slices")
    grid = record.grid
    x = grid.x
    mask = cf.singular_mask(x)
    valid = ~mask
    for j in np.flatnonzero(mask):
        valid[max(j - EDGE_CELLS, 0): j + EDGE_CELLS + 1] = False
    valid[:EDGE_CELLS] = False
    valid[-EDGE_CELLS:] = False

    if scheme == "spectral":
        g = half_log_derivative(cf, grid)
    elif scheme == "fd4":
        g = np.zeros_like(x)
        g[~mask] = 0.5 * np.asarray(log_derivative(cf, x[~mask]))
    else:
        raise DiracMapError(f"unknown derivative scheme {scheme!r}")

    worst = 0.0
    for i in range(1, len(record) - 1):
        prev, cur, nxt = record[i - 1], record[i], record[i + 1]
        dt_up = (nxt.up - prev.up) / (2 * h)
        dt_dn = (nxt.down - prev.down) / (2 * h)
        up = np.where(mask, 0, cur.up)
        dn = np.where(mask, 0, cur.down)
        rup, rdn = _rhs_arrays(up, dn, g, grid, scheme)
        r = np.sqrt(np.abs(dt_up - rup) ** 2 + np.abs(dt_dn - rdn) ** 2)[valid]
        if r.size:
            worst = max(worst, float(r.max()))
    return worst
