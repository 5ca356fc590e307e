"""Grids, spinor fields and time-indexed evolution records."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from diracmap import kernels
from diracmap.errors import GridError


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid x_j = x_min + j*dx, j = 0..n-1, dx = (x_max - x_min)/n.

    ``excluded_indices`` lists grid points inside the exclusion radius of a
    metric singular point; see :meth:`excluding`.
    """

    x_min: float
    x_max: float
    n: int
    excluded_indices: tuple = ()

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise GridError(f"grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if int(self.n) != self.n or self.n < 16:
            raise GridError(f"grid needs at least 16 points, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "excluded_indices", tuple(int(i) for i in self.excluded_indices))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def is_power_of_two(self) -> bool:
        return self.n & (self.n - 1) == 0

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[list(self.excluded_indices)] = True
        return m

    def excluding(self, cf) -> "GridSpec":
        """Copy of this grid with the singular neighbourhoods of ``cf`` excluded."""
        idx = np.flatnonzero(cf.singular_mask(self.x))
        return GridSpec(self.x_min, self.x_max, self.n, tuple(idx))

    def same_points(self, other: "GridSpec") -> bool:
        return (self.x_min, self.x_max, self.n) == (other.x_min, other.x_max, other.n)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``"xmin:xmax:n"``."""
        parts = text.split(":")
        if len(parts) != 3:
            raise GridError(f"grid must look like xmin:xmax:n, got {text!r}")
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError as exc:
            raise GridError(f"bad grid {text!r}: {exc}") from exc

    def __str__(self):
        return f"{self.x_min!r}:{self.x_max!r}:{self.n}"


@dataclass(frozen=True)
class SpinorField:
    """Two-component complex field (up, down) on ``grid`` at time ``time``.

    Components are ordered so that sigma_x swaps them and sigma_z = diag(1, -1).
    """

    grid: GridSpec
    up: np.ndarray
    down: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        up = np.asarray(self.up, dtype=complex)
        down = np.asarray(self.down, dtype=complex)
        if up.shape != (self.grid.n,) or down.shape != (self.grid.n,):
            raise GridError(
                f"spinor components must have length {self.grid.n}, got {up.shape} and {down.shape}"
            )
        if not (np.all(np.isfinite(up)) and np.all(np.isfinite(down))):
            raise ValueError("spinor field contains non-finite entries")
        object.__setattr__(self, "up", up)
        object.__setattr__(self, "down", down)
        object.__setattr__(self, "time", float(self.time))

    def with_components(self, up, down, time=None) -> "SpinorField":
        return SpinorField(self.grid, up, down, self.time if time is None else time)

    def __add__(self, other: "SpinorField") -> "SpinorField":
        return self.with_components(self.up + other.up, self.down + other.down)

    def __sub__(self, other: "SpinorField") -> "SpinorField":
        return self.with_components(self.up - other.up, self.down - other.down)

    def __mul__(self, c) -> "SpinorField":
        return self.with_components(c * self.up, c * self.down)

    __rmul__ = __mul__

    @property
    def chirality(self):
        """sigma_x eigencomponents (chi_plus, chi_minus) = (up +/- down)/sqrt(2)."""
        s = np.sqrt(0.5)
        return s * (self.up + self.down), s * (self.up - self.down)

    def pointwise_norm(self) -> np.ndarray:
        """|psi(x)| = sqrt(|up|^2 + |down|^2)."""
        return np.sqrt(density(self))


def density(field: SpinorField) -> np.ndarray:
    """|up|^2 + |down|^2 at every grid point."""
    return kernels.density(field.up, field.down)


def total_probability(field: SpinorField, weight: Optional[np.ndarray] = None) -> float:
    """Trapezoid rule on the periodic grid for the (optionally weighted) density."""
    rho = density(field)
    if weight is not None:
        rho = rho * weight
    return float(np.sum(rho) * field.grid.dx)


def max_norm(a: SpinorField, b: Optional[SpinorField] = None, where: Optional[np.ndarray] = None) -> float:
    """Sup over grid points of the spinor norm |a(x) - b(x)|, optionally restricted to ``where``."""
    diff = a if b is None else a - b
    pn = diff.pointwise_norm()
    if where is not None:
        pn = pn[where]
    return float(pn.max()) if pn.size else 0.0


@dataclass
class EvolutionRecord:
    """Time-ordered sequence of spinor fields sharing one grid."""

    fields: List[SpinorField]
    provenance: str
    metric_label: str = "flat"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.fields:
            g = self.fields[0].grid
            if any(not f.grid.same_points(g) for f in self.fields):
                raise GridError("all fields of an evolution record must share one grid")

    @property
    def grid(self) -> GridSpec:
        return self.fields[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.fields])

    def densities(self) -> np.ndarray:
        return np.array([density(f) for f in self.fields])

    def __len__(self):
        return len(self.fields)

    def __getitem__(self, i) -> SpinorField:
        return self.fields[i]

    def at(self, t: float, tol: float = 1e-9) -> SpinorField:
        for f in self.fields:
            if abs(f.time - t) <= tol:
                return f
        raise KeyError(f"no slice at t={t}")
